"""Hierarchical clustering of random variables by directed predictability."""
from .clustering import Backend, Dendrogram, Merge, Partition, agglomerate, cut
from .dissimilarity import (AggregatorSpec, copula_cdf, dissimilarity, dissimilarity_matrix,
                            linkage_dissimilarity, pair_dissimilarity, pairwise_matrix,
                            parameter_to_tau, tau_to_parameter)
from .errors import DegenerateError, DepclustError, InputError, ResourceError, SpecError
from .estimators import (SampleMatrix, compute_ranks, nearest_neighbors,
                         nearest_neighbors_bruteforce, t_statistic, t_statistic_bruteforce)
from .predictability import (PredictabilityEstimate, PredictabilityEstimator, VariableSet, kappa,
                             t_q)
from .simulation import (ScenarioSpec, builtin_scenario, generate_scenario, parse_scenario,
                         sample_copula)
from .validation import (ValidityCurve, adiam, adiam_multi, choose_k, fowlkes_mallows, msplit,
                         msplit_multi, rand_index, silhouette, validity_curve)

__version__ = "0.1.0"

__all__ = [
    "AggregatorSpec", "Backend", "DegenerateError", "Dendrogram", "DepclustError", "InputError",
    "Merge", "Partition", "PredictabilityEstimate", "PredictabilityEstimator", "ResourceError",
    "SampleMatrix", "ScenarioSpec", "SpecError", "ValidityCurve", "VariableSet", "adiam",
    "adiam_multi", "agglomerate", "builtin_scenario", "choose_k", "compute_ranks", "copula_cdf",
    "cut", "dissimilarity", "dissimilarity_matrix", "fowlkes_mallows", "generate_scenario",
    "kappa", "linkage_dissimilarity", "msplit", "msplit_multi", "nearest_neighbors",
    "nearest_neighbors_bruteforce", "pair_dissimilarity", "pairwise_matrix", "parameter_to_tau",
    "parse_scenario", "rand_index", "sample_copula", "silhouette", "t_q", "t_statistic",
    "t_statistic_bruteforce", "tau_to_parameter", "validity_curve",
]
