"""Command-line entry point: ``depclust {cluster,kappa,compare,simulate}``.

Exit codes: 0 success, 2 malformed input, 3 constant column,
4 invalid specification, 5 resource limit exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .clustering import Backend, agglomerate, cut
from .dissimilarity import AggregatorSpec, dissimilarity, pairwise_matrix
from .errors import DegenerateError, InputError, ResourceError, SpecError
from .io import (format_csv, format_partition, partitions_on_common_universe, read_csv,
                 read_partition)
from .predictability import DEFAULT_PERM_BUDGET, PredictabilityEstimator
from .render import dendrogram_svg
from .simulation import generate_scenario, load_scenario
from .validation import choose_k, fowlkes_mallows, rand_index, validity_curve

log = logging.getLogger("depclust")

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_SPEC, EXIT_RESOURCE = 0, 2, 3, 4, 5
EMITS = ("json", "newick", "svg", "validity")
_MASK64 = (1 << 64) - 1


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value <= _MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _emit_list(text: str) -> tuple[str, ...]:
    items = tuple(x.strip().lower() for x in text.split(",") if x.strip())
    bad = [x for x in items if x not in EMITS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown emit target(s) {bad}; choose from {EMITS}")
    return items


def _labels(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _print_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="depclust",
                                description="Hierarchical variable clustering by predictability.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, diss_default="average"):
        sp.add_argument("--input", required=True, help="CSV with a header row")
        sp.add_argument("--diss", default=diss_default,
                        help="dissimilarity spec, e.g. 'average', 'copula:pi', 'copula_dual:M'")
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--perm-budget", type=_positive, default=DEFAULT_PERM_BUDGET)

    c = sub.add_parser("cluster", help="build a dendrogram and validity curve")
    common(c)
    c.add_argument("--backend", default="multivariate",
                   help="'multivariate' or 'linkage:<single|average|complete>'")
    c.add_argument("--out", default=".", help="output directory")
    c.add_argument("--emit", type=_emit_list, default=EMITS,
                   help="comma list from json,newick,svg,validity")
    c.add_argument("--k", type=_positive, default=None, help="also report the cut at k clusters")

    k = sub.add_parser("kappa", help="directed predictabilities between two variable sets")
    common(k, diss_default="")
    k.add_argument("--predictors", required=True, type=_labels, help="comma-separated labels")
    k.add_argument("--responses", required=True, type=_labels, help="comma-separated labels")

    cp = sub.add_parser("compare", help="Rand and Fowlkes-Mallows indices of two partitions")
    cp.add_argument("partition_a")
    cp.add_argument("partition_b")

    s = sub.add_parser("simulate", help="generate a scenario as CSV")
    s.add_argument("scenario", help="built-in scenario name or path to a scenario file")
    s.add_argument("--n", type=_positive, default=None)
    s.add_argument("--seed", type=_seed, default=None)
    s.add_argument("--sigma", type=float, default=0.0, help="noise level for 'noise'")
    s.add_argument("--alpha", type=float, default=1.0, help="strength for 'four-groups'")
    s.add_argument("--k", type=_positive, default=3, help="multiplier for 'asym-mod-k'")
    s.add_argument("--out", default=None, help="CSV path (default: stdout)")
    s.add_argument("--benchmark", default=None, help="write the benchmark partition here")
    return p


def cmd_cluster(args) -> int:
    spec = AggregatorSpec.parse(args.diss)
    backend = Backend.parse(args.backend, spec)
    data = read_csv(args.input)
    if data.m < 3:
        raise InputError(f"clustering needs at least 3 columns, got {data.m}")
    est = PredictabilityEstimator(data, args.seed, args.perm_budget)
    log.info("clustering %d variables, n=%d, %s, backend %s", data.m, data.n, spec, backend)
    dendro = agglomerate(data, backend, args.seed, args.perm_budget, estimator=est)
    pw = pairwise_matrix(data, spec, estimator=est)
    curve = validity_curve(dendro, pw)
    chosen = {rule: choose_k(curve, rule) for rule in ("tradeoff", "silhouette")}

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in args.emit:
        (out / "dendrogram.json").write_text(dendro.to_json(), encoding="utf-8")
        written.append(str(out / "dendrogram.json"))
    if "newick" in args.emit:
        (out / "tree.newick").write_text(dendro.to_newick(), encoding="utf-8")
        written.append(str(out / "tree.newick"))
    if "svg" in args.emit:
        if dendro.has_inversions():
            log.warning("dendrogram has height inversions; drawn as recorded")
        (out / "dendrogram.svg").write_text(dendrogram_svg(dendro, f"{spec}, {backend}"),
                                            encoding="utf-8")
        written.append(str(out / "dendrogram.svg"))
    if "validity" in args.emit:
        lines = curve.to_csv().splitlines()
        lines[0] += ",chosen_tradeoff,chosen_silhouette"
        for i, kk in enumerate(curve.ks, start=1):
            lines[i] += f",{int(kk == chosen['tradeoff'])},{int(kk == chosen['silhouette'])}"
        (out / "validity.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(str(out / "validity.csv"))

    result = {
        "labels": list(data.labels),
        "diss": str(spec),
        "backend": str(backend),
        "seed": args.seed,
        "chosen_k": chosen,
        "partitions": {rule: cut(dendro, kk).label_blocks(data.labels)
                       for rule, kk in chosen.items()},
        "inversions": dendro.has_inversions(),
        "outputs": written,
    }
    if args.k is not None:
        if args.k > data.m:
            raise SpecError(f"--k must be at most {data.m}")
        result["cut"] = {"k": args.k, "partition": cut(dendro, args.k).label_blocks(data.labels)}
    _print_json(result)
    return EXIT_OK


def cmd_kappa(args) -> int:
    data = read_csv(args.input)
    pred = [data.index_of(x) for x in args.predictors]
    resp = [data.index_of(x) for x in args.responses]
    est = PredictabilityEstimator(data, args.seed, args.perm_budget)
    fwd = est.kappa(resp, pred)
    bwd = est.kappa(pred, resp)

    def describe(e, responses, predictors):
        return {"responses": responses, "predictors": predictors, "value": e.value,
                "raw": e.raw, "perm_count": e.perm_count, "exact": e.exact}

    result = {
        "seed": args.seed,
        "forward": describe(fwd, args.responses, args.predictors),
        "backward": describe(bwd, args.predictors, args.responses),
        "d_pi": dissimilarity(AggregatorSpec("copula", "pi"), fwd.value, bwd.value),
        "d_ave": dissimilarity(AggregatorSpec("average"), fwd.value, bwd.value),
    }
    if args.diss:
        spec = AggregatorSpec.parse(args.diss)
        result["d"] = {"spec": str(spec), "value": dissimilarity(spec, fwd.value, bwd.value)}
    _print_json(result)
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = partitions_on_common_universe(read_partition(args.partition_a),
                                         read_partition(args.partition_b))
    _print_json({"rand_index": rand_index(a, b), "fowlkes_mallows": fowlkes_mallows(a, b)})
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = load_scenario(args.scenario, n=args.n, seed=args.seed, sigma=args.sigma,
                         alpha=args.alpha, k=args.k)
    data, bench = generate_scenario(spec)
    text = format_csv(data)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.benchmark:
        if bench is None:
            raise SpecError(f"scenario {spec.name!r} has no benchmark partition")
        Path(args.benchmark).write_text(format_partition(bench.label_blocks(data.labels)),
                                        encoding="utf-8")
    log.info("wrote scenario %s: n=%d, %d variables", spec.name, data.n, data.m)
    return EXIT_OK


_COMMANDS = {"cluster": cmd_cluster, "kappa": cmd_kappa, "compare": cmd_compare,
             "simulate": cmd_simulate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="depclust: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return _COMMANDS[args.command](args)
    except DegenerateError as exc:
        log.error("%s", exc)
        return EXIT_DEGENERATE
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except SpecError as exc:
        log.error("%s", exc)
        return EXIT_SPEC
    except ResourceError as exc:
        log.error("%s", exc)
        return EXIT_RESOURCE
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
