"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class DepclustError(Exception):
    """Base class for all errors raised by depclust."""


class InputError(DepclustError, ValueError):
    """Malformed or out-of-contract input data (non-finite values, bad shapes, ...)."""


class DegenerateError(InputError):
    """A constant column or response; the rank statistic has a zero denominator."""


class SpecError(DepclustError, ValueError):
    """Invalid specification: aggregator strings, variable sets, scenario names, partitions."""


class ResourceError(DepclustError, RuntimeError):
    """A requested computation exceeds the configured combinatorial budget."""
