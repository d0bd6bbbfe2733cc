"""Exception hierarchy shared across the package.

CLI exit-code mapping: DomainError -> 1, usage errors -> 2 (argparse),
ResourceError -> 3.
"""


class UptailError(Exception):
    pass


class DomainError(UptailError, ValueError):
    """Invalid input for an operation (bad parameter range, malformed graph...)."""


class ParseError(DomainError):
    """Malformed graph text or named spec."""


class ConstructionError(DomainError):
    """Block construction infeasible at the requested parameters."""


class ResourceError(UptailError, RuntimeError):
    """An enumeration/size cap or iteration budget was exceeded."""


class SamplingError(ResourceError):
    """Sampler retry budget exhausted."""


class NumericError(UptailError, RuntimeError):
    """Numerical routine failed to converge."""
