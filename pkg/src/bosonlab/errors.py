"""Exception hierarchy shared across the package.

Exit codes follow the command-line contract: 1 invariant or suite failure,
2 configuration error, 3 range/resolution error, 4 integrator failure.
"""


class BosonLabError(Exception):
    exit_code = 1


class ConfigError(BosonLabError):
    """Malformed or inconsistent configuration input."""

    exit_code = 2


class RangeError(BosonLabError):
    """A physical parameter falls outside its admissible interval."""

    exit_code = 3


class ResolutionError(BosonLabError):
    """The lattice cannot resolve the scaled interaction support."""

    exit_code = 3


class IntegratorError(BosonLabError):
    """A time stepper produced non-finite amplitudes or excessive norm drift."""

    exit_code = 4


class ConsistencyError(BosonLabError):
    """Two independent computation routes disagree beyond tolerance."""

    exit_code = 1
