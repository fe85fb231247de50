"""Exception hierarchy shared by all modules."""


class CeazfError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(CeazfError, ValueError):
    """An argument is outside its valid domain."""


class GeometryError(CeazfError):
    """The sampled topology cannot support the requested construction."""


class EdgeEffectError(GeometryError):
    """A cell needed for the typical user touches the simulation window boundary."""


class SingularityError(CeazfError, ArithmeticError):
    """A channel matrix is numerically rank deficient."""


class DegreesOfFreedomError(CeazfError):
    """More rows must be nulled than the antenna array can support."""


class RegimeError(ParameterError):
    """Load ratios fall outside the large-system regime (beta >= 1, beta + beta' >= 1)."""


class ConsistencyError(CeazfError):
    """Channel or precoder bookkeeping is incomplete for the requested computation."""


class NumericalError(CeazfError, ArithmeticError):
    """An iterative solver, root finder, or quadrature failed to converge."""


class ConfigError(CeazfError, ValueError):
    """A configuration file or override is invalid."""
