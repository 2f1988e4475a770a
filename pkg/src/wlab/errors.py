"""Exception types raised across the package."""


class WlabError(Exception):
    """Base class for all package errors."""


class BadExponent(WlabError, ValueError):
    """An exponent lies outside the admissible range of an operation."""


class NegativeLevel(WlabError, ValueError):
    """A distribution level t < 0 was requested."""


class CoverNotFound(WlabError):
    """No shifted dyadic cube inside the enumerated range covers the cube."""


class DimensionMismatch(WlabError, ValueError):
    """Inputs live on different windows or have inconsistent lengths."""


class MissingInput(WlabError, KeyError):
    """A constant formula was called without one of its measured inputs."""


class UncertifiedFamily(WlabError):
    """A cube family failed the sparseness certificate."""


class DegenerateFamily(WlabError):
    """A parametric family produced a non-positive weight."""


class ConfigError(WlabError, ValueError):
    """A configuration file or spec could not be interpreted."""
