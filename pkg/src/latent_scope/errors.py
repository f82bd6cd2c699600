"""Exception hierarchy. The CLI maps each family onto an exit status."""


class LatentScopeError(Exception):
    """Base class for all errors raised by latent_scope."""


class ValidationError(LatentScopeError, ValueError):
    """Input data violates a contract (shape, finiteness, dimension match)."""


class ConfigurationError(LatentScopeError, ValueError):
    """A parameter is out of its allowed range (sigma <= 0, k too large, ...)."""


class FormatError(ValidationError):
    """An embedding file is malformed."""


class UnsupportedLayoutError(FormatError):
    """A well-formed npy file uses a layout outside the supported subset."""


class NumericDomainError(LatentScopeError, ArithmeticError):
    """A quantity is mathematically undefined for the given input."""
