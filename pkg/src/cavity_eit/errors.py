"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration and input problems exit
with 2, numerical failures with 3.
"""


class CavityEitError(Exception):
    """Base class for all package errors."""

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class InvalidInputError(CavityEitError, ValueError):
    """A parameter or argument violates its documented contract."""


class ConfigError(CavityEitError, ValueError):
    """A config file or CLI invocation is malformed; names the offending key."""


class SpectrumFormatError(CavityEitError, ValueError):
    """A spectrum file violates the CSV contract; carries the row number."""


class SingularityError(CavityEitError, ArithmeticError):
    """An expression hit an exact pole; names the offending parameters."""


class UnsupportedConfigurationError(CavityEitError):
    """The requested engine cannot handle this configuration (e.g. N != 1)."""


class IntegrationFailureError(CavityEitError, RuntimeError):
    """Adaptive step control underflowed; carries integrator diagnostics."""


class FockLeakageError(CavityEitError, RuntimeError):
    """Top Fock level acquired non-negligible population; raise n_fock."""


class UndefinedLinewidthError(CavityEitError, RuntimeError):
    """The half-level crossing does not exist within the searched range."""


class NoTransparencyError(CavityEitError, RuntimeError):
    """The transparency curve does not exceed its two-level reference."""
