"""Exception hierarchy shared by every module of the package."""


class VlcSecrecyError(Exception):
    """Base class for all package errors."""


class DomainError(VlcSecrecyError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InvalidParameter(VlcSecrecyError, ValueError):
    """A special-function parameter hits a pole or an excluded value."""


class NonConvergent(VlcSecrecyError, ArithmeticError):
    """A series or an adaptive quadrature hit its iteration cap."""


class DegenerateRegion(VlcSecrecyError):
    """The positive-secrecy integration region is empty."""


class ConfigError(VlcSecrecyError, ValueError):
    """Invalid CLI / JSON configuration. ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
