"""Exception hierarchy shared across the package."""


class AligatorError(Exception):
    """Base class for all package errors."""


class DomainError(AligatorError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ProtocolError(AligatorError, RuntimeError):
    """Online step/feed calls were made out of order."""


class NumericalError(AligatorError, ArithmeticError):
    """A computation degenerated (e.g. all awake weight mass vanished)."""


class ConfigError(AligatorError):
    """A run configuration is invalid or inconsistent."""


class InputFormatError(AligatorError):
    """An input file could not be parsed."""
