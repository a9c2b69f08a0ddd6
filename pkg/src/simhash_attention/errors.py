"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid configuration value (non-positive size, indivisible dims, ...)."""


class ShapeError(ValueError):
    """Array shapes do not agree with each other or with a configuration."""


class DomainError(ValueError):
    """Scalar argument outside the domain of a formula (e.g. angle not in [0, pi])."""


class InputError(ValueError):
    """Bad model input, such as a token id outside the vocabulary."""


class NumericError(ArithmeticError):
    """Non-finite values where finite ones are required."""
