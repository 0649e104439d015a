"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class ParseError(ValueError):
    """A file could not be parsed; message carries location info."""


class TruncatedDataError(ParseError):
    """A binary file ended before the declared number of samples."""


class UnsupportedFormatError(ParseError):
    """A WFDB signal format code outside the supported set (212, 16)."""


class NumericError(ArithmeticError):
    """A numeric routine diverged (NaN/Inf loss or parameters)."""
