"""Exception types raised across the package."""


class EntswapError(ValueError):
    """Base class for all package errors."""


class ZeroNorm(EntswapError):
    pass


class NotNormalizable(EntswapError):
    pass


class BadSubset(EntswapError):
    pass


class DimensionMismatch(EntswapError):
    pass


class BadIndex(EntswapError):
    pass


class OutOfRange(EntswapError):
    pass


class NotPositive(EntswapError):
    pass


class BadBasis(EntswapError):
    pass


class MissingBasis(EntswapError):
    pass


class Singular(EntswapError):
    pass


class UnknownSuite(EntswapError):
    pass


class ConfigError(EntswapError):
    """Invalid sweep configuration.

    Carries the offending field and, when read from a file, its line number.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class IoError(EntswapError):
    pass
