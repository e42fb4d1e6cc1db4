"""Exception hierarchy for geoduel."""


class GeoDuelError(Exception):
    """Base class for every error raised by the package."""


class ExprSyntaxError(GeoDuelError, SyntaxError):
    """Malformed field expression; carries the 1-based column and offending token."""

    def __init__(self, message, column, token):
        super().__init__(f"{message} at column {column} (token {token!r})")
        self.column = column
        self.token = token


class UnknownIdentifier(GeoDuelError, NameError):
    pass


class DomainError(GeoDuelError, ValueError):
    """Evaluation left the domain of a function (log of non-positive, 1/0, ...)."""

    def __init__(self, message, subexpression=None):
        if subexpression is not None:
            message = f"{message} in '{subexpression}'"
        super().__init__(message)
        self.subexpression = subexpression


class BadPermutation(GeoDuelError, ValueError):
    pass


class MixedVariance(GeoDuelError, ValueError):
    pass


class VarianceMismatch(GeoDuelError, ValueError):
    pass


class SingularMetric(GeoDuelError, ValueError):
    pass


class NotTorsionFree(GeoDuelError, ValueError):
    pass


class AsymmetricC(GeoDuelError, ValueError):
    pass


class DegenerateT(GeoDuelError, ValueError):
    pass


class NotMetric(GeoDuelError, ValueError):
    pass


class NotLastPairAntisymmetric(GeoDuelError, ValueError):
    pass


class DimensionTooSmall(GeoDuelError, ValueError):
    pass


class WrongSymmetryClass(GeoDuelError, ValueError):
    pass


class NormalizationError(GeoDuelError, ValueError):
    pass


class QuadratureUnderflow(GeoDuelError, ArithmeticError):
    pass


class NonpositiveSigma(GeoDuelError, ValueError):
    pass


class SchemaError(GeoDuelError, ValueError):
    """Scenario file does not match the schema; names the offending field."""

    def __init__(self, field, reason):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class IndexOutOfRange(GeoDuelError, IndexError):
    pass
