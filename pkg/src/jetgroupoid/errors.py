"""Exception types shared across the package."""


class JetGroupoidError(Exception):
    """Base class for all package errors."""


class IdenticallyZeroDenominator(JetGroupoidError, ZeroDivisionError):
    """A rational expression was divided by something that is identically zero."""


class DivisionByZero(JetGroupoidError, ZeroDivisionError):
    """A denominator vanished at an evaluation point."""


class UnboundAtom(JetGroupoidError, KeyError):
    """An atom occurring in an expression has no value at the evaluation point."""


class ResourceLimit(JetGroupoidError, RuntimeError):
    """Expression size or jet order exceeded a configured cap."""


class SourceTargetMismatch(JetGroupoidError, ValueError):
    pass


class SingularLinearPart(JetGroupoidError, ValueError):
    pass


class DimensionMismatch(JetGroupoidError, ValueError):
    pass


class UnknownName(JetGroupoidError, KeyError):
    pass


class UnknownSymbol(JetGroupoidError, ValueError):
    pass


class NonAffineTopOrder(JetGroupoidError, AssertionError):
    pass


class ReductionFailed(JetGroupoidError, RuntimeError):
    pass


class InadmissiblePoint(JetGroupoidError, ValueError):
    pass


class DSLSyntaxError(JetGroupoidError, SyntaxError):
    """Syntax error in the action DSL or expression grammar, with position."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
        self.lineno = line
        self.offset = column

    def __str__(self):
        return self.args[0]
