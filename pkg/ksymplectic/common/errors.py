# KSymplectic project.
#
# Exception hierarchy shared by the geometry library and the CLI. Everything the
# library raises on purpose derives from KsymError, so commands only need to tell
# apart input problems (spec/expression errors, exit code 2) from geometric
# precondition failures (recorded as failed checks, exit code 1).
#


class KsymError(Exception):
    """Base class for every error raised on purpose by ksymplectic."""


#####################################################################
# Expression language
#
class ExpressionError(KsymError):
    pass


class ExprSyntaxError(ExpressionError):
    def __init__(self, position, expected, source=""):
        self.position = position
        self.expected = list(expected)
        self.source = source
        super().__init__(f"syntax error at position {position}: expected {' or '.join(self.expected)}")


class UnknownIdentifier(ExpressionError):
    def __init__(self, name, position=None):
        self.name = name
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"unknown identifier '{name}'{where}")


class BadExponent(ExpressionError):
    def __init__(self, position, token=""):
        self.position = position
        self.token = token
        super().__init__(f"exponent must be an integer at position {position} (got '{token}')")


class EvalError(ExpressionError):
    def __init__(self, subexpression, reason):
        self.subexpression = subexpression
        self.reason = reason
        super().__init__(f"cannot evaluate '{subexpression}': {reason}")


#####################################################################
# Spec files
#
class SpecError(KsymError):
    pass


class SpecIOError(SpecError):
    pass


class SpecJSONError(SpecError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


#####################################################################
# Index bookkeeping
#
class IndexOutOfRange(KsymError):
    pass


class DimensionMismatch(KsymError):
    pass


#####################################################################
# Geometry
#
class CompatibilityError(KsymError):
    pass


class SingularSystem(KsymError):
    pass


class OrthogonalityError(KsymError):
    pass


class SingularMetric(KsymError):
    pass


class NotSPD(KsymError):
    pass


class PropertyViolation(KsymError):
    def __init__(self, identity, residual):
        self.identity = identity
        self.residual = residual
        super().__init__(f"{identity} violated (residual {residual:.3e})")


class NotGeodesic(KsymError):
    pass


class NotVertical(KsymError):
    pass


class NotHorizontal(KsymError):
    pass


class IncompleteLeaf(KsymError):
    pass


class StructureViolation(KsymError):
    pass


class DegreeOverflow(KsymError):
    pass


class NotFlat(KsymError):
    pass


class PathDependence(KsymError):
    pass


class NewtonDivergence(KsymError):
    pass
