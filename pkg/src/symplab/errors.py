"""Exception types raised across the package."""


class SymplabError(Exception):
    """Base class for every error raised by symplab."""


class DomainViolation(SymplabError):
    pass


class ImplicitSolveDivergence(SymplabError):
    pass


class OrbitEscape(SymplabError):
    def __init__(self, index, cause=None):
        self.index = index
        self.cause = cause
        super().__init__(f"orbit left the domain at step {index}: {cause}")


class DegenerateTwist(SymplabError):
    pass


class SmallDivisorBreakdown(SymplabError):
    def __init__(self, modes, floor):
        self.modes = [tuple(int(v) for v in m) for m in modes]
        self.floor = floor
        super().__init__(f"small divisor below {floor:g} for modes {self.modes}")


class NotNormalized(SymplabError):
    pass


class NonConvergence(SymplabError):
    pass


class DegenerateCurve(SymplabError):
    pass


class EmptyRestriction(SymplabError):
    pass


class InfeasibleGeometry(SymplabError):
    pass


class ConstructionFailure(SymplabError):
    def __init__(self, message, violated=None):
        self.violated = violated
        super().__init__(message)


class ResolutionMismatch(SymplabError):
    pass


class CapacityOverflow(SymplabError):
    pass


class OutsideCoreRegion(DomainViolation):
    pass


class AsymmetricC(SymplabError):
    pass


class BoxOutsideLinearization(SymplabError):
    pass


class InsufficientPoints(SymplabError):
    pass


class ConfigError(SymplabError):
    """Malformed or invalid configuration; carries a field path when known."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
