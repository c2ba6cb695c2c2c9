"""Exception hierarchy shared across the package."""


class IgaBeamError(Exception):
    """Base class for all package-specific errors."""


class DomainError(IgaBeamError):
    """Parametric coordinate outside the knot range."""


class RefinementError(IgaBeamError):
    """Invalid knot insertion or degree elevation request."""


class GeometryError(IgaBeamError):
    """Degenerate geometry (vanishing tangent, coincident control points)."""


class CurvinessError(IgaBeamError):
    """Curviness bound K*h/2 >= 1 violated; the equidistant metric is singular."""


class ValidationError(IgaBeamError):
    """Model document failed schema or cross-reference validation."""

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [issues]
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


class ConstraintError(IgaBeamError):
    """Inconsistent or singular constraint set."""


class SolverError(IgaBeamError):
    """Continuation failure; carries the partial path computed so far."""

    def __init__(self, message, records=None, diagnostics=None):
        super().__init__(message)
        self.records = records if records is not None else []
        self.diagnostics = diagnostics or {}
