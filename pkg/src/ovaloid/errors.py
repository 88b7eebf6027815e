"""Exception and warning types shared across the toolkit."""


class OvaloidError(Exception):
    """Base class for all toolkit errors."""


# --- geometry construction ---

class DegenerateInput(OvaloidError):
    """Input points are collinear/coplanar or otherwise span too little."""


class UnboundedBody(OvaloidError):
    """Halfspace normals do not positively span space."""


class EmptyBody(OvaloidError):
    """Halfspace intersection is empty or has empty interior."""


class DegenerateVertex(OvaloidError):
    """Vertex has fewer than 3 incident faces or a flat normal cone."""


class DegenerateFace(OvaloidError):
    """A prescribed face vanished at the solver optimum."""


# --- file ingestion ---

class ParseError(OvaloidError):
    """Malformed file; carries line/field diagnostics."""

    def __init__(self, message, path=None, line=None, field=None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = " (" + ", ".join(where) + ")" if where else ""
        super().__init__(message + prefix)


class SchemaError(OvaloidError):
    """Parsed content violates a named schema constraint."""

    def __init__(self, constraint, message=""):
        self.constraint = constraint
        super().__init__(f"{constraint}: {message}" if message else constraint)


# --- intrinsic metric ---

class InvalidNet(OvaloidError):
    """Net fails the closedness or edge-length gluing conditions."""


class SearchBudgetExceeded(OvaloidError):
    """Geodesic search hit the face-sequence or state budget."""


class TriangleInequalityViolated(OvaloidError):
    """Side lengths cannot form a planar triangle."""


# --- Monge-Ampere solver ---

class NotEnvelopeVertex(OvaloidError):
    """Node is not a vertex of the lower convex envelope."""


class QuadratureFailure(OvaloidError):
    """Weight function evaluated to a non-finite value."""


class Infeasible(OvaloidError):
    """Target masses exceed the attainable slope-image mass."""


class IncomparableProblems(OvaloidError):
    """Comparison preconditions (ordered masses/boundaries) fail."""


class MaxIterExceeded(OvaloidError):
    """Iteration budget exhausted; carries the best iterate found."""

    def __init__(self, message, best=None, residual=None):
        self.best = best
        self.residual = residual
        super().__init__(message)


class MinStepReached(OvaloidError):
    """Homotopy step fell below the minimum; carries progress so far."""

    def __init__(self, message, last_t=None, solutions=None):
        self.last_t = last_t
        self.solutions = solutions
        super().__init__(message)


# --- rigidity ---

class DegenerateGeometry(OvaloidError):
    """Vertex set too degenerate to span the trivial motion space."""


class NotStrictlyConvex(OvaloidError):
    """Discrete Hessian fails positive definiteness; carries node list."""

    def __init__(self, message, nodes=None):
        self.nodes = nodes or []
        super().__init__(message)


# --- CLI ---

class UnknownDemo(OvaloidError):
    """Requested demo name is not registered."""


class PrecisionWarning(UserWarning):
    """Result is returned but its supporting residual is suspiciously large."""
