"""Exception types shared across the package."""


class DynVertexError(Exception):
    """Base class for all package-specific errors."""


class SingularParameter(DynVertexError):
    """A required denominator is (numerically) zero."""


class NonConvergent(DynVertexError):
    """A series failed to converge within the term budget."""


class NonTerminating(DynVertexError):
    """A series that must terminate has no termination index."""


class PatternMismatch(DynVertexError):
    """An arrow configuration does not match the requested special case."""


class InadmissibleParameters(DynVertexError):
    """Parameters outside the admissible region of a model or formula."""


class InadmissibleWeights(DynVertexError):
    """A sampled weight vector is negative or not normalized."""


class SizeLimit(DynVertexError):
    """An exact enumeration would exceed the configured state bound."""


class ModeError(DynVertexError):
    """Operation requested in the wrong (elliptic/trigonometric) mode."""


class ContourInfeasible(DynVertexError):
    """No admissible contour geometry exists for the requested identity."""


class NotConverged(DynVertexError):
    """A quadrature did not reach the requested accuracy."""


class OutOfDomain(DynVertexError):
    """Evaluation point outside the domain of a closed-form shape."""
