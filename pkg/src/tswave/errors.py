"""Exception types shared across the toolkit."""


class TswaveError(RuntimeError):
    """Base class for all toolkit errors."""


class NonConvergence(TswaveError):
    """An iterative procedure exhausted its budget without meeting tolerance."""


class ZeroOnContour(TswaveError):
    """A sampled contour value is (numerically) zero; winding count undefined."""


class NonResolvable(TswaveError):
    """Adaptive contour refinement exhausted its sample budget."""


class DerivativeBreakdown(TswaveError):
    """Newton difference quotient underflowed; no usable search direction."""


class SectorViolation(TswaveError):
    """Argument lies outside the sector on which the Airy evaluation is defined."""


class UnsupportedOrder(TswaveError):
    """Requested derivative order exceeds what the evaluator provides."""


class StructureViolation(TswaveError):
    """Background profile fails a monotonicity/concavity structural inequality."""


class NonContraction(TswaveError):
    """Fixed-point gap ratios stopped decreasing; scheme is outside its contraction regime."""


class RegimeMismatch(TswaveError):
    """Operation invoked for the wrong wavenumber regime."""


class SingularSystem(TswaveError):
    """Discrete resolvent factorization is numerically singular (spectral parameter outside the resolvent set)."""


class WindingNotOne(TswaveError):
    """Boundary winding count differs from one; certification of a unique simple zero fails."""

    def __init__(self, winding, message=None):
        self.winding = winding
        super().__init__(message or f"winding number {winding} != 1")
