"""Exception hierarchy."""


class BlochError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BlochError, ValueError):
    """Invalid operator spec, regime mismatch or bad parameters."""


class IntegrationError(BlochError, RuntimeError):
    pass


class StepSizeUnderflow(IntegrationError):
    """Adaptive step fell below the floor (stiffness beyond tolerance)."""


class NonFiniteSolution(IntegrationError):
    """Overflow in the fundamental system; rescale the contour or segment count."""


class ContourTooClose(BlochError):
    """A characteristic-determinant zero lies (numerically) on the contour."""


class NonConvergentWinding(BlochError):
    """Winding number did not stabilise under node refinement."""


class NoConvergence(BlochError):
    """Newton/secant refinement exhausted its iterations."""


class BasinEscape(BlochError):
    """Refined root left the expected localisation region."""


class NonSimpleEigenvalue(BlochError):
    """Null space of the boundary matrix is not one-dimensional."""


class CertificationCounterexample(BlochError):
    """A certified spec violated a verified localisation mechanism."""


class BranchJump(BlochError):
    """Continuation jumped to a different branch; refine the parameter grid."""
