"""Exception types raised by qcflow operations."""


class QCFlowError(Exception):
    """Base class for all qcflow errors."""


class SingularPoint(QCFlowError):
    """Derivative stencil touches a point where the field is not differentiable."""


class SeamPoint(QCFlowError):
    """Stencil straddles the seam of a piecewise field (flag, rarely raised)."""


class CoincidentPoints(QCFlowError):
    """Two-point operation called with identical points."""


class NotNormalizable(QCFlowError):
    """Field has re f(1) <= 0 and cannot be rescaled into the normalized family."""


class StepUnderflow(QCFlowError):
    """Adaptive controller drove the step below the hard floor.

    Carries the partial trajectory in the ``trajectory`` attribute.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NotInAnnulus(QCFlowError):
    """Point or trajectory lies outside the requested annulus window."""


class MonotonicityViolation(QCFlowError):
    """|x(t)| decreased along a trajectory of a supposedly normalized field."""


class WindowExit(QCFlowError):
    """Trajectory left the annulus before the comparison span ended."""


class OriginTooClose(QCFlowError):
    """Quasipolar operation requested too close to the critical point."""


class NoConvergence(QCFlowError):
    """Shooting/integration did not reach its target within the step budget."""


class BranchAmbiguity(QCFlowError):
    """Stencil thetas cannot be placed on a common branch at this step size."""


class ZeroGradient(QCFlowError):
    """|grad Theta| numerically vanishes; integrating factor undefined."""


class ZeroRadialComponent(QCFlowError):
    """Radial speed vanishes; the polar equation is singular here."""


class ZeroVelocity(QCFlowError):
    """Trajectory velocity vanishes; tangent direction undefined."""


class TooFewSamples(QCFlowError):
    """Arc does not carry enough samples for the requested estimate."""


class MissingParametrization(QCFlowError):
    """Arc lacks the arclength parametrization required by this operation."""


class CurvesCoincideAtEnd(QCFlowError):
    """Partition construction needs distinct curve values at the end time."""


class DistanceMismatch(QCFlowError):
    """Arc pair does not realize dist = time-length within tolerance."""


class NotDeltaMonotoneOnArc(QCFlowError):
    """Sampled delta_f is not positive on the arc; rectification unavailable."""


class ArcTooLong(QCFlowError):
    """Chord-direction spread exceeds the rectification smallness condition."""


class NonUnitZ(QCFlowError):
    """Inner-product bound requires |Z| = 1."""
