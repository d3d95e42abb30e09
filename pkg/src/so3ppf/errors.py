"""Exception types raised by the library.

All errors derive from :class:`So3ppfError` so callers can catch the whole
family with one clause.
"""

from __future__ import annotations


class So3ppfError(Exception):
    """Base class for all library errors."""


class NotAntiSymmetric(So3ppfError):
    """Input matrix is not anti-symmetric within tolerance."""


class NonUnitAxis(So3ppfError):
    """Rotation axis does not have unit norm."""


class InvalidRotation(So3ppfError):
    """Matrix is too far from SO(3) to validate or repair."""


class EnvelopeViolation(So3ppfError):
    """Error value left the open performance-envelope interval.

    Carries the offending value and, when known, the simulation time, so a
    harness can report where a run broke its guarantee.
    """

    def __init__(self, value: float, bound_lower: float, bound_upper: float,
                 t: float = float("nan")):
        self.value = value
        self.bound_lower = bound_lower
        self.bound_upper = bound_upper
        self.t = t
        super().__init__(
            f"error value {value:.6g} outside envelope "
            f"({bound_lower:.6g}, {bound_upper:.6g}) at t={t:.6g}"
        )


class CollinearVectors(So3ppfError):
    """Reference vectors are collinear; attitude is unobservable."""


class ZeroNormVector(So3ppfError):
    """A vector with (near-)zero norm cannot be normalized."""


class SingularMomentMatrix(So3ppfError):
    """Weighted body-vector moment matrix is rank deficient."""


class DegenerateProfile(So3ppfError):
    """Attitude profile matrix has rank < 2; reconstruction is ambiguous."""


class SingularityNear180(So3ppfError):
    """Filter correction is singular: attitude error is at/near 180 deg."""


class NonFiniteState(So3ppfError):
    """A filter state entry became NaN or infinite (divergence)."""
