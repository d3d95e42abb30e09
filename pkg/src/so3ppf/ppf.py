"""Performance envelope and error transform.

The envelope ``xi(t)`` decays exponentially from a large initial bound to a
small steady-state bound.  An error ``e`` trapped inside the open interval
``(-delta_under * xi, delta_bar * xi)`` is mapped through a logistic-type
inverse to an unconstrained transformed error ``E``; ``mu`` is the analytic
derivative ``dE/de`` used by the filters as a dynamic gain.  ``z_of`` is the
forward map, so ``z_of(transform(e).value) * xi == e``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EnvelopeViolation

__all__ = [
    "PpfParams",
    "TransformedError",
    "xi",
    "xi_dot",
    "transform",
    "transform_clamped",
    "z_of",
    "CLAMP_MARGIN",
]

# transform_clamped pulls e/xi this far inside the open interval.
CLAMP_MARGIN = 1e-9


@dataclass(frozen=True)
class PpfParams:
    """Envelope and transform bounds.

    Attributes:
        xi0: initial envelope bound, > xi_inf.
        xi_inf: steady-state bound, > 0.
        ell: exponential decay rate (1/s), > 0.
        delta_bar: upper transform bound, >= delta_under.
        delta_under: lower transform bound, > 0.
    """

    xi0: float
    xi_inf: float
    ell: float
    delta_bar: float
    delta_under: float

    def __post_init__(self):
        if not (self.xi0 > self.xi_inf > 0.0):
            raise ValueError(f"need xi0 > xi_inf > 0, got {self.xi0}, {self.xi_inf}")
        if not self.ell > 0.0:
            raise ValueError(f"need ell > 0, got {self.ell}")
        if not (self.delta_bar >= self.delta_under > 0.0):
            raise ValueError(
                f"need delta_bar >= delta_under > 0, got {self.delta_bar}, {self.delta_under}")


@dataclass(frozen=True)
class TransformedError:
    """Transformed error value and its slope ``mu = dE/de > 0``."""

    value: float
    mu: float


def xi(p: PpfParams, t: float) -> float:
    """Envelope value at time t >= 0: ``(xi0 - xi_inf) exp(-ell t) + xi_inf``."""
    return (p.xi0 - p.xi_inf) * math.exp(-p.ell * t) + p.xi_inf


def xi_dot(p: PpfParams, t: float) -> float:
    """Time derivative of the envelope: ``-ell (xi0 - xi_inf) exp(-ell t)``."""
    return -p.ell * (p.xi0 - p.xi_inf) * math.exp(-p.ell * t)


def _transform_ratio(p: PpfParams, x: float, xi_t: float) -> TransformedError:
    # x = e / xi, already inside the open interval
    lo = p.delta_under + x
    hi = p.delta_bar - x
    value = 0.5 * math.log(lo / hi)
    mu = (0.5 / xi_t) * (1.0 / lo + 1.0 / hi)
    return TransformedError(value, mu)


def transform(p: PpfParams, e: float, xi_t: float, t: float = float("nan")) -> TransformedError:
    """Map a constrained error to its unconstrained transformed value.

    ``E = ln((delta_under + e/xi) / (delta_bar - e/xi)) / 2`` with slope
    ``mu = (1/(2 xi)) (1/(delta_under + e/xi) + 1/(delta_bar - e/xi))``.

    Args:
        e: error value; must satisfy ``-delta_under * xi_t < e < delta_bar * xi_t``.
        xi_t: envelope value at the current time (see :func:`xi`).
        t: optional timestamp forwarded into the violation diagnostics.

    Raises:
        EnvelopeViolation: if ``e`` is outside the open interval.
    """
    x = e / xi_t
    if not (-p.delta_under < x < p.delta_bar):
        raise EnvelopeViolation(e, -p.delta_under * xi_t, p.delta_bar * xi_t, t)
    return _transform_ratio(p, x, xi_t)


def transform_clamped(p: PpfParams, e: float, xi_t: float) -> tuple[TransformedError, bool]:
    """Clamping variant of :func:`transform` for runs with heavy noise.

    ``e/xi`` is clamped to ``margin`` inside the open interval instead of
    raising.  Returns ``(result, violated)`` where ``violated`` is True iff
    clamping occurred; callers count violations rather than silently masking
    a broken guarantee.
    """
    x = e / xi_t
    lo = -p.delta_under + CLAMP_MARGIN
    hi = p.delta_bar - CLAMP_MARGIN
    violated = not (lo < x < hi)
    if violated:
        x = min(max(x, lo), hi)
    return _transform_ratio(p, x, xi_t), violated


def z_of(p: PpfParams, value: float) -> float:
    """Forward logistic-type map (the inverse of :func:`transform` in e/xi).

    ``Z(E) = (delta_bar e^E - delta_under e^-E) / (e^E + e^-E)``; strictly
    increasing and bounded in ``(-delta_under, delta_bar)``.
    """
    # tanh form avoids overflow for large |value|
    th = math.tanh(value)
    return 0.5 * ((p.delta_bar - p.delta_under) + (p.delta_bar + p.delta_under) * th)
