"""Core SO(3)/so(3) algebra.

Conventions used throughout the library:

* Rotation matrices map body-frame vectors into the inertial frame,
  ``v_inertial = R @ v_body``, with kinematics ``dR/dt = R @ skew(omega)``
  for a body-frame angular rate ``omega``.
* ``exp_so3(w)`` is the matrix exponential of ``skew(w)`` (positive
  convention), so the exact flow of the kinematics over a step ``dt`` with
  constant rate is ``R @ exp_so3(omega * dt)``.
* ``angle_axis(alpha, u)`` equals ``exp_so3(alpha * u)``: a positive angle
  about +z yaws x towards y.  Distances and traces are invariant under the
  opposite (transposed) convention.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidRotation, NonUnitAxis, NotAntiSymmetric

__all__ = [
    "skew",
    "vex",
    "pa",
    "vex_pa",
    "norm_euclid_dist",
    "angle_axis",
    "rodriguez",
    "exp_so3",
    "is_rotation",
    "as_rotation",
]

# Frobenius tolerance accepted by vex() for anti-symmetry.
ANTISYM_TOL = 1e-9
# Orthonormality/determinant tolerance for a valid rotation matrix.
ROTATION_TOL = 1e-9
# Largest drift as_rotation() silently repairs by polar projection.
REPAIR_TOL = 1e-6
# Below this angle exp_so3 switches to Taylor series for sin(x)/x terms.
_SMALL_ANGLE = 1e-4

_I3 = np.eye(3)


def skew(v) -> np.ndarray:
    """Map a 3-vector to its anti-symmetric (cross-product) matrix.

    ``skew(v) @ w == cross(v, w)`` for all w.
    """
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def vex(a, tol: float = ANTISYM_TOL) -> np.ndarray:
    """Inverse of :func:`skew`.

    Args:
        a: 3x3 anti-symmetric matrix (within ``tol`` in Frobenius norm).

    Raises:
        NotAntiSymmetric: if ``||a + a.T|| > tol``.
    """
    a = np.asarray(a, dtype=float)
    drift = float(np.linalg.norm(a + a.T))
    if drift > tol:
        raise NotAntiSymmetric(f"||A + A^T|| = {drift:.3e} exceeds {tol:.1e}")
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


def pa(b) -> np.ndarray:
    """Anti-symmetric projection (B - B^T)/2 onto so(3)."""
    b = np.asarray(b, dtype=float)
    return 0.5 * (b - b.T)


def vex_pa(b) -> np.ndarray:
    """``vex(pa(b))`` without the anti-symmetry check (b may be any 3x3)."""
    b = np.asarray(b, dtype=float)
    return 0.5 * np.array([b[2, 1] - b[1, 2],
                           b[0, 2] - b[2, 0],
                           b[1, 0] - b[0, 1]])


def norm_euclid_dist(r) -> float:
    """Normalized Euclidean distance of a rotation matrix, in [0, 1].

    Defined as ``Tr(I - R) / 4``; zero iff R is the identity, one at a
    half-turn.  The result is clipped to [0, 1] to absorb float round-off.
    """
    r = np.asarray(r, dtype=float)
    d = 0.25 * (3.0 - (r[0, 0] + r[1, 1] + r[2, 2]))
    return min(max(d, 0.0), 1.0)


def exp_so3(w) -> np.ndarray:
    """Exponential map so(3) -> SO(3) (Rodrigues formula).

    Uses Taylor fallbacks for ``sin(t)/t`` and ``(1-cos(t))/t^2`` below
    ``||w|| = 1e-4`` to avoid catastrophic cancellation.
    """
    w = np.asarray(w, dtype=float)
    t2 = float(w @ w)
    t = math.sqrt(t2)
    if t < _SMALL_ANGLE:
        a = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0)
        b = 0.5 - t2 / 24.0 * (1.0 - t2 / 30.0)
    else:
        a = math.sin(t) / t
        b = (1.0 - math.cos(t)) / t2
    k = skew(w)
    return _I3 + a * k + b * (k @ k)


def angle_axis(alpha: float, u, tol: float = ROTATION_TOL) -> np.ndarray:
    """Rotation by angle ``alpha`` (rad) about the unit axis ``u``.

    ``I + sin(alpha) skew(u) + (1 - cos(alpha)) skew(u)^2``, i.e.
    ``exp_so3(alpha * u)``.

    Raises:
        NonUnitAxis: if ``| ||u|| - 1 | > tol``.
    """
    u = np.asarray(u, dtype=float)
    n = float(np.linalg.norm(u))
    if abs(n - 1.0) > tol:
        raise NonUnitAxis(f"axis norm {n:.12g} != 1")
    return exp_so3(alpha * u)


def rodriguez(rho) -> np.ndarray:
    """Rotation matrix from a Rodriguez parameter vector.

    ``R = ((1 - |rho|^2) I + 2 rho rho^T + 2 skew(rho)) / (1 + |rho|^2)``.
    Satisfies ``norm_euclid_dist(R) = |rho|^2 / (1 + |rho|^2)`` and
    ``vex(pa(R)) = 2 rho / (1 + |rho|^2)``.
    """
    rho = np.asarray(rho, dtype=float)
    r2 = float(rho @ rho)
    return ((1.0 - r2) * _I3 + 2.0 * np.outer(rho, rho) + 2.0 * skew(rho)) / (1.0 + r2)


def is_rotation(r, tol: float = ROTATION_TOL) -> bool:
    """True if ``r`` is orthonormal with unit determinant within ``tol``."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    return (float(np.linalg.norm(r.T @ r - _I3)) <= tol
            and abs(float(np.linalg.det(r)) - 1.0) <= tol)


def as_rotation(r, tol: float = ROTATION_TOL, repair_tol: float = REPAIR_TOL) -> np.ndarray:
    """Validate ``r`` as a rotation matrix, repairing small drift.

    Drift up to ``repair_tol`` is projected back onto SO(3) through the polar
    decomposition (the nearest rotation in Frobenius norm); anything larger
    raises.

    Raises:
        InvalidRotation: if drift exceeds ``repair_tol`` or the input is not
            a finite 3x3 matrix.
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        raise InvalidRotation("expected a finite 3x3 matrix")
    drift = max(float(np.linalg.norm(r.T @ r - _I3)),
                abs(float(np.linalg.det(r)) - 1.0))
    if drift <= tol:
        return r
    if drift > repair_tol:
        raise InvalidRotation(f"drift {drift:.3e} exceeds repair limit {repair_tol:.1e}")
    u, _, vt = np.linalg.svd(r)
    d = np.array([1.0, 1.0, float(np.linalg.det(u @ vt))])
    return (u * d) @ vt
