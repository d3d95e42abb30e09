"""Static attitude determination from weighted vector pairs (Wahba problem).

The optimum of ``J(R) = 1 - sum_i s_i (v_i_body)^T R^T v_i_inertial`` over
SO(3) (weights renormalized to sum 1) is computed from the SVD of the profile
matrix ``B = sum_i s_i v_i_body v_i_inertial^T`` with the usual determinant
correction, which keeps the result a proper rotation even when the naive
orthogonal fit would be a reflection.

The SVD itself (:func:`svd3`) is a one-sided Jacobi iteration, chosen over a
LAPACK call so the factorization is bit-for-bit reproducible from the input
alone: columns are ordered by descending singular value (stable sort) and
each singular pair is sign-fixed so the first non-negligible component of
the left vector is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProfile
from .sensors import MeasurementFrame

__all__ = ["ReconstructedAttitude", "svd3", "svd_attitude"]

# Two smallest singular values below this means rank < 2: attitude ambiguous.
PROFILE_RANK_TOL = 1e-9

_JACOBI_EPS = 1e-15
_MAX_SWEEPS = 60


@dataclass(frozen=True)
class ReconstructedAttitude:
    """Optimal rotation and the cost value at the optimum (>= 0)."""

    R_y: np.ndarray
    residual: float


def svd3(b) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic SVD of a 3x3 matrix by one-sided Jacobi.

    Returns ``(u, s, v)`` with ``b = u @ diag(s) @ v.T``, ``s`` descending.
    Zero-singular-value columns of ``u`` are completed by cross products so
    ``u`` is always a full orthogonal basis.
    """
    a = np.asarray(b, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"expected 3x3 matrix, got {a.shape}")
    # column-major plain-float lists: the sweep dominates the runtime
    cols = [[a[0, j], a[1, j], a[2, j]] for j in range(3)]
    vcols = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]

    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p, q in ((0, 1), (0, 2), (1, 2)):
            cp = cols[p]
            cq = cols[q]
            app = cp[0] * cp[0] + cp[1] * cp[1] + cp[2] * cp[2]
            aqq = cq[0] * cq[0] + cq[1] * cq[1] + cq[2] * cq[2]
            apq = cp[0] * cq[0] + cp[1] * cq[1] + cp[2] * cq[2]
            if apq == 0.0 or abs(apq) <= _JACOBI_EPS * math.sqrt(app * aqq):
                continue
            rotated = True
            zeta = (aqq - app) / (2.0 * apq)
            t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
            cs = 1.0 / math.sqrt(1.0 + t * t)
            sn = cs * t
            vp = vcols[p]
            vq = vcols[q]
            for k in range(3):
                x = cp[k]
                y = cq[k]
                cp[k] = cs * x - sn * y
                cq[k] = sn * x + cs * y
                x = vp[k]
                y = vq[k]
                vp[k] = cs * x - sn * y
                vq[k] = sn * x + cs * y
        if not rotated:
            break

    norms = [math.sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) for c in cols]
    order = sorted(range(3), key=lambda i: -norms[i])
    s = np.array([norms[i] for i in order])
    v = np.array([vcols[i] for i in order]).T

    u = np.zeros((3, 3))
    scale = s[0] if s[0] > 0.0 else 1.0
    for i in range(3):
        c = cols[order[i]]
        if s[i] > _JACOBI_EPS * scale:
            u[:, i] = np.array(c) / s[i]
        elif i == 2:
            u[:, 2] = np.cross(u[:, 0], u[:, 1])
        elif i == 1:
            # rank <= 1: complete with the axis least aligned with u0
            e = np.zeros(3)
            e[int(np.argmin(np.abs(u[:, 0])))] = 1.0
            w = np.cross(u[:, 0], e)
            u[:, 1] = w / np.linalg.norm(w)
        else:
            u[:, :] = np.eye(3)
            break

    # canonical signs: first component of each left vector above threshold positive
    for i in range(3):
        for k in range(3):
            if abs(u[k, i]) > 1e-12:
                if u[k, i] < 0.0:
                    u[:, i] = -u[:, i]
                    if s[i] > _JACOBI_EPS * scale:
                        v[:, i] = -v[:, i]
                break
    return u, s, v


def svd_attitude(frame: MeasurementFrame) -> ReconstructedAttitude:
    """Best-fit attitude for one measurement frame.

    Raises:
        DegenerateProfile: profile matrix rank < 2 (two smallest singular
            values below 1e-9), e.g. a single effective direction.
    """
    w = np.array([ob.weight for ob in frame.observations])
    w = w / float(np.sum(w))
    b = np.zeros((3, 3))
    for ob, s in zip(frame.observations, w):
        b += s * np.outer(ob.meas_body, ob.ref_inertial)

    u, sig, v = svd3(b)
    if sig[1] < PROFILE_RANK_TOL:
        raise DegenerateProfile(
            f"two smallest singular values {sig[1]:.3e}, {sig[2]:.3e} below tolerance")

    du = 1.0 if np.linalg.det(u) > 0.0 else -1.0
    dv = 1.0 if np.linalg.det(v) > 0.0 else -1.0
    u_plus = u.copy()
    u_plus[:, 2] *= du
    v_plus = v.copy()
    v_plus[:, 2] *= dv
    r_y = v_plus @ u_plus.T
    residual = 1.0 - float(np.sum(b * r_y.T))
    return ReconstructedAttitude(r_y, residual)
