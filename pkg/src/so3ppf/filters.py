"""Attitude observers, each a pure step function over one measurement frame.

Four observers share the left-invariant kinematics
``dR_hat/dt = R_hat @ skew(omega_m - b_hat - W)``:

* :func:`semi_direct_step` -- envelope-shaped dynamic gains driven by the
  reconstructed attitude (:func:`so3ppf.reconstruct.svd_attitude`);
* :func:`direct_step` -- the same guarantees evaluated directly from the
  weighted vector measurements, no reconstruction;
* :func:`passive_step` -- constant-gain passive complementary baseline;
* :func:`mekf_step` -- multiplicative EKF baseline on the unit quaternion.

Time stepping: gyro-bias and covariance states advance by explicit Euler
with the rates evaluated at the current state; the attitude advances by an
exact group step ``R_hat @ exp_so3((omega_m - b_hat - W) * dt)`` with the
correction held over the step, so orthonormality never drifts by more than
accumulated round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ppf
from .errors import NonFiniteState, SingularityNear180
from .ppf import PpfParams
from .reconstruct import svd_attitude
from .sensors import MeasurementFrame, weighted_matrices
from .so3 import exp_so3, skew, vex_pa

__all__ = [
    "PpfFilterGains",
    "PpfFilterState",
    "StepDiagnostics",
    "MekfState",
    "semi_direct_step",
    "direct_step",
    "passive_step",
    "mekf_step",
    "mekf_case_params",
    "mekf_init",
    "quat_mul",
    "quat_conj",
    "quat_to_rot",
    "rot_to_quat",
    "psi_matrix",
]

# Correction denominators (1 - dist) and (1 + alignment trace) below this are
# treated as the 180-degree singular set.
EPS_SING = 1e-6

# The envelope filters' dynamic gains are unbounded near the envelope border
# by design; an explicit step cannot follow that stiffness at a finite rate.
# The applied correction rotation per step is therefore capped at this angle
# (rad), and the bias-estimate increment per step at W_STEP_MAX_RATE (rad/s).
# Both are inactive in steady state and in noise-free transients after the
# first few steps, and are never applied to the constant-gain baselines,
# whose per-step correction is bounded by construction.
W_STEP_MAX_ANGLE = 0.3
B_STEP_MAX_RATE = 0.05

_NAN = float("nan")


@dataclass(frozen=True)
class PpfFilterGains:
    """Positive bias-adaptation gain and correction gain."""

    gamma: float
    k_w: float

    def __post_init__(self):
        if self.gamma <= 0.0 or self.k_w <= 0.0:
            raise ValueError(f"gains must be > 0, got gamma={self.gamma}, k_w={self.k_w}")


@dataclass(frozen=True)
class PpfFilterState:
    """Attitude/bias estimate plus the last transform values for logging."""

    R_hat: np.ndarray
    b_hat: np.ndarray
    last_E: float = _NAN
    last_mu: float = _NAN
    violation_count: int = 0


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step quantities a harness logs.

    ``err_metric`` is the filter's own error measure (reconstructed-attitude
    distance for the semi-direct/passive filters, weighted measurement-space
    distance for the direct filter).
    """

    err_metric: float
    E: float
    mu: float
    W: np.ndarray
    xi_t: float
    envelope_ok: bool


def _ppf_error_terms(p: PpfParams, e: float, xi_t: float, t: float, strict: bool):
    """Transformed error for e with strict or clamped envelope policy."""
    if strict:
        te = ppf.transform(p, e, xi_t, t)
        return te, False
    return ppf.transform_clamped(p, e, xi_t)


def _cap_correction(w: np.ndarray, dt: float) -> np.ndarray:
    angle = float(np.linalg.norm(w)) * dt
    if angle > W_STEP_MAX_ANGLE:
        return w * (W_STEP_MAX_ANGLE / angle)
    return w


def _cap_bias_rate(b_dot: np.ndarray, dt: float) -> np.ndarray:
    step = float(np.linalg.norm(b_dot)) * dt
    if step > B_STEP_MAX_RATE:
        return b_dot * (B_STEP_MAX_RATE / step)
    return b_dot


def _advance(state: PpfFilterState, frame: MeasurementFrame, w, b_dot, dt: float,
             te, violated: bool) -> PpfFilterState:
    b_new = state.b_hat + dt * b_dot
    r_new = state.R_hat @ exp_so3((frame.omega_meas - state.b_hat - w) * dt)
    return PpfFilterState(r_new, b_new, te.value, te.mu,
                          state.violation_count + int(violated))


def semi_direct_step(state: PpfFilterState, frame: MeasurementFrame, p: PpfParams,
                     g: PpfFilterGains, t: float, dt: float, *,
                     strict: bool = False) -> tuple[PpfFilterState, StepDiagnostics]:
    """One step of the envelope-shaped filter driven by reconstruction.

    The attitude error ``r_err = R_y^T R_hat`` against the reconstructed
    attitude gives the distance ``e``, its transform ``(E, mu)``, and the
    correction

    ``W = 2 (k_w mu E - xi_dot/(4 xi)) / (1 - e) * vex(pa(r_err))``,

    while the bias estimate integrates ``gamma mu E vex(pa(r_err)) / 2``.

    Args:
        strict: raise on envelope violation / singularity instead of the
            robust default (clamp the transform and count; zero the
            correction for a singular step).

    Raises:
        SingularityNear180: strict mode with ``1 - e <= 1e-6``.
        EnvelopeViolation: strict mode with ``e`` outside the envelope.
        DegenerateProfile, CollinearVectors: propagated from reconstruction.
    """
    recon = svd_attitude(frame)
    r_err = recon.R_y.T @ state.R_hat
    e = 0.25 * (3.0 - r_err[0, 0] - r_err[1, 1] - r_err[2, 2])
    xi_t = ppf.xi(p, t)
    xid = ppf.xi_dot(p, t)
    te, violated = _ppf_error_terms(p, e, xi_t, t, strict)
    axis = vex_pa(r_err)

    denom = 1.0 - e
    if denom <= EPS_SING:
        # correction direction unreliable at 180 deg: gyro-only step
        if strict:
            raise SingularityNear180(f"1 - dist = {denom:.3e} at t={t:.6g}")
        w = np.zeros(3)
        b_dot = np.zeros(3)
    else:
        w = _cap_correction(
            (2.0 * (g.k_w * te.mu * te.value - 0.25 * xid / xi_t) / denom) * axis, dt)
        # a breached envelope gives meaningless clamped gains: pull back toward
        # the measurement (capped) but hold the slow bias integrator
        b_dot = np.zeros(3) if violated else \
            _cap_bias_rate(0.5 * g.gamma * te.mu * te.value * axis, dt)

    new_state = _advance(state, frame, w, b_dot, dt, te, violated)
    return new_state, StepDiagnostics(e, te.value, te.mu, w, xi_t, not violated)


def direct_step(state: PpfFilterState, frame: MeasurementFrame, p: PpfParams,
                g: PpfFilterGains, t: float, dt: float, *,
                strict: bool = False) -> tuple[PpfFilterState, StepDiagnostics]:
    """One step of the envelope-shaped filter on raw vector measurements.

    No attitude is reconstructed.  With predicted body vectors
    ``v_hat_i = R_hat^T v_i_inertial`` and weights ``s_i``:

    * correction axis   ``sum_i (s_i/2) v_hat_i x v_i_body``,
    * error metric      ``e = sum_i s_i (1 - v_hat_i . v_i_body) / 4``,
    * alignment trace   ``ups = Tr(m_body^{-1} sum_i s_i v_i_body v_hat_i^T)``,

    and ``W = (4/lam_min) (k_w mu E - xi_dot/xi) / (1 + ups) * axis`` where
    ``lam_min`` is recomputed each step from the measured moment matrix.
    ``(E, mu)`` use ``e`` in place of the reconstruction distance.

    Raises:
        SingularityNear180: strict mode with ``1 + ups <= 1e-6``.
        EnvelopeViolation: strict mode with ``e`` outside the envelope.
        SingularMomentMatrix: measured moment matrix rank deficient.
    """
    obs = frame.observations
    n = len(obs)
    v_body = np.empty((n, 3))
    v_ref = np.empty((n, 3))
    s = np.empty(n)
    for i, ob in enumerate(obs):
        v_body[i] = ob.meas_body
        v_ref[i] = ob.ref_inertial
        s[i] = ob.weight

    v_hat = v_ref @ state.R_hat  # rows: R_hat^T v_ref_i
    sw = s[:, None]
    axis = 0.5 * (sw * np.cross(v_hat, v_body)).sum(axis=0)
    e = 0.25 * float(s @ (1.0 - np.einsum("ij,ij->i", v_hat, v_body)))

    m_body, _, lam_min = weighted_matrices(frame)
    cross_moment = v_body.T @ (sw * v_hat)
    ups = float(np.trace(np.linalg.solve(m_body, cross_moment)))

    xi_t = ppf.xi(p, t)
    xid = ppf.xi_dot(p, t)
    te, violated = _ppf_error_terms(p, e, xi_t, t, strict)

    denom = 1.0 + ups
    if denom <= EPS_SING:
        if strict:
            raise SingularityNear180(f"1 + alignment trace = {denom:.3e} at t={t:.6g}")
        w = np.zeros(3)
        b_dot = np.zeros(3)
    else:
        w = _cap_correction(
            ((4.0 / lam_min) * (g.k_w * te.mu * te.value - xid / xi_t) / denom) * axis, dt)
        b_dot = np.zeros(3) if violated else \
            _cap_bias_rate(0.5 * g.gamma * te.mu * te.value * axis, dt)

    new_state = _advance(state, frame, w, b_dot, dt, te, violated)
    return new_state, StepDiagnostics(e, te.value, te.mu, w, xi_t, not violated)


def passive_step(state: PpfFilterState, frame: MeasurementFrame, k1: float,
                 dt: float) -> tuple[PpfFilterState, StepDiagnostics]:
    """One step of the constant-gain passive complementary baseline.

    ``W = k1 vex(pa(R_y^T R_hat))`` and the bias integrates the same term.
    Carries no envelope machinery; diagnostics report the reconstruction
    distance with NaN transform values.
    """
    if k1 <= 0.0:
        raise ValueError(f"k1 must be > 0, got {k1}")
    recon = svd_attitude(frame)
    r_err = recon.R_y.T @ state.R_hat
    e = 0.25 * (3.0 - r_err[0, 0] - r_err[1, 1] - r_err[2, 2])
    axis = vex_pa(r_err)
    w = k1 * axis
    b_new = state.b_hat + dt * (k1 * axis)
    r_new = state.R_hat @ exp_so3((frame.omega_meas - state.b_hat - w) * dt)
    new_state = PpfFilterState(r_new, b_new, _NAN, _NAN, state.violation_count)
    return new_state, StepDiagnostics(e, _NAN, _NAN, w, _NAN, True)


# ---------------------------------------------------------------------------
# Quaternion utilities (Hamilton convention, scalar first).  quat_to_rot(q)
# maps body to inertial so that q's kinematics dq/dt = psi_matrix(omega) q / 2
# match dR/dt = R skew(omega).
# ---------------------------------------------------------------------------

def quat_mul(a, b) -> np.ndarray:
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    return np.array([
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ])


def quat_conj(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def psi_matrix(x) -> np.ndarray:
    """4x4 rate matrix: ``dq/dt = psi_matrix(omega) @ q / 2``."""
    x0, x1, x2 = x
    return np.array([
        [0.0, -x0, -x1, -x2],
        [x0, 0.0, x2, -x1],
        [x1, -x2, 0.0, x0],
        [x2, x1, -x0, 0.0],
    ])


def quat_to_rot(q) -> np.ndarray:
    q0 = q[0]
    qv = np.asarray(q[1:], dtype=float)
    return (q0 * q0 - float(qv @ qv)) * np.eye(3) + 2.0 * np.outer(qv, qv) \
        + 2.0 * q0 * skew(qv)


def rot_to_quat(r) -> np.ndarray:
    """Unit quaternion of a rotation matrix (Shepperd's method), q0 >= 0."""
    r = np.asarray(r, dtype=float)
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (r[2, 1] - r[1, 2]) / s,
                      (r[0, 2] - r[2, 0]) / s,
                      (r[1, 0] - r[0, 1]) / s])
    else:
        i = int(np.argmax([r[0, 0], r[1, 1], r[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(r[i, i] - r[j, j] - r[k, k] + 1.0, 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (r[k, j] - r[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (r[j, i] + r[i, j]) / s
        q[1 + k] = (r[k, i] + r[i, k]) / s
    q = q / np.linalg.norm(q)
    if q[0] < 0.0 or (q[0] == 0.0 and q[np.argmax(np.abs(q))] < 0.0):
        q = -q
    return q


def _quat_rotate_inv(q, v) -> np.ndarray:
    """Vector part of ``q^{-1} (0, v) q``: rotates inertial into body."""
    p = quat_mul(quat_conj(q), np.array([0.0, v[0], v[1], v[2]]))
    return quat_mul(p, q)[1:]


@dataclass(frozen=True)
class MekfState:
    """Quaternion/bias estimate, covariance blocks, and design covariances.

    ``P_a`` (attitude), ``P_b`` (bias) and ``P_c`` (cross) are the 3x3 blocks
    of the 6x6 covariance; ``q_v`` holds one measurement covariance per
    vector sensor.
    """

    q_hat: np.ndarray
    b_hat: np.ndarray
    P_a: np.ndarray
    P_b: np.ndarray
    P_c: np.ndarray
    q_v: tuple[np.ndarray, ...]
    q_omega: np.ndarray
    q_b: np.ndarray


def mekf_case_params(case: int, n_sensors: int = 3) -> tuple[tuple[np.ndarray, ...],
                                                             np.ndarray, np.ndarray]:
    """Three reference tuning cases: (q_v, q_omega, q_b) scaled identities.

    Case 1: (I, I, I); case 2: (0.1 I, 10 I, 10 I); case 3: (0.01 I, 100 I,
    100 I).  Smaller measurement covariance with larger process covariance
    gives a faster, more oscillatory filter.
    """
    scale = {1: (1.0, 1.0, 1.0), 2: (0.1, 10.0, 10.0), 3: (0.01, 100.0, 100.0)}
    if case not in scale:
        raise ValueError(f"case must be 1, 2 or 3, got {case}")
    sv, so, sb = scale[case]
    eye = np.eye(3)
    return tuple(sv * eye for _ in range(n_sensors)), so * eye, sb * eye


def mekf_init(r_hat0, b_hat0, case: int = 1, n_sensors: int = 3,
              p_a0=None, p_b0=None, p_c0=None) -> MekfState:
    """Initial MEKF state from a rotation estimate and one tuning case.

    Initial covariances default to ``P_a = P_b = I``, ``P_c = 0``.
    """
    q_v, q_omega, q_b = mekf_case_params(case, n_sensors)
    eye = np.eye(3)
    return MekfState(
        q_hat=rot_to_quat(r_hat0),
        b_hat=np.asarray(b_hat0, dtype=float),
        P_a=eye.copy() if p_a0 is None else np.asarray(p_a0, dtype=float),
        P_b=eye.copy() if p_b0 is None else np.asarray(p_b0, dtype=float),
        P_c=np.zeros((3, 3)) if p_c0 is None else np.asarray(p_c0, dtype=float),
        q_v=q_v, q_omega=q_omega, q_b=q_b)


def mekf_step(state: MekfState, frame: MeasurementFrame, dt: float) -> MekfState:
    """One explicit-Euler step of the multiplicative EKF baseline.

    Predicted body vectors come from quaternion conjugation,
    ``(0, v_hat_i) = q^{-1} (0, v_i_inertial) q``.  The innovation drives

    ``W = sum_i v_hat_i x q_v_i^{-1} (v_hat_i - v_i_body)``,

    the quaternion integrates the corrected rate
    ``omega_m - b_hat + P_a W`` (then renormalizes), the bias integrates
    ``P_c^T W``, and the covariance blocks follow the continuous Riccati
    equations with measurement information ``S = sum_i [v_hat_i]x q_v_i^{-1}
    [v_hat_i]x^T`` (positive semidefinite; quadratic damping terms carry it
    as ``-P_a S P_a``, ``-P_c^T S P_c`` and ``-P_a S P_c``, which keeps
    ``P_a``/``P_b`` symmetric and the Riccati flow bounded).

    Raises:
        NonFiniteState: any updated entry is NaN or infinite.
    """
    q = state.q_hat
    b = state.b_hat
    w_sum = np.zeros(3)
    s_sum = np.zeros((3, 3))
    for i, ob in enumerate(frame.observations):
        qv_inv = np.linalg.inv(state.q_v[i])
        v_hat = _quat_rotate_inv(q, ob.ref_inertial)
        w_sum += np.cross(v_hat, qv_inv @ (v_hat - ob.meas_body))
        k = skew(v_hat)
        s_sum += k @ qv_inv @ k.T

    om = frame.omega_meas - b
    om_x = skew(om)
    p_a, p_b, p_c = state.P_a, state.P_b, state.P_c

    q_dot = 0.5 * (psi_matrix(om + p_a @ w_sum) @ q)
    b_dot = p_c.T @ w_sum
    pa_dot = state.q_omega + (p_a @ om_x - om_x @ p_a) - (p_c + p_c.T) \
        - p_a @ s_sum @ p_a
    pb_dot = state.q_b - p_c.T @ s_sum @ p_c
    pc_dot = -om_x @ p_c - p_a @ s_sum @ p_c - p_b

    q_new = q + dt * q_dot
    norm = float(np.linalg.norm(q_new))
    if not (norm > 0.0 and math.isfinite(norm)):
        raise NonFiniteState(f"quaternion norm {norm} at t={frame.t:.6g}")
    q_new = q_new / norm
    b_new = b + dt * b_dot
    p_a_new = p_a + dt * pa_dot
    p_b_new = p_b + dt * pb_dot
    p_c_new = p_c + dt * pc_dot
    # symmetrize against round-off drift
    p_a_new = 0.5 * (p_a_new + p_a_new.T)
    p_b_new = 0.5 * (p_b_new + p_b_new.T)

    for arr in (q_new, b_new, p_a_new, p_b_new, p_c_new):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteState(f"non-finite filter state at t={frame.t:.6g}")

    return MekfState(q_new, b_new, p_a_new, p_b_new, p_c_new,
                     state.q_v, state.q_omega, state.q_b)
