"""Ground-truth trajectory stepping and synthetic sensor measurements.

Measurement models:

* gyro:   ``omega_m = omega + b + w`` with w zero-mean Gaussian per axis;
* vector: ``v_body = R^T v_inertial + b_i + w_i`` (raw, unnormalized).

:func:`build_frame` normalizes the vector pairs, completes a third pair by
cross product when only two are given, and rescales the confidence weights
to sum to 3.

Randomness comes from :class:`GaussianStream`: a Philox4x64 counter-based
generator (``numpy.random.Philox``) whose uniform stream is turned into
Gaussians by the Box-Muller transform.  A request for n normals consumes
``2*ceil(n/2)`` uniforms and discards the unused half-sample, so streams are
reproducible from the seed alone regardless of call granularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CollinearVectors, SingularMomentMatrix, ZeroNormVector
from .so3 import exp_so3

__all__ = [
    "GaussianStream",
    "noise_stream",
    "TrajectoryState",
    "VectorObservation",
    "MeasurementFrame",
    "NoiseModel",
    "propagate_truth",
    "measure_gyro",
    "measure_vector",
    "build_frame",
    "weighted_matrices",
    "synthesize_frame",
    "load_measurement_csv",
    "MEASUREMENT_CSV_HEADER",
]

# Minimum angle (rad) between reference directions before they count as collinear.
COLLINEAR_TOL = 1e-3
# Vectors with norm below this cannot be normalized.
ZERO_NORM_TOL = 1e-12
# Smallest eigenvalue of the body moment matrix accepted as full rank.
MOMENT_RANK_TOL = 1e-9


class GaussianStream:
    """Seeded Box-Muller Gaussian stream over a Philox uniform stream."""

    def __init__(self, seed: int):
        self._rng = np.random.Generator(np.random.Philox(seed))

    def normal(self, n: int) -> np.ndarray:
        """Next ``n`` standard normal samples."""
        k = (n + 1) // 2
        u1 = self._rng.random(k)
        u2 = self._rng.random(k)
        r = np.sqrt(-2.0 * np.log1p(-u1))  # 1-u1 in (0,1], log is finite
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2),
                            r * np.sin(2.0 * np.pi * u2)])
        return z[:n]

    def vec3(self) -> np.ndarray:
        return self.normal(3)


def noise_stream(seed: int) -> GaussianStream:
    """Create the documented reproducible noise stream for ``seed``."""
    return GaussianStream(seed)


@dataclass(frozen=True)
class TrajectoryState:
    """True attitude and angular velocity at time t."""

    t: float
    R: np.ndarray
    omega: np.ndarray


@dataclass(frozen=True)
class VectorObservation:
    """One normalized reference/measurement pair with its confidence weight."""

    ref_inertial: np.ndarray
    meas_body: np.ndarray
    weight: float


@dataclass(frozen=True)
class MeasurementFrame:
    """All measurements for one time step: gyro plus >= 2 vector pairs."""

    t: float
    omega_meas: np.ndarray
    observations: tuple[VectorObservation, ...]


@dataclass(frozen=True)
class NoiseModel:
    """Constant biases and per-sample noise standard deviations.

    ``vector_biases`` holds one body-frame bias per raw sensor.  Standard
    deviations are per integration step at the configured sensor rate.
    """

    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_noise_std: float = 0.0
    vector_biases: tuple[np.ndarray, ...] = (np.zeros(3), np.zeros(3))
    vector_noise_std: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.gyro_noise_std < 0.0 or self.vector_noise_std < 0.0:
            raise ValueError("noise standard deviations must be >= 0")


def propagate_truth(state: TrajectoryState, omega_fn, dt: float) -> TrajectoryState:
    """Advance the true attitude one step, exact for piecewise-constant rate.

    ``R(t+dt) = R(t) @ exp_so3(omega(t) * dt)``; the returned state carries
    ``omega(t+dt)`` for the next step.
    """
    w = np.asarray(omega_fn(state.t), dtype=float)
    r_next = state.R @ exp_so3(w * dt)
    t_next = state.t + dt
    return TrajectoryState(t_next, r_next, np.asarray(omega_fn(t_next), dtype=float))


def measure_gyro(omega, nm: NoiseModel, rng: GaussianStream) -> np.ndarray:
    """Gyro reading: true rate plus constant bias plus white noise."""
    return np.asarray(omega, dtype=float) + nm.gyro_bias + nm.gyro_noise_std * rng.vec3()


def measure_vector(r, v_inertial, bias, nm: NoiseModel, rng: GaussianStream) -> np.ndarray:
    """Raw body-frame reading of a known inertial direction."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v_inertial, dtype=float)
    return r.T @ v + np.asarray(bias, dtype=float) + nm.vector_noise_std * rng.vec3()


def _unit(v, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = float(np.linalg.norm(v))
    if n < ZERO_NORM_TOL:
        raise ZeroNormVector(f"{what} has norm {n:.3e}")
    return v / n


def build_frame(raw_pairs, weights, omega_m, t: float = 0.0) -> MeasurementFrame:
    """Assemble normalized observations for one step.

    Args:
        raw_pairs: sequence of ``(v_inertial, v_body)`` raw vectors, n >= 2.
        weights: confidence weights, one per final observation (so length
            3 when two pairs are given and a third is completed by cross
            product).  Rescaled so they sum to 3.
        omega_m: measured angular rate for the frame.
        t: frame timestamp.

    Raises:
        CollinearVectors: reference directions closer than ~1e-3 rad.
        ZeroNormVector: a pair member (or cross product) has zero norm.
    """
    pairs = [( _unit(vi, f"inertial vector {i}"), _unit(vb, f"body vector {i}"))
             for i, (vi, vb) in enumerate(raw_pairs)]
    if len(pairs) < 2:
        raise CollinearVectors("need at least two vector pairs")

    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            cross_norm = float(np.linalg.norm(np.cross(pairs[i][0], pairs[j][0])))
            if cross_norm < math.sin(COLLINEAR_TOL):
                raise CollinearVectors(
                    f"inertial references {i} and {j} are collinear (|sin| = {cross_norm:.3e})")

    if len(pairs) == 2:
        # complete the triad from the two corrupted measurements, not from truth
        third_i = _unit(np.cross(pairs[0][0], pairs[1][0]), "third inertial vector")
        third_b = _unit(np.cross(pairs[0][1], pairs[1][1]), "third body vector")
        pairs.append((third_i, third_b))

    w = np.asarray(weights, dtype=float)
    if w.shape != (len(pairs),):
        raise ValueError(f"expected {len(pairs)} weights, got shape {w.shape}")
    if np.any(w <= 0.0):
        raise ValueError("weights must be positive")
    w = 3.0 * w / float(np.sum(w))

    obs = tuple(VectorObservation(vi, vb, float(s)) for (vi, vb), s in zip(pairs, w))
    return MeasurementFrame(t, np.asarray(omega_m, dtype=float), obs)


def weighted_matrices(frame: MeasurementFrame) -> tuple[np.ndarray, np.ndarray, float]:
    """Weighted moment matrices of the frame's unit vectors.

    Returns ``(m_body, m_inertial, lam_min)`` where the moment matrices are
    ``sum_i s_i v_i v_i^T`` over body/inertial vectors and ``lam_min`` is the
    smallest eigenvalue of ``Tr(m_body) I - m_body`` (the gain normalizer of
    the direct filter).

    Raises:
        SingularMomentMatrix: if ``m_body`` has an eigenvalue below 1e-9.
    """
    m_body = np.zeros((3, 3))
    m_inertial = np.zeros((3, 3))
    for ob in frame.observations:
        m_body += ob.weight * np.outer(ob.meas_body, ob.meas_body)
        m_inertial += ob.weight * np.outer(ob.ref_inertial, ob.ref_inertial)
    eig_body = np.linalg.eigvalsh(m_body)
    if float(eig_body[0]) < MOMENT_RANK_TOL:
        raise SingularMomentMatrix(f"smallest eigenvalue {eig_body[0]:.3e}")
    complement = np.trace(m_body) * np.eye(3) - m_body
    lam_min = float(np.linalg.eigvalsh(complement)[0])
    return m_body, m_inertial, lam_min


def synthesize_frame(truth: TrajectoryState, nm: NoiseModel, refs, weights,
                     rng: GaussianStream) -> MeasurementFrame:
    """Synthesize one corrupted measurement frame from the true state.

    Draw order per frame (fixed for reproducibility): gyro noise, then the
    raw sensors in listed order.
    """
    omega_m = measure_gyro(truth.omega, nm, rng)
    raw_pairs = []
    for i, ref in enumerate(refs):
        bias = nm.vector_biases[i] if i < len(nm.vector_biases) else np.zeros(3)
        raw_pairs.append((ref, measure_vector(truth.R, ref, bias, nm, rng)))
    return build_frame(raw_pairs, weights, omega_m, truth.t)


MEASUREMENT_CSV_HEADER = "t,wx,wy,wz"  # then v1x,v1y,v1z,v2x,... per raw sensor


def load_measurement_csv(path, refs, weights) -> list[MeasurementFrame]:
    """Load recorded frames from CSV.

    Expected header: ``t,wx,wy,wz`` followed by one ``v{i}x,v{i}y,v{i}z``
    triple per raw body-frame sensor, SI units (s, rad/s, components of unit
    vectors).  ``refs``/``weights`` supply the matching inertial directions
    and confidence weights (see :func:`build_frame`).
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n_sensors = len(refs)
    expected = 4 + 3 * n_sensors
    if data.shape[1] != expected:
        raise ValueError(f"expected {expected} columns for {n_sensors} sensors, "
                         f"got {data.shape[1]}")
    frames = []
    for row in data:
        t = float(row[0])
        omega_m = row[1:4]
        pairs = [(refs[i], row[4 + 3 * i: 7 + 3 * i]) for i in range(n_sensors)]
        frames.append(build_frame(pairs, weights, omega_m, t))
    return frames
