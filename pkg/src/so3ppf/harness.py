"""Simulation runner: truth, sensors, one filter, logs and window statistics.

A :class:`SimConfig` fully determines a run; the same config and seed always
produce byte-identical CSV output.  The reference scenario (the default
config) is a 15 s tumble with sinusoidal body rates, two noisy biased vector
sensors completed to a triad, and a gyro with constant bias and white noise.

The logged true error is always ``dist(R^T R_hat)`` against the ground-truth
attitude, regardless of which internal metric the filter uses; window means
and standard deviations (population convention, divide by N) are taken over
that column.  ``env_ok`` is false exactly when the filter's own error metric
reaches the clamp threshold ``(delta_bar - 1e-9) * xi(t)``.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import filters as flt
from . import ppf
from .ppf import CLAMP_MARGIN, PpfParams
from .sensors import NoiseModel, TrajectoryState, noise_stream, propagate_truth, \
    synthesize_frame
from .so3 import angle_axis, exp_so3, norm_euclid_dist

__all__ = [
    "SimConfig",
    "RunLog",
    "WindowStats",
    "RunStats",
    "EulerAngles",
    "euler_zyx",
    "euler_to_rot",
    "default_config",
    "run",
    "monte_carlo",
    "compare_report",
    "parse_config_text",
    "load_config",
    "CSV_COLUMNS",
    "OUT_DIR_ENV",
]

FILTER_NAMES = ("semi-direct", "direct", "passive", "mekf")

CSV_COLUMNS = ("t", "err_I", "err_metric", "E", "mu", "xi",
               "bx_hat", "by_hat", "bz_hat",
               "phi", "theta", "psi", "phi_hat", "theta_hat", "psi_hat",
               "env_ok")

OUT_DIR_ENV = "SO3PPF_OUT_DIR"

# cos(pitch) below this is reported as gimbal lock (pitch within ~1e-6 of 90deg)
GIMBAL_TOL = 1e-6


@dataclass(frozen=True)
class SimConfig:
    """Everything needed for one deterministic run.

    ``omega_amp/freq/phase`` define the true body rate
    ``omega_i(t) = amp_i sin(freq_i t + phase_i)``.  ``windows`` are
    ``(t_start, t_end)`` statistics windows.  ``envelope_mode`` is
    ``"clamped"`` (count violations, keep running) or ``"strict"`` (raise).
    """

    duration: float = 15.0
    dt: float = 5e-3
    seed: int = 1
    filter_name: str = "semi-direct"
    envelope_mode: str = "clamped"
    # true trajectory
    omega_amp: tuple[float, float, float] = (1.0, 0.7, 0.5)
    omega_freq: tuple[float, float, float] = (0.7, 0.5, 0.3)
    omega_phase: tuple[float, float, float] = (0.0, math.pi, math.pi / 3.0)
    # sensors
    gyro_bias: tuple[float, float, float] = (0.1, -0.1, 0.1)
    gyro_noise_std: float = 0.2
    vector_noise_std: float = 0.08
    vector_bias_1: tuple[float, float, float] = (-0.1, 0.1, 0.05)
    vector_bias_2: tuple[float, float, float] = (0.0, 0.0, 0.1)
    ref_vector_1: tuple[float, float, float] = (
        1.0 / math.sqrt(3.0), -1.0 / math.sqrt(3.0), 1.0 / math.sqrt(3.0))
    ref_vector_2: tuple[float, float, float] = (0.0, 0.0, 1.0)
    weights: tuple[float, float, float] = (1.4, 1.4, 0.2)
    # envelope and gains
    xi0: float = 1.2
    xi_inf: float = 0.05
    ell: float = 3.0
    delta_bar: float = 1.2
    delta_under: float = 1.2
    gamma: float = 1.0
    k_w: float = 3.0
    k1: float = 1.0
    mekf_case: int = 1
    # initialization
    r_hat0_angle_deg: float = 178.0
    r_hat0_axis: tuple[float, float, float] = (4.0, 1.0, 5.0)
    b_hat0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # statistics
    windows: tuple[tuple[float, float], ...] = ((1.0, 15.0),)

    def __post_init__(self):
        if not (0.0 < self.dt < self.duration):
            raise ValueError(f"need 0 < dt < duration, got {self.dt}, {self.duration}")
        if self.filter_name not in FILTER_NAMES:
            raise ValueError(f"unknown filter {self.filter_name!r}; expected {FILTER_NAMES}")
        if self.envelope_mode not in ("clamped", "strict"):
            raise ValueError(f"envelope_mode must be 'clamped' or 'strict'")
        for t0, t1 in self.windows:
            if not (0.0 <= t0 <= t1 <= self.duration):
                raise ValueError(f"window ({t0}, {t1}) outside [0, {self.duration}]")

    @property
    def ppf_params(self) -> PpfParams:
        return PpfParams(self.xi0, self.xi_inf, self.ell, self.delta_bar, self.delta_under)

    @property
    def gains(self) -> flt.PpfFilterGains:
        return flt.PpfFilterGains(self.gamma, self.k_w)

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(
            gyro_bias=np.array(self.gyro_bias),
            gyro_noise_std=self.gyro_noise_std,
            vector_biases=(np.array(self.vector_bias_1), np.array(self.vector_bias_2)),
            vector_noise_std=self.vector_noise_std,
            rng_seed=self.seed)

    def omega_fn(self) -> Callable[[float], np.ndarray]:
        a, f, ph = (np.array(self.omega_amp), np.array(self.omega_freq),
                    np.array(self.omega_phase))

        def omega(t: float) -> np.ndarray:
            return a * np.sin(f * t + ph)

        return omega

    def initial_r_hat(self) -> np.ndarray:
        axis = np.array(self.r_hat0_axis, dtype=float)
        return angle_axis(math.radians(self.r_hat0_angle_deg),
                          axis / np.linalg.norm(axis))


def default_config(**overrides) -> SimConfig:
    """Reference scenario config; keyword overrides replace fields."""
    return replace(SimConfig(), **overrides) if overrides else SimConfig()


@dataclass(frozen=True)
class EulerAngles:
    """Z-Y-X (yaw-pitch-roll) angles; ``gimbal_lock`` marks |pitch| ~ 90 deg."""

    roll: float
    pitch: float
    yaw: float
    gimbal_lock: bool = False


def euler_zyx(r) -> EulerAngles:
    """Z-Y-X Euler angles of a rotation matrix.

    Convention: ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``, so
    ``pitch = asin(-R[2,0])``, ``roll = atan2(R[2,1], R[2,2])``,
    ``yaw = atan2(R[1,0], R[0,0])``.  Within ~1e-6 rad of pitch = +-90 deg
    only ``roll - yaw`` (or the sum) is defined; the split is fixed by
    reporting roll = 0 and setting ``gimbal_lock``.
    """
    r = np.asarray(r, dtype=float)
    cos_pitch = math.hypot(r[0, 0], r[1, 0])
    if cos_pitch < GIMBAL_TOL:
        sign = -1.0 if r[2, 0] > 0.0 else 1.0
        pitch = sign * 0.5 * math.pi
        yaw = math.atan2(sign * r[1, 2], r[1, 1])
        return EulerAngles(0.0, pitch, yaw, True)
    return EulerAngles(math.atan2(r[2, 1], r[2, 2]),
                       math.asin(max(-1.0, min(1.0, -r[2, 0]))),
                       math.atan2(r[1, 0], r[0, 0]),
                       False)


def euler_to_rot(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation matrix from Z-Y-X angles (inverse of :func:`euler_zyx`)."""
    return (exp_so3(np.array([0.0, 0.0, yaw]))
            @ exp_so3(np.array([0.0, pitch, 0.0]))
            @ exp_so3(np.array([roll, 0.0, 0.0])))


@dataclass(frozen=True)
class RunLog:
    """Column arrays for every logged step (length ``duration/dt + 1``)."""

    t: np.ndarray
    err_true: np.ndarray
    err_metric: np.ndarray
    E: np.ndarray
    mu: np.ndarray
    xi: np.ndarray
    b_hat: np.ndarray        # (n, 3)
    euler_true: np.ndarray   # (n, 3) roll, pitch, yaw
    euler_hat: np.ndarray    # (n, 3)
    env_ok: np.ndarray       # bool

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self) -> str:
        """Serialize with 17 significant digits (floats round-trip exactly)."""
        lines = [",".join(CSV_COLUMNS)]
        for i in range(len(self.t)):
            row = (self.t[i], self.err_true[i], self.err_metric[i], self.E[i],
                   self.mu[i], self.xi[i],
                   self.b_hat[i, 0], self.b_hat[i, 1], self.b_hat[i, 2],
                   self.euler_true[i, 0], self.euler_true[i, 1], self.euler_true[i, 2],
                   self.euler_hat[i, 0], self.euler_hat[i, 1], self.euler_hat[i, 2])
            lines.append(",".join(f"{x:.17g}" for x in row)
                         + f",{int(self.env_ok[i])}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class WindowStats:
    t_start: float
    t_end: float
    mean: float
    std: float
    violations: int


@dataclass(frozen=True)
class RunStats:
    """Window statistics of the true error plus envelope accounting."""

    windows: tuple[WindowStats, ...]
    total_violations: int
    final_err: float

    def to_dict(self) -> dict:
        return {
            "windows": [vars(w) for w in self.windows],
            "total_violations": self.total_violations,
            "final_err": self.final_err,
        }


def _window_slice(t: np.ndarray, t0: float, t1: float) -> np.ndarray:
    if t0 == t1:
        # degenerate window: the single nearest sample
        return np.array([int(np.argmin(np.abs(t - t0)))])
    return np.flatnonzero((t >= t0) & (t <= t1))


def _stats_from_log(log: RunLog, windows) -> RunStats:
    out = []
    for t0, t1 in windows:
        idx = _window_slice(log.t, t0, t1)
        vals = log.err_true[idx]
        out.append(WindowStats(t0, t1, float(np.mean(vals)), float(np.std(vals)),
                               int(np.sum(~log.env_ok[idx]))))
    return RunStats(tuple(out), int(np.sum(~log.env_ok)), float(log.err_true[-1]))


def run(config: SimConfig) -> tuple[RunLog, RunStats]:
    """Simulate one filter over the configured scenario.

    Deterministic given ``config`` (including its seed).  Filter errors
    propagate with the failing timestamp attached by the step functions.
    """
    p = config.ppf_params
    strict = config.envelope_mode == "strict"
    nm = config.noise
    refs = (np.array(config.ref_vector_1), np.array(config.ref_vector_2))
    omega_fn = config.omega_fn()
    stream = noise_stream(config.seed)
    dt = config.dt
    n_steps = int(round(config.duration / dt))

    truth = TrajectoryState(0.0, np.eye(3), omega_fn(0.0))
    name = config.filter_name
    if name == "mekf":
        mekf_state = flt.mekf_init(config.initial_r_hat(), np.array(config.b_hat0),
                                   case=config.mekf_case)
        ppf_state = None
    else:
        ppf_state = flt.PpfFilterState(config.initial_r_hat(), np.array(config.b_hat0))
        mekf_state = None
    gains = config.gains

    env_threshold = p.delta_bar - CLAMP_MARGIN
    cols_t = np.empty(n_steps + 1)
    cols_err = np.empty(n_steps + 1)
    cols_metric = np.empty(n_steps + 1)
    cols_e = np.empty(n_steps + 1)
    cols_mu = np.empty(n_steps + 1)
    cols_xi = np.empty(n_steps + 1)
    cols_b = np.empty((n_steps + 1, 3))
    cols_eul = np.empty((n_steps + 1, 3))
    cols_eul_hat = np.empty((n_steps + 1, 3))
    cols_env = np.empty(n_steps + 1, dtype=bool)

    for k in range(n_steps + 1):
        t = k * dt
        frame = synthesize_frame(truth, nm, refs, config.weights, stream)

        if name == "semi-direct":
            r_hat, b_hat = ppf_state.R_hat, ppf_state.b_hat
            ppf_state, diag = flt.semi_direct_step(ppf_state, frame, p, gains, t, dt,
                                                   strict=strict)
        elif name == "direct":
            r_hat, b_hat = ppf_state.R_hat, ppf_state.b_hat
            ppf_state, diag = flt.direct_step(ppf_state, frame, p, gains, t, dt,
                                              strict=strict)
        elif name == "passive":
            r_hat, b_hat = ppf_state.R_hat, ppf_state.b_hat
            ppf_state, diag = flt.passive_step(ppf_state, frame, config.k1, dt)
        else:
            r_hat = flt.quat_to_rot(mekf_state.q_hat)
            b_hat = mekf_state.b_hat
            mekf_state = flt.mekf_step(mekf_state, frame, dt)
            diag = None

        err_true = norm_euclid_dist(truth.R.T @ r_hat)
        xi_t = ppf.xi(p, t)
        if diag is None:
            metric, e_val, mu_val = err_true, float("nan"), float("nan")
        else:
            metric, e_val, mu_val = diag.err_metric, diag.E, diag.mu

        cols_t[k] = t
        cols_err[k] = err_true
        cols_metric[k] = metric
        cols_e[k] = e_val
        cols_mu[k] = mu_val
        cols_xi[k] = xi_t
        cols_b[k] = b_hat
        eu = euler_zyx(truth.R)
        cols_eul[k] = (eu.roll, eu.pitch, eu.yaw)
        eu = euler_zyx(r_hat)
        cols_eul_hat[k] = (eu.roll, eu.pitch, eu.yaw)
        cols_env[k] = metric < env_threshold * xi_t

        truth = propagate_truth(truth, omega_fn, dt)

    log = RunLog(cols_t, cols_err, cols_metric, cols_e, cols_mu, cols_xi,
                 cols_b, cols_eul, cols_eul_hat, cols_env)
    return log, _stats_from_log(log, config.windows)


def monte_carlo(config: SimConfig, seeds, max_workers: int | None = None
                ) -> list[tuple[int, RunStats]]:
    """Independent seeded runs fanned out over worker threads.

    Results are sorted by seed before any reduction, so aggregation is
    independent of completion order.
    """
    seeds = list(seeds)

    def one(seed: int) -> tuple[int, RunStats]:
        _, stats = run(replace(config, seed=seed))
        return seed, stats

    with ThreadPoolExecutor(max_workers=max_workers or min(8, len(seeds))) as pool:
        results = list(pool.map(one, seeds))
    return sorted(results, key=lambda r: r[0])


def _config_label(config: SimConfig) -> str:
    if config.filter_name == "passive":
        return f"passive(k1={config.k1:g})"
    if config.filter_name == "mekf":
        return f"mekf(case {config.mekf_case})"
    return config.filter_name


def compare_report(configs) -> list[dict]:
    """Window statistics for several configs, one row per config and window.

    Row keys: filter, seed, t_start, t_end, mean, std, violations, final_err.
    """
    if not configs:
        raise ValueError("need at least one config")
    rows = []
    for config in configs:
        _, stats = run(config)
        for w in stats.windows:
            rows.append({
                "filter": _config_label(config),
                "seed": config.seed,
                "t_start": w.t_start,
                "t_end": w.t_end,
                "mean": w.mean,
                "std": w.std,
                "violations": w.violations,
                "final_err": stats.final_err,
            })
    return rows


def report_to_csv(rows) -> str:
    header = ["filter", "seed", "t_start", "t_end", "mean", "std",
              "violations", "final_err"]
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(
            f"{r[k]:.17g}" if isinstance(r[k], float) else str(r[k]) for k in header))
    return "\n".join(lines) + "\n"


def stats_json(stats: RunStats) -> str:
    return json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Flat config-file format: one "key = value" per line, '#' comments, vectors
# as comma lists, windows as "t0, t1" pairs under window_1, window_2, ...
# ---------------------------------------------------------------------------

_VEC3_KEYS = {
    "omega_amp", "omega_freq", "omega_phase", "gyro_bias", "vector_bias_1",
    "vector_bias_2", "ref_vector_1", "ref_vector_2", "weights",
    "r_hat0_axis", "b_hat0",
}
_FLOAT_KEYS = {
    "duration", "dt", "gyro_noise_std", "vector_noise_std", "xi0", "xi_inf",
    "ell", "delta_bar", "delta_under", "gamma", "k_w", "k1",
    "r_hat0_angle_deg",
}
_INT_KEYS = {"seed", "mekf_case"}
_STR_KEYS = {"filter", "envelope_mode"}


def parse_config_text(text: str) -> SimConfig:
    """Parse the flat key = value config format into a SimConfig."""
    fields: dict = {}
    windows: dict[int, tuple[float, float]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _STR_KEYS:
            fields["filter_name" if key == "filter" else key] = value
        elif key in _INT_KEYS:
            fields[key] = int(value)
        elif key in _FLOAT_KEYS:
            fields[key] = float(value)
        elif key in _VEC3_KEYS:
            parts = tuple(float(x) for x in value.split(","))
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: {key} needs 3 components")
            fields[key] = parts
        elif key.startswith("window_"):
            parts = tuple(float(x) for x in value.split(","))
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: {key} needs 't_start, t_end'")
            windows[int(key.split("_", 1)[1])] = parts
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if windows:
        fields["windows"] = tuple(windows[i] for i in sorted(windows))
    return default_config(**fields)


def load_config(path: str) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def default_out_dir() -> str | None:
    return os.environ.get(OUT_DIR_ENV)
