"""Attitude estimation on SO(3) with prescribed transient and steady-state
performance: two envelope-shaped nonlinear filters, a passive complementary
filter and a multiplicative EKF as baselines, SVD attitude reconstruction,
synthetic IMU/vector sensors, and a deterministic simulation harness."""

from . import errors
from .errors import So3ppfError
from .filters import (MekfState, PpfFilterGains, PpfFilterState, StepDiagnostics,
                      direct_step, mekf_case_params, mekf_init, mekf_step,
                      passive_step, semi_direct_step)
from .harness import (EulerAngles, RunLog, RunStats, SimConfig, WindowStats,
                      compare_report, default_config, euler_to_rot, euler_zyx,
                      load_config, monte_carlo, run)
from .ppf import PpfParams, TransformedError, transform, transform_clamped, xi, \
    xi_dot, z_of
from .reconstruct import ReconstructedAttitude, svd3, svd_attitude
from .sensors import (GaussianStream, MeasurementFrame, NoiseModel, TrajectoryState,
                      VectorObservation, build_frame, load_measurement_csv,
                      measure_gyro, measure_vector, noise_stream, propagate_truth,
                      synthesize_frame, weighted_matrices)
from .so3 import (angle_axis, as_rotation, exp_so3, is_rotation, norm_euclid_dist,
                  pa, rodriguez, skew, vex, vex_pa)

__version__ = "0.1.0"

__all__ = [
    "So3ppfError",
    "errors",
    # so3
    "skew", "vex", "pa", "vex_pa", "norm_euclid_dist", "angle_axis", "rodriguez",
    "exp_so3", "is_rotation", "as_rotation",
    # ppf
    "PpfParams", "TransformedError", "xi", "xi_dot", "transform",
    "transform_clamped", "z_of",
    # sensors
    "GaussianStream", "noise_stream", "TrajectoryState", "VectorObservation",
    "MeasurementFrame", "NoiseModel", "propagate_truth", "measure_gyro",
    "measure_vector", "build_frame", "weighted_matrices", "synthesize_frame",
    "load_measurement_csv",
    # reconstruct
    "ReconstructedAttitude", "svd3", "svd_attitude",
    # filters
    "PpfFilterGains", "PpfFilterState", "StepDiagnostics", "MekfState",
    "semi_direct_step", "direct_step", "passive_step", "mekf_step",
    "mekf_case_params", "mekf_init",
    # harness
    "SimConfig", "RunLog", "RunStats", "WindowStats", "EulerAngles", "euler_zyx",
    "euler_to_rot", "default_config", "run", "monte_carlo", "compare_report",
    "load_config",
]
