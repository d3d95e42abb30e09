"""Self-contained numeric verification suites for the CLI ``verify`` command.

Each check returns ``(name, ok, detail)``; they mirror the core oracle and
identity properties the library is built on and run in a few seconds with no
test framework required.
"""

from __future__ import annotations

import math

import numpy as np

from . import ppf
from .ppf import PpfParams
from .reconstruct import svd3, svd_attitude
from .sensors import MeasurementFrame, VectorObservation, weighted_matrices
from .so3 import angle_axis, exp_so3, norm_euclid_dist, pa, rodriguez, skew, vex, vex_pa

__all__ = ["run_all", "CHECKS"]


def _random_rotation(rng) -> np.ndarray:
    return exp_so3(rng.normal(size=3) * rng.uniform(0.1, 3.0))


def _random_frame(rng, n: int = 3) -> tuple[np.ndarray, MeasurementFrame]:
    """Noise-free frame at a random attitude with random weights summing to 3."""
    while True:
        refs = rng.normal(size=(n, 3))
        norms = np.linalg.norm(refs, axis=1)
        if np.all(norms > 1e-3):
            refs /= norms[:, None]
            if np.linalg.matrix_rank(refs, tol=1e-3) == 3:
                break
    w = rng.uniform(0.2, 2.0, size=n)
    w = 3.0 * w / w.sum()
    r = _random_rotation(rng)
    obs = tuple(VectorObservation(refs[i], r.T @ refs[i], float(w[i])) for i in range(n))
    return r, MeasurementFrame(0.0, np.zeros(3), obs)


def check_lemma_equality(n: int = 1000, seed: int = 7):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        r = _random_rotation(rng)
        d = norm_euclid_dist(r)
        lhs = float(vex_pa(r) @ vex_pa(r))
        worst = max(worst, abs(lhs - 4.0 * (1.0 - d) * d))
    return worst <= 1e-12, f"max |residual| = {worst:.3e} over {n} rotations"


def check_lemma_inequality(n: int = 1000, seed: int = 8):
    rng = np.random.default_rng(seed)
    checked = 0
    worst = math.inf
    while checked < n:
        r, frame = _random_frame(rng)
        m_body, _, lam_min = weighted_matrices(frame)
        q = _random_rotation(rng)
        denom = 1.0 + float(np.trace(np.linalg.solve(m_body, m_body @ q)))
        if denom <= 1e-6:
            continue
        v = vex_pa(m_body @ q)
        lhs = (2.0 / lam_min) * float(v @ v) / denom
        rhs = 0.25 * float(np.trace(m_body @ (np.eye(3) - q)))
        worst = min(worst, lhs - rhs)
        checked += 1
    return worst >= -1e-12, f"min (lhs - rhs) = {worst:.3e} over {n} samples"


def check_identities(n: int = 200, seed: int = 9):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        a = rng.normal(size=3)
        b_vec = rng.normal(size=3)
        r = _random_rotation(rng)
        any_a = rng.normal(size=(3, 3))
        any_b = rng.normal(size=(3, 3))
        sym = any_b + any_b.T

        worst = max(worst, float(np.max(np.abs(
            skew(np.cross(a, b_vec)) - (np.outer(b_vec, a) - np.outer(a, b_vec))))))
        worst = max(worst, float(np.max(np.abs(skew(r @ a) - r @ skew(a) @ r.T))))
        worst = max(worst, float(np.max(np.abs(
            skew(a) @ skew(a) - (-(a @ a) * np.eye(3) + np.outer(a, a))))))
        worst = max(worst, float(np.max(np.abs(
            sym @ skew(a) + skew(a) @ sym
            - (np.trace(sym) * skew(a) - skew(sym @ a))))))
        worst = max(worst, abs(float(np.trace(any_a @ any_b - any_b @ any_a))))
        worst = max(worst, abs(float(np.trace(sym @ skew(a)))))
        worst = max(worst, abs(float(np.trace(any_a @ skew(a)))
                               + 2.0 * float(vex_pa(any_a) @ a)))
        worst = max(worst, abs(float(np.trace(pa(any_a) @ skew(a)))
                               + 2.0 * float(vex_pa(any_a) @ a)))
    return worst <= 1e-12, f"max |residual| = {worst:.3e} over {n} draws x 7 identities"


def check_rodriguez(n: int = 300, seed: int = 10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        rho = rng.normal(size=3) * rng.uniform(0.1, 5.0)
        r = rodriguez(rho)
        r2 = float(rho @ rho)
        worst = max(worst, abs(norm_euclid_dist(r) - r2 / (1.0 + r2)))
        worst = max(worst, float(np.max(np.abs(vex(pa(r)) - 2.0 * rho / (1.0 + r2)))))
    return worst <= 1e-12, f"max |residual| = {worst:.3e} over {n} parameter vectors"


def check_measurement_space(n: int = 1000, seed: int = 11):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        r, frame = _random_frame(rng)
        r_hat = _random_rotation(rng)
        r_err = r.T @ r_hat
        m_body, _, _ = weighted_matrices(frame)

        v_sum = np.zeros(3)
        d_sum = 0.0
        cross_moment = np.zeros((3, 3))
        for ob in frame.observations:
            v_hat = r_hat.T @ ob.ref_inertial
            v_sum += 0.5 * ob.weight * np.cross(v_hat, ob.meas_body)
            d_sum += 0.25 * ob.weight * (1.0 - float(v_hat @ ob.meas_body))
            cross_moment += ob.weight * np.outer(ob.meas_body, v_hat)

        worst = max(worst, float(np.max(np.abs(v_sum - vex_pa(m_body @ r_err)))))
        worst = max(worst, abs(d_sum - 0.25 * float(np.trace(m_body @ (np.eye(3) - r_err)))))
        ups = float(np.trace(np.linalg.solve(m_body, cross_moment)))
        worst = max(worst, abs(ups - float(np.trace(r_err))))
    return worst <= 1e-12, f"max |residual| = {worst:.3e} over {n} configurations"


def check_transform(n: int = 1000, seed: int = 12):
    rng = np.random.default_rng(seed)
    p = PpfParams(1.2, 0.05, 3.0, 1.2, 1.2)
    worst_rt = 0.0
    worst_mu = 0.0
    for _ in range(n):
        xi_t = rng.uniform(p.xi_inf, p.xi0)
        e = rng.uniform(-p.delta_under * xi_t * 0.999, p.delta_bar * xi_t * 0.999)
        te = ppf.transform(p, e, xi_t)
        worst_rt = max(worst_rt, abs(ppf.z_of(p, te.value) * xi_t - e))
        h = 1e-6 * xi_t
        slope = (ppf.transform(p, e + h, xi_t).value
                 - ppf.transform(p, e - h, xi_t).value) / (2.0 * h)
        worst_mu = max(worst_mu, abs(slope - te.mu) / te.mu)
    ok = worst_rt <= 1e-12 and worst_mu <= 1e-6
    return ok, f"round-trip {worst_rt:.3e}, mu vs finite diff rel {worst_mu:.3e}"


def check_svd_recovery(n: int = 1000, seed: int = 13):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        r, frame = _random_frame(rng)
        rec = svd_attitude(frame)
        worst = max(worst, float(np.max(np.abs(rec.R_y - r))))
        if abs(float(np.linalg.det(rec.R_y)) - 1.0) > 1e-9:
            return False, "determinant correction failed"
    # reflection-prone profile: dominant negative-determinant matrix
    u, s, v = svd3(np.diag([1.0, 0.5, -0.25]))
    if abs(float(np.linalg.det(u @ np.diag(s) @ v.T)) - float(np.linalg.det(np.diag([1.0, 0.5, -0.25])))) > 1e-12:
        return False, "svd3 reconstruction failed on reflection case"
    return worst <= 1e-10, f"max |R_y - R| = {worst:.3e} over {n} noise-free frames"


def check_exp_small_angle(seed: int = 14):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for scale in (1e-10, 1e-7, 1e-5, 1e-4, 1e-2, 1.0, 3.0):
        for _ in range(50):
            w = rng.normal(size=3)
            w = w / np.linalg.norm(w) * scale
            r = exp_so3(w)
            worst = max(worst, float(np.max(np.abs(r @ exp_so3(-w) - np.eye(3)))))
            worst = max(worst, float(np.max(np.abs(r.T @ r - np.eye(3)))))
    u = np.array([0.0, 0.0, 1.0])
    worst = max(worst, float(np.max(np.abs(
        angle_axis(math.pi, u) - np.diag([-1.0, -1.0, 1.0])))))
    return worst <= 1e-12, f"max group/orthonormality residual = {worst:.3e}"


CHECKS = (
    ("lemma-equality", check_lemma_equality),
    ("lemma-inequality", check_lemma_inequality),
    ("algebra-identities", check_identities),
    ("rodriguez-relations", check_rodriguez),
    ("measurement-space-forms", check_measurement_space),
    ("transform-roundtrip", check_transform),
    ("svd-recovery", check_svd_recovery),
    ("exponential-map", check_exp_small_angle),
)


def run_all(printer=print) -> bool:
    """Run every check, print one PASS/FAIL line each; True if all passed."""
    all_ok = True
    for name, fn in CHECKS:
        ok, detail = fn()
        all_ok &= ok
        printer(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return all_ok
