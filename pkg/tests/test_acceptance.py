"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest -v tests/test_acceptance.py`` (lines go straight to the terminal)
or ``python3 tests/test_acceptance.py`` for the plain report.
"""
import itertools
import time

import numpy as np
import pytest
from scipy.optimize import minimize

from spinner import fov
from spinner.attitude import IDENTITY, axis_angle, quat_multiply, tilt_decompose, yaw_quat
from spinner.dynamics import State, integrate_rk4
from spinner.indi import allocate
from spinner.metrics import max_tracking_error, mean_tracking_error, settling_time, steady_spin_rate
from spinner.nmpc import Nmpc, NmpcConfig, condense, linearize, model_params, predict, rollout
from spinner.logs import format_log
from spinner.reference import HoverReference
from spinner.sim import (MILD_NOISE, ReferenceSpec, Scenario, SensorNoise, WindProfile, gust_step_profile,
                         run)
from spinner.vehicle import PLATE_YAW_RATES, VehicleParams, allocation_matrix, hover_equilibrium, pack

pytestmark = pytest.mark.slow

P = VehicleParams()


class Gate:
    """Collects criterion outcomes and echoes each as one line."""

    def __init__(self):
        self.echo = print

    def __call__(self, number: int, title: str, ok: bool, detail: str):
        self.echo(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}  {title}: {detail}")
        assert ok, f"criterion {number} ({title}) failed: {detail}"


@pytest.fixture
def gate(capsys):
    g = Gate()

    def echo(line):
        with capsys.disabled():
            print("\n" + line, end="")
    g.echo = echo
    return g


def _hover_x(z=1.0, yaw_rate=0.0):
    x = np.zeros(13)
    x[2] = z
    x[3:7] = IDENTITY
    x[12] = yaw_rate
    return x


def _random_state(rng, spread=1.0):
    x = _hover_x(1.0, PLATE_YAW_RATES[30])
    x[0:3] += rng.uniform(-0.5, 0.5, 3) * spread
    x[3:7] = quat_multiply(yaw_quat(rng.uniform(-np.pi, np.pi)), axis_angle(rng.standard_normal(3),
                                                                               rng.uniform(0, 0.4) * spread))
    x[7:10] = rng.uniform(-1, 1, 3) * spread
    x[10:12] = rng.uniform(-1, 1, 2) * spread
    x[12] += rng.uniform(-2, 2)
    return x


# 1 -------------------------------------------------------------------------------------------------

def test_c01_plate_equilibrium(gate):
    parts, ok = [], True
    for width, target in sorted(PLATE_YAW_RATES.items()):
        sc = Scenario(f"plate{width}", 10.0, plate_width=width, initial_yaw_rate=0.0)
        t0 = time.perf_counter()
        log = run(sc)
        wall = time.perf_counter() - t0
        rate = steady_spin_rate(log)
        settle = settling_time(log.t, log.column("wz"), target, 0.05 * target)
        good = abs(rate - target) <= 0.05 * target and settle < 10.0 and wall < 10.0 and not log.aborted
        ok &= good
        parts.append(f"{width}mm {rate:.2f}/{target} rad/s settle {settle:.2f}s wall {wall:.2f}s")
    gate(1, "plate spin rates within 5%", ok, "; ".join(parts))


# 2 -------------------------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def lemniscate_logs():
    spec = ReferenceSpec("lemniscate", {"v_max": 2.0})
    period = spec.build(P).period
    logs = [run(Scenario("lemniscate", 2 * period, reference=spec, sensor_noise=MILD_NOISE, seed=s))
            for s in (0, 1, 2)]
    return logs, period


def test_c02_lemniscate_tracking(gate, lemniscate_logs):
    logs, period = lemniscate_logs
    et = [mean_tracking_error(lg, 0.0, 2 * period) for lg in logs]
    ep = [max_tracking_error(lg, 0.0, 2 * period) for lg in logs]
    ok = max(et) <= 0.20 and max(ep) <= 0.45 and not any(lg.aborted for lg in logs)
    gate(2, "lemniscate e_t <= 0.20 m, e_pe <= 0.45 m", ok,
         "e_t " + ", ".join(f"{e:.4f}" for e in et) + " | e_pe " + ", ".join(f"{e:.4f}" for e in ep)
         + f" | period {period:.2f}s x2")


# 3 -------------------------------------------------------------------------------------------------

def test_c03_gust_rejection(gate):
    t_on = 5.0
    log = run(Scenario("gust", 25.0, wind=gust_step_profile(4.8, t_on, (1.0, 0.0, 0.0))))
    after = log.t >= t_on
    err = log.position_error
    peak = float(err[after].max())
    recovered = settling_time(log.t[after], err[after], 0.0, 0.05) - t_on
    dev = np.abs(log.position - log.p_ref)[after].max(axis=0)
    ok = 0.05 <= peak <= 0.45 and recovered <= 12.0 and dev[0] > max(dev[1], dev[2])
    gate(3, "4.8 m/s gust", ok, f"peak {peak:.3f} m, back within 0.05 m {recovered:.2f}s after onset, "
         f"max |dx|,|dy|,|dz| = {dev[0]:.3f}, {dev[1]:.3f}, {dev[2]:.3f} m")


# 4 -------------------------------------------------------------------------------------------------

def _grid_search(cost, lb, ub, points=5, refinements=2):
    lo, hi = np.full(3, lb), np.full(3, ub)
    best_u, best = None, np.inf
    for _ in range(refinements + 1):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(3)]
        for u in itertools.product(*axes):
            c = cost(np.array(u))
            if c < best:
                best, best_u = c, np.array(u)
        half = (hi - lo) / (points - 1)
        lo, hi = np.maximum(best_u - half, lb), np.minimum(best_u + half, ub)
    return best_u, best


def test_c04_nmpc_optimality_oracle(gate):
    rng = np.random.default_rng(4)
    cfg = NmpcConfig(horizon_steps=1, max_sqp_iters=50, kkt_tol=1e-10)
    refs = HoverReference(P).sample(np.zeros(2))
    lb, ub = cfg.bounds(P)
    passed, worst_grid, worst_bfgs = 0, -np.inf, -np.inf
    for _ in range(20):
        x = _random_state(rng)
        sol = Nmpc(P, cfg).solve(x, refs)

        def cost(u):
            return predict(P, x, u.reshape(1, 3), refs, cfg)[1]
        _, grid = _grid_search(cost, lb, ub)
        starts = [sol.inputs[0], np.full(3, 0.5 * (lb + ub))]
        bfgs = min(minimize(cost, s, method="L-BFGS-B", bounds=[(lb, ub)] * 3,
                            options={"ftol": 1e-14, "gtol": 1e-10}).fun for s in starts)
        gap_grid, gap_bfgs = sol.cost - grid, sol.cost - bfgs
        worst_grid, worst_bfgs = max(worst_grid, gap_grid), max(worst_bfgs, gap_bfgs)
        passed += gap_grid <= 1e-3 and gap_bfgs <= 1e-3
    gate(4, "N=1 solver cost vs grid oracle", passed == 20,
         f"{passed}/20, worst solver-grid {worst_grid:.2e}, worst solver-(L-BFGS-B) {worst_bfgs:.2e}")


# 5 -------------------------------------------------------------------------------------------------

def test_c05_gradient_check(gate):
    rng = np.random.default_rng(5)
    cfg = NmpcConfig(horizon_steps=3)
    prm = model_params(P)
    sw, swN = np.sqrt(cfg.stage_weights()), np.sqrt(cfg.final_weights())
    refs = HoverReference(P).sample(np.zeros(4))
    ext = np.zeros(3)
    worst = 0.0
    for _ in range(10):
        x = _random_state(rng)
        U = rng.uniform(2.5, 5.0, (3, 3))
        X = rollout(x, U, prm, ext, cfg.step)
        A, B, d = linearize(X, U, prm, ext, cfg.step, cfg.fd_step)
        _, g = condense(X, U, x, refs, sw, swN, A, B, d, cfg.fd_step)
        fd = np.empty(9)
        h = 1e-5
        for i in range(9):
            e = np.zeros(9)
            e[i] = h
            fd[i] = (predict(P, x, U + e.reshape(3, 3), refs, cfg)[1]
                     - predict(P, x, U - e.reshape(3, 3), refs, cfg)[1]) / (2 * h)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(fd))
    gate(5, "condensed gradient vs finite differences", worst < 1e-4, f"worst relative error {worst:.2e}")


# 6 -------------------------------------------------------------------------------------------------

def test_c06_allocation_identities(gate):
    M = allocation_matrix(P)
    ident = np.abs(np.linalg.pinv(M) @ M - np.eye(3)).max()
    cmd, tau_z = hover_equilibrium(P)
    via_indi = allocate(P, P.mass * P.gravity, np.array([0.0, 0.0, tau_z])).thrusts
    diff = np.abs(via_indi - cmd.thrusts).max()
    gate(6, "allocation identities", ident < 1e-9 and diff < 1e-9,
         f"|M+M - I| = {ident:.1e}, hover vehicle vs indi = {diff:.1e}")


# 7 -------------------------------------------------------------------------------------------------

def test_c07_attitude_properties(gate):
    rng = np.random.default_rng(7)
    worst_rec = 0.0
    for _ in range(1000):
        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        qz, qxy, _ = tilt_decompose(q)
        worst_rec = max(worst_rec, np.abs(quat_multiply(qz, qxy) - q).max())

    refs = HoverReference(P).sample(np.zeros(21))
    worst_yaw = 0.0
    for _ in range(5):
        x = _random_state(rng, 0.5)
        base = Nmpc(P).solve(x, refs).first_input
        for psi in (0.3, 1.7, -2.5):
            qz = yaw_quat(psi)
            c, s = np.cos(psi), np.sin(psi)
            Rz = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
            xr = x.copy()
            xr[0:3] = Rz @ (x[0:3] - refs[0, 0:3]) + refs[0, 0:3]
            xr[3:7] = quat_multiply(qz, x[3:7])
            xr[7:10] = Rz @ x[7:10]
            worst_yaw = max(worst_yaw, np.abs(Nmpc(P).solve(xr, refs).first_input - base).max())
    gate(7, "tilt reconstruction and yaw invariance", worst_rec < 1e-9 and worst_yaw < 1e-6,
         f"reconstruction {worst_rec:.1e} over 1000 cases, yaw invariance {worst_yaw:.1e} N")


# 8 -------------------------------------------------------------------------------------------------

def test_c08_integrator_order(gate):
    cmd = np.array([4.2, 3.6, 3.9])
    prm = pack(P)

    def simulate(h, T=1.0):
        x = State.hover().to_array()
        for _ in range(int(round(T / h))):
            x = integrate_rk4(P, x, cmd, dt=h, prm=prm)
        return x
    ref = simulate(0.02 / 64)
    e1 = np.abs(simulate(0.02) - ref).max()
    e2 = np.abs(simulate(0.01) - ref).max()
    ratio = e1 / e2
    gate(8, "RK4 error ratio when halving dt", 12 <= ratio <= 20,
         f"ratio {ratio:.2f} (errors {e1:.2e}, {e2:.2e})")


# 9 -------------------------------------------------------------------------------------------------

def test_c09_metric_oracles(gate):
    t = np.arange(0.0, 10.0 + 1e-9, 0.005)
    cases = []
    a, w = 0.3, 2 * np.pi * 0.5
    cases.append(("sine rms", mean_tracking_error(t, err=np.abs(a * np.sin(w * t))), a / np.sqrt(2)))
    cases.append(("sine max", max_tracking_error(t, err=np.abs(a * np.sin(w * t))), a))
    cases.append(("ramp rms", mean_tracking_error(t, err=t / 10), 1 / np.sqrt(3)))
    cases.append(("constant rms", mean_tracking_error(t, err=np.full(t.size, 0.12)), 0.12))
    cases.append(("window rms", mean_tracking_error(t, 2.0, 4.0, err=t), np.sqrt((4 ** 3 - 2 ** 3) / 6)))
    worst = max(abs(got - want) for _, got, want in cases)
    gate(9, "metric oracles", worst < 1e-3, ", ".join(f"{n} {got:.5f}/{want:.5f}" for n, got, want in cases))


# 10 ------------------------------------------------------------------------------------------------

def test_c10_fov(gate):
    v = fov.swept_vertical_fov(fov.SensorMount(59.0, 15.0))
    gate(10, "swept vertical FoV (59 deg, 15 deg tilt)", v == 89.0, f"{v!r} deg")


# 11 ------------------------------------------------------------------------------------------------

def test_c11_determinism(gate):
    sc = Scenario("det", 3.0, sensor_noise=SensorNoise(0.01, 0.02, 0.01, 0.05),
                  wind=WindProfile(((1.0, (2.0, 0.5, 0.0)),), turbulence_std=0.5), seed=11)
    a, b = format_log(run(sc)), format_log(run(sc))
    gate(11, "bytewise identical logs", a == b, f"{len(a)} bytes, identical={a == b}")


# 12 ------------------------------------------------------------------------------------------------

def test_c12_solve_time(gate, lemniscate_logs):
    logs, _ = lemniscate_logs
    st = np.concatenate([lg.solve_times[1:] for lg in logs]) * 1e3
    mean = float(st.mean())
    detail = f"mean {mean:.2f} ms, p99 {np.percentile(st, 99):.2f} ms over {st.size} solves"
    if 5.0 <= mean <= 20.0:
        gate.echo(f"[NOTE] criterion 12  solve time within the report-only band: {detail}")
        return
    gate(12, "mean NMPC solve time < 5 ms", mean < 5.0, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
