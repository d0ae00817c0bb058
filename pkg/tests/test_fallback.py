"""The plain-numpy kernels must agree with their compiled counterparts."""
import os
import subprocess
import sys

import numpy as np
import pytest

from spinner import attitude, dynamics, nmpc, qp
from spinner._jit import NUMBA_ENABLED, python_impl
from spinner.nmpc import NmpcConfig, model_params
from spinner.reference import hover_reference
from spinner.vehicle import pack

from conftest import random_quat

needs_numba = pytest.mark.skipif(not NUMBA_ENABLED, reason="numba disabled, nothing to compare")


def _state(rng, params):
    return np.concatenate([rng.normal(size=3), random_quat(rng), rng.normal(size=3), rng.normal(size=3)])


@needs_numba
def test_quaternion_kernels(rng):
    for _ in range(20):
        a, b = random_quat(rng), random_quat(rng)
        np.testing.assert_allclose(python_impl(attitude.qmul)(a, b), attitude.qmul(a, b), atol=1e-15)
        np.testing.assert_allclose(python_impl(attitude.reduced_error)(a, b), attitude.reduced_error(a, b),
                                   atol=1e-13)
        for x, y in zip(python_impl(attitude.tilt_split)(a), attitude.tilt_split(a)):
            np.testing.assert_allclose(x, y, atol=1e-13)


@needs_numba
def test_dynamics_kernels(rng, params):
    prm = pack(params)
    for _ in range(10):
        x = _state(rng, params)
        u = rng.uniform(0, 6, 3)
        w, ea, et = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3) * 0.01
        np.testing.assert_allclose(python_impl(dynamics.deriv)(x, u, prm, w, ea, et),
                                   dynamics.deriv(x, u, prm, w, ea, et), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(python_impl(dynamics.rk4)(x, u, prm, w, ea, et, 1e-3),
                                   dynamics.rk4(x, u, prm, w, ea, et, 1e-3), rtol=1e-12, atol=1e-12)


@needs_numba
def test_box_qp_kernel(rng):
    for _ in range(10):
        n = 9
        L = rng.normal(size=(n, n))
        H = L @ L.T + 0.1 * np.eye(n)
        g = rng.normal(size=n) * 5
        lo, hi = -np.ones(n), np.ones(n)
        a = python_impl(qp.box_qp)(H, g, lo, hi, np.zeros(n), 200)
        b = qp.box_qp(H, g, lo, hi, np.zeros(n), 200)
        np.testing.assert_allclose(a[0], b[0], atol=1e-10)


@needs_numba
def test_nmpc_kernels(rng, params):
    cfg = NmpcConfig(horizon_steps=3)
    prm = model_params(params)
    sw = np.sqrt(cfg.stage_weights())
    ref = hover_reference(params).sample(np.zeros(1))[0]
    x = _state(rng, params)
    u = rng.uniform(2, 5, 3)
    np.testing.assert_allclose(python_impl(nmpc.stage_residual)(x, u, ref, sw),
                               nmpc.stage_residual(x, u, ref, sw), atol=1e-12)
    U = rng.uniform(2, 5, (3, 3))
    X = nmpc.rollout(x, U, prm, np.zeros(3), cfg.step)
    for a, b in zip(python_impl(nmpc.linearize)(X, U, prm, np.zeros(3), cfg.step, cfg.fd_step),
                    nmpc.linearize(X, U, prm, np.zeros(3), cfg.step, cfg.fd_step)):
        np.testing.assert_allclose(a, b, atol=1e-7)


@pytest.mark.slow
def test_disabled_flag_runs_pure_python():
    code = ("from spinner import _jit, dynamics, sim, metrics; assert not _jit.NUMBA_ENABLED; "
            "assert not hasattr(dynamics.rk4, 'py_func'); "
            "log = sim.run(sim.Scenario('h', 0.2)); print(repr(metrics.mean_tracking_error(log)))")
    env = dict(os.environ, SPINNER_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    from spinner import metrics, sim
    e = metrics.mean_tracking_error(sim.run(sim.Scenario("h", 0.2)))
    assert float(out.stdout) == pytest.approx(e, rel=1e-9, abs=1e-12)
