"""Time the hot kernels compiled with numba against the plain-numpy fallback.

Each variant runs in its own interpreter because the backend is chosen at
import time from SPINNER_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from spinner import _jit
from spinner.dynamics import rk4
from spinner.nmpc import Nmpc
from spinner.reference import HoverReference
from spinner.sim import Scenario, run
from spinner.vehicle import VehicleParams, pack

repeat = int(sys.argv[1])
P = VehicleParams()
prm = pack(P)
x = np.zeros(13); x[2] = 1.0; x[3] = 1.0; x[12] = 9.3
u = np.array([3.78, 3.75, 3.75]); z3 = np.zeros(3)
refs = HoverReference(P).sample(np.zeros(21))
x_off = x.copy(); x_off[0] = 0.2

def best(fn, n):
    fn()  # warm-up / compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(n):
            fn()
        times.append((time.perf_counter() - t0) / n)
    return min(times)

ctrl = Nmpc(P)
out = {
    "numba": _jit.NUMBA_ENABLED,
    "rk4_step_us": best(lambda: rk4(x, u, prm, z3, z3, z3, 1e-3), 2000) * 1e6,
    "nmpc_solve_ms": best(lambda: (ctrl.reset(), ctrl.solve(x_off, refs)), 3 if not _jit.NUMBA_ENABLED else 50) * 1e3,
    "hover_1s_sim_s": best(lambda: run(Scenario("bench", 1.0 if _jit.NUMBA_ENABLED else 0.1)), 1)
                      * (1.0 if _jit.NUMBA_ENABLED else 10.0),
}
print(json.dumps(out))
"""


def measure(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("SPINNER_DISABLE_NUMBA", None)
    if disable:
        env["SPINNER_DISABLE_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", CHILD, str(repeat)], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    jit = measure(False, args.repeat)
    py = measure(True, args.repeat)
    print(f"{'kernel':<18}{'numba':>12}{'numpy':>12}{'speed-up':>10}")
    for key, label in (("rk4_step_us", "rk4 step [us]"), ("nmpc_solve_ms", "nmpc solve [ms]"),
                       ("hover_1s_sim_s", "1 s sim [s]")):
        print(f"{label:<18}{jit[key]:>12.3f}{py[key]:>12.3f}{py[key] / jit[key]:>9.0f}x")
    if not jit["numba"]:
        print("note: numba is not available, both columns use the fallback")


if __name__ == "__main__":
    main()
