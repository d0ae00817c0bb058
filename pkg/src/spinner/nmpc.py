"""Nonlinear MPC: multiple-shooting Gauss-Newton SQP with real-time iterations.

The horizon is discretised with one RK4 step per stage. Each SQP iteration
linearises the dynamics around the current node/input guess by forward finite
differences, condenses the linearised multiple-shooting problem into a QP over
the ``3N`` rotor thrusts and solves it with the box-constrained active-set
solver in :mod:`spinner.qp`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .attitude import qnormalize, reduced_error
from .dynamics import NU, NX, State, rk4
from .qp import box_qp
from .vehicle import VehicleParams, hover_equilibrium, pack

NY = 16  # p(3) + reduced attitude(4) + v(3) + w(3) + u(3)
NREF = 16  # p_ref(3) q_ref(4) v_ref(3) w_ref(3) u_ref(3)


@dataclass(frozen=True)
class NmpcConfig:
    horizon_steps: int = 20
    step: float = 0.05
    weight_pos: tuple = (100.0, 100.0, 800.0)
    weight_att: tuple = (60.0, 60.0, 60.0, 0.0)
    weight_vel: tuple = (1.0, 1.0, 1.0)
    weight_rate: tuple = (1.0, 1.0, 0.0)
    weight_input: tuple = (1.0, 1.0, 1.0)
    # None means "same as the stage weights" for the state part
    terminal_weight: tuple | None = None
    input_lower: float | None = None
    input_upper: float | None = None
    max_sqp_iters: int = 1
    kkt_tol: float = 1e-6
    fd_step: float = 1e-6

    def __post_init__(self):
        for name in ("weight_pos", "weight_att", "weight_vel", "weight_rate", "weight_input"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.terminal_weight is not None:
            object.__setattr__(self, "terminal_weight", tuple(float(v) for v in self.terminal_weight))
            if len(self.terminal_weight) != NX:
                raise ValueError(f"terminal_weight needs {NX} entries")
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if min(self.stage_weights()) < 0:
            raise ValueError("weights must be non-negative")
        if self.max_sqp_iters < 1:
            raise ValueError("max_sqp_iters must be >= 1")

    @property
    def horizon(self) -> float:
        return self.horizon_steps * self.step

    def stage_weights(self) -> np.ndarray:
        return np.array(self.weight_pos + self.weight_att + self.weight_vel + self.weight_rate + self.weight_input)

    def final_weights(self) -> np.ndarray:
        if self.terminal_weight is not None:
            return np.array(self.terminal_weight)
        return self.stage_weights()[:NX]

    def bounds(self, params: VehicleParams) -> tuple[float, float]:
        lo = params.rotor_thrust_min if self.input_lower is None else self.input_lower
        hi = params.rotor_thrust_max if self.input_upper is None else self.input_upper
        if not lo < hi:
            raise ValueError("input_lower must be below input_upper")
        return float(lo), float(hi)


class SolveStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    INFEASIBLE_CLAMPED = "infeasible-clamped"


@dataclass
class NmpcSolution:
    inputs: np.ndarray            # (N, 3)
    predicted_states: np.ndarray  # (N+1, 13)
    cost: float
    kkt_residual: float
    iterations: int
    status: SolveStatus
    qp_iterations: int = 0
    step: float = 0.05

    @property
    def first_input(self) -> np.ndarray:
        return self.inputs[0]


# -- kernels ---------------------------------------------------------------------

@jit
def stage_residual(x, u, ref, sw):
    y = np.empty(16)
    for i in range(3):
        y[i] = x[i] - ref[i]
    y[3:7] = reduced_error(ref[3:7], x[3:7])
    for i in range(7, 13):
        y[i] = x[i] - ref[i]
    for i in range(3):
        y[13 + i] = u[i] - ref[13 + i]
    return y * sw


@jit
def terminal_residual(x, ref, swN):
    y = np.empty(13)
    for i in range(3):
        y[i] = x[i] - ref[i]
    y[3:7] = reduced_error(ref[3:7], x[3:7])
    for i in range(7, 13):
        y[i] = x[i] - ref[i]
    return y * swN


@jit
def _state_jac(x, ref, sw, h):
    """d(weighted residual)/dx, rows 0..12 (the input rows are independent of x)."""
    C = np.zeros((13, 13))
    for i in range(13):
        if i < 3 or i >= 7:
            C[i, i] = sw[i]
    e0 = reduced_error(ref[3:7], x[3:7])
    for j in range(4):
        qp = x[3:7].copy()
        qp[j] += h
        e1 = reduced_error(ref[3:7], qp)
        for i in range(4):
            C[3 + i, 3 + j] = sw[3 + i] * (e1[i] - e0[i]) / h
    return C


@jit
def rollout(x0, U, prm, ext, dt):
    N = U.shape[0]
    z3 = np.zeros(3)
    X = np.empty((N + 1, 13))
    X[0] = x0
    for k in range(N):
        X[k + 1] = rk4(X[k], U[k], prm, z3, ext, z3, dt)
    return X


@jit
def trajectory_cost(X, U, refs, sw, swN):
    N = U.shape[0]
    c = 0.0
    for k in range(N):
        r = stage_residual(X[k], U[k], refs[k], sw)
        c += r @ r
    r = terminal_residual(X[N], refs[N], swN)
    return c + r @ r


@jit
def linearize(Xb, Ub, prm, ext, dt, h):
    """Central-difference sensitivities ``A_k, B_k`` and the shooting defects."""
    N = Ub.shape[0]
    z3 = np.zeros(3)
    A = np.empty((N, 13, 13))
    B = np.empty((N, 13, 3))
    d = np.empty((N, 13))
    for k in range(N):
        f0 = rk4(Xb[k], Ub[k], prm, z3, ext, z3, dt)
        d[k] = f0 - Xb[k + 1]
        for i in range(13):
            xp = Xb[k].copy()
            xm = Xb[k].copy()
            xp[i] += h
            xm[i] -= h
            A[k, :, i] = (rk4(xp, Ub[k], prm, z3, ext, z3, dt) - rk4(xm, Ub[k], prm, z3, ext, z3, dt)) / (2 * h)
        for j in range(3):
            up = Ub[k].copy()
            um = Ub[k].copy()
            up[j] += h
            um[j] -= h
            B[k, :, j] = (rk4(Xb[k], up, prm, z3, ext, z3, dt) - rk4(Xb[k], um, prm, z3, ext, z3, dt)) / (2 * h)
    return A, B, d


@jit
def condense(Xb, Ub, x0, refs, sw, swN, A, B, d, h):
    """Gauss-Newton Hessian and gradient of the condensed QP in the input step."""
    N = Ub.shape[0]
    nv = 3 * N
    nres = 16 * N + 13
    JJ = np.zeros((nres, nv))
    R = np.zeros(nres)
    c = x0 - Xb[0]
    G = np.zeros((13, nv))
    for k in range(N + 1):
        row = 16 * k
        if k < N:
            y = stage_residual(Xb[k], Ub[k], refs[k], sw)
            C = _state_jac(Xb[k], refs[k], sw, h)
            R[row:row + 13] = y[:13] + C @ c
            R[row + 13:row + 16] = y[13:]
            JJ[row:row + 13] = C @ G
            for j in range(3):
                JJ[row + 13 + j, 3 * k + j] = sw[13 + j]
            c = A[k] @ c + d[k]
            G = A[k] @ G
            G[:, 3 * k:3 * k + 3] += B[k]
        else:
            y = terminal_residual(Xb[k], refs[k], swN)
            C = _state_jac(Xb[k], refs[k], swN, h)
            R[row:row + 13] = y + C @ c
            JJ[row:row + 13] = C @ G
    H = 2.0 * (JJ.T @ JJ)
    g = 2.0 * (JJ.T @ R)
    return H, g


@jit
def sqp_iteration(Xb, Ub, x0, refs, sw, swN, prm, ext, dt, lb, ub, h, qp_max_iter):
    """One full-step Gauss-Newton iteration; returns the updated guess and KKT residual."""
    N = Ub.shape[0]
    A, B, d = linearize(Xb, Ub, prm, ext, dt, h)
    H, g = condense(Xb, Ub, x0, refs, sw, swN, A, B, d, h)
    u = Ub.ravel()
    stat = 0.0
    for i in range(3 * N):
        s = u[i] - min(max(u[i] - g[i], lb), ub)
        stat = max(stat, abs(s))
    feas = 0.0
    for i in range(13):
        feas = max(feas, abs(x0[i] - Xb[0, i]))
    for k in range(N):
        for i in range(13):
            feas = max(feas, abs(d[k, i]))
    kkt = max(stat, feas)

    lo = lb - u
    hi = ub - u
    du, qp_iters, qp_status = box_qp(H, g, lo, hi, np.zeros(3 * N), qp_max_iter)
    Un = np.empty((N, 3))
    for k in range(N):
        for j in range(3):
            Un[k, j] = min(max(Ub[k, j] + du[3 * k + j], lb), ub)
    Xn = np.empty((N + 1, 13))
    dx = x0 - Xb[0]
    Xn[0] = x0
    for k in range(N):
        dx = A[k] @ dx + B[k] @ du[3 * k:3 * k + 3] + d[k]
        Xn[k + 1] = Xb[k + 1] + dx
        Xn[k + 1, 3:7] = qnormalize(Xn[k + 1, 3:7])
    return Xn, Un, kkt, g, qp_iters, qp_status


# -- reference packing and cost ----------------------------------------------------

def pack_reference(points) -> np.ndarray:
    """Stack ReferencePoint-like objects (or pass an (n, 16) array through)."""
    if isinstance(points, np.ndarray):
        arr = np.ascontiguousarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != NREF:
            raise ValueError(f"packed references must have shape (n, {NREF})")
        return arr
    return np.array([np.concatenate([p.p_ref, p.q_ref, p.v_ref, p.w_ref, p.u_ref]) for p in points])


def _state(x) -> np.ndarray:
    return x.to_array() if isinstance(x, State) else np.asarray(x, dtype=float)


def cost_vector(state, ref, cmd) -> np.ndarray:
    """Unweighted stage residual ``y`` stacking position, reduced attitude, velocity, rate and input errors."""
    ref = pack_reference([ref])[0] if not isinstance(ref, np.ndarray) else np.asarray(ref, float)
    u = getattr(cmd, "thrusts", cmd)
    return stage_residual(_state(state), np.asarray(u, float), ref, np.ones(NY))


def stage_cost(y, config: NmpcConfig = NmpcConfig()) -> float:
    y = np.asarray(y, float)
    return float(y @ (config.stage_weights() * y))


def predict(params: VehicleParams, state, input_seq, ref_traj, config: NmpcConfig = NmpcConfig(),
            ext_accel=None) -> tuple[np.ndarray, float]:
    """Roll the prediction model over the horizon; returns (states, total cost)."""
    prm = model_params(params)
    U = np.ascontiguousarray(input_seq, dtype=float).reshape(-1, NU)
    refs = pack_reference(ref_traj)
    if refs.shape[0] < U.shape[0] + 1:
        raise ValueError("need one more reference point than inputs")
    ext = np.zeros(3) if ext_accel is None else np.asarray(ext_accel, float)
    X = rollout(_state(state), U, prm, ext, config.step)
    sw = np.sqrt(config.stage_weights())
    swN = np.sqrt(config.final_weights())
    return X, float(trajectory_cost(X, U, refs[:U.shape[0] + 1], sw, swN))


def model_params(params: VehicleParams) -> np.ndarray:
    # the prediction model keeps the plate yaw drag but not the roll/pitch damping
    return pack(params, rot_damping=False)


def shift_solution(sol: NmpcSolution, stages: float) -> tuple[np.ndarray, np.ndarray]:
    """Advance a previous solution by ``stages`` (may be fractional), repeating the tail."""
    U, X = sol.inputs, sol.predicted_states
    N = U.shape[0]
    if stages == 1.0:
        Us = np.vstack([U[1:], U[-1:]])
        Xs = np.vstack([X[1:], X[-1:]])
        return Us, Xs
    t = np.arange(N) + stages
    Us = np.empty_like(U)
    for j in range(NU):
        Us[:, j] = np.interp(t, np.arange(N), U[:, j])
    tx = np.arange(N + 1) + stages
    Xs = np.empty_like(X)
    for j in range(NX):
        Xs[:, j] = np.interp(tx, np.arange(N + 1), X[:, j])
    Xs[:, 3:7] /= np.linalg.norm(Xs[:, 3:7], axis=1, keepdims=True)
    return Us, Xs


class Nmpc:
    """Receding-horizon controller holding its own warm start."""

    def __init__(self, params: VehicleParams, config: NmpcConfig = NmpcConfig()):
        self.params = params
        self.config = config
        self.prm = model_params(params)
        self.lb, self.ub = config.bounds(params)
        self.sw = np.sqrt(config.stage_weights())
        self.swN = np.sqrt(config.final_weights())
        hover, _ = hover_equilibrium(params)
        self.hover_inputs = np.clip(hover.thrusts, self.lb, self.ub)
        self.last: NmpcSolution | None = None

    def reset(self):
        self.last = None

    def initial_guess(self, x0, ext) -> tuple[np.ndarray, np.ndarray]:
        N = self.config.horizon_steps
        U = np.tile(self.hover_inputs, (N, 1))
        return U, rollout(x0, U, self.prm, ext, self.config.step)

    def solve(self, state, ref_traj, warm_start: NmpcSolution | None = None, *, shift: float = 1.0,
              ext_accel=None, max_iters: int | None = None) -> NmpcSolution:
        """Solve from ``state`` tracking ``ref_traj`` (N+1 references).

        ``warm_start`` defaults to the solution of the previous call, shifted by
        ``shift`` stages; without any warm start the hover thrusts are used.
        """
        cfg = self.config
        N = cfg.horizon_steps
        x0 = _state(state)
        refs = pack_reference(ref_traj)
        if refs.shape[0] < N + 1:
            raise ValueError(f"need {N + 1} reference points, got {refs.shape[0]}")
        refs = np.ascontiguousarray(refs[:N + 1])
        ext = np.zeros(3) if ext_accel is None else np.asarray(ext_accel, float)
        warm = self.last if warm_start is None else warm_start
        if warm is None:
            Ub, Xb = self.initial_guess(x0, ext)
        else:
            Ub, Xb = shift_solution(warm, shift)
            Ub = np.clip(Ub, self.lb, self.ub)
        fallback = Ub.copy()

        iters = 0
        qp_total = 0
        status = SolveStatus.MAX_ITERS
        kkt = np.inf
        n_iters = cfg.max_sqp_iters if max_iters is None else max_iters
        for _ in range(n_iters):
            try:
                Xn, Un, kkt, _, qp_iters, _ = sqp_iteration(
                    Xb, Ub, x0, refs, self.sw, self.swN, self.prm, ext, cfg.step,
                    self.lb, self.ub, cfg.fd_step, 10 * NU * N + 10)
                finite = np.all(np.isfinite(Xn)) and np.all(np.isfinite(Un)) and np.isfinite(kkt)
            except np.linalg.LinAlgError:
                finite = False
            if not finite:
                status = SolveStatus.INFEASIBLE_CLAMPED
                Ub = fallback
                Xb = rollout(x0, Ub, self.prm, ext, cfg.step)
                break
            if kkt < cfg.kkt_tol:
                status = SolveStatus.CONVERGED
                break
            iters += 1
            qp_total += qp_iters
            Xb, Ub = Xn, Un
        Xb = Xb.copy()
        Xb[0] = x0
        Xr = rollout(x0, Ub, self.prm, ext, cfg.step)
        cost = float(trajectory_cost(Xr, Ub, refs, self.sw, self.swN))
        sol = NmpcSolution(Ub, Xb, cost, float(kkt), iters, status, qp_total, cfg.step)
        self.last = sol
        return sol


def solve(params: VehicleParams, config: NmpcConfig, state, ref_traj, warm_start: NmpcSolution | None = None,
          **kwargs) -> NmpcSolution:
    """One-shot solve without persistent controller state."""
    return Nmpc(params, config).solve(state, ref_traj, warm_start, **kwargs)
