"""Time-parameterised reference trajectories for the NMPC horizon.

Every generator exposes vectorised ``position/velocity/acceleration(t)`` and a
``sample(times)`` that returns packed NMPC reference rows
``[p(3), q(4), v(3), w(3), u(3)]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .vehicle import VehicleParams, hover_equilibrium

ACCEL_CEILING = 2.0  # m/s^2, waypoint planner
_MIN_JERK_PEAK_ACCEL = 10.0 / np.sqrt(3.0)  # peak |a| * T^2 / d of a rest-to-rest quintic


@dataclass(frozen=True)
class ReferencePoint:
    t: float
    p_ref: np.ndarray
    v_ref: np.ndarray
    a_ref: np.ndarray
    q_ref: np.ndarray
    w_ref: np.ndarray
    u_ref: np.ndarray

    def packed(self) -> np.ndarray:
        return np.concatenate([self.p_ref, self.q_ref, self.v_ref, self.w_ref, self.u_ref])


def _tilt_rows(Z: np.ndarray) -> np.ndarray:
    """Row-wise zero-yaw quaternions taking world z onto the unit rows of ``Z``."""
    Q = np.stack([1.0 + Z[:, 2], -Z[:, 1], Z[:, 0], np.zeros(len(Z))], axis=1)
    n = np.linalg.norm(Q, axis=1)
    flip = n < 1e-9
    Q[flip] = [0.0, 1.0, 0.0, 0.0]
    n[flip] = 1.0
    return Q / n[:, None]


def attitude_rows(A, V, params: VehicleParams, hover_thrusts=None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`reference_attitude` for arrays of accelerations/velocities."""
    A = np.atleast_2d(np.asarray(A, float))
    f = params.mass * (A - params.gravity_vector)
    if V is not None:
        f = f + params.D * np.atleast_2d(np.asarray(V, float))
    mag = np.linalg.norm(f, axis=1)
    if np.any(mag < 1e-9):
        raise ValueError("free fall: required thrust direction is undefined")
    if hover_thrusts is None:
        hover_thrusts = hover_equilibrium(params)[0].thrusts
    U = np.outer(mag / (params.mass * params.gravity), hover_thrusts)
    return _tilt_rows(f / mag[:, None]), U


def reference_attitude(a_ref, params: VehicleParams, v_ref=None) -> tuple[np.ndarray, np.ndarray]:
    """Zero-yaw attitude and rotor thrusts that realise ``a_ref``.

    The thrust axis follows ``m (a - g)`` plus the body-drag feedforward
    ``D v``; thrusts are the hover solution scaled to the required magnitude.
    """
    Q, U = attitude_rows(a_ref, v_ref, params)
    return Q[0], U[0]


class Reference:
    """Base class; subclasses provide kinematics as arrays of shape (n, 3)."""

    def __init__(self, params: VehicleParams, drag_feedforward: bool = True):
        self.params = params
        self.drag_feedforward = drag_feedforward
        self.hover_thrusts = hover_equilibrium(params)[0].thrusts

    def position(self, t) -> np.ndarray:
        raise NotImplementedError

    def velocity(self, t) -> np.ndarray:
        raise NotImplementedError

    def acceleration(self, t) -> np.ndarray:
        raise NotImplementedError

    def point(self, t: float) -> ReferencePoint:
        row = self.sample([t])[0]
        a = self.acceleration(np.atleast_1d(float(t)))[0]
        return ReferencePoint(float(t), row[0:3], row[7:10], a, row[3:7], row[10:13], row[13:16])

    def sample(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, float))
        P, V, A = self.position(times), self.velocity(times), self.acceleration(times)
        out = np.zeros((times.size, 16))
        out[:, 0:3] = P
        out[:, 7:10] = V
        out[:, 3:7], out[:, 13:16] = attitude_rows(A, V if self.drag_feedforward else None,
                                                   self.params, self.hover_thrusts)
        return out

    def __call__(self, t: float) -> ReferencePoint:
        return self.point(t)


class HoverReference(Reference):
    def __init__(self, params: VehicleParams, p_hold=(0.0, 0.0, 1.0)):
        super().__init__(params)
        self.p_hold = np.asarray(p_hold, float)
        self._row = np.concatenate([self.p_hold, [1.0, 0.0, 0.0, 0.0], np.zeros(6), self.hover_thrusts])

    def position(self, t):
        return np.tile(self.p_hold, (np.size(t), 1))

    def velocity(self, t):
        return np.zeros((np.size(t), 3))

    acceleration = velocity

    def sample(self, times):
        return np.tile(self._row, (np.size(times), 1))


def hover_reference(params: VehicleParams, p_hold=(0.0, 0.0, 1.0)) -> HoverReference:
    return HoverReference(params, p_hold)


class Lemniscate(Reference):
    """Figure-eight ``[A sin th, B sin th cos th, C sin th] + centre`` with ``th = W t``."""

    def __init__(self, params: VehicleParams, extent_x=6.0, extent_y=3.0, extent_z=0.6, v_max=2.0,
                 centre=(0.0, 0.0, 1.0)):
        if min(extent_x, extent_y, extent_z) <= 0 or v_max <= 0:
            raise ValueError("extents and v_max must be positive")
        super().__init__(params)
        self.A, self.B, self.C = extent_x / 2.0, float(extent_y), extent_z / 2.0
        self.centre = np.asarray(centre, float)
        self.v_max = float(v_max)
        # speed at unit angular rate, maximised over one period: coarse grid then refine
        th = np.linspace(0.0, 2 * np.pi, 4001)
        g = self._unit_speed(th)
        k = int(np.argmax(g))
        res = minimize_scalar(lambda x: -self._unit_speed(np.array([x]))[0],
                              bounds=(th[max(k - 1, 0)], th[min(k + 1, th.size - 1)]),
                              method="bounded", options={"xatol": 1e-12})
        self.omega = self.v_max / max(-res.fun, g[k])

    def _unit_speed(self, th):
        c, c2 = np.cos(th), np.cos(2 * th)
        return np.sqrt((self.A * c) ** 2 + (self.B * c2) ** 2 + (self.C * c) ** 2)

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    def position(self, t):
        th = self.omega * np.asarray(t, float)
        s, c = np.sin(th), np.cos(th)
        return np.stack([self.A * s, self.B * s * c, self.C * s], axis=-1) + self.centre

    def velocity(self, t):
        w = self.omega
        th = w * np.asarray(t, float)
        return w * np.stack([self.A * np.cos(th), self.B * np.cos(2 * th), self.C * np.cos(th)], axis=-1)

    def acceleration(self, t):
        w = self.omega
        th = w * np.asarray(t, float)
        return -w * w * np.stack([self.A * np.sin(th), 2 * self.B * np.sin(2 * th), self.C * np.sin(th)],
                                 axis=-1)


def lemniscate(params: VehicleParams, extent_x=6.0, extent_y=3.0, extent_z=0.6, v_max=2.0, **kw) -> Lemniscate:
    return Lemniscate(params, extent_x, extent_y, extent_z, v_max, **kw)


def _quintic_spline(knots: np.ndarray, durations: np.ndarray) -> np.ndarray:
    """Minimum-jerk piecewise quintic through ``knots`` (rest at both ends).

    Jerk-optimal splines are C4 at interior knots, which together with the
    interpolation and boundary conditions gives a square linear system.
    Returns coefficients of shape (segments, 6, dim) in local time.
    """
    S = len(durations)
    dim = knots.shape[1]
    n = 6 * S

    def row(T, order):
        r = np.zeros(6)
        for k in range(order, 6):
            r[k] = np.prod(np.arange(k - order + 1, k + 1)) * T ** (k - order)
        return r

    Amat = np.zeros((n, n))
    b = np.zeros((n, dim))
    r = 0
    for i, T in enumerate(durations):
        Amat[r, 6 * i:6 * i + 6] = row(0.0, 0)
        b[r] = knots[i]
        r += 1
        Amat[r, 6 * i:6 * i + 6] = row(T, 0)
        b[r] = knots[i + 1]
        r += 1
    for order in (1, 2):
        Amat[r, 0:6] = row(0.0, order)
        r += 1
        Amat[r, n - 6:n] = row(durations[-1], order)
        r += 1
    for i in range(S - 1):
        for order in (1, 2, 3, 4):
            Amat[r, 6 * i:6 * i + 6] = row(durations[i], order)
            Amat[r, 6 * i + 6:6 * i + 12] = -row(0.0, order)
            r += 1
    coef = np.linalg.solve(Amat, b)
    return coef.reshape(S, 6, dim)


class MinJerkPath(Reference):
    def __init__(self, params: VehicleParams, waypoints, segment_speed: float = 0.5,
                 accel_ceiling: float = ACCEL_CEILING):
        super().__init__(params)
        W = np.asarray(waypoints, float)
        if W.ndim != 2 or W.shape[1] != 3 or W.shape[0] < 2:
            raise ValueError("need at least two 3-D waypoints")
        if segment_speed <= 0:
            raise ValueError("segment_speed must be positive")
        dist = np.linalg.norm(np.diff(W, axis=0), axis=1)
        if np.any(dist < 1e-9):
            raise ValueError("duplicate consecutive waypoints")
        self.waypoints = W
        T = np.maximum(dist / segment_speed, np.sqrt(_MIN_JERK_PEAK_ACCEL * dist / accel_ceiling))
        coef = _quintic_spline(W, T)
        # interior knots are not at rest, so re-check the whole path and stretch time if needed
        peak = self._peak_accel(coef, T)
        if peak > accel_ceiling:
            k = np.sqrt(peak / accel_ceiling) * (1 + 1e-9)
            T = T * k
            coef = _quintic_spline(W, T)
        self.durations = T
        self.coef = coef
        self.knot_times = np.concatenate([[0.0], np.cumsum(T)])

    @staticmethod
    def _peak_accel(coef, T):
        peak = 0.0
        for c, Ti in zip(coef, T):
            tau = np.linspace(0, Ti, 200)
            a = sum(k * (k - 1) * np.outer(tau ** (k - 2), c[k]) for k in range(2, 6))
            peak = max(peak, float(np.max(np.linalg.norm(a, axis=1))))
        return peak

    @property
    def duration(self) -> float:
        return float(self.knot_times[-1])

    def _eval(self, t, order):
        t = np.clip(np.atleast_1d(np.asarray(t, float)), 0.0, self.duration)
        seg = np.clip(np.searchsorted(self.knot_times, t, side="right") - 1, 0, len(self.durations) - 1)
        tau = t - self.knot_times[seg]
        c = self.coef[seg]  # (n, 6, 3)
        out = np.zeros((t.size, 3))
        for k in range(order, 6):
            f = np.prod(np.arange(k - order + 1, k + 1))
            out += f * (tau ** (k - order))[:, None] * c[:, k]
        return out

    def position(self, t):
        return self._eval(t, 0)

    def velocity(self, t):
        return self._eval(t, 1)

    def acceleration(self, t):
        return self._eval(t, 2)


def min_jerk_waypoints(params: VehicleParams, waypoints, segment_speed: float = 0.5, **kw) -> MinJerkPath:
    return MinJerkPath(params, waypoints, segment_speed, **kw)


def load_waypoints(path) -> np.ndarray:
    """Plain text, one ``x y z`` per line; blank lines and ``#`` comments ignored."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    W = np.loadtxt(path, comments="#", ndmin=2)
    if W.shape[1] != 3:
        raise ValueError(f"{path}: expected three columns, got {W.shape[1]}")
    return W
