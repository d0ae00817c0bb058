"""Rigid-body equations of motion and RK4 integration.

State vectors are flat 13-arrays ``[p(3), q(4), v(3), w(3)]``: world position
(z up), body-to-world quaternion, world velocity, body angular rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .attitude import IDENTITY, qmul, qrot
from .vehicle import (PRM_CPLATE, PRM_CXY, PRM_D, PRM_G, PRM_J, PRM_M,
                      PRM_MASS, RotorCommand, VehicleParams, pack)

NX = 13
NU = 3
POS = slice(0, 3)
QUAT = slice(3, 7)
VEL = slice(7, 10)
RATE = slice(10, 13)
MAX_DT = 0.05
_ZERO3 = np.zeros(3)


@dataclass
class State:
    position: np.ndarray
    attitude: np.ndarray
    velocity: np.ndarray
    body_rate: np.ndarray

    @classmethod
    def from_array(cls, x) -> "State":
        x = np.asarray(x, dtype=float)
        return cls(x[POS].copy(), x[QUAT].copy(), x[VEL].copy(), x[RATE].copy())

    @classmethod
    def hover(cls, position=(0.0, 0.0, 0.0), attitude=IDENTITY, yaw_rate: float = 0.0) -> "State":
        return cls(np.array(position, float), np.array(attitude, float), np.zeros(3), np.array([0.0, 0.0, yaw_rate]))

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.position, self.attitude, self.velocity, self.body_rate])


# -- compiled kernels ----------------------------------------------------------

@jit
def deriv(x, u, prm, wind, ext_acc, ext_tau):
    """Continuous-time state rate. ``wind`` is the airmass velocity (world),
    ``ext_acc`` an extra world acceleration, ``ext_tau`` an extra body torque."""
    out = np.empty(13)
    qw, qx, qy, qz = x[3], x[4], x[5], x[6]
    p, q, r = x[10], x[11], x[12]
    n2 = qw * qw + qx * qx + qy * qy + qz * qz
    s = 2.0 / n2
    R00 = 1.0 - s * (qy * qy + qz * qz)
    R01 = s * (qx * qy - qw * qz)
    R02 = s * (qx * qz + qw * qy)
    R10 = s * (qx * qy + qw * qz)
    R11 = 1.0 - s * (qx * qx + qz * qz)
    R12 = s * (qy * qz - qw * qx)
    R20 = s * (qx * qz - qw * qy)
    R21 = s * (qy * qz + qw * qx)
    R22 = 1.0 - s * (qx * qx + qy * qy)

    mass = prm[PRM_MASS]
    T = u[0] + u[1] + u[2]
    M = prm[PRM_M:PRM_M + 12]
    tx = M[3] * u[0] + M[4] * u[1] + M[5] * u[2]
    ty = M[6] * u[0] + M[7] * u[1] + M[8] * u[2]
    tz = M[9] * u[0] + M[10] * u[1] + M[11] * u[2]

    # drag R D R^T (v - wind)
    ax = x[7] - wind[0]
    ay = x[8] - wind[1]
    az = x[9] - wind[2]
    bx = prm[PRM_D] * (R00 * ax + R10 * ay + R20 * az)
    by = prm[PRM_D + 1] * (R01 * ax + R11 * ay + R21 * az)
    bz = prm[PRM_D + 2] * (R02 * ax + R12 * ay + R22 * az)
    fx = R00 * bx + R01 * by + R02 * bz
    fy = R10 * bx + R11 * by + R12 * bz
    fz = R20 * bx + R21 * by + R22 * bz

    out[0] = x[7]
    out[1] = x[8]
    out[2] = x[9]
    out[3] = 0.5 * (-qx * p - qy * q - qz * r)
    out[4] = 0.5 * (qw * p + qy * r - qz * q)
    out[5] = 0.5 * (qw * q - qx * r + qz * p)
    out[6] = 0.5 * (qw * r + qx * q - qy * p)
    out[7] = (T * R02 - fx) / mass + ext_acc[0]
    out[8] = (T * R12 - fy) / mass + ext_acc[1]
    out[9] = (T * R22 - fz) / mass - prm[PRM_G] + ext_acc[2]

    Jx, Jy, Jz = prm[PRM_J], prm[PRM_J + 1], prm[PRM_J + 2]
    cxy = prm[PRM_CXY]
    cpl = prm[PRM_CPLATE]
    out[10] = (tx + ext_tau[0] - (q * Jz * r - r * Jy * q) - cxy * p) / Jx
    out[11] = (ty + ext_tau[1] - (r * Jx * p - p * Jz * r) - cxy * q) / Jy
    out[12] = (tz + ext_tau[2] - (p * Jy * q - q * Jx * p) - cpl * abs(r) * r) / Jz
    return out


@jit
def rk4(x, u, prm, wind, ext_acc, ext_tau, dt):
    """One classical RK4 step followed by quaternion renormalisation."""
    k1 = deriv(x, u, prm, wind, ext_acc, ext_tau)
    k2 = deriv(x + 0.5 * dt * k1, u, prm, wind, ext_acc, ext_tau)
    k3 = deriv(x + 0.5 * dt * k2, u, prm, wind, ext_acc, ext_tau)
    k4 = deriv(x + dt * k3, u, prm, wind, ext_acc, ext_tau)
    xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    n = math.sqrt(xn[3] * xn[3] + xn[4] * xn[4] + xn[5] * xn[5] + xn[6] * xn[6])
    for i in range(3, 7):
        xn[i] /= n
    return xn


@jit
def rk4_many(x, u, prm, wind, ext_acc, ext_tau, dt, steps):
    for _ in range(steps):
        x = rk4(x, u, prm, wind, ext_acc, ext_tau, dt)
    return x


# -- public API ------------------------------------------------------------------

def _x(state) -> np.ndarray:
    return state.to_array() if isinstance(state, State) else np.asarray(state, dtype=float)


def _u(cmd) -> np.ndarray:
    return cmd.thrusts if isinstance(cmd, RotorCommand) else np.asarray(cmd, dtype=float)


def drag_torque(params: VehicleParams, body_rate) -> np.ndarray:
    """Rotational drag: linear roll/pitch damping, quadratic plate drag in yaw."""
    p, q, r = body_rate
    c = params.rot_damping_xy
    return np.array([c * p, c * q, params.plate_yaw_drag_coeff * abs(r) * r])


def translational_accel(params: VehicleParams, state, thrust: float, wind_velocity=_ZERO3) -> np.ndarray:
    x = _x(state)
    R = qrot(x[QUAT])
    D = np.diag(params.D)
    rel = x[VEL] - np.asarray(wind_velocity, float)
    return (thrust * R[:, 2] - R @ D @ R.T @ rel) / params.mass + params.gravity_vector


def rotational_accel(params: VehicleParams, state, torque) -> np.ndarray:
    x = _x(state)
    w = x[RATE]
    J = params.J
    return (np.asarray(torque, float) - np.cross(w, J * w) - drag_torque(params, w)) / J


def quat_derivative(state) -> np.ndarray:
    x = _x(state)
    q = x[QUAT]
    return 0.5 * qmul(q, np.concatenate([[0.0], x[RATE]]))


def state_derivative(params: VehicleParams, state, cmd, wind=_ZERO3) -> np.ndarray:
    return deriv(_x(state), _u(cmd), pack(params), np.asarray(wind, float), _ZERO3, _ZERO3)


def integrate_rk4(params: VehicleParams, state, cmd, wind=_ZERO3, dt: float = 1e-3, *, prm=None):
    """Advance ``state`` by ``dt`` seconds; returns the same type it was given."""
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}], got {dt}")
    prm = pack(params) if prm is None else prm
    xn = rk4(_x(state), _u(cmd), prm, np.asarray(wind, float), _ZERO3, _ZERO3, dt)
    return State.from_array(xn) if isinstance(state, State) else xn


def mechanical_energy(params: VehicleParams, x) -> float:
    x = np.asarray(x, float)
    w = x[RATE]
    return float(0.5 * params.mass * x[VEL] @ x[VEL] + 0.5 * w @ (params.J * w)
                 + params.mass * params.gravity * x[2])

