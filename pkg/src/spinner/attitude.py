"""Quaternion algebra and the tilt/yaw split of attitude errors.

Quaternions are scalar-first ``[w, x, y, z]`` arrays using the Hamilton
product. A state quaternion maps body-frame vectors into the world frame, so
``quat_to_rotation(q) @ [0, 0, 1]`` is the thrust axis in world coordinates.
"""
from __future__ import annotations

import math

import numpy as np

from ._jit import jit

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
_DEGENERATE_TILT = 1e-12


@jit
def qmul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@jit
def qconj(q):
    out = np.empty(4)
    out[0] = q[0]
    out[1] = -q[1]
    out[2] = -q[2]
    out[3] = -q[3]
    return out


@jit
def qnormalize(q):
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    out = np.empty(4)
    for i in range(4):
        out[i] = q[i] / n
    return out


@jit
def qrot(q):
    """Rotation matrix of ``q`` (normalised on the fly)."""
    n2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]
    s = 2.0 / n2
    w, x, y, z = q[0], q[1], q[2], q[3]
    R = np.empty((3, 3))
    R[0, 0] = 1.0 - s * (y * y + z * z)
    R[0, 1] = s * (x * y - w * z)
    R[0, 2] = s * (x * z + w * y)
    R[1, 0] = s * (x * y + w * z)
    R[1, 1] = 1.0 - s * (x * x + z * z)
    R[1, 2] = s * (y * z - w * x)
    R[2, 0] = s * (x * z - w * y)
    R[2, 1] = s * (y * z + w * x)
    R[2, 2] = 1.0 - s * (x * x + y * y)
    return R


@jit
def tilt_split(qe):
    """Split ``qe = q_z * q_xy``; returns (q_z, q_xy, degenerate)."""
    w, x, y, z = qe[0], qe[1], qe[2], qe[3]
    n2 = w * w + z * z
    if n2 < _DEGENERATE_TILT:
        return IDENTITY.copy(), qnormalize(qe), True
    n = math.sqrt(n2)
    qxy = np.empty(4)
    qxy[0] = n
    qxy[1] = (w * x + y * z) / n
    qxy[2] = (w * y - x * z) / n
    qxy[3] = 0.0
    qz = np.empty(4)
    qz[0] = w / n
    qz[1] = 0.0
    qz[2] = 0.0
    qz[3] = z / n
    return qz, qxy, False


@jit
def reduced_error(q_ref, q):
    """Tilt-first error entries ``[q_xy.x, q_xy.y, q_xy.z, q_z.z]``.

    The world-frame error ``q_ref * q^-1`` is re-expressed in body axes
    (``q^-1 * q_ref``) before splitting, so a spin about the body z-axis never
    shows up in the tilt part.
    """
    qe = qmul(qconj(qnormalize(q)), qnormalize(q_ref))
    if qe[0] < 0.0:
        for i in range(4):
            qe[i] = -qe[i]
    qz, qxy, _ = tilt_split(qe)
    out = np.empty(4)
    out[0] = qxy[1]
    out[1] = qxy[2]
    out[2] = qxy[3]
    out[3] = qz[3]
    return out


# -- array-level API ---------------------------------------------------------

def _as_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"expected a 4-element quaternion, got shape {q.shape}")
    return q


def quat_multiply(a, b) -> np.ndarray:
    return qnormalize(qmul(_as_quat(a), _as_quat(b)))


def quat_inverse(q) -> np.ndarray:
    return qnormalize(qconj(_as_quat(q)))


def quat_to_rotation(q) -> np.ndarray:
    return qrot(_as_quat(q))


def rotation_to_quat(R) -> np.ndarray:
    """Inverse of :func:`quat_to_rotation` (Shepperd's method), returned with w >= 0."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or np.linalg.norm(R.T @ R - np.eye(3)) > 1e-6 or np.linalg.det(R) < 0:
        raise ValueError("matrix is not a proper rotation")
    t = np.trace(R)
    if t > 0:
        s = 2.0 * np.sqrt(1.0 + t)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    q = qnormalize(np.array(q))
    return -q if q[0] < 0 else q


def axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


def yaw_quat(angle: float) -> np.ndarray:
    return axis_angle([0.0, 0.0, 1.0], angle)


def attitude_error(q_ref, q) -> np.ndarray:
    """World-frame error ``q_ref * q^-1`` taken on the w >= 0 hemisphere."""
    qe = quat_multiply(q_ref, quat_inverse(q))
    return -qe if qe[0] < 0 else qe


def tilt_decompose(q_err) -> tuple[np.ndarray, np.ndarray, bool]:
    """Split an error into a pure-yaw part and a tilt part with ``q_err = q_z * q_xy``.

    Returns ``(q_z, q_xy, degenerate)``; ``degenerate`` flags a 180 degree tilt
    where the yaw part is undefined and ``q_z`` falls back to identity.
    """
    return tilt_split(qnormalize(_as_quat(q_err)))


def reduced_error_vector(q_ref, q) -> np.ndarray:
    return reduced_error(_as_quat(q_ref), _as_quat(q))


def tilt_only(z_axis) -> np.ndarray:
    """Smallest rotation taking world z onto ``z_axis`` (no yaw component)."""
    z = np.asarray(z_axis, dtype=float)
    z = z / np.linalg.norm(z)
    if z[2] < -1.0 + 1e-12:
        return np.array([0.0, 1.0, 0.0, 0.0])
    q = np.array([1.0 + z[2], -z[1], z[0], 0.0])
    return q / np.linalg.norm(q)


def euler_zyx(q) -> np.ndarray:
    """Roll, pitch, yaw [rad]; only used for plotting/logging."""
    w, x, y, z = qnormalize(_as_quat(q))
    roll = np.arctan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y))
    pitch = np.arcsin(np.clip(2 * (w * y - z * x), -1.0, 1.0))
    yaw = np.arctan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z))
    return np.array([roll, pitch, yaw])
