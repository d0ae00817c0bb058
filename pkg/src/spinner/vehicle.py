"""Vehicle constants, rotor model, control allocation and static equilibria."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

# Measured steady yaw rates [rad/s] for each anti-torque plate width [mm].
PLATE_YAW_RATES = {20: 15.2, 30: 9.3, 40: 5.4}
DEFAULT_PLATE_WIDTH = 30

# Layout of the flat parameter vector consumed by the compiled kernels.
PRM_MASS = 0
PRM_J = 1
PRM_D = 4
PRM_G = 7
PRM_CXY = 8
PRM_CPLATE = 9
PRM_M = 10
PRM_UMIN = 22
PRM_UMAX = 23
PRM_SIZE = 24


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the tri-rotor.

    ``plate_yaw_drag_coeff`` is the quadratic yaw drag of the fitted plate set;
    left as ``None`` it is calibrated for the 30 mm plates from the hover
    residual torque.
    """

    mass: float = 1.15
    inertia_diag: tuple = (5.59e-3, 5.77e-3, 6.05e-3)
    drag_matrix_diag: tuple = (0.48, 0.50, 0.65)
    thrust_coeff: float = 1.41e-8
    counter_torque_coeff: float = 0.015
    arm_rx: tuple = (0.108, 0.108)
    arm_ry: tuple = (0.125, 0.063, 0.063)
    gravity: float = 9.81
    rotor_thrust_min: float = 0.0
    rotor_thrust_max: float = 8.0
    plate_yaw_drag_coeff: float | None = None
    rot_damping_xy: float = 1e-3

    def __post_init__(self):
        for name in ("inertia_diag", "drag_matrix_diag", "arm_rx", "arm_ry"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if len(self.inertia_diag) != 3 or len(self.drag_matrix_diag) != 3:
            raise ValueError("inertia_diag and drag_matrix_diag need 3 entries")
        if len(self.arm_rx) != 2 or len(self.arm_ry) != 3:
            raise ValueError("arm_rx needs 2 entries and arm_ry 3 entries")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if min(self.inertia_diag) <= 0:
            raise ValueError("inertia entries must be positive")
        if min(self.drag_matrix_diag) < 0:
            raise ValueError("drag entries must be non-negative")
        if not 0 <= self.rotor_thrust_min < self.rotor_thrust_max:
            raise ValueError("need 0 <= rotor_thrust_min < rotor_thrust_max")
        if self.plate_yaw_drag_coeff is None:
            object.__setattr__(self, "plate_yaw_drag_coeff", calibrated_plate_coeff(self, DEFAULT_PLATE_WIDTH))
        elif self.plate_yaw_drag_coeff < 0:
            raise ValueError("plate_yaw_drag_coeff must be non-negative")

    @property
    def J(self) -> np.ndarray:
        return np.array(self.inertia_diag)

    @property
    def D(self) -> np.ndarray:
        return np.array(self.drag_matrix_diag)

    @property
    def gravity_vector(self) -> np.ndarray:
        return np.array([0.0, 0.0, -self.gravity])

    def replace(self, **changes) -> "VehicleParams":
        return dataclasses.replace(self, **changes)

    def with_plate(self, width_mm: int) -> "VehicleParams":
        """Copy with the yaw drag calibrated for the given plate width."""
        return self.replace(plate_yaw_drag_coeff=calibrated_plate_coeff(self, width_mm))


@dataclass(frozen=True)
class RotorCommand:
    """Per-rotor thrusts [N]; ``clamped`` records whether saturation was hit."""

    thrusts: np.ndarray = field(default_factory=lambda: np.zeros(3))
    clamped: bool = False

    @classmethod
    def bounded(cls, thrusts, params: VehicleParams) -> "RotorCommand":
        u = np.asarray(thrusts, dtype=float)
        if u.shape != (3,):
            raise ValueError("a rotor command has exactly 3 thrusts")
        u = np.where(np.isnan(u), params.rotor_thrust_min, u)
        c = np.clip(u, params.rotor_thrust_min, params.rotor_thrust_max)
        return cls(c, bool(np.any(c != u)))


def allocation_matrix(params: VehicleParams) -> np.ndarray:
    """4x3 map from rotor thrusts to (T, tau_x, tau_y, tau_z)."""
    rx1, rx2 = params.arm_rx
    ry0, ry1, ry2 = params.arm_ry
    ky = params.counter_torque_coeff
    return np.array(
        [
            [1.0, 1.0, 1.0],
            [0.0, rx1, -rx2],
            [-ry0, ry1, ry2],
            [-ky, ky, ky],
        ]
    )


def wrench_from_thrusts(params: VehicleParams, cmd) -> tuple[float, np.ndarray]:
    """Total thrust and body torque produced by a rotor command."""
    u = cmd.thrusts if isinstance(cmd, RotorCommand) else np.asarray(cmd, dtype=float)
    w = allocation_matrix(params) @ u
    return float(w[0]), w[1:]


def thrust_from_rpm(params: VehicleParams, rpm):
    rpm = np.asarray(rpm, dtype=float)
    if np.any(rpm < 0):
        raise ValueError("rotor speed must be non-negative")
    return params.thrust_coeff * rpm**2


def rpm_from_thrust(params: VehicleParams, thrust):
    thrust = np.asarray(thrust, dtype=float)
    if np.any(thrust < 0):
        raise ValueError("rotor thrust must be non-negative")
    return np.sqrt(thrust / params.thrust_coeff)


def hover_equilibrium(params: VehicleParams) -> tuple[RotorCommand, float]:
    """Thrusts giving T = m g with zero roll/pitch torque, plus the leftover yaw torque."""
    M = allocation_matrix(params)
    A = M[:3]
    if abs(np.linalg.det(A)) < 1e-12:
        raise ValueError("rotor geometry is singular: roll/pitch/thrust rows are dependent")
    u = np.linalg.solve(A, np.array([params.mass * params.gravity, 0.0, 0.0]))
    return RotorCommand(u), float(M[3] @ u)


def equilibrium_spin_rate(params: VehicleParams, plate_coeff: float) -> float:
    """Yaw rate at which quadratic plate drag cancels the hover yaw torque."""
    if not plate_coeff > 0:
        raise ValueError(f"plate coefficient must be positive, got {plate_coeff}")
    _, tau_z = hover_equilibrium(params)
    return float(np.sign(tau_z) * np.sqrt(abs(tau_z) / plate_coeff))


def calibrated_plate_coeff(params: VehicleParams, width_mm: int) -> float:
    """Quadratic yaw drag coefficient reproducing the measured spin rate of a plate width."""
    try:
        r_eq = PLATE_YAW_RATES[int(width_mm)]
    except KeyError:
        raise ValueError(f"no measured yaw rate for {width_mm} mm plates; known: {sorted(PLATE_YAW_RATES)}") from None
    _, tau_z = hover_equilibrium(params)
    return abs(tau_z) / r_eq**2


def pack(params: VehicleParams, *, rot_damping: bool = True, plate_drag: bool = True) -> np.ndarray:
    """Flatten parameters for the compiled kernels (layout in ``PRM_*``)."""
    prm = np.zeros(PRM_SIZE)
    prm[PRM_MASS] = params.mass
    prm[PRM_J:PRM_J + 3] = params.inertia_diag
    prm[PRM_D:PRM_D + 3] = params.drag_matrix_diag
    prm[PRM_G] = params.gravity
    prm[PRM_CXY] = params.rot_damping_xy if rot_damping else 0.0
    prm[PRM_CPLATE] = params.plate_yaw_drag_coeff if plate_drag else 0.0
    prm[PRM_M:PRM_M + 12] = allocation_matrix(params).ravel()
    prm[PRM_UMIN] = params.rotor_thrust_min
    prm[PRM_UMAX] = params.rotor_thrust_max
    return prm
