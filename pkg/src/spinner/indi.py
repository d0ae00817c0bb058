"""Incremental nonlinear dynamic inversion for the body torques.

Rates, rate differences and the torque produced by the previous command all
pass through the same second-order low-pass, so the disturbance estimate
compares signals with identical lag.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import drag_torque
from .vehicle import RotorCommand, VehicleParams, allocation_matrix


@dataclass(frozen=True)
class IndiConfig:
    cutoff_hz: float = 12.0
    rate_gain: tuple = (20.0, 20.0, 5.0)
    enabled: bool = True
    warmup_ticks: int = 2

    def __post_init__(self):
        object.__setattr__(self, "rate_gain", tuple(float(v) for v in self.rate_gain))
        if not self.cutoff_hz > 0:
            raise ValueError("cutoff_hz must be positive")


def lowpass_alpha(cutoff_hz: float, dt: float) -> float:
    """Pole of each first-order section of the critically damped filter."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return math.exp(-2.0 * math.pi * cutoff_hz * dt)


def lowpass_step(memory: np.ndarray, sample, dt: float, cutoff_hz: float = 12.0) -> np.ndarray:
    """Advance a critically damped 2nd-order low-pass by one sample.

    ``memory`` has shape (2, n): the outputs of the two cascaded first-order
    sections. Updated in place; the second row is the filtered output.
    """
    a = lowpass_alpha(cutoff_hz, dt)
    memory[0] = a * memory[0] + (1.0 - a) * np.asarray(sample, float)
    memory[1] = a * memory[1] + (1.0 - a) * memory[0]
    return memory[1].copy()


class LowPass:
    """Vector-valued filter whose memory starts at the first sample."""

    def __init__(self, cutoff_hz: float, dt: float, size: int = 3):
        self.cutoff_hz = cutoff_hz
        self.dt = dt
        self.memory = np.zeros((2, size))
        self.ready = False

    def __call__(self, sample) -> np.ndarray:
        if not self.ready:
            self.memory[:] = sample
            self.ready = True
            return self.memory[1].copy()
        return lowpass_step(self.memory, sample, self.dt, self.cutoff_hz)

    @property
    def value(self) -> np.ndarray:
        return self.memory[1].copy()


@dataclass
class IndiState:
    cutoff_hz: float
    dt: float
    rate_filter: LowPass = field(init=False)
    accel_filter: LowPass = field(init=False)
    torque_filter: LowPass = field(init=False)
    last_rate: np.ndarray | None = None
    ticks: int = 0

    def __post_init__(self):
        self.rate_filter = LowPass(self.cutoff_hz, self.dt)
        self.accel_filter = LowPass(self.cutoff_hz, self.dt)
        self.torque_filter = LowPass(self.cutoff_hz, self.dt)

    @property
    def filt_rate(self) -> np.ndarray:
        return self.rate_filter.value

    @property
    def filt_rate_deriv(self) -> np.ndarray:
        return self.accel_filter.value

    @property
    def filt_torque(self) -> np.ndarray:
        return self.torque_filter.value

    @property
    def warm(self) -> bool:
        return self.accel_filter.ready

    def update(self, measured_rate, applied_torque) -> None:
        """Feed the current rate sample and the torque commanded over the last interval."""
        w = np.asarray(measured_rate, float)
        self.rate_filter(w)
        self.torque_filter(applied_torque)
        if self.last_rate is not None:
            self.accel_filter((w - self.last_rate) / self.dt)
        self.last_rate = w.copy()
        self.ticks += 1


def estimate_disturbance(params: VehicleParams, st: IndiState) -> np.ndarray:
    """Unmodelled body torque: what the filtered motion needs minus what the rotors gave."""
    J = params.J
    wf = st.filt_rate
    return -st.filt_torque + J * st.filt_rate_deriv + np.cross(wf, J * wf) + drag_torque(params, wf)


def incremental_torque(params: VehicleParams, st: IndiState, desired_rate_accel) -> np.ndarray:
    return st.filt_torque + params.J * (np.asarray(desired_rate_accel, float) - st.filt_rate_deriv)


def allocate(params: VehicleParams, total_thrust: float, torque, *, pinv=None) -> RotorCommand:
    """Least-squares rotor thrusts for a (T, tau) wrench, clamped to the rotor limits."""
    target = np.concatenate([[total_thrust], np.asarray(torque, float)])
    if pinv is None:
        pinv = np.linalg.pinv(allocation_matrix(params))
    u = pinv @ target
    return RotorCommand.bounded(u, params)


def model_rate_accel(params: VehicleParams, rate, thrusts) -> np.ndarray:
    """Body angular acceleration of the prediction model (no roll/pitch damping)."""
    w = np.asarray(rate, float)
    J = params.J
    tau = allocation_matrix(params)[1:] @ np.asarray(thrusts, float)
    plate = np.array([0.0, 0.0, params.plate_yaw_drag_coeff * abs(w[2]) * w[2]])
    return (tau - np.cross(w, J * w) - plate) / J


class IndiController:
    """Inner loop turning the NMPC plan into rotor thrusts at the control rate."""

    def __init__(self, params: VehicleParams, config: IndiConfig = IndiConfig(), dt: float = 0.005):
        self.params = params
        self.config = config
        self.dt = dt
        self.M = allocation_matrix(params)
        self.M_pinv = np.linalg.pinv(self.M)
        self.K = np.array(config.rate_gain)
        self.state = IndiState(config.cutoff_hz, dt)
        self.disturbance = np.zeros(3)

    def reset(self):
        self.state = IndiState(self.config.cutoff_hz, self.dt)
        self.disturbance = np.zeros(3)

    def tick(self, measured_rate, last_cmd, nmpc_out, elapsed: float = 0.0) -> RotorCommand:
        """One control tick.

        ``last_cmd`` is the thrust applied since the previous tick, ``nmpc_out``
        the latest NMPC solution and ``elapsed`` the time since it was computed.
        """
        last = getattr(last_cmd, "thrusts", last_cmd)
        self.state.update(measured_rate, self.M[1:] @ np.asarray(last, float))
        u_star = nmpc_out.inputs[0]
        if self.state.ticks <= self.config.warmup_ticks or not self.state.warm:
            return RotorCommand.bounded(u_star, self.params)
        self.disturbance = estimate_disturbance(self.params, self.state)

        X = nmpc_out.predicted_states
        s = min(elapsed / nmpc_out.step, 1.0)
        w_plan = (1.0 - s) * X[0, 10:13] + s * X[1, 10:13]
        w_dot_ff = model_rate_accel(self.params, w_plan, u_star)
        w_dot_d = self.K * (w_plan - np.asarray(measured_rate, float)) + w_dot_ff
        tau_d = incremental_torque(self.params, self.state, w_dot_d)
        return allocate(self.params, float(np.sum(u_star)), tau_d, pinv=self.M_pinv)
