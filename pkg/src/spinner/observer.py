"""Estimate of the unmodelled world-frame acceleration acting on the vehicle.

A second-order extended-state observer runs on the velocity channel: it
integrates the prediction model's translational acceleration for the applied
thrusts plus the current disturbance estimate, and corrects both from the
measured velocity. Poles sit at ``-2 pi f`` (critically damped). The estimate
is handed to the NMPC as a constant acceleration over its horizon, which
removes the steady offset a constant force such as wind would leave.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import translational_accel
from .vehicle import VehicleParams


@dataclass(frozen=True)
class ObserverConfig:
    enabled: bool = True
    bandwidth_hz: float = 1.0

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth_hz must be positive")


class ForceObserver:
    def __init__(self, params: VehicleParams, config: ObserverConfig = ObserverConfig(), dt: float = 0.005):
        self.params = params
        self.config = config
        self.dt = dt
        w = 2.0 * math.pi * config.bandwidth_hz
        self.l1 = 2.0 * w * dt
        self.l2 = w * w * dt
        self.reset()

    def reset(self):
        self.v_hat = None
        self.estimate = np.zeros(3)

    def correct(self, state) -> np.ndarray:
        """Fold in a new velocity measurement; returns the disturbance estimate."""
        if not self.config.enabled:
            return self.estimate
        v = np.asarray(state, float)[7:10]
        if self.v_hat is None:
            self.v_hat = v.copy()
        err = v - self.v_hat
        self.v_hat = self.v_hat + self.l1 * err
        self.estimate = self.estimate + self.l2 * err
        return self.estimate

    def predict(self, state, thrusts) -> None:
        """Advance the velocity estimate across one interval with ``thrusts`` held."""
        if not self.config.enabled or self.v_hat is None:
            return
        a_model = translational_accel(self.params, state, float(np.sum(thrusts)))
        self.v_hat = self.v_hat + self.dt * (a_model + self.estimate)
