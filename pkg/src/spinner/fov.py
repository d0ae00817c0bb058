"""Field-of-view gained by spinning a tilted sensor about the body z-axis."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SensorMount:
    native_vertical_fov: float = 59.0  # deg
    tilt_angle: float = 15.0  # deg, mount pitch from horizontal
    native_horizontal_fov: float = 70.4  # deg

    def __post_init__(self):
        for name in ("native_vertical_fov", "native_horizontal_fov"):
            v = getattr(self, name)
            if not 0.0 < v < 180.0:
                raise ValueError(f"{name} must lie in (0, 180) deg, got {v}")
        if not 0.0 <= self.tilt_angle < 90.0:
            raise ValueError(f"tilt_angle must lie in [0, 90) deg, got {self.tilt_angle}")


def swept_vertical_fov(mount: SensorMount) -> float:
    """The tilted cone sweeps symmetrically about the spin axis."""
    return mount.native_vertical_fov + 2.0 * mount.tilt_angle


def swept_horizontal_fov(mount: SensorMount, spin_rate: float) -> float:
    return 360.0 if abs(spin_rate) > 0.0 else mount.native_horizontal_fov


def revisit_period(spin_rate: float) -> float:
    """Seconds per revolution, i.e. the worst-case refresh of any azimuth."""
    if spin_rate == 0.0:
        return math.inf
    return 2.0 * math.pi / abs(spin_rate)
