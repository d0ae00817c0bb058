"""Simulator and NMPC + INDI control stack for a self-rotating tri-rotor."""
from ._jit import NUMBA_ENABLED
from .vehicle import VehicleParams, RotorCommand

__all__ = ["NUMBA_ENABLED", "VehicleParams", "RotorCommand"]
__version__ = "0.1.0"
