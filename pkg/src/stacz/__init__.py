"""Shortcut-to-adiabaticity controlled-Z gate for two coupled Xmon qutrits."""
from .core import DeviceParams, QutritOperator, QutritState, TWO_PI
from .synth import TrajectorySpec, Waveform, solve_theta_f, synthesize

__all__ = [
    "DeviceParams",
    "QutritOperator",
    "QutritState",
    "TWO_PI",
    "TrajectorySpec",
    "Waveform",
    "solve_theta_f",
    "synthesize",
]
__version__ = "0.1.0"
