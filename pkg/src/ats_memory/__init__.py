"""Simulation and analysis of Autler-Townes-splitting optical memories."""

from .core import (
    ConstSegment,
    ControlSchedule,
    Direction,
    GaussianPulse,
    GaussSegment,
    MediumParams,
    SignalSpec,
    UnitMode,
    UnitSystem,
    pulse_area,
)
from .solver import FieldState, SimGrid, SimResult, TimedEvent, simulate

__all__ = [
    "ConstSegment", "ControlSchedule", "Direction", "FieldState", "GaussianPulse",
    "GaussSegment", "MediumParams", "SignalSpec", "SimGrid", "SimResult", "TimedEvent",
    "UnitMode", "UnitSystem", "pulse_area", "simulate",
]
