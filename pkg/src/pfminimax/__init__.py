"""Projection-free single-loop methods for constrained minimax problems."""

from .core import (
    ArgumentError,
    CapabilityError,
    ConfigurationError,
    DomainError,
    FeasibleSet,
    NumericalError,
    ParseError,
    PayoffProblem,
    UnsupportedRegimeError,
    make_rng,
)
from .smoothing import SmoothingState, StepSchedule
from .solvers import Budget, RegimePreset, Schedule, Trace, preset, run

__all__ = [
    "ArgumentError",
    "Budget",
    "CapabilityError",
    "ConfigurationError",
    "DomainError",
    "FeasibleSet",
    "NumericalError",
    "ParseError",
    "PayoffProblem",
    "RegimePreset",
    "Schedule",
    "SmoothingState",
    "StepSchedule",
    "Trace",
    "UnsupportedRegimeError",
    "make_rng",
    "preset",
    "run",
]

__version__ = "0.1.0"
