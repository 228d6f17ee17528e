"""Configuration, experiment commands and the command-line interface."""

from .commands import cmd_generate, cmd_rate, cmd_run, cmd_sweep
from .config import ExperimentConfig, build_problem, build_schedule, load_config

__all__ = [
    "ExperimentConfig",
    "build_problem",
    "build_schedule",
    "cmd_generate",
    "cmd_rate",
    "cmd_run",
    "cmd_sweep",
    "load_config",
]
