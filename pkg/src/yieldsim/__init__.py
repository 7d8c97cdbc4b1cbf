"""Closed-loop interactive traffic simulation with explicit pass/yield
conflict resolution between agents."""

from .engine import Engine, EpisodeResult, ResolutionPolicy, run_episode
from .geometry import KERNEL_BACKEND, OrientedBox, PathPoint
from .relation import OverrideRegistry, RelationLabel
from .scenario import Scenario, SimConfig, Trajectory, load_scenario, save_scenario

__version__ = "0.1.0"

__all__ = [
    "Engine",
    "EpisodeResult",
    "ResolutionPolicy",
    "run_episode",
    "KERNEL_BACKEND",
    "OrientedBox",
    "PathPoint",
    "OverrideRegistry",
    "RelationLabel",
    "Scenario",
    "SimConfig",
    "Trajectory",
    "load_scenario",
    "save_scenario",
    "__version__",
]
