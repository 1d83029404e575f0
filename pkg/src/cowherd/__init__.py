"""Deterministic cow-herding match simulator with a leader-coordinated agent team."""

from cowherd.config import SimConfig
from cowherd.world import Action, GridMap, MapError, WorldState, load_map, new_world, step

__all__ = [
    "Action",
    "GridMap",
    "MapError",
    "SimConfig",
    "WorldState",
    "load_map",
    "new_world",
    "step",
]

__version__ = "0.1.0"
