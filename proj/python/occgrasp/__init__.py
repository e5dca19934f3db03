"""Grasp feasibility and LCB abstention for occluded fruit point clouds."""

from ._occgrasp import (
    OccgraspError,
    decide,
    default_config,
    epsilon_hull,
    generate_strawberry,
    lcb_stats,
    occlude,
    run_sweep,
    z_schedule,
)

__all__ = [
    "OccgraspError",
    "decide",
    "default_config",
    "epsilon_hull",
    "generate_strawberry",
    "lcb_stats",
    "occlude",
    "run_sweep",
    "z_schedule",
]
