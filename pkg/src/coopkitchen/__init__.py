"""Two-agent kitchen coordination simulator, benchmark harness, and live server."""

from .grid import Cell, Facing, Layout, Pose, Tile, parse_layout
from .env import (
    AtomicAction,
    EpisodeConfig,
    GameState,
    Item,
    ItemKind,
    Recipe,
    Subtask,
    SubtaskKind,
    default_config,
    initial_state,
    legal_interactions,
    step,
)

__all__ = [
    "AtomicAction",
    "Cell",
    "EpisodeConfig",
    "Facing",
    "GameState",
    "Item",
    "ItemKind",
    "Layout",
    "Pose",
    "Recipe",
    "Subtask",
    "SubtaskKind",
    "Tile",
    "default_config",
    "initial_state",
    "legal_interactions",
    "parse_layout",
    "step",
]
