"""Teaming-fluency scoring and solvability filtering for layout corpora.

A floor cell is *obstructed* when a partner frozen on it leaves the other
agent unable to finish any order alone: no connected floor region of the
remaining cells can face-adjacent-reach every facility class one recipe
needs. Fluency is the fraction of free cells that are not obstructed,
kept as an exact rational and rounded only for display.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .env import EpisodeConfig, ItemKind, default_config
from .grid import Cell, Layout, Tile
from .env import reachable_floor


class UnsolvableLayout(ValueError):
    def __init__(self, name: str):
        super().__init__(f"layout {name!r} cannot be completed even by a lone agent")
        self.name = name


DISPENSER_OF = {
    ItemKind.ONION: Tile.ONION_DISPENSER,
    ItemKind.TOMATO: Tile.TOMATO_DISPENSER,
}


def required_facility_sets(layout: Layout, config: Optional[EpisodeConfig] = None) -> list[set[Cell]]:
    """Per recipe, the facility-class cell groups a lone agent must reach.

    Each entry is a list of cell groups; reaching one cell of every group
    completes that recipe (ingredient dispensers, a pot, the dish
    dispenser, a serving tile).
    """
    config = config or default_config(layout)
    per_recipe = []
    for recipe in config.recipes:
        groups: list[tuple[Cell, ...]] = []
        for kind in sorted(set(recipe.ingredients), key=lambda k: k.value):
            groups.append(layout.cells_of(DISPENSER_OF[kind]))
        groups.append(layout.cells_of(Tile.POT))
        groups.append(layout.cells_of(Tile.DISH_DISPENSER))
        groups.append(layout.cells_of(Tile.SERVING))
        per_recipe.append(groups)
    return per_recipe


def is_solvable_solo(
    layout: Layout,
    blocked_cell: Optional[Cell] = None,
    config: Optional[EpisodeConfig] = None,
) -> bool:
    """True iff one agent can finish some order with `blocked_cell` frozen solid.

    The frozen partner is a hard obstacle. The agent may start anywhere, so
    solvability asks for one connected floor region (minus the blocked
    cell) adjacent to every facility class of at least one recipe.
    """
    blocked = {blocked_cell} if blocked_cell is not None else set()
    floors = [c for c in layout.floor_cells() if c not in blocked]
    per_recipe = required_facility_sets(layout, config)

    seen: set[Cell] = set()
    for origin in floors:
        if origin in seen:
            continue
        region = reachable_floor(layout, origin, blocked=blocked)
        seen |= region
        for groups in per_recipe:
            if all(any(n in region for cell in group for n in layout.adjacent_floor(cell)) for group in groups):
                return True
    return False


@dataclass(frozen=True)
class LayoutAnalysis:
    free_cells: int
    obstructed: frozenset[Cell]

    @property
    def collision_points(self) -> int:
        return len(self.obstructed)

    @property
    def fluency(self) -> Fraction:
        return Fraction(self.free_cells - self.collision_points, self.free_cells)

    @property
    def fluency_percent(self) -> float:
        return float(self.fluency * 100)

    def format_fluency(self) -> str:
        return f"{self.fluency_percent:.2f}%"


def analyze(layout: Layout, config: Optional[EpisodeConfig] = None) -> LayoutAnalysis:
    """Mark every floor cell whose frozen occupant strands the partner."""
    if not is_solvable_solo(layout, None, config):
        raise UnsolvableLayout(layout.name)
    floors = layout.floor_cells()
    obstructed = frozenset(c for c in floors if not is_solvable_solo(layout, c, config))
    return LayoutAnalysis(free_cells=len(floors), obstructed=obstructed)


def filter_corpus(
    layouts: Iterable[Layout],
    min_fluency: float = 0.0,
    max_fluency: float = 1.0,
    config: Optional[EpisodeConfig] = None,
) -> list[tuple[Layout, LayoutAnalysis]]:
    """Keep solvable layouts with fluency in [min, max], best first."""
    kept = []
    for layout in layouts:
        try:
            analysis = analyze(layout, config)
        except UnsolvableLayout:
            continue
        if min_fluency <= analysis.fluency <= max_fluency:
            kept.append((layout, analysis))
    kept.sort(key=lambda pair: (-pair[1].fluency, pair[0].name))
    return kept
