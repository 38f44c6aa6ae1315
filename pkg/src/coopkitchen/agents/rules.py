"""Deterministic rule oracle behind the monitor and both adapters.

The oracle answers the same three questions an LLM backend would, and it
answers them as text in the structured format the prompts request, so the
whole decision pipeline (render, complete, parse) is exercised even in
rule mode and transcripts stay replayable.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from ..env import (
    GameState,
    ItemKind,
    PotPhase,
    Subtask,
    SubtaskKind,
)
from ..grid import Cell, Facing, Tile
from ..planning import (
    Path,
    Unreachable,
    detect_conflict,
    greedy_path,
    path_through_cell_conflict,
    solo_path,
)

INGREDIENT_OF = {
    SubtaskKind.PICKUP_ONION: ItemKind.ONION,
    SubtaskKind.PICKUP_TOMATO: ItemKind.TOMATO,
}

PICKUP_KIND = {
    ItemKind.ONION: SubtaskKind.PICKUP_ONION,
    ItemKind.TOMATO: SubtaskKind.PICKUP_TOMATO,
    ItemKind.DISH: SubtaskKind.PICKUP_DISH,
}


def path_cost(state: GameState, agent_index: int, target: Cell) -> Optional[int]:
    """Action cost to interact with target; partner blocked, falling back to
    a partner-free route when walled in. None if truly unreachable."""
    try:
        return greedy_path(state, agent_index, target).cost
    except Unreachable:
        pass
    try:
        return solo_path(state.layout, state.agents[agent_index].pose, target).cost
    except Unreachable:
        return None


def nearest(state: GameState, agent_index: int, cells) -> Optional[Cell]:
    best = None
    for cell in cells:
        cost = path_cost(state, agent_index, cell)
        if cost is None:
            continue
        key = (cost, cell)
        if best is None or key < best:
            best = key
    return best[1] if best else None


def _target_recipe(state: GameState):
    rid = state.orders[0] if state.orders else 0
    return rid, state.config.recipes[rid]


def _needed_ingredients(state: GameState, pot_contents) -> Counter:
    _, recipe = _target_recipe(state)
    need = Counter(recipe.ingredients)
    need.subtract(Counter(pot_contents))
    return +need


def _fillable_pots(state: GameState):
    _, recipe = _target_recipe(state)
    want = Counter(recipe.ingredients)
    for cell, pot in state.pots:
        if pot.phase is not PotPhase.IDLE or len(pot.contents) >= 3:
            continue
        if not (Counter(pot.contents) - want):  # contents still fit the recipe
            yield cell, pot


@dataclass(frozen=True)
class PartnerDiscount:
    """What the partner is already taking care of."""

    ingredients: Counter
    dish_covered: bool = False

    @classmethod
    def none(cls) -> "PartnerDiscount":
        return cls(ingredients=Counter())


def next_subtask(
    state: GameState,
    agent_index: int,
    discount: Optional[PartnerDiscount] = None,
    allow_staging: bool = False,
) -> Optional[Subtask]:
    """Recipe state machine: fill pot, start cooking, fetch dish, plate,
    deliver. `discount` subtracts work the partner is already doing so both
    agents do not chase the same goal; `allow_staging` lets an otherwise
    idle agent stockpile an ingredient on a counter for the next order."""
    me = state.agents[agent_index]
    held = me.held
    discount = discount or PartnerDiscount.none()
    in_flight = discount.ingredients

    if held is not None:
        if held.kind is ItemKind.SOUP:
            cell = nearest(state, agent_index, state.layout.cells_of(Tile.SERVING))
            return Subtask(SubtaskKind.DELIVER_SOUP, cell) if cell else None
        if held.kind is ItemKind.DISH:
            # wait at any pot that has or will have soup rather than thrash
            ready = [c for c, p in state.pots if p.phase is PotPhase.READY]
            brewing = [c for c, p in state.pots if p.phase is PotPhase.COOKING or p.contents]
            cell = nearest(state, agent_index, ready) or nearest(state, agent_index, brewing)
            if cell:
                return Subtask(SubtaskKind.PLATE_SOUP, cell)
            return _place_on_counter(state, agent_index)
        # holding an ingredient
        pots = []
        for cell, pot in _fillable_pots(state):
            need = _needed_ingredients(state, pot.contents)
            need.subtract(in_flight)
            if (+need)[held.kind] > 0:
                pots.append(cell)
        cell = nearest(state, agent_index, pots)
        if cell:
            return Subtask(SubtaskKind.POT_INGREDIENT, cell)
        return _place_on_counter(state, agent_index)

    # empty-handed: start a full pot cooking first
    startable = [
        c for c, p in state.pots
        if p.phase is PotPhase.IDLE and p.contents and not _needed_ingredients(state, p.contents)
    ]
    cell = nearest(state, agent_index, startable)
    if cell:
        return Subtask(SubtaskKind.START_COOKING, cell)

    # a soup under way (or completed by the partner's delivery in flight)
    # means a dish will be needed
    brewing = [c for c, p in state.pots if p.phase in (PotPhase.READY, PotPhase.COOKING)]
    nearly_done = [
        c for c, p in _fillable_pots(state)
        if (p.contents or in_flight) and not +(_needed_ingredients(state, p.contents) - in_flight)
    ]
    if (brewing or nearly_done) and not discount.dish_covered:
        cell = nearest(state, agent_index, _dish_sources(state))
        if cell:
            return Subtask(SubtaskKind.PICKUP_DISH, cell)

    # otherwise fetch the next missing ingredient for the nearest fillable pot
    for pot_cell, pot in sorted(_fillable_pots(state), key=lambda cp: (path_cost(state, agent_index, cp[0]) or 10 ** 6, cp[0])):
        need = _needed_ingredients(state, pot.contents)
        need.subtract(in_flight)
        need = +need
        sources = []
        for kind in (ItemKind.ONION, ItemKind.TOMATO):
            if need[kind] > 0:
                sources.extend(_ingredient_sources(state, kind))
        cell = nearest(state, agent_index, [c for c, _ in sources])
        if cell:
            kind = dict(sources)[cell]
            return Subtask(PICKUP_KIND[kind], cell)

    if allow_staging:
        # stockpile one ingredient of the standing order for the next pot
        _, recipe = _target_recipe(state)
        sources = []
        for kind in sorted(set(recipe.ingredients), key=lambda k: k.value):
            sources.extend(_ingredient_sources(state, kind))
        cell = nearest(state, agent_index, [c for c, _ in sources])
        if cell:
            kind = dict(sources)[cell]
            return Subtask(PICKUP_KIND[kind], cell)
    return None


def _ingredient_sources(state: GameState, kind: ItemKind):
    tile = Tile.ONION_DISPENSER if kind is ItemKind.ONION else Tile.TOMATO_DISPENSER
    out = [(c, kind) for c in state.layout.cells_of(tile)]
    out += [(c, kind) for c, item in state.counters if item.kind is kind]
    return out


def _dish_sources(state: GameState):
    cells = list(state.layout.cells_of(Tile.DISH_DISPENSER))
    cells += [c for c, item in state.counters if item.kind is ItemKind.DISH]
    return cells


def _place_on_counter(state: GameState, agent_index: int) -> Optional[Subtask]:
    empty = [c for c in state.layout.cells_of(Tile.COUNTER) if state.counter_item(c) is None]
    cell = nearest(state, agent_index, empty)
    return Subtask(SubtaskKind.PLACE_ON_COUNTER, cell) if cell else None


def infer_partner_subtask(state: GameState, partner_index: int) -> Optional[Subtask]:
    """Nearest-consistent-facility guess at what the partner is doing, from
    its held item, facing ray, distances, and what the recipe needs now."""
    partner = state.agents[partner_index]
    held = partner.held
    if held is None:
        brewing = any(p.phase in (PotPhase.READY, PotPhase.COOKING) for _, p in state.pots)
        if brewing:
            candidates = [(Subtask(SubtaskKind.PICKUP_DISH, c), c) for c in _dish_sources(state)]
        else:
            needed = Counter()
            for _, pot in _fillable_pots(state):
                needed.update(_needed_ingredients(state, pot.contents))
            candidates = []
            for kind in (ItemKind.ONION, ItemKind.TOMATO):
                if needed[kind] > 0:
                    candidates += [(Subtask(PICKUP_KIND[kind], c), c) for c, _ in _ingredient_sources(state, kind)]
        if not candidates:
            candidates = [(Subtask(PICKUP_KIND[k], c), c) for k, cs in (
                (ItemKind.ONION, state.layout.cells_of(Tile.ONION_DISPENSER)),
                (ItemKind.TOMATO, state.layout.cells_of(Tile.TOMATO_DISPENSER)),
                (ItemKind.DISH, state.layout.cells_of(Tile.DISH_DISPENSER)),
            ) for c in cs]
    elif held.kind is ItemKind.SOUP:
        candidates = [(Subtask(SubtaskKind.DELIVER_SOUP, c), c) for c in state.layout.cells_of(Tile.SERVING)]
    elif held.kind is ItemKind.DISH:
        pots = [c for c, p in state.pots if p.phase in (PotPhase.READY, PotPhase.COOKING) or p.contents]
        pots = pots or [c for c, _ in state.pots]
        candidates = [(Subtask(SubtaskKind.PLATE_SOUP, c), c) for c in pots]
    else:
        pots = [c for c, p in state.pots if p.phase is PotPhase.IDLE and len(p.contents) < 3]
        candidates = [(Subtask(SubtaskKind.POT_INGREDIENT, c), c) for c in pots]

    best = None
    for subtask, cell in candidates:
        cost = _phantom_cost(state, partner_index, cell)
        if cost is None:
            continue
        key = (not _on_facing_ray(partner.pose.cell, partner.pose.facing, cell), cost, cell)
        if best is None or key < best[0]:
            best = (key, subtask)
    return best[1] if best else None


def _phantom_cost(state: GameState, agent_index: int, target: Cell) -> Optional[int]:
    try:
        return solo_path(state.layout, state.agents[agent_index].pose, target).cost
    except Unreachable:
        return None


def _on_facing_ray(cell: Cell, facing: Facing, target: Cell) -> bool:
    dx, dy = facing.delta
    tx, ty = target[0] - cell[0], target[1] - cell[1]
    if dx == 0:
        return tx == 0 and ty * dy > 0
    return ty == 0 and tx * dx > 0


def partner_discount(state: GameState, partner_index: int, inferred: Optional[Subtask]) -> PartnerDiscount:
    """Work the partner is visibly doing or about to do."""
    held = state.agents[partner_index].held
    ingredients: Counter = Counter()
    dish_covered = False
    if held is not None and held.kind in (ItemKind.ONION, ItemKind.TOMATO):
        ingredients[held.kind] += 1
    elif held is not None and held.kind is ItemKind.DISH:
        dish_covered = True
    elif inferred is not None and inferred.kind in INGREDIENT_OF:
        ingredients[INGREDIENT_OF[inferred.kind]] += 1
    elif inferred is not None and inferred.kind is SubtaskKind.PICKUP_DISH:
        dish_covered = True
    return PartnerDiscount(ingredients=ingredients, dish_covered=dish_covered)


def subtask_feasible(state: GameState, agent_index: int, subtask: Subtask) -> bool:
    """Preconditions of the subtask still hold for this agent."""
    held = state.agents[agent_index].held
    kind = subtask.kind
    cell = subtask.target_cell
    if kind in (SubtaskKind.PICKUP_ONION, SubtaskKind.PICKUP_TOMATO, SubtaskKind.PICKUP_DISH):
        if held is not None:
            return False
        tile = state.layout.tile(cell)
        if tile is Tile.COUNTER:
            item = state.counter_item(cell)
            return item is not None and PICKUP_KIND.get(item.kind) is kind
        wanted = {
            SubtaskKind.PICKUP_ONION: Tile.ONION_DISPENSER,
            SubtaskKind.PICKUP_TOMATO: Tile.TOMATO_DISPENSER,
            SubtaskKind.PICKUP_DISH: Tile.DISH_DISPENSER,
        }[kind]
        return tile is wanted
    if kind is SubtaskKind.POT_INGREDIENT:
        if held is None or held.kind not in (ItemKind.ONION, ItemKind.TOMATO):
            return False
        pot = state.pot(cell)
        return pot.phase is PotPhase.IDLE and len(pot.contents) < 3
    if kind is SubtaskKind.START_COOKING:
        if held is not None:
            return False
        pot = state.pot(cell)
        return pot.phase is PotPhase.IDLE and bool(pot.contents) and not _needed_ingredients(state, pot.contents)
    if kind is SubtaskKind.PLATE_SOUP:
        if held is None or held.kind is not ItemKind.DISH:
            return False
        pot = state.pot(cell)
        return pot.phase in (PotPhase.READY, PotPhase.COOKING) or bool(pot.contents)
    if kind is SubtaskKind.DELIVER_SOUP:
        return held is not None and held.kind is ItemKind.SOUP
    if kind is SubtaskKind.PLACE_ON_COUNTER:
        return held is not None and state.counter_item(cell) is None
    return False


EXCLUSIVE_KINDS = {
    SubtaskKind.POT_INGREDIENT,
    SubtaskKind.START_COOKING,
    SubtaskKind.PLATE_SOUP,
    SubtaskKind.PICKUP_DISH,
}


def duplicate_subtasks(state: GameState, mine: Subtask, theirs: Optional[Subtask]) -> bool:
    """Both agents chasing one goal the world only needs once."""
    if theirs is None or mine.kind is not theirs.kind:
        return False
    if mine.kind is SubtaskKind.POT_INGREDIENT and mine.target_cell == theirs.target_cell:
        need = _needed_ingredients(state, state.pot(mine.target_cell).contents)
        return sum(need.values()) < 2
    if mine.kind in (SubtaskKind.PLATE_SOUP, SubtaskKind.START_COOKING):
        return mine.target_cell == theirs.target_cell
    if mine.kind is SubtaskKind.PICKUP_DISH:
        brewing = [c for c, p in state.pots if p.phase in (PotPhase.READY, PotPhase.COOKING)]
        return len(brewing) < 2
    return False


@dataclass(frozen=True)
class MonitorContext:
    """Everything the monitor rule needs for one check."""

    subtask: Optional[Subtask]
    self_path: Optional[Path]
    partner_subtask: Optional[Subtask]
    partner_path: Optional[Path]
    horizon: int = 10  # conflict lookahead in ticks
    mute_duplicate: bool = False  # set after the adapter confirmed the overlap is fine


def monitor_adapt_rule(state: GameState, agent_index: int, ctx: MonitorContext) -> tuple[bool, Optional[str], str]:
    """Returns (follow_greedy, level, analysis)."""
    if ctx.subtask is None:
        return True, None, "No active subtask; nothing to adapt."
    if not subtask_feasible(state, agent_index, ctx.subtask):
        return False, "subtask", f"Current subtask {ctx.subtask.label()} is no longer feasible."
    if not ctx.mute_duplicate and duplicate_subtasks(state, ctx.subtask, ctx.partner_subtask):
        return False, "subtask", "Both chefs are chasing the same goal; one should switch."
    if ctx.self_path is not None and ctx.partner_path is not None:
        conflict = detect_conflict(ctx.self_path, ctx.partner_path, ctx.horizon)
        if conflict is not None:
            cells = ", ".join(str(c) for c, _ in conflict.overlap)
            return False, "path", f"Planned paths collide ({conflict.kind.value}) at {cells}."
    if ctx.self_path is not None:
        partner_cell = state.agents[1 - agent_index].cell
        if path_through_cell_conflict(ctx.self_path, partner_cell, ctx.horizon) is not None:
            return False, "path", "The human is standing on my planned route."
    return True, None, "Paths are clear and subtasks are distinct."


def monitor_revert_rule(state: GameState, agent_index: int, ctx: MonitorContext) -> tuple[bool, str]:
    """Returns (follow_greedy, analysis): true once the conflict has cleared."""
    follow, level, analysis = monitor_adapt_rule(state, agent_index, ctx)
    if follow:
        return True, "The way is clear; switch back to the greedy path."
    return False, f"Keep adapting: {analysis}"
