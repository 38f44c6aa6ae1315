"""Deterministic tick-based dynamics for the two-chef kitchen world.

`step` is a pure function: it never mutates its input state and always
succeeds for any pair of atomic actions, reporting illegal interactions
as no-effect events instead of raising. Both agents act simultaneously;
interactions are resolved in agent-index order after movement.
"""

from __future__ import annotations

import enum
import hashlib
import json
from collections import Counter, deque
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .grid import Cell, Facing, Layout, Pose, Tile, shift


class AtomicAction(enum.Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"
    STAY = "stay"
    INTERACT = "interact"


MOVES = {
    AtomicAction.UP: Facing.UP,
    AtomicAction.DOWN: Facing.DOWN,
    AtomicAction.LEFT: Facing.LEFT,
    AtomicAction.RIGHT: Facing.RIGHT,
}

class ItemKind(enum.Enum):
    ONION = "onion"
    TOMATO = "tomato"
    DISH = "dish"
    SOUP = "soup"


INGREDIENTS = (ItemKind.ONION, ItemKind.TOMATO)

DISPENSER_ITEM = {
    Tile.ONION_DISPENSER: ItemKind.ONION,
    Tile.TOMATO_DISPENSER: ItemKind.TOMATO,
    Tile.DISH_DISPENSER: ItemKind.DISH,
}


@dataclass(frozen=True)
class Item:
    kind: ItemKind
    recipe_id: Optional[int] = None  # set only for soups

    def label(self) -> str:
        if self.kind is ItemKind.SOUP:
            return f"soup[{self.recipe_id}]"
        return self.kind.value


@dataclass(frozen=True)
class Recipe:
    """A cookable order: an ingredient multiset, cook duration, and reward."""

    ingredients: tuple[ItemKind, ...]
    cook_ticks: int = 20
    reward: int = 20

    def __post_init__(self):
        if not 1 <= len(self.ingredients) <= 3:
            raise ValueError("recipe needs 1..3 ingredients")
        object.__setattr__(self, "ingredients", tuple(sorted(self.ingredients, key=lambda k: k.value)))

    def matches(self, contents: tuple[ItemKind, ...]) -> bool:
        return Counter(self.ingredients) == Counter(contents)


class PotPhase(enum.Enum):
    IDLE = "idle"
    COOKING = "cooking"
    READY = "ready"


@dataclass(frozen=True)
class PotState:
    contents: tuple[ItemKind, ...] = ()
    phase: PotPhase = PotPhase.IDLE
    ticks_remaining: int = 0
    recipe_id: Optional[int] = None

    def with_added(self, kind: ItemKind) -> "PotState":
        contents = tuple(sorted(self.contents + (kind,), key=lambda k: k.value))
        return PotState(contents=contents)


@dataclass(frozen=True)
class EpisodeConfig:
    """Recipes, the standing order list, and the episode horizon."""

    recipes: tuple[Recipe, ...]
    orders: tuple[int, ...]
    repeat_orders: bool = True
    horizon: int = 400

    def __post_init__(self):
        for rid in self.orders:
            if not 0 <= rid < len(self.recipes):
                raise ValueError(f"order references unknown recipe {rid}")


def default_config(layout: Layout, horizon: int = 400) -> EpisodeConfig:
    """Single standing order of three of the layout's preferred ingredient."""
    if layout.cells_of(Tile.ONION_DISPENSER):
        kind = ItemKind.ONION
    else:
        kind = ItemKind.TOMATO
    recipe = Recipe(ingredients=(kind, kind, kind), cook_ticks=20, reward=20)
    return EpisodeConfig(recipes=(recipe,), orders=(0,), repeat_orders=True, horizon=horizon)


def config_to_dict(config: EpisodeConfig) -> dict:
    return {
        "recipes": [
            {
                "ingredients": [k.value for k in r.ingredients],
                "cook_ticks": r.cook_ticks,
                "reward": r.reward,
            }
            for r in config.recipes
        ],
        "orders": list(config.orders),
        "repeat_orders": config.repeat_orders,
        "horizon": config.horizon,
    }


def config_from_dict(data: dict) -> EpisodeConfig:
    recipes = tuple(
        Recipe(
            ingredients=tuple(ItemKind(k) for k in r["ingredients"]),
            cook_ticks=int(r.get("cook_ticks", 20)),
            reward=int(r.get("reward", 20)),
        )
        for r in data["recipes"]
    )
    return EpisodeConfig(
        recipes=recipes,
        orders=tuple(int(i) for i in data["orders"]),
        repeat_orders=bool(data.get("repeat_orders", True)),
        horizon=int(data.get("horizon", 400)),
    )


@dataclass(frozen=True)
class AgentState:
    pose: Pose
    held: Optional[Item] = None

    @property
    def cell(self) -> Cell:
        return self.pose.cell


@dataclass(frozen=True)
class GameState:
    """Full dynamic snapshot of one episode at a given tick."""

    layout: Layout
    config: EpisodeConfig
    tick: int
    agents: tuple[AgentState, AgentState]
    pots: tuple[tuple[Cell, PotState], ...]  # sorted by cell
    counters: tuple[tuple[Cell, Item], ...]  # sorted by cell, occupied counters only
    orders: tuple[int, ...]
    score: int

    def pot(self, cell: Cell) -> PotState:
        for c, p in self.pots:
            if c == cell:
                return p
        raise KeyError(cell)

    def counter_item(self, cell: Cell) -> Optional[Item]:
        for c, item in self.counters:
            if c == cell:
                return item
        return None

    def other(self, agent_index: int) -> int:
        return 1 - agent_index

    def to_dict(self) -> dict:
        return {
            "layout": self.layout.name,
            "tick": self.tick,
            "agents": [
                {
                    "cell": list(a.pose.cell),
                    "facing": a.pose.facing.name.lower(),
                    "held": a.held.label() if a.held else None,
                }
                for a in self.agents
            ],
            "pots": [
                {
                    "cell": list(c),
                    "contents": [k.value for k in p.contents],
                    "phase": p.phase.value,
                    "ticks_remaining": p.ticks_remaining,
                    "recipe_id": p.recipe_id,
                }
                for c, p in self.pots
            ],
            "counters": [{"cell": list(c), "item": i.label()} for c, i in self.counters],
            "orders": list(self.orders),
            "score": self.score,
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


class EventKind(enum.Enum):
    BLOCKED = "blocked"
    PICKUP = "pickup"
    PLACE = "place"
    POT_ADD = "pot_add"
    COOK_START = "cook_start"
    PLATE = "plate"
    DELIVER = "deliver"
    NO_EFFECT = "no_effect"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    agent: int
    cell: Optional[Cell] = None
    item: Optional[Item] = None
    recipe_id: Optional[int] = None
    reward: int = 0


def initial_state(layout: Layout, config: Optional[EpisodeConfig] = None) -> GameState:
    config = config or default_config(layout)
    pots = tuple((c, PotState()) for c in layout.cells_of(Tile.POT))
    return GameState(
        layout=layout,
        config=config,
        tick=0,
        agents=(AgentState(layout.starts[0]), AgentState(layout.starts[1])),
        pots=pots,
        counters=(),
        orders=tuple(config.orders),
        score=0,
    )


def _resolve_moves(layout: Layout, cells: list[Cell], targets: list[Cell]) -> list[Cell]:
    """Simultaneous move resolution: same-cell contention and swaps cancel
    both moves; a move into a cell occupied by a non-moving agent is blocked."""
    final = list(targets)
    if final[0] == final[1]:
        return list(cells)
    if final[0] == cells[1] and final[1] == cells[0]:
        return list(cells)
    for i, j in ((0, 1), (1, 0)):
        if final[i] == cells[j] and final[j] == cells[j]:
            final[i] = cells[i]
    return final


def step(state: GameState, actions: tuple[AtomicAction, AtomicAction]) -> tuple[GameState, list[Event]]:
    """Advance one tick. Total over all 36 joint actions from any valid state."""
    layout = state.layout
    events: list[Event] = []

    # Movement: rotate facing first, then attempt the displacement.
    cells = [a.pose.cell for a in state.agents]
    facings = [a.pose.facing for a in state.agents]
    targets = list(cells)
    for i, action in enumerate(actions):
        if action in MOVES:
            facings[i] = MOVES[action]
            dest = shift(cells[i], facings[i])
            if layout.is_floor(dest):
                targets[i] = dest

    final = _resolve_moves(layout, cells, targets)
    for i, action in enumerate(actions):
        if action in MOVES and final[i] == cells[i]:
            events.append(Event(EventKind.BLOCKED, agent=i, cell=shift(cells[i], facings[i])))

    agents = [
        replace(state.agents[i], pose=Pose(final[i], facings[i]))
        for i in range(2)
    ]

    pots = dict(state.pots)
    counters = dict(state.counters)
    orders = list(state.orders)
    score = state.score

    # Interactions, agent 0 first; each sees the other's already-applied effect.
    for i, action in enumerate(actions):
        if action is not AtomicAction.INTERACT:
            continue
        agent = agents[i]
        faced = agent.pose.faced_cell
        if not layout.in_bounds(faced):
            events.append(Event(EventKind.NO_EFFECT, agent=i, cell=faced))
            continue
        tile = layout.tile(faced)
        held = agent.held

        if tile in DISPENSER_ITEM and held is None:
            item = Item(DISPENSER_ITEM[tile])
            agents[i] = replace(agent, held=item)
            events.append(Event(EventKind.PICKUP, agent=i, cell=faced, item=item))
        elif tile is Tile.POT:
            pot = pots[faced]
            if held is not None and held.kind in INGREDIENTS and pot.phase is PotPhase.IDLE and len(pot.contents) < 3:
                pots[faced] = pot.with_added(held.kind)
                agents[i] = replace(agent, held=None)
                events.append(Event(EventKind.POT_ADD, agent=i, cell=faced, item=held))
            elif held is None and pot.phase is PotPhase.IDLE:
                rid = _matching_recipe(state.config, pot.contents)
                if rid is not None:
                    recipe = state.config.recipes[rid]
                    pots[faced] = PotState(
                        contents=pot.contents,
                        phase=PotPhase.COOKING,
                        ticks_remaining=recipe.cook_ticks,
                        recipe_id=rid,
                    )
                    events.append(Event(EventKind.COOK_START, agent=i, cell=faced, recipe_id=rid))
                else:
                    events.append(Event(EventKind.NO_EFFECT, agent=i, cell=faced))
            elif held is not None and held.kind is ItemKind.DISH and pot.phase is PotPhase.READY:
                soup = Item(ItemKind.SOUP, recipe_id=pot.recipe_id)
                pots[faced] = PotState()
                agents[i] = replace(agent, held=soup)
                events.append(Event(EventKind.PLATE, agent=i, cell=faced, item=soup, recipe_id=soup.recipe_id))
            else:
                events.append(Event(EventKind.NO_EFFECT, agent=i, cell=faced))
        elif tile is Tile.COUNTER:
            on_counter = counters.get(faced)
            if held is not None and on_counter is None:
                counters[faced] = held
                agents[i] = replace(agent, held=None)
                events.append(Event(EventKind.PLACE, agent=i, cell=faced, item=held))
            elif held is None and on_counter is not None:
                del counters[faced]
                agents[i] = replace(agent, held=on_counter)
                events.append(Event(EventKind.PICKUP, agent=i, cell=faced, item=on_counter))
            else:
                events.append(Event(EventKind.NO_EFFECT, agent=i, cell=faced))
        elif tile is Tile.SERVING:
            if held is not None and held.kind is ItemKind.SOUP and held.recipe_id in orders:
                orders.remove(held.recipe_id)
                if state.config.repeat_orders:
                    orders.append(held.recipe_id)
                reward = state.config.recipes[held.recipe_id].reward
                score += reward
                agents[i] = replace(agent, held=None)
                events.append(
                    Event(EventKind.DELIVER, agent=i, cell=faced, item=held, recipe_id=held.recipe_id, reward=reward)
                )
            else:
                events.append(Event(EventKind.NO_EFFECT, agent=i, cell=faced))
        else:
            events.append(Event(EventKind.NO_EFFECT, agent=i, cell=faced))

    # Pot timers advance after interactions, one tick each.
    for cell, pot in pots.items():
        if pot.phase is PotPhase.COOKING:
            remaining = pot.ticks_remaining - 1
            if remaining <= 0:
                pots[cell] = replace(pot, phase=PotPhase.READY, ticks_remaining=0)
            else:
                pots[cell] = replace(pot, ticks_remaining=remaining)

    new_state = GameState(
        layout=layout,
        config=state.config,
        tick=state.tick + 1,
        agents=(agents[0], agents[1]),
        pots=tuple(sorted(pots.items())),
        counters=tuple(sorted(counters.items())),
        orders=tuple(orders),
        score=score,
    )
    return new_state, events


def _matching_recipe(config: EpisodeConfig, contents: tuple[ItemKind, ...]) -> Optional[int]:
    for rid, recipe in enumerate(config.recipes):
        if recipe.matches(contents):
            return rid
    return None


class SubtaskKind(enum.Enum):
    PICKUP_ONION = "pickup_onion"
    PICKUP_TOMATO = "pickup_tomato"
    PICKUP_DISH = "pickup_dish"
    POT_INGREDIENT = "pot_ingredient"
    START_COOKING = "start_cooking"
    PLATE_SOUP = "plate_soup"
    DELIVER_SOUP = "deliver_soup"
    PLACE_ON_COUNTER = "place_on_counter"


PICKUP_OF = {
    ItemKind.ONION: SubtaskKind.PICKUP_ONION,
    ItemKind.TOMATO: SubtaskKind.PICKUP_TOMATO,
    ItemKind.DISH: SubtaskKind.PICKUP_DISH,
}


@dataclass(frozen=True)
class Subtask:
    kind: SubtaskKind
    target_cell: Cell

    def label(self) -> str:
        return f"{self.kind.value}@{self.target_cell}"


@dataclass(frozen=True)
class SubtaskOption:
    kind: SubtaskKind
    cells: tuple[Cell, ...]


def reachable_floor(layout: Layout, origin: Cell, blocked: Iterable[Cell] = ()) -> set[Cell]:
    """Flood fill over floor cells from origin, excluding `blocked` cells."""
    blocked = set(blocked)
    if origin in blocked or not layout.is_floor(origin):
        return set()
    seen = {origin}
    queue = deque([origin])
    while queue:
        cur = queue.popleft()
        for nxt in layout.floor_neighbors(cur):
            if nxt not in seen and nxt not in blocked:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def legal_interactions(state: GameState, agent_index: int) -> list[SubtaskOption]:
    """Enumerate the currently meaningful subtasks for one agent.

    Candidate target cells are restricted to facilities adjacent to floor
    the agent can reach on the static layout (the partner is assumed to
    move eventually, so it does not block here). When the agent holds an
    item the list always offers placing it on a reachable empty counter.
    """
    layout = state.layout
    agent = state.agents[agent_index]
    region = reachable_floor(layout, agent.cell)

    def reachable(cell: Cell) -> bool:
        return any(n in region for n in layout.adjacent_floor(cell))

    def cells(candidates: Iterable[Cell]) -> tuple[Cell, ...]:
        return tuple(sorted(c for c in candidates if reachable(c)))

    options: list[SubtaskOption] = []
    held = agent.held

    if held is None:
        for kind in INGREDIENTS + (ItemKind.DISH,):
            tile = {
                ItemKind.ONION: Tile.ONION_DISPENSER,
                ItemKind.TOMATO: Tile.TOMATO_DISPENSER,
                ItemKind.DISH: Tile.DISH_DISPENSER,
            }[kind]
            sources = list(layout.cells_of(tile))
            sources += [c for c, item in state.counters if item.kind is kind]
            found = cells(sources)
            if found:
                options.append(SubtaskOption(PICKUP_OF[kind], found))
        startable = [
            c for c, p in state.pots
            if p.phase is PotPhase.IDLE and _matching_recipe(state.config, p.contents) is not None
        ]
        if found := cells(startable):
            options.append(SubtaskOption(SubtaskKind.START_COOKING, found))
    elif held.kind in INGREDIENTS:
        fillable = [c for c, p in state.pots if p.phase is PotPhase.IDLE and len(p.contents) < 3]
        if found := cells(fillable):
            options.append(SubtaskOption(SubtaskKind.POT_INGREDIENT, found))
    elif held.kind is ItemKind.DISH:
        platable = [
            c for c, p in state.pots
            if p.phase in (PotPhase.READY, PotPhase.COOKING) or p.contents
        ]
        if found := cells(platable):
            options.append(SubtaskOption(SubtaskKind.PLATE_SOUP, found))
    elif held.kind is ItemKind.SOUP:
        if found := cells(layout.cells_of(Tile.SERVING)):
            options.append(SubtaskOption(SubtaskKind.DELIVER_SOUP, found))

    if held is not None:
        empty = [c for c in layout.cells_of(Tile.COUNTER) if state.counter_item(c) is None]
        if found := cells(empty):
            options.append(SubtaskOption(SubtaskKind.PLACE_ON_COUNTER, found))

    return options


def subtask_satisfied(state: GameState, agent_index: int, subtask: Subtask, events: Iterable[Event]) -> bool:
    """True when `events` from the latest step show `subtask` completing."""
    for ev in events:
        if ev.agent != agent_index or ev.cell != subtask.target_cell:
            continue
        kind = subtask.kind
        if kind in (SubtaskKind.PICKUP_ONION, SubtaskKind.PICKUP_TOMATO, SubtaskKind.PICKUP_DISH):
            wanted = {
                SubtaskKind.PICKUP_ONION: ItemKind.ONION,
                SubtaskKind.PICKUP_TOMATO: ItemKind.TOMATO,
                SubtaskKind.PICKUP_DISH: ItemKind.DISH,
            }[kind]
            if ev.kind is EventKind.PICKUP and ev.item is not None and ev.item.kind is wanted:
                return True
        elif kind is SubtaskKind.POT_INGREDIENT and ev.kind is EventKind.POT_ADD:
            return True
        elif kind is SubtaskKind.START_COOKING and ev.kind is EventKind.COOK_START:
            return True
        elif kind is SubtaskKind.PLATE_SOUP and ev.kind is EventKind.PLATE:
            return True
        elif kind is SubtaskKind.DELIVER_SOUP and ev.kind is EventKind.DELIVER:
            return True
        elif kind is SubtaskKind.PLACE_ON_COUNTER and ev.kind is EventKind.PLACE:
            return True
    return False
