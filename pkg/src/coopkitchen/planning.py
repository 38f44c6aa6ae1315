"""Grid path search, conflict detection, and yield-plan enumeration.

Paths are action-optimal in (cell, facing) space: turning in place costs
one blocked move (the action alphabet has no free rotation), so search
prefers approaches that already end facing the target. All planners are
deterministic under the fixed tie-break order up < down < left < right.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .env import MOVES, AtomicAction, EventKind, GameState, step
from .grid import Cell, Facing, Layout, Pose, shift

MOVE_ORDER = (AtomicAction.UP, AtomicAction.DOWN, AtomicAction.LEFT, AtomicAction.RIGHT)


class Unreachable(Exception):
    def __init__(self, target: Cell):
        super().__init__(f"no route to a floor cell facing {target}")
        self.target = target


class NoPlanExists(Exception):
    """Neither agent has any valid adaptation plan (both boxed in)."""


@dataclass(frozen=True)
class Path:
    """A walk ending on a cell adjacent to `target`, facing it, plus Interact."""

    cells: tuple[Cell, ...]
    actions: tuple[AtomicAction, ...]
    target: Cell

    @property
    def cost(self) -> int:
        return len(self.actions)

    def timeline(self) -> tuple[Cell, ...]:
        """Cell occupied after each action (index 0 = before acting)."""
        out = [self.cells[0]]
        i = 0
        for action in self.actions:
            if action in MOVES and i + 1 < len(self.cells) and self.cells[i + 1] == shift(self.cells[i], MOVES[action]):
                i += 1
            out.append(self.cells[i])
        return tuple(out)

    def occupied_at(self, t: int) -> Cell:
        timeline = self.timeline()
        return timeline[min(t, len(timeline) - 1)]

    def describe(self) -> str:
        cells = ", ".join(f"({x}, {y})" for x, y in self.cells)
        return f"[{cells}], length {self.cost}"


def _search(
    layout: Layout,
    start: Pose,
    target: Cell,
    blocked: frozenset[Cell],
    first_action: Optional[AtomicAction] = None,
) -> Optional[tuple[AtomicAction, ...]]:
    """Breadth-first search over (cell, facing) states; moves into obstacles
    rotate in place at cost 1. Returns the action list ending with Interact,
    or None when no state faces the target."""

    def passable(cell: Cell) -> bool:
        return layout.is_floor(cell) and cell not in blocked

    def advance(state: tuple[Cell, Facing], action: AtomicAction) -> tuple[Cell, Facing]:
        cell, _ = state
        facing = MOVES[action]
        dest = shift(cell, facing)
        return (dest if passable(dest) else cell, facing)

    def done(state: tuple[Cell, Facing]) -> bool:
        cell, facing = state
        return shift(cell, facing) == target

    if not passable(start.cell):
        return None

    init = (start.cell, start.facing)
    prefix: tuple[AtomicAction, ...] = ()
    if first_action is not None:
        init = advance(init, first_action)
        prefix = (first_action,)

    if done(init):
        return prefix + (AtomicAction.INTERACT,)

    seen = {init}
    queue = deque([(init, prefix)])
    while queue:
        state, actions = queue.popleft()
        for action in MOVE_ORDER:
            nxt = advance(state, action)
            if nxt in seen:
                continue
            seen.add(nxt)
            nxt_actions = actions + (action,)
            if done(nxt):
                return nxt_actions + (AtomicAction.INTERACT,)
            queue.append((nxt, nxt_actions))
    return None


def solo_path(layout: Layout, pose: Pose, target_cell: Cell, blocked: Iterable[Cell] = ()) -> Path:
    """Cheapest action sequence from `pose` to interact with `target_cell`,
    with only `blocked` as extra obstacles (no partner implied)."""
    blocked = frozenset(blocked)
    actions = _search(layout, pose, target_cell, blocked)
    if actions is None:
        raise Unreachable(target_cell)
    return Path(cells=_true_walk(layout, pose, actions, blocked), actions=actions, target=target_cell)


def greedy_path(
    state: GameState,
    agent_index: int,
    target_cell: Cell,
    extra_blocked: Iterable[Cell] = (),
) -> Path:
    """Cheapest action sequence to interact with `target_cell`, treating the
    other agent's current cell (and `extra_blocked`) as obstacles."""
    other = state.agents[1 - agent_index]
    blocked = frozenset(extra_blocked) | {other.cell}
    return solo_path(state.layout, state.agents[agent_index].pose, target_cell, blocked)


def _true_walk(
    layout: Layout,
    start: Pose,
    actions: Sequence[AtomicAction],
    blocked: frozenset[Cell],
) -> tuple[Cell, ...]:
    cells = [start.cell]
    cur = start.cell
    for action in actions:
        if action in MOVES:
            dest = shift(cur, MOVES[action])
            if layout.is_floor(dest) and dest not in blocked:
                cur = dest
                cells.append(cur)
    return tuple(cells)


def predict_partner_path(state: GameState, partner_index: int, inferred_target: Cell) -> Optional[Path]:
    """The partner's own greedy path with us as an obstacle; None when the
    partner is walled in (presumed idle)."""
    try:
        return greedy_path(state, partner_index, inferred_target)
    except Unreachable:
        return None


class ConflictKind(enum.Enum):
    SHARED_CELL = "shared_cell"
    SWAP = "swap"
    HEAD_ON = "head_on"


@dataclass(frozen=True)
class Conflict:
    kind: ConflictKind
    overlap: tuple[tuple[Cell, int], ...]  # (cell, time index) pairs


def _extended(timeline: tuple[Cell, ...], horizon: int) -> list[Cell]:
    out = list(timeline[: horizon + 1])
    while len(out) < horizon + 1:
        out.append(timeline[-1])
    return out


def detect_conflict(
    self_path: Optional[Path],
    partner_path: Optional[Path],
    horizon: int = 10,
) -> Optional[Conflict]:
    """Report how two planned paths collide inside the lookahead window.

    For a partner with no computable path use path_through_cell_conflict
    instead; this operation compares two concrete paths.
    """
    if self_path is None or partner_path is None:
        return None
    mine = _extended(self_path.timeline(), horizon)
    theirs = _extended(partner_path.timeline(), horizon)

    shared: list[tuple[Cell, int]] = []
    swaps: list[tuple[Cell, int]] = []
    for t in range(1, horizon + 1):
        if mine[t] == theirs[t]:
            shared.append((mine[t], t))
        if mine[t] == theirs[t - 1] and theirs[t] == mine[t - 1] and mine[t] != mine[t - 1]:
            swaps.append((mine[t], t))
            swaps.append((theirs[t], t))

    # head-on: both walks traverse the same corridor stretch in opposite order
    if shared or swaps:
        mine_walk = list(self_path.cells)
        their_walk = list(partner_path.cells)
        common = [c for c in mine_walk if c in their_walk]
        if len(common) >= 2:
            their_order = [c for c in their_walk if c in common]
            if common == their_order[::-1]:
                overlap = tuple((c, mine_walk.index(c)) for c in common)
                return Conflict(ConflictKind.HEAD_ON, overlap)
    if swaps:
        return Conflict(ConflictKind.SWAP, tuple(sorted(set(swaps))))
    if shared:
        return Conflict(ConflictKind.SHARED_CELL, tuple(shared))
    return None


def path_through_cell_conflict(self_path: Path, partner_cell: Cell, horizon: int = 10) -> Optional[Conflict]:
    """Conflict against an idle partner parked on `partner_cell`."""
    timeline = self_path.timeline()
    hits = tuple((c, t) for t, c in enumerate(timeline[: horizon + 1]) if c == partner_cell)
    if hits:
        return Conflict(ConflictKind.SHARED_CELL, hits)
    return None


class PlanOwner(enum.Enum):
    SELF = "self"
    OTHER = "other"


class PlanKind(enum.Enum):
    DETOUR = "detour"
    SIDESTEP = "sidestep"


@dataclass(frozen=True)
class AdaptPlan:
    """A temporary deviation for one agent: a full detour path to the same
    target, or a sidestep to a yield cell plus a wait."""

    owner: PlanOwner
    kind: PlanKind
    actions: tuple[AtomicAction, ...]
    target: Cell
    cost: int
    path: Optional[Path] = None  # detour only
    yield_cell: Optional[Cell] = None  # sidestep only
    wait_ticks: int = 0  # sidestep only

    def describe(self) -> str:
        if self.kind is PlanKind.DETOUR:
            return f"detour {self.path.describe()}" if self.path else "detour"
        x, y = self.yield_cell
        return f"sidestep to ({x}, {y}) and wait {self.wait_ticks}, length {self.cost}"


def replay_joint(
    state: GameState,
    agent_index: int,
    self_actions: Sequence[AtomicAction],
    partner_actions: Sequence[AtomicAction],
    extra_ticks: int = 0,
) -> tuple[GameState, list]:
    """Run both action scripts through the environment (Stay when a script
    runs out) and collect all events."""
    events = []
    cur = state
    ticks = max(len(self_actions), len(partner_actions)) + extra_ticks
    for t in range(ticks):
        mine = self_actions[t] if t < len(self_actions) else AtomicAction.STAY
        theirs = partner_actions[t] if t < len(partner_actions) else AtomicAction.STAY
        pair = (mine, theirs) if agent_index == 0 else (theirs, mine)
        cur, evs = step(cur, pair)
        events.extend(evs)
    return cur, events


def _blocked_events(events) -> list:
    return [e for e in events if e.kind is EventKind.BLOCKED]


def _plan_is_sound(state: GameState, agent_index: int, plan_actions, partner_actions) -> bool:
    _, events = replay_joint(state, agent_index, plan_actions, partner_actions)
    return not _blocked_events(events)


def _walk_distance_map(layout: Layout, origin: Cell, blocked: frozenset[Cell]) -> dict[Cell, int]:
    dist = {origin: 0}
    queue = deque([origin])
    while queue:
        cur = queue.popleft()
        for facing in (Facing.UP, Facing.DOWN, Facing.LEFT, Facing.RIGHT):
            nxt = shift(cur, facing)
            if layout.is_floor(nxt) and nxt not in blocked and nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def _actions_to_cell(layout: Layout, start: Pose, dest: Cell, blocked: frozenset[Cell]) -> Optional[tuple[AtomicAction, ...]]:
    """Shortest pure-move sequence from start to dest (no interact)."""
    if start.cell == dest:
        return ()
    parents: dict[Cell, tuple[Cell, AtomicAction]] = {}
    queue = deque([start.cell])
    seen = {start.cell}
    while queue:
        cur = queue.popleft()
        for action in MOVE_ORDER:
            nxt = shift(cur, MOVES[action])
            if not layout.is_floor(nxt) or nxt in blocked or nxt in seen:
                continue
            seen.add(nxt)
            parents[nxt] = (cur, action)
            if nxt == dest:
                out = []
                back = dest
                while back != start.cell:
                    prev, act = parents[back]
                    out.append(act)
                    back = prev
                return tuple(reversed(out))
            queue.append(nxt)
    return None


def enumerate_adapt_plans(
    state: GameState,
    agent_index: int,
    self_path: Path,
    partner_path: Optional[Path],
    k: int = 6,
    max_yield_cells: int = 4,
) -> list[AdaptPlan]:
    """Up to k validated plans per agent, cheapest first.

    Detours re-route to the original target around every cell of the other
    side's walk; sidesteps dip into the nearest off-path cells and wait for
    the other side to clear the contested stretch. Every emitted plan
    already replayed conflict-free against the other side's original path.
    """
    plans: list[AdaptPlan] = []
    for owner in (PlanOwner.SELF, PlanOwner.OTHER):
        if owner is PlanOwner.SELF:
            idx, own_path, other_path = agent_index, self_path, partner_path
        else:
            if partner_path is None:
                continue
            idx, own_path, other_path = 1 - agent_index, partner_path, self_path
        other_cell = state.agents[1 - idx].cell
        other_actions = other_path.actions if other_path is not None else ()
        other_walk = set(other_path.cells) if other_path is not None else {other_cell}

        candidates: list[AdaptPlan] = []
        candidates.extend(_detour_plans(state, idx, own_path, other_walk, other_cell, k))
        candidates.extend(
            _sidestep_plans(state, idx, own_path, other_path, other_walk, other_cell, max_yield_cells)
        )

        valid = []
        seen_actions = set()
        for plan in candidates:
            if plan.actions in seen_actions:
                continue
            seen_actions.add(plan.actions)
            if _plan_is_sound(state, idx, plan.actions, other_actions):
                valid.append(AdaptPlan(
                    owner=owner,
                    kind=plan.kind,
                    actions=plan.actions,
                    target=plan.target,
                    cost=plan.cost,
                    path=plan.path,
                    yield_cell=plan.yield_cell,
                    wait_ticks=plan.wait_ticks,
                ))
        valid.sort(key=lambda p: p.cost)
        plans.extend(valid[:k])

    plans.sort(key=lambda p: (p.cost, p.owner is not PlanOwner.SELF))
    if not plans:
        raise NoPlanExists()
    return plans


def _detour_plans(state, idx, own_path, other_walk, other_cell, k) -> list[AdaptPlan]:
    layout = state.layout
    pose = state.agents[idx].pose
    blocked = frozenset(other_walk | {other_cell}) - {pose.cell}
    out = []
    options: list[Optional[AtomicAction]] = [None, *MOVE_ORDER]
    for first in options:
        actions = _search(layout, pose, own_path.target, blocked, first_action=first)
        if actions is None:
            continue
        path = Path(cells=_true_walk(layout, pose, actions, blocked), actions=actions, target=own_path.target)
        out.append(AdaptPlan(
            owner=PlanOwner.SELF,  # rewritten by caller
            kind=PlanKind.DETOUR,
            actions=actions,
            target=own_path.target,
            cost=path.cost,
            path=path,
        ))
        if len(out) >= k:
            break
    return out


def _sidestep_plans(state, idx, own_path, other_path, other_walk, other_cell, max_yield_cells) -> list[AdaptPlan]:
    layout = state.layout
    pose = state.agents[idx].pose
    blocked = frozenset({other_cell})
    dist = _walk_distance_map(layout, pose.cell, blocked)
    contested = [c for c in own_path.cells if c in other_walk]
    if other_path is not None:
        timeline = other_path.timeline()
        clear_times = [t for t, c in enumerate(timeline) if c in contested]
        t_clear = max(clear_times) if clear_times else 0
    else:
        t_clear = 0

    candidates = sorted(
        (c for c in dist if c not in other_walk and c != other_cell),
        key=lambda c: (dist[c], c),
    )
    out = []
    for yield_cell in candidates[:max_yield_cells]:
        moves = _actions_to_cell(layout, pose, yield_cell, blocked)
        if moves is None:
            continue
        d = len(moves)
        wait = max(1, t_clear + 1 - d) if other_path is not None else 1
        actions = moves + (AtomicAction.STAY,) * wait
        out.append(AdaptPlan(
            owner=PlanOwner.SELF,  # rewritten by caller
            kind=PlanKind.SIDESTEP,
            actions=actions,
            target=own_path.target,
            cost=2 * d + wait,
            yield_cell=yield_cell,
            wait_ticks=wait,
        ))
    return out


def unstuck_action(state: GameState, agent_index: int, rng) -> AtomicAction:
    """Uniform random pick among moves that would actually displace the
    agent right now (partner counts as a wall); Stay when boxed in."""
    layout = state.layout
    cell = state.agents[agent_index].cell
    other = state.agents[1 - agent_index].cell
    candidates = [
        a for a in MOVE_ORDER
        if (dest := shift(cell, MOVES[a])) != other and layout.is_floor(dest)
    ]
    if not candidates:
        return AtomicAction.STAY
    return rng.choice(candidates)
