"""Scenario and frame files: frozen start states with assigned duties.

A scenario pins both agents' subtasks and a time limit; the benchmark asks
whether both duties finish in time. A frame is a one-shot probe: given the
start state, which subtask target should the agent pick. Both live in JSON
files next to the layouts they reference.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .env import (
    AgentState,
    EpisodeConfig,
    GameState,
    Item,
    ItemKind,
    PotPhase,
    PotState,
    Subtask,
    SubtaskKind,
    config_from_dict,
    default_config,
    initial_state,
)
from .grid import Cell, Facing, Layout, Pose, load_layout_file, parse_layout
from .planning import Unreachable, detect_conflict, path_through_cell_conflict, solo_path


class AdaptationType(enum.Enum):
    SELF_ADAPT = "self_adapt"
    OTHER_ADAPT = "other_adapt"
    BOTH_OK = "both_ok"


class InvalidScenario(ValueError):
    def __init__(self, scenario_id: str, reason: str):
        super().__init__(f"scenario {scenario_id!r}: {reason}")
        self.scenario_id = scenario_id
        self.reason = reason


class MissingGroundTruth(ValueError):
    def __init__(self, frame_id: str):
        super().__init__(f"frame {frame_id!r} has no acceptable targets")
        self.frame_id = frame_id


@dataclass(frozen=True)
class Scenario:
    id: str
    layout: Layout
    start: GameState
    assigned: tuple[Subtask, Subtask]
    adaptation_type: AdaptationType
    time_limit: int
    ground_truth: Optional[dict] = None


@dataclass(frozen=True)
class Frame:
    id: str
    layout: Layout
    start: GameState
    agent_index: int
    acceptable_targets: tuple[Cell, ...]
    expected_kind: Optional[SubtaskKind] = None
    adaptation_type: Optional[AdaptationType] = None


def _item_from(label: Optional[str]) -> Optional[Item]:
    if label is None:
        return None
    if label.startswith("soup"):
        rid = int(label[label.index("[") + 1:label.index("]")]) if "[" in label else 0
        return Item(ItemKind.SOUP, recipe_id=rid)
    return Item(ItemKind(label))


def state_from_dict(layout: Layout, data: dict, config: Optional[EpisodeConfig] = None) -> GameState:
    """Build a GameState from the scenario JSON `start` block."""
    config = config or (config_from_dict(data["config"]) if "config" in data else default_config(layout))
    base = initial_state(layout, config)
    agents = []
    for spec in data["agents"]:
        pose = Pose(tuple(spec["cell"]), Facing[spec.get("facing", "down").upper()])
        agents.append(AgentState(pose=pose, held=_item_from(spec.get("held"))))
    pots = dict(base.pots)
    for spec in data.get("pots", []):
        cell = tuple(spec["cell"])
        contents = tuple(ItemKind(k) for k in spec.get("contents", []))
        phase = PotPhase(spec.get("phase", "idle"))
        pots[cell] = PotState(
            contents=tuple(sorted(contents, key=lambda k: k.value)),
            phase=phase,
            ticks_remaining=int(spec.get("ticks_remaining", 0)),
            recipe_id=spec.get("recipe_id"),
        )
    counters = tuple(
        (tuple(spec["cell"]), _item_from(spec["item"])) for spec in data.get("counters", [])
    )
    return GameState(
        layout=layout,
        config=config,
        tick=0,
        agents=(agents[0], agents[1]),
        pots=tuple(sorted(pots.items())),
        counters=tuple(sorted(counters)),
        orders=tuple(data.get("orders", config.orders)),
        score=0,
    )


def _subtask_from(data: dict) -> Subtask:
    return Subtask(SubtaskKind(data["kind"]), tuple(data["target"]))


def solo_completion_cost(layout: Layout, state: GameState, agent_index: int, subtask: Subtask) -> int:
    """Ticks for the agent to finish its duty with the partner absent; the
    assigned duties are one-interaction subtasks, so this is the path cost."""
    pose = state.agents[agent_index].pose
    return solo_path(layout, pose, subtask.target_cell).cost


def scenario_from_dict(data: dict, layout_lookup) -> Scenario:
    layout = layout_lookup(data["layout"])
    start = state_from_dict(layout, data)
    assigned = tuple(_subtask_from(a["subtask"]) for a in data["agents"])
    return Scenario(
        id=data["id"],
        layout=layout,
        start=start,
        assigned=assigned,
        adaptation_type=AdaptationType(data["adaptation_type"]),
        time_limit=int(data["time_limit"]),
        ground_truth=data.get("ground_truth"),
    )


def frame_from_dict(data: dict, layout_lookup) -> Frame:
    layout = layout_lookup(data["layout"])
    start = state_from_dict(layout, data)
    targets = tuple(tuple(c) for c in data.get("acceptable_targets", ()))
    if not targets:
        raise MissingGroundTruth(data["id"])
    return Frame(
        id=data["id"],
        layout=layout,
        start=start,
        agent_index=int(data.get("agent_index", 0)),
        acceptable_targets=targets,
        expected_kind=SubtaskKind(data["expected_kind"]) if "expected_kind" in data else None,
        adaptation_type=AdaptationType(data["adaptation_type"]) if "adaptation_type" in data else None,
    )


def predicted_paths(scenario: Scenario):
    """The two assigned greedy paths as the agents would plan them: around
    the partner where possible, through it when walled in."""
    paths = []
    for i in (0, 1):
        target = scenario.assigned[i].target_cell
        blocked = {scenario.start.agents[1 - i].cell}
        try:
            paths.append(solo_path(scenario.layout, scenario.start.agents[i].pose, target, blocked))
        except Unreachable:
            paths.append(solo_path(scenario.layout, scenario.start.agents[i].pose, target))
    return paths


def validate_scenario(scenario: Scenario, horizon: int = 10):
    """Raise InvalidScenario when a structural invariant fails."""
    from .agents import rules

    state = scenario.start
    for i, subtask in enumerate(scenario.assigned):
        if not rules.subtask_feasible(state, i, subtask):
            raise InvalidScenario(scenario.id, f"agent {i} subtask {subtask.label()} infeasible at start")
        try:
            cost = solo_completion_cost(scenario.layout, state, i, subtask)
        except Unreachable:
            raise InvalidScenario(scenario.id, f"agent {i} cannot reach {subtask.target_cell} even alone")
        if cost > scenario.time_limit:
            raise InvalidScenario(scenario.id, f"agent {i} needs {cost} ticks alone, limit {scenario.time_limit}")
    p0, p1 = predicted_paths(scenario)
    conflict = detect_conflict(p0, p1, horizon=max(horizon, scenario.time_limit))
    if conflict is None:
        conflict = path_through_cell_conflict(p0, state.agents[1].cell, horizon=max(horizon, scenario.time_limit))
    if conflict is None:
        conflict = path_through_cell_conflict(p1, state.agents[0].cell, horizon=max(horizon, scenario.time_limit))
    if conflict is None:
        raise InvalidScenario(scenario.id, "assigned greedy paths do not collide")


# --- bundled corpus access ---------------------------------------------------


def _data_root():
    return resources.files("coopkitchen.data")


def bundled_layouts() -> dict[str, Layout]:
    out = {}
    for entry in sorted(_data_root().joinpath("layouts").iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".layout"):
            name = entry.name[: -len(".layout")]
            out[name] = parse_layout(entry.read_text(encoding="utf-8"), name=name)
    return out


def layout_by_name(name: str) -> Layout:
    layouts = bundled_layouts()
    if name not in layouts:
        raise KeyError(f"unknown bundled layout {name!r} (have {sorted(layouts)})")
    return layouts[name]


def load_layout_arg(value: str) -> list[Layout]:
    """CLI helper: a bundled name, a layout file, or a directory of files."""
    path = Path(value)
    if path.is_dir():
        return [load_layout_file(p) for p in sorted(path.glob("*.layout"))]
    if path.is_file():
        return [load_layout_file(path)]
    return [layout_by_name(value)]


def bundled_scenarios() -> list[Scenario]:
    raw = json.loads(_data_root().joinpath("scenarios").joinpath("suite.json").read_text(encoding="utf-8"))
    return [scenario_from_dict(d, layout_by_name) for d in raw["scenarios"]]


def bundled_frames() -> list[Frame]:
    raw = json.loads(_data_root().joinpath("frames").joinpath("suite.json").read_text(encoding="utf-8"))
    return [frame_from_dict(d, layout_by_name) for d in raw["frames"]]


def load_scenario_file(path) -> list[Scenario]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    layouts = bundled_layouts()

    def lookup(name):
        if name in layouts:
            return layouts[name]
        if "layouts" in raw and name in raw["layouts"]:
            return parse_layout(raw["layouts"][name], name=name)
        raise KeyError(name)

    return [scenario_from_dict(d, lookup) for d in raw["scenarios"]]
