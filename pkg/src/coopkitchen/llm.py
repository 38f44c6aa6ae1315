"""Prompt rendering, chat-endpoint transport, response parsing, transcripts.

The three decision surfaces (monitor, path adapter, subtask adapter) share
one pipeline: render a deterministic prompt, obtain raw text from a
backend (hosted model, rule oracle, or transcript replay), then parse it
strictly. Parsers accept both the structured trailing line the prompts ask
for and looser free text, and raise declared errors on anything else.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
import time
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import httpx

from .env import GameState, PotPhase, Subtask, SubtaskOption, Tile
from .grid import Cell
from .planning import AdaptPlan, Path


class AdaptationKind(enum.Enum):
    PATH_LEVEL = "path"
    SUBTASK_LEVEL = "subtask"


@dataclass(frozen=True)
class MonitorVerdict:
    follow_greedy: bool
    adaptation_kind: Optional[AdaptationKind] = None
    rationale: str = ""

    def __post_init__(self):
        if not self.follow_greedy and self.adaptation_kind is None:
            object.__setattr__(self, "adaptation_kind", AdaptationKind.PATH_LEVEL)
        if self.follow_greedy:
            object.__setattr__(self, "adaptation_kind", None)


class TemplateId(enum.Enum):
    SUBTASK_ADAPTER = "subtask_adapter"
    PATH_ADAPTER = "path_adapter"
    MONITOR_ADAPT_CHECK = "monitor_adapt"
    MONITOR_REVERT_CHECK = "monitor_revert"


class MissingArtifact(ValueError):
    def __init__(self, name: str):
        super().__init__(f"template requires artifact {name!r}")
        self.name = name


class Unparseable(ValueError):
    def __init__(self, reason: str, raw: str = ""):
        super().__init__(reason)
        self.raw = raw


class IndexOutOfRange(ValueError):
    def __init__(self, index: int, count: int):
        super().__init__(f"adapt_index {index} outside 1..{count}")
        self.index = index
        self.count = count


class UnlistedTarget(ValueError):
    def __init__(self, cell: Cell):
        super().__init__(f"target position {cell} is not a listed kitchen item")
        self.cell = cell


class QueryTimeout(Exception):
    pass


class TransportError(Exception):
    def __init__(self, code):
        super().__init__(f"transport failure: {code}")
        self.code = code


class EmptyResponse(Exception):
    pass


@dataclass(frozen=True)
class PromptArtifacts:
    """Planning products a template may embed; also the rule oracle's input."""

    self_target: Optional[Cell] = None
    partner_target: Optional[Cell] = None
    self_subtask: Optional["Subtask"] = None
    partner_subtask: Optional["Subtask"] = None
    self_path: Optional[Path] = None
    partner_path: Optional[Path] = None
    adaptation_plan: Optional[AdaptPlan] = None
    self_plans: tuple[AdaptPlan, ...] = ()
    partner_plans: tuple[AdaptPlan, ...] = ()
    self_options: tuple[SubtaskOption, ...] = ()
    partner_options: tuple[SubtaskOption, ...] = ()
    mute_duplicate: bool = False  # adapter already confirmed the shared goal is fine
    horizon: int = 10  # conflict lookahead window in ticks


@dataclass(frozen=True)
class PromptBundle:
    template_id: TemplateId
    rendered: str
    context_digest: str


def _load_template(template_id: TemplateId) -> str:
    name = f"{template_id.value}.txt"
    return resources.files("coopkitchen.prompts").joinpath(name).read_text(encoding="utf-8")


def _fmt_cell(cell: Optional[Cell]) -> str:
    if cell is None:
        return "unknown"
    return f"({cell[0]}, {cell[1]})"


def _fmt_path(path: Optional[Path]) -> str:
    if path is None:
        return "unknown (assumed to stay in place)"
    return path.describe()


def render_grid(state: GameState, agent_index: int, artifacts: PromptArtifacts) -> str:
    """Symbolic grid with X obstacles, a/b agent positions, A/B targets."""
    layout = state.layout
    rows = [
        ["X" if layout.grid[y][x] is not Tile.FLOOR else " " for x in range(layout.width)]
        for y in range(layout.height)
    ]

    def put(cell: Optional[Cell], mark: str):
        if cell is not None:
            x, y = cell
            rows[y][x] = mark

    put(artifacts.partner_target, "B")
    put(artifacts.self_target, "A")
    put(state.agents[1 - agent_index].cell, "b")
    put(state.agents[agent_index].cell, "a")
    return "\n".join("".join(r) for r in rows)


def _fmt_plans(plans: Sequence[AdaptPlan]) -> str:
    if not plans:
        return "    (none)"
    return "\n".join(f"    Plan {i}: {p.describe()}" for i, p in enumerate(plans, start=1))


def option_label(option: SubtaskOption) -> str:
    kind = option.kind.value.replace("_", " ")
    cells = " or ".join(_fmt_cell(c) for c in option.cells)
    return f"{kind} at {cells}"


def _fmt_options(options: Sequence[SubtaskOption]) -> str:
    if not options:
        return "    (none)"
    return "\n".join(f"    Option {i}: {option_label(o)}" for i, o in enumerate(options, start=1))


def _fmt_recipes(state: GameState) -> str:
    lines = []
    for rid, recipe in enumerate(state.config.recipes):
        parts = ",".join(f"[{k.value}]" for k in recipe.ingredients)
        lines.append(f"    Recipe {rid}: Requires ingredients: {parts}; cook time {recipe.cook_ticks}; reward {recipe.reward}")
    return "\n".join(lines)


def kitchen_item_cells(state: GameState) -> list[Cell]:
    """Every cell a subtask target may legally name."""
    layout = state.layout
    cells: list[Cell] = []
    for kind in (Tile.ONION_DISPENSER, Tile.TOMATO_DISPENSER, Tile.DISH_DISPENSER, Tile.POT, Tile.SERVING, Tile.COUNTER):
        cells.extend(layout.cells_of(kind))
    return cells


def _fmt_kitchen(state: GameState) -> str:
    layout = state.layout
    lines = []
    names = {
        Tile.ONION_DISPENSER: "Onion dispenser",
        Tile.TOMATO_DISPENSER: "Tomato dispenser",
        Tile.DISH_DISPENSER: "Dish dispenser",
        Tile.SERVING: "Serving window",
    }
    for kind, label in names.items():
        for cell in layout.cells_of(kind):
            lines.append(f"    {label} at {_fmt_cell(cell)}")
    for cell, pot in state.pots:
        if pot.phase is PotPhase.IDLE:
            detail = "idle" if not pot.contents else "idle, contains " + ", ".join(k.value for k in pot.contents)
        elif pot.phase is PotPhase.COOKING:
            detail = f"cooking, {pot.ticks_remaining} ticks left"
        else:
            detail = "soup ready"
        lines.append(f"    Pot at {_fmt_cell(cell)}: {detail}")
    for cell, item in state.counters:
        lines.append(f"    Counter at {_fmt_cell(cell)}: holds {item.label()}")
    return "\n".join(lines)


def render_prompt(
    template_id: TemplateId,
    state: GameState,
    agent_index: int,
    artifacts: PromptArtifacts,
) -> PromptBundle:
    """Deterministic prompt text for one decision query."""
    layout = state.layout
    me = state.agents[agent_index]
    other = state.agents[1 - agent_index]
    fields = {
        "width": layout.width,
        "height": layout.height,
        "max_x": layout.width - 1,
        "max_y": layout.height - 1,
        "grid": render_grid(state, agent_index, artifacts),
        "agent_cell": _fmt_cell(me.cell),
        "partner_cell": _fmt_cell(other.cell),
        "agent_target": _fmt_cell(artifacts.self_target),
        "partner_target": _fmt_cell(artifacts.partner_target),
        "self_path": _fmt_path(artifacts.self_path),
        "partner_path": _fmt_path(artifacts.partner_path),
    }

    if template_id is TemplateId.MONITOR_ADAPT_CHECK:
        if artifacts.self_path is None:
            raise MissingArtifact("self_path")
    elif template_id is TemplateId.MONITOR_REVERT_CHECK:
        if artifacts.adaptation_plan is None:
            raise MissingArtifact("adaptation_plan")
        fields["adaptation_path"] = artifacts.adaptation_plan.describe()
    elif template_id is TemplateId.PATH_ADAPTER:
        if artifacts.self_path is None:
            raise MissingArtifact("self_path")
        if not artifacts.self_plans and not artifacts.partner_plans:
            raise MissingArtifact("plans")
        fields["self_plans"] = _fmt_plans(artifacts.self_plans)
        fields["partner_plans"] = _fmt_plans(artifacts.partner_plans)
    elif template_id is TemplateId.SUBTASK_ADAPTER:
        if not artifacts.self_options:
            raise MissingArtifact("self_options")
        fields.update(
            recipes=_fmt_recipes(state),
            kitchen_items=_fmt_kitchen(state),
            agent_faced=_describe_faced(state, agent_index),
            partner_faced=_describe_faced(state, 1 - agent_index),
            agent_held=me.held.label() if me.held else "nothing",
            partner_held=other.held.label() if other.held else "nothing",
            self_options=_fmt_options(artifacts.self_options),
            partner_options=_fmt_options(artifacts.partner_options),
        )

    rendered = _load_template(template_id).format(**fields)
    digest_src = f"{template_id.value}|{agent_index}|{state.digest()}"
    digest = hashlib.sha256(digest_src.encode()).hexdigest()[:16]
    return PromptBundle(template_id=template_id, rendered=rendered, context_digest=digest)


def _describe_faced(state: GameState, agent_index: int) -> str:
    cell = state.agents[agent_index].pose.faced_cell
    layout = state.layout
    if not layout.in_bounds(cell):
        return "the wall"
    tile = layout.tile(cell)
    names = {
        Tile.FLOOR: "empty floor",
        Tile.COUNTER: "a counter",
        Tile.ONION_DISPENSER: "the onion dispenser",
        Tile.TOMATO_DISPENSER: "the tomato dispenser",
        Tile.DISH_DISPENSER: "the dish dispenser",
        Tile.POT: "a pot",
        Tile.SERVING: "the serving window",
    }
    return names[tile]


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    model: str
    api_key: Optional[str] = None
    timeout_s: float = 10.0


def query(bundle: PromptBundle, endpoint: EndpointConfig, timeout_s: Optional[float] = None) -> tuple[str, float]:
    """One chat completion; returns (text, wall latency seconds). No retries:
    timeouts surface so the caller's fail-safe can take over."""
    timeout = timeout_s if timeout_s is not None else endpoint.timeout_s
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"
    payload = {
        "model": endpoint.model,
        "messages": [{"role": "user", "content": bundle.rendered}],
    }
    started = time.perf_counter()
    try:
        response = httpx.post(endpoint.url, json=payload, headers=headers, timeout=timeout)
    except httpx.TimeoutException as exc:
        raise QueryTimeout(str(exc)) from exc
    except httpx.HTTPError as exc:
        raise TransportError(type(exc).__name__) from exc
    latency = time.perf_counter() - started
    if response.status_code != 200:
        raise TransportError(response.status_code)
    try:
        data = response.json()
        text = data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, ValueError) as exc:
        raise EmptyResponse(str(exc)) from exc
    if not text or not text.strip():
        raise EmptyResponse("model returned empty content")
    return text, latency


_BOOL_TOKEN = re.compile(r"\b(true|false)\b", re.IGNORECASE)
_RESPOND = re.compile(r"respond\s*[:=]?\s*(true|false)", re.IGNORECASE)
_LEVEL = re.compile(r"\b(path|subtask)\b", re.IGNORECASE)


def parse_monitor(raw: str) -> MonitorVerdict:
    """Extract the follow-greedy boolean and adaptation level from raw text."""
    if not isinstance(raw, str) or not raw.strip():
        raise Unparseable("empty monitor response", raw if isinstance(raw, str) else "")
    structured = _RESPOND.findall(raw)
    if structured:
        follow = structured[-1].lower() == "true"
    else:
        tokens = {t.lower() for t in _BOOL_TOKEN.findall(raw)}
        if len(tokens) != 1:
            raise Unparseable("no unambiguous true/false token", raw)
        follow = tokens.pop() == "true"
    if follow:
        return MonitorVerdict(follow_greedy=True, rationale=raw)
    levels = _LEVEL.findall(raw)
    kind = AdaptationKind.SUBTASK_LEVEL if levels and levels[-1].lower() == "subtask" else AdaptationKind.PATH_LEVEL
    return MonitorVerdict(follow_greedy=False, adaptation_kind=kind, rationale=raw)


@dataclass(frozen=True)
class ParsedPathAdapter:
    p_agent_adapt: float
    p_human_adapt: float
    adapt_index: int  # 1-based into the winning side's plan list

    @property
    def self_adapts(self) -> bool:
        return self.p_agent_adapt >= self.p_human_adapt  # tie goes to self


_FLOAT_FIELD = r"[:=]?\s*([01](?:\.\d+)?|0?\.\d+)"
_P_AGENT = re.compile(r"p_agent_adapt\s*" + _FLOAT_FIELD, re.IGNORECASE)
_P_HUMAN = re.compile(r"p_human_adapt\s*" + _FLOAT_FIELD, re.IGNORECASE)
_ADAPT_INDEX = re.compile(r"adapt_index\s*[:=]?\s*(\d+)", re.IGNORECASE)


def parse_path_adapter(raw: str, n_self_plans: int, n_partner_plans: int) -> ParsedPathAdapter:
    """Extract adaptation probabilities and the chosen plan number."""
    if not isinstance(raw, str) or not raw.strip():
        raise Unparseable("empty path-adapter response", raw if isinstance(raw, str) else "")
    agent = _P_AGENT.findall(raw)
    human = _P_HUMAN.findall(raw)
    index = _ADAPT_INDEX.findall(raw)
    if not agent or not human or not index:
        raise Unparseable("missing p_agent_adapt / p_human_adapt / adapt_index", raw)
    p_agent, p_human = float(agent[-1]), float(human[-1])
    if not (0.0 <= p_agent <= 1.0 and 0.0 <= p_human <= 1.0):
        raise Unparseable("probabilities outside [0, 1]", raw)
    idx = int(index[-1])
    count = n_self_plans if p_agent >= p_human else n_partner_plans
    if not 1 <= idx <= count:
        raise IndexOutOfRange(idx, count)
    return ParsedPathAdapter(p_agent_adapt=p_agent, p_human_adapt=p_human, adapt_index=idx)


@dataclass(frozen=True)
class ParsedSubtaskAdapter:
    final_action_id: int  # 1-based into the rendered option list
    target_cell: Cell
    human_action_id: Optional[int] = None
    human_target_cell: Optional[Cell] = None


_CELL = r"[\(\[]\s*(\d+)\s*,\s*(\d+)\s*[\)\]]"
_FINAL_ID = re.compile(r"final_action_id\s*[:=]?\s*(\d+)", re.IGNORECASE)
_HUMAN_ID = re.compile(r"human\s+intended\s+action\s+id\s*[:=]?\s*(\d+)", re.IGNORECASE)
_HUMAN_TARGET = re.compile(r"human\s+intended\s+target\s+position\s*[:=]?\s*" + _CELL, re.IGNORECASE)
_TARGET = re.compile(r"(?<!intended\s)target\s+position\s*[:=]?\s*" + _CELL, re.IGNORECASE)


def parse_subtask_adapter(
    raw: str,
    self_options: Sequence[SubtaskOption],
    kitchen_cells: Sequence[Cell],
) -> ParsedSubtaskAdapter:
    """Resolve the chosen option and target against the rendered lists."""
    if not isinstance(raw, str) or not raw.strip():
        raise Unparseable("empty subtask-adapter response", raw if isinstance(raw, str) else "")
    final_ids = _FINAL_ID.findall(raw)
    targets = [m for m in _TARGET.finditer(raw) if "intended" not in raw[max(0, m.start() - 24):m.start()].lower()]
    if not final_ids or not targets:
        raise Unparseable("missing final_action_id or target position", raw)
    final_id = int(final_ids[-1])
    if not 1 <= final_id <= len(self_options):
        raise IndexOutOfRange(final_id, len(self_options))
    tx, ty = targets[-1].groups()
    target = (int(tx), int(ty))
    if target not in kitchen_cells:
        raise UnlistedTarget(target)

    human_ids = _HUMAN_ID.findall(raw)
    human_targets = _HUMAN_TARGET.findall(raw)
    human_cell = (int(human_targets[-1][0]), int(human_targets[-1][1])) if human_targets else None
    if human_cell is not None and human_cell not in kitchen_cells:
        human_cell = None  # partner intent is advisory; drop bad guesses
    return ParsedSubtaskAdapter(
        final_action_id=final_id,
        target_cell=target,
        human_action_id=int(human_ids[-1]) if human_ids else None,
        human_target_cell=human_cell,
    )


@dataclass
class TranscriptRecord:
    tick: int
    template_id: str
    prompt: str
    raw_response: str
    parsed: Optional[dict]
    latency_ms: float

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "template_id": self.template_id,
            "prompt": self.prompt,
            "raw_response": self.raw_response,
            "parsed": self.parsed,
            "latency_ms": self.latency_ms,
        }


class Transcript:
    """Append-only per-episode record of every decision query."""

    def __init__(self, records: Optional[list[TranscriptRecord]] = None):
        self.records: list[TranscriptRecord] = list(records or [])

    def append(self, record: TranscriptRecord):
        if record.latency_ms < 0:
            raise ValueError("latency_ms must be non-negative")
        self.records.append(record)

    def latencies_ms(self, template_ids: Sequence[TemplateId]) -> list[float]:
        wanted = {t.value for t in template_ids}
        return [r.latency_ms for r in self.records if r.template_id in wanted]

    def count(self, template_ids: Sequence[TemplateId]) -> int:
        wanted = {t.value for t in template_ids}
        return sum(1 for r in self.records if r.template_id in wanted)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.records:
                fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Transcript":
        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                data = json.loads(line)
                records.append(TranscriptRecord(
                    tick=data["tick"],
                    template_id=data["template_id"],
                    prompt=data.get("prompt", ""),
                    raw_response=data["raw_response"],
                    parsed=data.get("parsed"),
                    latency_ms=data["latency_ms"],
                ))
        return cls(records)
