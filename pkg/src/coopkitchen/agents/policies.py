"""The three agent policies: greedy, subtask-adaptive, and monitored.

All policies emit one atomic action per tick. The monitored agent runs a
per-tick monitor check and invokes the path or subtask adapter only when
the monitor asks for it, sending the partner a language instruction when
the adapter decides the partner should yield.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..env import (
    AtomicAction,
    Event,
    GameState,
    MOVES,
    Subtask,
    legal_interactions,
    subtask_satisfied,
)
from ..grid import Cell
from ..llm import (
    EmptyResponse,
    IndexOutOfRange,
    PromptArtifacts,
    QueryTimeout,
    TemplateId,
    Transcript,
    TranscriptRecord,
    TransportError,
    Unparseable,
    UnlistedTarget,
    kitchen_item_cells,
    parse_monitor,
    parse_path_adapter,
    parse_subtask_adapter,
    render_prompt,
)
from ..planning import (
    AdaptPlan,
    NoPlanExists,
    Path,
    PlanOwner,
    Unreachable,
    enumerate_adapt_plans,
    greedy_path,
    solo_path,
    unstuck_action,
)
from . import rules
from .backends import Backend, DecisionContext, RuleBackend
from .types import (
    AdaptationKind,
    AdapterOutput,
    AgentMode,
    Message,
    MessageTemplate,
    MonitorVerdict,
    WhoAdapts,
)

BACKEND_FAILURES = (QueryTimeout, TransportError, EmptyResponse, Unparseable, IndexOutOfRange, UnlistedTarget, RuntimeError)


@dataclass
class TickTiming:
    monitor_queried: bool = False
    monitor_queries: int = 0
    monitor_latency_s: float = 0.0
    adapter_kind: Optional[str] = None  # "path" | "subtask"
    adapter_latency_s: float = 0.0

    @property
    def adapter_queried(self) -> bool:
        return self.adapter_kind is not None


@dataclass
class TickResult:
    action: AtomicAction
    message: Optional[Message] = None
    timing: TickTiming = field(default_factory=TickTiming)
    note: str = ""


class DecisionPipeline:
    """render -> backend -> parse, with every query recorded."""

    def __init__(self, backend: Backend, transcript: Transcript,
                 clock: Callable[[], float] = time.perf_counter,
                 monitor_timeout_s: float = 2.0, adapter_timeout_s: float = 10.0):
        self.backend = backend
        self.transcript = transcript
        self.clock = clock
        self.monitor_timeout_s = monitor_timeout_s
        self.adapter_timeout_s = adapter_timeout_s

    def _run(self, template_id: TemplateId, state: GameState, agent_index: int,
             artifacts: PromptArtifacts, timeout_s: float):
        bundle = render_prompt(template_id, state, agent_index, artifacts)
        started = self.clock()
        raw, latency = self.backend.complete(bundle, DecisionContext(state, agent_index, artifacts), timeout_s)
        if latency is None:
            latency = self.clock() - started
        return bundle, raw, latency

    def monitor(self, template_id: TemplateId, state, agent_index, artifacts) -> tuple[MonitorVerdict, float]:
        bundle, raw, latency = self._run(template_id, state, agent_index, artifacts, self.monitor_timeout_s)
        verdict = parse_monitor(raw)
        self._record(state.tick, bundle, raw, {"follow_greedy": verdict.follow_greedy,
                                               "level": verdict.adaptation_kind.value if verdict.adaptation_kind else None}, latency)
        return verdict, latency

    def path_adapter(self, state, agent_index, artifacts) -> tuple["parse_path_adapter", float]:
        bundle, raw, latency = self._run(TemplateId.PATH_ADAPTER, state, agent_index, artifacts, self.adapter_timeout_s)
        parsed = parse_path_adapter(raw, len(artifacts.self_plans), len(artifacts.partner_plans))
        self._record(state.tick, bundle, raw, {"p_agent_adapt": parsed.p_agent_adapt,
                                               "p_human_adapt": parsed.p_human_adapt,
                                               "adapt_index": parsed.adapt_index}, latency)
        return parsed, latency

    def subtask_adapter(self, state, agent_index, artifacts) -> tuple["parse_subtask_adapter", float]:
        bundle, raw, latency = self._run(TemplateId.SUBTASK_ADAPTER, state, agent_index, artifacts, self.adapter_timeout_s)
        parsed = parse_subtask_adapter(raw, artifacts.self_options, kitchen_item_cells(state))
        self._record(state.tick, bundle, raw, {"final_action_id": parsed.final_action_id,
                                               "target_cell": list(parsed.target_cell)}, latency)
        return parsed, latency

    def _record(self, tick, bundle, raw, parsed, latency_s):
        self.transcript.append(TranscriptRecord(
            tick=tick,
            template_id=bundle.template_id.value,
            prompt=bundle.rendered,
            raw_response=raw,
            parsed=parsed,
            latency_ms=latency_s * 1000.0,
        ))


class BasePolicy:
    """Shared plumbing: stuck detection and path-following."""

    name = "base"

    def __init__(self, agent_index: int, unstuck: bool = True, seed: int = 0):
        self.agent_index = agent_index
        self.unstuck = unstuck
        self.seed = seed
        self.reset(seed)

    def reset(self, seed: Optional[int] = None):
        if seed is not None:
            self.seed = seed
        self.rng = random.Random(self.seed)
        self.pinned_subtask: Optional[Subtask] = None
        self.pinned_done = False
        self.current_subtask: Optional[Subtask] = None
        self._last_pose = None
        self._last_action: Optional[AtomicAction] = None
        self._committed_for: Optional[Subtask] = None
        self._committed: list[AtomicAction] = []

    def pin_subtask(self, subtask: Subtask):
        self.pinned_subtask = subtask
        self.pinned_done = False
        self.current_subtask = subtask

    def is_stuck(self, state: GameState) -> bool:
        """A movement changed neither cell nor facing. A first bump into an
        obstacle still rotates the agent (that is how aiming works), so only
        a repeat with no pose change counts as stuck."""
        return (
            self._last_action in MOVES
            and self._last_pose == state.agents[self.agent_index].pose
        )

    def _note_outcome(self, state: GameState, action: AtomicAction):
        self._last_pose = state.agents[self.agent_index].pose
        self._last_action = action

    def _track_pinned(self, state: GameState, events: list[Event]):
        if self.pinned_subtask is not None and not self.pinned_done:
            if subtask_satisfied(state, self.agent_index, self.pinned_subtask, events):
                self.pinned_done = True
                self.current_subtask = None

    def path_to(self, state: GameState, target: Cell) -> Optional[Path]:
        """Strict route around the partner, falling back to a partner-free
        route (the greedy agent walks at the partner and relies on unstuck)."""
        try:
            return greedy_path(state, self.agent_index, target)
        except Unreachable:
            pass
        try:
            return solo_path(state.layout, state.agents[self.agent_index].pose, target)
        except Unreachable:
            return None

    def clear_commitment(self):
        self._committed_for = None
        self._committed = []

    def act_toward(self, state: GameState, subtask: Optional[Subtask],
                   allow_unstuck: Optional[bool] = None) -> AtomicAction:
        """Plan once per subtask and execute the action list to the end;
        replan only after a blocked move (classic plan-then-walk execution,
        which keeps two re-planners from dancing around each other)."""
        if allow_unstuck is None:
            allow_unstuck = self.unstuck
        if subtask is None:
            self.clear_commitment()
            return AtomicAction.STAY
        if self.is_stuck(state):
            self.clear_commitment()
            if allow_unstuck:
                return unstuck_action(state, self.agent_index, self.rng)
        if self._committed_for != subtask or not self._committed:
            path = self.path_to(state, subtask.target_cell)
            if path is None:
                self.clear_commitment()
                return AtomicAction.STAY
            self._committed_for = subtask
            self._committed = list(path.actions)
        return self._committed.pop(0)


class GreedyAgent(BasePolicy):
    """Rule-based subtask planner plus shortest-path execution, with the
    optional auto-unstuck behavior."""

    def __init__(self, agent_index: int, unstuck: bool = True, seed: int = 0):
        super().__init__(agent_index, unstuck=unstuck, seed=seed)
        self.name = "greedy" if unstuck else "greedy-nounstuck"

    def tick(self, state: GameState, events: list[Event]) -> TickResult:
        self._track_pinned(state, events)
        if self.pinned_subtask is not None:
            subtask = None if self.pinned_done else self.pinned_subtask
        else:
            subtask = rules.next_subtask(state, self.agent_index)
        self.current_subtask = subtask
        action = self.act_toward(state, subtask)
        self._note_outcome(state, action)
        return TickResult(action=action)


class SubtaskAdaptiveAgent(BasePolicy):
    """Asks the subtask adapter for the next goal whenever the current one
    finishes, then executes it greedily with no path-level adaptation."""

    def __init__(self, agent_index: int, backend: Optional[Backend] = None,
                 unstuck: bool = True, seed: int = 0,
                 transcript: Optional[Transcript] = None,
                 clock: Callable[[], float] = time.perf_counter):
        self.transcript = transcript if transcript is not None else Transcript()
        self.pipeline = DecisionPipeline(backend or RuleBackend(), self.transcript, clock=clock)
        super().__init__(agent_index, unstuck=unstuck, seed=seed)
        self.name = "subtask"

    def reset(self, seed: Optional[int] = None):
        super().reset(seed)
        self.transcript.records.clear()

    def tick(self, state: GameState, events: list[Event]) -> TickResult:
        timing = TickTiming()
        self._track_pinned(state, events)
        if self.pinned_subtask is not None:
            subtask = None if self.pinned_done else self.pinned_subtask
        else:
            if self.current_subtask is not None and (
                subtask_satisfied(state, self.agent_index, self.current_subtask, events)
                or not rules.subtask_feasible(state, self.agent_index, self.current_subtask)
            ):
                self.current_subtask = None
            if self.current_subtask is None:
                self.current_subtask = self._choose_subtask(state, timing)
            subtask = self.current_subtask
        action = self.act_toward(state, subtask)
        self._note_outcome(state, action)
        return TickResult(action=action, timing=timing)

    def _choose_subtask(self, state: GameState, timing: TickTiming) -> Optional[Subtask]:
        options = legal_interactions(state, self.agent_index)
        if not options:
            return None
        artifacts = PromptArtifacts(
            self_options=tuple(options),
            partner_options=tuple(legal_interactions(state, 1 - self.agent_index)),
        )
        try:
            parsed, latency = self.pipeline.subtask_adapter(state, self.agent_index, artifacts)
        except BACKEND_FAILURES:
            return rules.next_subtask(state, self.agent_index)
        timing.adapter_kind = "subtask"
        timing.adapter_latency_s = latency
        option = options[parsed.final_action_id - 1]
        return Subtask(option.kind, parsed.target_cell)


class MonitoredAgent(BasePolicy):
    """Monitor every tick; adapt path or subtask only on the monitor's
    request; revert to the greedy plan once the monitor clears it."""

    def __init__(self, agent_index: int, monitor_backend: Optional[Backend] = None,
                 adapter_backend: Optional[Backend] = None,
                 unstuck: bool = True, seed: int = 0,
                 transcript: Optional[Transcript] = None,
                 announce_self_adapt: bool = True,
                 patience: int = 5,
                 max_plans: int = 6,
                 horizon: int = 10,
                 clock: Callable[[], float] = time.perf_counter):
        self.transcript = transcript if transcript is not None else Transcript()
        backend = monitor_backend or RuleBackend()
        self.monitor_pipeline = DecisionPipeline(backend, self.transcript, clock=clock)
        self.adapter_pipeline = DecisionPipeline(adapter_backend or backend, self.transcript, clock=clock)
        self.announce_self_adapt = announce_self_adapt
        self.patience = patience
        self.max_plans = max_plans
        self.horizon = horizon
        super().__init__(agent_index, unstuck=unstuck, seed=seed)
        self.name = "monitored"

    def reset(self, seed: Optional[int] = None):
        super().reset(seed)
        self.mode = AgentMode.following()
        self.transcript.records.clear()
        self._dup_mute: Optional[tuple[str, str]] = None
        self._last_message: Optional[Message] = None
        self.last_adapter_output: Optional[AdapterOutput] = None

    # -- per-tick entry point ------------------------------------------------

    def tick(self, state: GameState, events: list[Event]) -> TickResult:
        timing = TickTiming()
        message: Optional[Message] = None
        note = ""
        self._track_pinned(state, events)
        self._refresh_subtask(state, events)

        subtask = self.current_subtask
        artifacts = self._artifacts(state, subtask)

        if self.mode.kind == "adapting_path":
            verdict = self._monitor(TemplateId.MONITOR_REVERT_CHECK, state, artifacts, timing)
            if verdict.follow_greedy:
                self.mode = AgentMode.following(state.tick)
                self.clear_commitment()
                note = "reverted to greedy"
            else:
                plan = self.mode.plan
                if plan is None or self.mode.plan_step >= len(plan.actions):
                    # the yield ran its course but the world still conflicts:
                    # ask the adapter again with fresh plans
                    message, note = self._adapt_path(state, artifacts, timing)
                action = self._plan_action() if self.mode.kind == "adapting_path" \
                    else self.act_toward(state, self.current_subtask)
                self._note_outcome(state, action)
                return TickResult(action=action, message=self._dedup(message), timing=timing, note=note or "adapting")

        if self.mode.kind == "awaiting_partner":
            verdict = self._monitor(TemplateId.MONITOR_ADAPT_CHECK, state, artifacts, timing)
            if verdict.follow_greedy:
                self.mode = AgentMode.following(state.tick)
                note = "partner yielded"
            else:
                self.mode.patience -= 1
                if self.mode.patience <= 0:
                    message, note = self._adapt_path(state, artifacts, timing)
                if self.mode.kind == "awaiting_partner":
                    # press the original plan and let the partner step aside
                    action = self.act_toward(state, self.current_subtask, allow_unstuck=False)
                    self._note_outcome(state, action)
                    return TickResult(action=action, message=self._dedup(message), timing=timing, note=note or "awaiting partner")

        if self.mode.kind == "following_greedy":
            verdict = self._monitor(TemplateId.MONITOR_ADAPT_CHECK, state, artifacts, timing)
            if not verdict.follow_greedy:
                if verdict.adaptation_kind is AdaptationKind.PATH_LEVEL:
                    message, note = self._adapt_path(state, artifacts, timing)
                else:
                    note = self._adapt_subtask(state, timing)
                    artifacts = self._artifacts(state, self.current_subtask)

        if self.mode.kind == "adapting_path":
            action = self._plan_action()
        else:
            action = self.act_toward(state, self.current_subtask)
        self._note_outcome(state, action)
        return TickResult(action=action, message=self._dedup(message), timing=timing, note=note)

    # -- helpers ---------------------------------------------------------------

    def _refresh_subtask(self, state: GameState, events: list[Event]):
        if self.pinned_subtask is not None:
            self.current_subtask = None if self.pinned_done else self.pinned_subtask
            return
        if self.current_subtask is not None and (
            subtask_satisfied(state, self.agent_index, self.current_subtask, events)
            or not rules.subtask_feasible(state, self.agent_index, self.current_subtask)
        ):
            self.current_subtask = None
        if self.current_subtask is None:
            self.current_subtask = rules.next_subtask(state, self.agent_index)

    def _artifacts(self, state: GameState, subtask: Optional[Subtask]) -> PromptArtifacts:
        self_path = self.path_to(state, subtask.target_cell) if subtask else None
        partner_subtask = rules.infer_partner_subtask(state, 1 - self.agent_index)
        partner_path = None
        if partner_subtask is not None:
            try:
                partner_path = greedy_path(state, 1 - self.agent_index, partner_subtask.target_cell)
            except Unreachable:
                try:
                    partner_path = solo_path(
                        state.layout, state.agents[1 - self.agent_index].pose, partner_subtask.target_cell
                    )
                except Unreachable:
                    partner_path = None
        mute = self._dup_mute is not None and self._dup_mute == _pair_label(subtask, partner_subtask)
        return PromptArtifacts(
            self_target=subtask.target_cell if subtask else None,
            partner_target=partner_subtask.target_cell if partner_subtask else None,
            self_subtask=subtask,
            partner_subtask=partner_subtask,
            self_path=self_path,
            partner_path=partner_path,
            adaptation_plan=self.mode.plan,
            mute_duplicate=mute,
            horizon=self.horizon,
        )

    def _monitor(self, template_id: TemplateId, state, artifacts, timing: TickTiming) -> MonitorVerdict:
        if artifacts.self_path is None:
            return MonitorVerdict(follow_greedy=True, rationale="no active path")
        try:
            verdict, latency = self.monitor_pipeline.monitor(template_id, state, self.agent_index, artifacts)
        except BACKEND_FAILURES as exc:
            # fail safe: keep the current plan
            return MonitorVerdict(follow_greedy=True, rationale=f"monitor failure: {exc}")
        timing.monitor_queried = True
        timing.monitor_queries += 1
        timing.monitor_latency_s = latency
        return verdict

    def _adapt_path(self, state, artifacts, timing: TickTiming) -> tuple[Optional[Message], str]:
        if artifacts.self_path is None:
            return None, "no path to adapt"
        try:
            plans = enumerate_adapt_plans(
                state, self.agent_index, artifacts.self_path, artifacts.partner_path,
                k=self.max_plans,
            )
        except NoPlanExists:
            return None, "no adaptation plan exists"
        self_plans = tuple(p for p in plans if p.owner is PlanOwner.SELF)
        other_plans = tuple(p for p in plans if p.owner is PlanOwner.OTHER)
        enriched = PromptArtifacts(
            **{**artifacts.__dict__, "self_plans": self_plans, "partner_plans": other_plans}
        )
        try:
            parsed, latency = self.adapter_pipeline.path_adapter(state, self.agent_index, enriched)
        except BACKEND_FAILURES as exc:
            return None, f"path adapter failure: {exc}"
        timing.adapter_kind = "path"
        timing.adapter_latency_s = latency
        if parsed.self_adapts and self_plans:
            plan = self_plans[parsed.adapt_index - 1]
            self.mode = AgentMode.adapting(plan, state.tick)
            self.clear_commitment()
            message = None
            if self.announce_self_adapt:
                message = Message(MessageTemplate.SELF_ADAPT, location=_plan_location(plan))
            self.last_adapter_output = AdapterOutput(
                who_adapts=WhoAdapts.SELF,
                p_agent_adapt=parsed.p_agent_adapt,
                p_human_adapt=parsed.p_human_adapt,
                chosen_plan=plan,
                message=message,
            )
            return message, f"self adapts via {plan.kind.value}"
        if other_plans:
            plan = other_plans[parsed.adapt_index - 1]
            self.mode = AgentMode.awaiting(state.tick, self.patience)
            message = Message(MessageTemplate.REQUEST_ADAPT, location=_plan_location(plan))
            self.last_adapter_output = AdapterOutput(
                who_adapts=WhoAdapts.OTHER,
                p_agent_adapt=parsed.p_agent_adapt,
                p_human_adapt=parsed.p_human_adapt,
                chosen_plan=plan,
                message=message,
            )
            return message, "asked partner to adapt"
        return None, "adapter chose an empty side"

    def _adapt_subtask(self, state, timing: TickTiming) -> str:
        if self.pinned_subtask is not None:
            return "subtask pinned; cannot reassign"
        options = legal_interactions(state, self.agent_index)
        if not options:
            return "no subtask options"
        artifacts = PromptArtifacts(
            self_subtask=self.current_subtask,
            self_options=tuple(options),
            partner_options=tuple(legal_interactions(state, 1 - self.agent_index)),
        )
        try:
            parsed, latency = self.adapter_pipeline.subtask_adapter(state, self.agent_index, artifacts)
        except BACKEND_FAILURES as exc:
            return f"subtask adapter failure: {exc}"
        timing.adapter_kind = "subtask"
        timing.adapter_latency_s = latency
        option = options[parsed.final_action_id - 1]
        previous = self.current_subtask
        self.current_subtask = Subtask(option.kind, parsed.target_cell)
        partner_sub = None
        if parsed.human_action_id and parsed.human_target_cell and artifacts.partner_options:
            idx = parsed.human_action_id - 1
            if 0 <= idx < len(artifacts.partner_options):
                partner_sub = Subtask(artifacts.partner_options[idx].kind, parsed.human_target_cell)
        self.last_adapter_output = AdapterOutput(
            who_adapts=WhoAdapts.SELF,
            p_agent_adapt=1.0,
            chosen_subtask=self.current_subtask,
            partner_subtask=partner_sub,
        )
        if previous == self.current_subtask:
            # the adapter stands by the overlap; stop re-asking until the
            # partner's apparent goal changes
            partner = rules.infer_partner_subtask(state, 1 - self.agent_index)
            self._dup_mute = _pair_label(self.current_subtask, partner)
            return "subtask confirmed despite overlap"
        self._dup_mute = None
        return f"subtask switched to {self.current_subtask.label()}"

    def _dedup(self, message: Optional[Message]) -> Optional[Message]:
        if message is None:
            return None
        if self._last_message == message:
            return None
        self._last_message = message
        return message

    def _plan_action(self) -> AtomicAction:
        plan = self.mode.plan
        if plan is None or self.mode.plan_step >= len(plan.actions):
            return AtomicAction.STAY
        action = plan.actions[self.mode.plan_step]
        self.mode.plan_step += 1
        return action


def _plan_location(plan: AdaptPlan) -> Cell:
    if plan.yield_cell is not None:
        return plan.yield_cell
    return plan.target


def _pair_label(mine: Optional[Subtask], theirs: Optional[Subtask]) -> tuple[str, str]:
    return (
        mine.label() if mine else "-",
        theirs.label() if theirs else "-",
    )
