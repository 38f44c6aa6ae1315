"""Decision backends: rule oracle, hosted chat model, and transcript replay.

Every backend returns raw response text for the shared parsers, so agents
behave identically no matter where the words came from. The rule oracle
writes its decision in the same structured trailing line the prompts ask a
model for, which keeps transcripts uniform and replayable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from ..env import GameState, Subtask
from ..llm import (
    EndpointConfig,
    PromptBundle,
    TemplateId,
    Transcript,
    query,
)
from . import rules


@dataclass(frozen=True)
class DecisionContext:
    state: GameState
    agent_index: int
    artifacts: "PromptArtifacts"


class Backend(Protocol):
    name: str

    def complete(self, bundle: PromptBundle, ctx: DecisionContext, timeout_s: float) -> tuple[str, float]:
        """Return (raw response text, latency seconds)."""


class RuleBackend:
    """Deterministic oracle standing in for the LLM. Reports zero latency:
    it is not a timed external resource, and zeroing it keeps rule-backed
    reports byte-for-byte reproducible."""

    name = "rule"

    def complete(self, bundle: PromptBundle, ctx: DecisionContext, timeout_s: float) -> tuple[str, float]:
        handler = {
            TemplateId.MONITOR_ADAPT_CHECK: self._monitor_adapt,
            TemplateId.MONITOR_REVERT_CHECK: self._monitor_revert,
            TemplateId.PATH_ADAPTER: self._path_adapter,
            TemplateId.SUBTASK_ADAPTER: self._subtask_adapter,
        }[bundle.template_id]
        return handler(ctx), 0.0

    def _monitor_ctx(self, ctx: DecisionContext) -> rules.MonitorContext:
        art = ctx.artifacts
        return rules.MonitorContext(
            subtask=art.self_subtask,
            self_path=art.self_path,
            partner_subtask=art.partner_subtask,
            partner_path=art.partner_path,
            horizon=art.horizon,
            mute_duplicate=art.mute_duplicate,
        )

    def _monitor_adapt(self, ctx: DecisionContext) -> str:
        follow, level, analysis = rules.monitor_adapt_rule(ctx.state, ctx.agent_index, self._monitor_ctx(ctx))
        if follow:
            return f"{analysis}\nrespond: true"
        return f"{analysis}\nrespond: false, level: {level}"

    def _monitor_revert(self, ctx: DecisionContext) -> str:
        follow, analysis = rules.monitor_revert_rule(ctx.state, ctx.agent_index, self._monitor_ctx(ctx))
        return f"{analysis}\nrespond: {'true' if follow else 'false'}"

    def _path_adapter(self, ctx: DecisionContext) -> str:
        art = ctx.artifacts
        best_self = art.self_plans[0] if art.self_plans else None
        best_other = art.partner_plans[0] if art.partner_plans else None
        self_wins = best_self is not None and (best_other is None or best_self.cost <= best_other.cost)
        if self_wins:
            idx = 1
            analysis = f"My cheapest valid plan costs {best_self.cost}; I should adapt."
            line = f"p_agent_adapt: 1, p_human_adapt: 0, adapt_index: {idx}"
        else:
            idx = 1
            analysis = f"Only the human has a workable yield (cost {best_other.cost}); they should adapt."
            line = f"p_agent_adapt: 0, p_human_adapt: 1, adapt_index: {idx}"
        return f"{analysis}\n{line}"

    def _subtask_adapter(self, ctx: DecisionContext) -> str:
        state, idx = ctx.state, ctx.agent_index
        art = ctx.artifacts
        inferred = rules.infer_partner_subtask(state, 1 - idx)
        discount = rules.partner_discount(state, 1 - idx, inferred)
        chosen = rules.next_subtask(state, idx, discount=discount, allow_staging=True)
        if chosen is not None and rules.duplicate_subtasks(state, chosen, inferred):
            alt = rules.next_subtask(
                state, idx,
                discount=rules.PartnerDiscount(ingredients=discount.ingredients, dish_covered=True),
                allow_staging=True,
            )
            chosen = alt or chosen
        if chosen is None:
            fallback = rules._place_on_counter(state, idx)
            chosen = fallback
        option_id = _option_index(art.self_options, chosen)
        if chosen is None or option_id is None:
            # nothing feasible: point at the first listed option's first cell
            first = art.self_options[0]
            tx, ty = first.cells[0]
            return (
                "No clearly useful subtask; defaulting to the first listed option.\n"
                f"human intended target position: (0, 0), human intended action id: 1, "
                f"final_action_id: 1, target position: ({tx}, {ty})"
            )
        hx, hy = inferred.target_cell if inferred else (0, 0)
        human_id = _option_index(art.partner_options, inferred) or 1
        tx, ty = chosen.target_cell
        analysis = f"I should {chosen.kind.value.replace('_', ' ')} at ({tx}, {ty})."
        if inferred:
            analysis += f" The human looks headed for {inferred.kind.value.replace('_', ' ')} at ({hx}, {hy})."
        return (
            f"{analysis}\n"
            f"human intended target position: ({hx}, {hy}), human intended action id: {human_id}, "
            f"final_action_id: {option_id}, target position: ({tx}, {ty})"
        )


def _option_index(options, subtask: Optional[Subtask]) -> Optional[int]:
    if subtask is None:
        return None
    for i, option in enumerate(options, start=1):
        if option.kind is subtask.kind and subtask.target_cell in option.cells:
            return i
    return None


class LLMBackend:
    """OpenAI-compatible chat endpoint."""

    name = "llm"

    def __init__(self, endpoint: EndpointConfig):
        self.endpoint = endpoint

    def complete(self, bundle: PromptBundle, ctx: DecisionContext, timeout_s: float) -> tuple[str, float]:
        return query(bundle, self.endpoint, timeout_s=timeout_s)


class ReplayBackend:
    """Serves recorded responses in original order instead of the network."""

    name = "replay"

    def __init__(self, transcript: Transcript):
        self._records = list(transcript.records)
        self._cursor = 0

    def complete(self, bundle: PromptBundle, ctx: DecisionContext, timeout_s: float) -> tuple[str, float]:
        if self._cursor >= len(self._records):
            raise RuntimeError("transcript exhausted during replay")
        record = self._records[self._cursor]
        self._cursor += 1
        if record.template_id != bundle.template_id.value:
            raise RuntimeError(
                f"replay divergence: expected {record.template_id}, got {bundle.template_id.value}"
            )
        return record.raw_response, record.latency_ms / 1000.0
