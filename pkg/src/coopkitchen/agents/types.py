"""Decision types shared by agent policies, rule oracles, and parsers."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from ..env import Subtask
from ..grid import Cell
from ..llm import AdaptationKind, MonitorVerdict
from ..planning import AdaptPlan


class WhoAdapts(enum.Enum):
    SELF = "self"
    OTHER = "other"
    NONE = "none"


class MessageTemplate(enum.Enum):
    SELF_ADAPT = "self_adapt"
    REQUEST_ADAPT = "request_adapt"
    NO_ADAPTATION = "no_adaptation"


@dataclass(frozen=True)
class Message:
    template: MessageTemplate
    location: Optional[Cell] = None
    polite: bool = False

    @property
    def text(self) -> str:
        if self.template is MessageTemplate.NO_ADAPTATION:
            return "No adaptation"
        x, y = self.location
        if self.template is MessageTemplate.SELF_ADAPT:
            base = f"I will adapt to location [{x}, {y}]."
        else:
            base = f"Could you adapt to location [{x}, {y}]?"
        return base + (" Thank you!" if self.polite else "")


@dataclass(frozen=True)
class AdapterOutput:
    who_adapts: WhoAdapts
    p_agent_adapt: float = 0.0
    p_human_adapt: float = 0.0
    chosen_plan: Optional[AdaptPlan] = None
    chosen_subtask: Optional[Subtask] = None
    partner_subtask: Optional[Subtask] = None
    message: Optional[Message] = None
    rationale: str = ""


@dataclass
class AgentMode:
    """Execution mode of the monitored agent; a plain state record."""

    kind: str = "following_greedy"  # following_greedy | adapting_path | awaiting_partner
    plan: Optional[AdaptPlan] = None
    plan_step: int = 0
    since_tick: int = 0
    patience: int = 0

    @classmethod
    def following(cls, tick: int = 0) -> "AgentMode":
        return cls(kind="following_greedy", since_tick=tick)

    @classmethod
    def adapting(cls, plan: AdaptPlan, tick: int) -> "AgentMode":
        return cls(kind="adapting_path", plan=plan, plan_step=0, since_tick=tick)

    @classmethod
    def awaiting(cls, tick: int, patience: int) -> "AgentMode":
        return cls(kind="awaiting_partner", since_tick=tick, patience=patience)
