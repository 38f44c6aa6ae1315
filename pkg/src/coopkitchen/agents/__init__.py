from .types import (
    AdaptationKind,
    AdapterOutput,
    AgentMode,
    Message,
    MessageTemplate,
    MonitorVerdict,
    WhoAdapts,
)
from .backends import Backend, DecisionContext, LLMBackend, ReplayBackend, RuleBackend
from .policies import (
    BasePolicy,
    GreedyAgent,
    MonitoredAgent,
    SubtaskAdaptiveAgent,
    TickResult,
    TickTiming,
)

__all__ = [
    "AdaptationKind",
    "AdapterOutput",
    "AgentMode",
    "Backend",
    "BasePolicy",
    "DecisionContext",
    "GreedyAgent",
    "LLMBackend",
    "Message",
    "MessageTemplate",
    "MonitoredAgent",
    "MonitorVerdict",
    "ReplayBackend",
    "RuleBackend",
    "SubtaskAdaptiveAgent",
    "TickResult",
    "TickTiming",
    "WhoAdapts",
]
