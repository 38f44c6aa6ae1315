"""Episode execution and logging, shared by the harness and the live server."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

from .env import AtomicAction, Event, EventKind, GameState, step
from .llm import Transcript


@dataclass
class TickLog:
    tick: int
    actions: tuple[str, str]
    cells: tuple[tuple[int, int], tuple[int, int]]
    blocked: tuple[bool, bool]
    monitor_queries: tuple[int, int]
    adapter_queried: tuple[Optional[str], Optional[str]]
    messages: tuple[Optional[str], Optional[str]]
    score: int

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "actions": list(self.actions),
            "cells": [list(c) for c in self.cells],
            "blocked": list(self.blocked),
            "monitor_queries": list(self.monitor_queries),
            "adapter_queried": list(self.adapter_queried),
            "messages": list(self.messages),
            "score": self.score,
        }


@dataclass
class EpisodeLog:
    layout_name: str
    pairing: tuple[str, str]
    seed: int
    ticks: list[TickLog] = field(default_factory=list)
    final_score: int = 0
    length: int = 0

    @property
    def stuck_ticks(self) -> tuple[int, int]:
        a = sum(1 for t in self.ticks if t.blocked[0])
        b = sum(1 for t in self.ticks if t.blocked[1])
        return (a, b)

    @property
    def monitor_queries(self) -> tuple[int, int]:
        return (
            sum(t.monitor_queries[0] for t in self.ticks),
            sum(t.monitor_queries[1] for t in self.ticks),
        )

    @property
    def adapter_queries(self) -> tuple[int, int]:
        return (
            sum(1 for t in self.ticks if t.adapter_queried[0] is not None),
            sum(1 for t in self.ticks if t.adapter_queried[1] is not None),
        )

    def action_log_hash(self) -> str:
        payload = ";".join(f"{t.tick}:{t.actions[0]},{t.actions[1]}" for t in self.ticks)
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "layout": self.layout_name,
            "pairing": list(self.pairing),
            "seed": self.seed,
            "final_score": self.final_score,
            "length": self.length,
            "stuck_ticks": list(self.stuck_ticks),
            "action_log_hash": self.action_log_hash(),
            "ticks": [t.to_dict() for t in self.ticks],
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)


def agent_seed(seed: int, agent_index: int) -> int:
    return seed * 2 + agent_index


class EpisodeRunner:
    """Advances one episode tick by tick: ask both agents, step the world."""

    def __init__(self, initial: GameState, agents, seed: int = 0,
                 horizon: Optional[int] = None,
                 stop_when: Optional[Callable[[GameState], bool]] = None):
        self.state = initial
        self.agents = list(agents)
        self.seed = seed
        self.horizon = horizon if horizon is not None else initial.config.horizon
        self.stop_when = stop_when
        self.last_events: list[Event] = []
        self.log = EpisodeLog(
            layout_name=initial.layout.name,
            pairing=(self.agents[0].name, self.agents[1].name),
            seed=seed,
        )
        for i, agent in enumerate(self.agents):
            agent.reset(agent_seed(seed, i))

    @property
    def done(self) -> bool:
        if self.state.tick >= self.horizon:
            return True
        return bool(self.stop_when and self.stop_when(self.state))

    def step_once(self, override_actions: Optional[dict[int, AtomicAction]] = None):
        """One tick; `override_actions` replaces an agent's choice (the live
        server injects the human action this way)."""
        results = [agent.tick(self.state, self.last_events) for agent in self.agents]
        actions = [r.action for r in results]
        if override_actions:
            for idx, action in override_actions.items():
                actions[idx] = action
        before = self.state
        self.state, events = step(before, (actions[0], actions[1]))
        self.last_events = events
        blocked = tuple(
            any(e.kind is EventKind.BLOCKED and e.agent == i for e in events) for i in range(2)
        )
        self.log.ticks.append(TickLog(
            tick=before.tick,
            actions=(actions[0].value, actions[1].value),
            cells=(self.state.agents[0].cell, self.state.agents[1].cell),
            blocked=blocked,
            monitor_queries=(results[0].timing.monitor_queries, results[1].timing.monitor_queries),
            adapter_queried=(results[0].timing.adapter_kind, results[1].timing.adapter_kind),
            messages=(
                results[0].message.text if results[0].message else None,
                results[1].message.text if results[1].message else None,
            ),
            score=self.state.score,
        ))
        self.log.final_score = self.state.score
        self.log.length = self.state.tick
        return self.state, events, results

    def run(self) -> EpisodeLog:
        while not self.done:
            self.step_once()
        return self.log


def transcripts_of(agents) -> list[Transcript]:
    return [agent.transcript for agent in agents if hasattr(agent, "transcript")]
