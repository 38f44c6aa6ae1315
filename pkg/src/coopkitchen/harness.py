"""The three benchmark modes, metric bookkeeping, and report files.

Mode 1 runs full scoring episodes; Mode 2 replays the bundled short
scenarios and checks that both assigned duties finish inside the time
limit; Mode 3 asks the subtask adapter for one decision per frame and
compares the proposed goal location against the authored ground truth.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .agents import GreedyAgent, LLMBackend, MonitoredAgent, ReplayBackend, RuleBackend, SubtaskAdaptiveAgent
from .agents.backends import DecisionContext
from .env import initial_state, legal_interactions
from .episodes import EpisodeLog, EpisodeRunner
from .grid import Layout
from .llm import (
    EndpointConfig,
    IndexOutOfRange,
    PromptArtifacts,
    TemplateId,
    Transcript,
    UnlistedTarget,
    Unparseable,
    kitchen_item_cells,
    parse_subtask_adapter,
    render_prompt,
)
from .scenarios import Frame, Scenario, validate_scenario


class ConfigError(ValueError):
    pass


KNOWN_POLICIES = ("greedy", "subtask", "monitored")


def build_agent(spec: str, index: int, endpoint: Optional[EndpointConfig] = None):
    """Agent factory for CLI specs like `greedy:nounstuck` or `monitored:rule`."""
    parts = spec.split(":")
    kind, flags = parts[0], parts[1:]
    unstuck = "nounstuck" not in flags
    backend_kind = "llm" if "llm" in flags else "rule"
    if backend_kind == "llm" and endpoint is None:
        raise ConfigError(f"agent {spec!r} needs --endpoint and --model")
    if kind == "greedy":
        return GreedyAgent(index, unstuck=unstuck)
    if kind == "subtask":
        backend = LLMBackend(endpoint) if backend_kind == "llm" else RuleBackend()
        return SubtaskAdaptiveAgent(index, backend=backend, unstuck=unstuck)
    if kind == "monitored":
        backend = LLMBackend(endpoint) if backend_kind == "llm" else RuleBackend()
        return MonitoredAgent(index, monitor_backend=backend, adapter_backend=backend, unstuck=unstuck)
    raise ConfigError(f"unknown agent kind {kind!r}; expected one of {KNOWN_POLICIES}")


@dataclass
class LatencyStat:
    mean: float = 0.0
    std: float = 0.0
    count: int = 0

    def formatted(self) -> str:
        return f"{self.mean:.2f} ({self.std:.2f})"

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "count": self.count}


def latency_stat(latencies_ms: Sequence[float]) -> LatencyStat:
    if not latencies_ms:
        return LatencyStat()
    seconds = [v / 1000.0 for v in latencies_ms]
    return LatencyStat(
        mean=statistics.fmean(seconds),
        std=statistics.pstdev(seconds),
        count=len(seconds),
    )


@dataclass
class TrialReport:
    mode: str
    pairing: tuple[str, str]
    seed: int
    score: int
    success: bool
    stuck_ticks: tuple[int, int]
    length: int
    monitor_latency: LatencyStat
    subtask_adapter_latency: LatencyStat
    path_adapter_latency: LatencyStat
    adapter_query_ratio: float
    scenario_id: Optional[str] = None
    adaptation_type: Optional[str] = None
    action_log_hash: str = ""
    transcript_ref: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "pairing": list(self.pairing),
            "seed": self.seed,
            "score": self.score,
            "success": self.success,
            "stuck_ticks": list(self.stuck_ticks),
            "length": self.length,
            "latencies": {
                "L_m": self.monitor_latency.to_dict(),
                "L_sa": self.subtask_adapter_latency.to_dict(),
                "L_pa": self.path_adapter_latency.to_dict(),
            },
            "N_a": self.adapter_query_ratio,
            "scenario_id": self.scenario_id,
            "adaptation_type": self.adaptation_type,
            "action_log_hash": self.action_log_hash,
            "transcript_ref": self.transcript_ref,
        }


MONITOR_TEMPLATES = (TemplateId.MONITOR_ADAPT_CHECK, TemplateId.MONITOR_REVERT_CHECK)
ADAPTER_TEMPLATES = (TemplateId.SUBTASK_ADAPTER, TemplateId.PATH_ADAPTER)


def adapter_query_ratio(transcript: Optional[Transcript]) -> float:
    if transcript is None:
        return 0.0
    monitor = transcript.count(MONITOR_TEMPLATES)
    adapters = transcript.count(ADAPTER_TEMPLATES)
    if monitor == 0:
        return 0.0
    return adapters / monitor


def compute_metrics(transcripts: Sequence[Transcript], logs: Sequence[EpisodeLog],
                    successes: Optional[Sequence[bool]] = None) -> dict:
    """Aggregate metrics block over raw transcripts and episode logs:
    per-query latencies as mean (std) seconds, the adapter-to-monitor query
    ratio, stuck ticks, and the success rate when outcomes are supplied."""
    def merged(template_ids) -> LatencyStat:
        out: list[float] = []
        for t in transcripts:
            out.extend(t.latencies_ms(template_ids))
        return latency_stat(out)

    monitor_queries = sum(t.count(MONITOR_TEMPLATES) for t in transcripts)
    adapter_queries = sum(t.count(ADAPTER_TEMPLATES) for t in transcripts)
    block = {
        "L_m": merged(MONITOR_TEMPLATES).formatted(),
        "L_sa": merged([TemplateId.SUBTASK_ADAPTER]).formatted(),
        "L_pa": merged([TemplateId.PATH_ADAPTER]).formatted(),
        "N_a": f"{100.0 * adapter_queries / monitor_queries:.1f}%" if monitor_queries else "0.0%",
        "monitor_queries": monitor_queries,
        "adapter_queries": adapter_queries,
        "stuck_ticks": [list(log.stuck_ticks) for log in logs],
    }
    if successes is not None and successes:
        block["success_rate"] = sum(map(bool, successes)) / len(successes)
    return block


def trial_report_from(mode: str, log: EpisodeLog, agents, success: bool,
                      scenario: Optional[Scenario] = None,
                      transcript_ref: Optional[str] = None) -> TrialReport:
    transcript = getattr(agents[0], "transcript", None)
    return TrialReport(
        mode=mode,
        pairing=log.pairing,
        seed=log.seed,
        score=log.final_score,
        success=success,
        stuck_ticks=log.stuck_ticks,
        length=log.length,
        monitor_latency=latency_stat(transcript.latencies_ms(MONITOR_TEMPLATES) if transcript else []),
        subtask_adapter_latency=latency_stat(transcript.latencies_ms([TemplateId.SUBTASK_ADAPTER]) if transcript else []),
        path_adapter_latency=latency_stat(transcript.latencies_ms([TemplateId.PATH_ADAPTER]) if transcript else []),
        adapter_query_ratio=adapter_query_ratio(transcript),
        scenario_id=scenario.id if scenario else None,
        adaptation_type=scenario.adaptation_type.value if scenario else None,
        action_log_hash=log.action_log_hash(),
        transcript_ref=transcript_ref,
    )


def run_overall(layout: Layout, pairing: tuple[str, str], horizon: int,
                seeds: Sequence[int], endpoint: Optional[EndpointConfig] = None,
                out_dir: Optional[Path] = None, config=None) -> list[TrialReport]:
    """Mode 1: full episodes, score within the horizon."""
    reports = []
    for trial, seed in enumerate(seeds):
        agents = [build_agent(pairing[i], i, endpoint) for i in range(2)]
        runner = EpisodeRunner(initial_state(layout, config), agents, seed=seed, horizon=horizon)
        log = runner.run()
        ref = _persist_trial(out_dir, "overall", trial, log, agents, {
            "layout": layout.name, "horizon": horizon, "pairing": list(pairing), "seed": seed,
        }) if out_dir else None
        reports.append(trial_report_from("overall", log, agents, success=log.final_score > 0,
                                         transcript_ref=ref))
    return reports


def run_path_scenarios(scenarios: Iterable[Scenario], pairing: tuple[str, str],
                       seeds: Sequence[int], endpoint: Optional[EndpointConfig] = None,
                       out_dir: Optional[Path] = None,
                       validate: bool = True) -> list[TrialReport]:
    """Mode 2: success iff both assigned duties finish within the limit."""
    reports = []
    trial = 0
    for scenario in scenarios:
        if validate:
            validate_scenario(scenario)
        for seed in seeds:
            agents = [build_agent(pairing[i], i, endpoint) for i in range(2)]

            def both_done(_):
                return all(a.pinned_done for a in agents)

            runner = EpisodeRunner(scenario.start, agents, seed=seed,
                                   horizon=scenario.time_limit, stop_when=both_done)
            for i, agent in enumerate(agents):
                agent.pin_subtask(scenario.assigned[i])
            log = runner.run()
            success = all(a.pinned_done for a in agents)
            ref = _persist_trial(out_dir, "path", trial, log, agents, {
                "scenario": scenario.id, "layout": scenario.layout.name,
                "pairing": list(pairing), "seed": seed, "time_limit": scenario.time_limit,
            }) if out_dir else None
            reports.append(trial_report_from("path", log, agents, success=success,
                                             scenario=scenario, transcript_ref=ref))
            trial += 1
    return reports


@dataclass
class FrameResult:
    frame_id: str
    proposed_kind: Optional[str]
    proposed_target: Optional[tuple[int, int]]
    match: bool
    warning: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "proposed_kind": self.proposed_kind,
            "proposed_target": list(self.proposed_target) if self.proposed_target else None,
            "match": self.match,
            "warning": self.warning,
        }


def run_subtask_frames(frames: Iterable[Frame], backend_kind: str = "rule",
                       endpoint: Optional[EndpointConfig] = None,
                       backend=None) -> list[FrameResult]:
    """Mode 3: one subtask-adapter decision per frame, target compared to
    the authored set of acceptable goal locations."""
    if backend is None:
        backend = LLMBackend(endpoint) if backend_kind == "llm" else RuleBackend()
    results = []
    for frame in frames:
        state = frame.start
        artifacts = PromptArtifacts(
            self_options=tuple(legal_interactions(state, frame.agent_index)),
            partner_options=tuple(legal_interactions(state, 1 - frame.agent_index)),
        )
        bundle = render_prompt(TemplateId.SUBTASK_ADAPTER, state, frame.agent_index, artifacts)
        try:
            raw, _ = backend.complete(bundle, DecisionContext(state, frame.agent_index, artifacts), 30.0)
            parsed = parse_subtask_adapter(raw, artifacts.self_options, kitchen_item_cells(state))
        except UnlistedTarget as exc:
            results.append(FrameResult(frame.id, None, exc.cell, match=False,
                                       warning=f"proposed unlisted cell {exc.cell}"))
            continue
        except (Unparseable, IndexOutOfRange) as exc:
            results.append(FrameResult(frame.id, None, None, match=False, warning=str(exc)))
            continue
        option = artifacts.self_options[parsed.final_action_id - 1]
        match = parsed.target_cell in frame.acceptable_targets
        results.append(FrameResult(frame.id, option.kind.value, parsed.target_cell, match))
    return results


# --- aggregation and report files ---------------------------------------------


def aggregate_overall(reports: Sequence[TrialReport]) -> dict:
    scores = [r.score for r in reports]
    return {
        "trials": len(reports),
        "score_mean": statistics.fmean(scores) if scores else 0.0,
        "score_std": statistics.pstdev(scores) if scores else 0.0,
    }


def aggregate_path(reports: Sequence[TrialReport]) -> dict:
    by_type: dict[str, list[TrialReport]] = {}
    for r in reports:
        by_type.setdefault(r.adaptation_type or "?", []).append(r)
    out = {}
    for kind, rows in sorted(by_type.items()):
        stuck = [r.stuck_ticks[0] for r in rows]
        out[kind] = {
            "trials": len(rows),
            "success_rate": sum(r.success for r in rows) / len(rows),
            "stuck_mean": statistics.fmean(stuck),
            "stuck_std": statistics.pstdev(stuck),
        }
    return out


def latency_block(reports: Sequence[TrialReport]) -> dict:
    def merged(select) -> LatencyStat:
        merged_ms: list[float] = []
        for r in reports:
            stat = select(r)
            merged_ms.extend([stat.mean * 1000.0] * stat.count)
        return latency_stat(merged_ms)

    l_m = merged(lambda r: r.monitor_latency)
    l_sa = merged(lambda r: r.subtask_adapter_latency)
    l_pa = merged(lambda r: r.path_adapter_latency)
    ratios = [r.adapter_query_ratio for r in reports if r.monitor_latency.count]
    return {
        "L_m": l_m.formatted(),
        "L_sa": l_sa.formatted(),
        "L_pa": l_pa.formatted(),
        "N_a": f"{100.0 * statistics.fmean(ratios):.1f}%" if ratios else "0.0%",
    }


def write_report(path, mode: str, reports: Sequence[TrialReport], extra: Optional[dict] = None):
    payload = {
        "schema": "coopkitchen-report-v1",
        "mode": mode,
        "trials": [r.to_dict() for r in reports],
    }
    if mode == "overall":
        payload["aggregate"] = aggregate_overall(reports)
    elif mode == "path":
        payload["aggregate"] = aggregate_path(reports)
    payload["latency"] = latency_block(reports)
    if extra:
        payload.update(extra)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
    return payload


def render_table(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    def fmt(row):
        return "  ".join(str(v).ljust(w) for v, w in zip(row, widths))
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines += [fmt(r) for r in rows]
    return "\n".join(lines)


def _persist_trial(out_dir: Path, mode: str, trial: int, log: EpisodeLog, agents, meta: dict) -> str:
    trial_dir = Path(out_dir) / f"trial_{trial:03d}"
    trial_dir.mkdir(parents=True, exist_ok=True)
    log.save(trial_dir / "log.json")
    meta = dict(meta, mode=mode, action_log_hash=log.action_log_hash())
    transcripts = {}
    for i, agent in enumerate(agents):
        transcript = getattr(agent, "transcript", None)
        if transcript is not None and transcript.records:
            name = f"transcript_{i}.jsonl"
            transcript.save(trial_dir / name)
            transcripts[str(i)] = name
    meta["transcripts"] = transcripts
    with open(trial_dir / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return str(trial_dir)


def replay_trial(trial_dir) -> tuple[str, str]:
    """Re-run a persisted trial with responses served from its transcripts;
    returns (original hash, replayed hash)."""
    from .scenarios import bundled_scenarios, layout_by_name

    trial_dir = Path(trial_dir)
    meta = json.loads((trial_dir / "meta.json").read_text(encoding="utf-8"))
    transcripts = {
        int(i): Transcript.load(trial_dir / name) for i, name in meta["transcripts"].items()
    }

    def agent_for(spec: str, index: int):
        if index in transcripts:
            backend = ReplayBackend(transcripts[index])
            kind = spec.split(":")[0]
            if kind == "subtask":
                return SubtaskAdaptiveAgent(index, backend=backend)
            return MonitoredAgent(index, monitor_backend=backend, adapter_backend=backend)
        return build_agent(spec, index)

    agents = [agent_for(meta["pairing"][i], i) for i in range(2)]

    if meta["mode"] == "path":
        scenario = next(s for s in bundled_scenarios() if s.id == meta["scenario"])
        def both_done(_):
            return all(a.pinned_done for a in agents)
        runner = EpisodeRunner(scenario.start, agents, seed=meta["seed"],
                               horizon=meta["time_limit"], stop_when=both_done)
        for i, agent in enumerate(agents):
            agent.pin_subtask(scenario.assigned[i])
    else:
        layout = layout_by_name(meta["layout"])
        runner = EpisodeRunner(initial_state(layout), agents, seed=meta["seed"], horizon=meta["horizon"])
    log = runner.run()
    return meta["action_log_hash"], log.action_log_hash()
