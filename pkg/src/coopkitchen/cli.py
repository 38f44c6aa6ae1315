"""Command-line interface: layout analysis, the three benchmark modes,
transcript replay, and the live session server."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import UnsolvableLayout, analyze
from .harness import (
    ConfigError,
    aggregate_overall,
    aggregate_path,
    latency_block,
    render_table,
    replay_trial,
    run_overall,
    run_path_scenarios,
    run_subtask_frames,
    write_report,
)
from .llm import EndpointConfig
from .scenarios import bundled_frames, bundled_scenarios, load_layout_arg, load_scenario_file

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _endpoint_from(args) -> EndpointConfig | None:
    if not getattr(args, "endpoint", None):
        return None
    return EndpointConfig(
        url=args.endpoint,
        model=args.model or "gpt-4o",
        api_key=os.environ.get("COOPKITCHEN_API_KEY"),
        timeout_s=10.0,
    )


def _pairing_from(args) -> tuple[str, str]:
    specs = {"A": "monitored:rule", "B": "greedy"}
    for item in args.agent or []:
        if "=" not in item:
            raise ConfigError(f"--agent expects A=<spec> or B=<spec>, got {item!r}")
        slot, spec = item.split("=", 1)
        if slot not in specs:
            raise ConfigError(f"unknown agent slot {slot!r}")
        specs[slot] = spec
    return (specs["A"], specs["B"])


def _seeds_from(args) -> list[int]:
    return [args.seed + i for i in range(args.trials)]


def cmd_analyze(args) -> int:
    layouts = load_layout_arg(args.layout)
    rows = []
    report = []
    for layout in layouts:
        try:
            result = analyze(layout)
        except UnsolvableLayout:
            rows.append([layout.name, "-", "-", "unsolvable"])
            report.append({"layout": layout.name, "solvable": False})
            continue
        rows.append([layout.name, result.free_cells, result.collision_points, result.format_fluency()])
        report.append({
            "layout": layout.name,
            "solvable": True,
            "free_cells": result.free_cells,
            "collision_points": result.collision_points,
            "fluency": result.fluency_percent,
            "obstructed": sorted(list(c) for c in result.obstructed),
        })
    print(render_table(rows, ["layout", "free cells", "collision points", "fluency"]))
    if args.out:
        Path(args.out).write_text(json.dumps({"schema": "coopkitchen-analysis-v1", "layouts": report}, indent=1))
        print(f"report written to {args.out}")
    return EXIT_OK


def cmd_overall(args) -> int:
    layouts = load_layout_arg(args.layout)
    pairing = _pairing_from(args)
    endpoint = _endpoint_from(args)
    episode_config = None
    if args.config:
        from .env import config_from_dict

        episode_config = config_from_dict(json.loads(Path(args.config).read_text()))
    all_rows = []
    for layout in layouts:
        reports = run_overall(layout, pairing, args.horizon, _seeds_from(args), endpoint,
                              out_dir=Path(args.out) / layout.name if args.out else None,
                              config=episode_config)
        agg = aggregate_overall(reports)
        all_rows.append([layout.name, f"{pairing[0]} + {pairing[1]}",
                         f"{agg['score_mean']:.1f} ({agg['score_std']:.1f})"])
        if args.out:
            write_report(Path(args.out) / f"overall_{layout.name}.json", "overall", reports,
                         extra={"layout": layout.name, "horizon": args.horizon})
    print(render_table(all_rows, ["layout", "pairing", "score mean (std)"]))
    return EXIT_OK


def cmd_path_bench(args) -> int:
    scenarios = bundled_scenarios() if args.suite == "bundled" else load_scenario_file(args.suite)
    pairing = _pairing_from(args)
    endpoint = _endpoint_from(args)
    reports = run_path_scenarios(scenarios, pairing, _seeds_from(args), endpoint,
                                 out_dir=Path(args.out) if args.out else None)
    agg = aggregate_path(reports)
    rows = [
        [kind, block["trials"], f"{block['success_rate']:.2f}", f"{block['stuck_mean']:.1f} ({block['stuck_std']:.1f})"]
        for kind, block in agg.items()
    ]
    print(render_table(rows, ["adaptation type", "trials", "success rate", "stuck ticks mean (std)"]))
    latencies = latency_block(reports)
    print(f"\nL_m {latencies['L_m']}  L_sa {latencies['L_sa']}  L_pa {latencies['L_pa']}  N_a {latencies['N_a']}")
    if args.out:
        write_report(Path(args.out) / "path_bench.json", "path", reports)
        print(f"report written to {args.out}/path_bench.json")
    return EXIT_OK


def cmd_subtask_bench(args) -> int:
    frames = bundled_frames()
    backend = "llm" if args.backend == "llm" else "rule"
    results = run_subtask_frames(frames, backend, _endpoint_from(args))
    rows = [
        [r.frame_id, r.proposed_kind or "-", r.proposed_target or "-", "yes" if r.match else "no", r.warning or ""]
        for r in results
    ]
    accuracy = sum(r.match for r in results) / len(results) if results else 0.0
    print(render_table(rows, ["frame", "proposed", "target", "match", "warning"]))
    print(f"\naccuracy: {accuracy:.2f} ({sum(r.match for r in results)}/{len(results)})")
    if args.out:
        payload = {
            "schema": "coopkitchen-frames-report-v1",
            "results": [r.to_dict() for r in results],
            "accuracy": accuracy,
        }
        Path(args.out).write_text(json.dumps(payload, indent=1))
        print(f"report written to {args.out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    original, replayed = replay_trial(args.transcript)
    match = original == replayed
    print(f"original: {original}\nreplayed: {replayed}\n{'identical' if match else 'DIVERGED'}")
    return EXIT_OK if match else EXIT_RUNTIME


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app()
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopkitchen",
                                     description="Two-chef kitchen coordination benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="teaming fluency and solvability of layouts")
    p.add_argument("--layout", required=True, help="bundled layout name, file, or directory")
    p.add_argument("--out", help="write machine-readable report here")
    p.set_defaults(func=cmd_analyze)

    def common(p):
        p.add_argument("--agent", action="append", metavar="SLOT=SPEC",
                       help="A=<kind[:flags]> or B=<...>; kinds: greedy, subtask, monitored; "
                            "flags: rule, llm, nounstuck")
        p.add_argument("--trials", type=int, default=5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--endpoint", help="OpenAI-compatible chat completions URL")
        p.add_argument("--model", help="model id for --backend llm")
        p.add_argument("--out", help="output directory for reports and transcripts")

    p = sub.add_parser("overall", help="mode 1: score over full episodes")
    p.add_argument("--layout", required=True)
    p.add_argument("--horizon", type=int, default=400)
    p.add_argument("--config", help="episode config JSON (recipes, orders, horizon)")
    common(p)
    p.set_defaults(func=cmd_overall)

    p = sub.add_parser("path-bench", help="mode 2: path adaptation scenarios")
    p.add_argument("--suite", default="bundled", help="'bundled' or a scenario JSON file")
    common(p)
    p.set_defaults(func=cmd_path_bench)

    p = sub.add_parser("subtask-bench", help="mode 3: subtask adaptation frames")
    p.add_argument("--backend", choices=("rule", "llm"), default="rule")
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_subtask_bench)

    p = sub.add_parser("replay", help="re-run a persisted trial from its transcripts")
    p.add_argument("--transcript", required=True, help="trial directory written by --out")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="start the live play session server")
    p.add_argument("--host", default=os.environ.get("COOPKITCHEN_BIND", "127.0.0.1"))
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
