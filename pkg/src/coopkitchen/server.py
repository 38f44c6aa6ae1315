"""Live play session server: one human seat, one agent seat, fixed-cadence
ticks over a WebSocket.

The loop owns the episode exclusively and advances it through the same
EpisodeRunner the benchmark harness uses, so a headless session with a
scripted human reproduces a harness episode bit for bit. The wire protocol
is JSON text messages; kinds: join, action, ack, leave (inbound) and
joined, frame, message, end, error (outbound). Schema in the README.
"""

from __future__ import annotations

import asyncio
import json
import secrets
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .env import AtomicAction, GameState, initial_state
from .episodes import EpisodeRunner
from .grid import parse_layout
from .harness import ConfigError, build_agent
from .scenarios import bundled_scenarios, layout_by_name


class BadConfig(ValueError):
    pass


WIRE_ACTIONS = {a.value: a for a in AtomicAction}


class HumanSlot:
    """Placeholder policy for the seat a person controls; the session loop
    overrides its action every tick with the latest input."""

    name = "human"

    def __init__(self, agent_index: int):
        self.agent_index = agent_index
        self.pinned_subtask = None
        self.pinned_done = True

    def reset(self, seed=None):
        pass

    def pin_subtask(self, subtask):
        self.pinned_subtask = subtask
        self.pinned_done = False

    def tick(self, state, events):
        from .agents.policies import TickResult

        return TickResult(action=AtomicAction.STAY)


def state_frame(state: GameState, message: Optional[dict] = None, ended: bool = False) -> dict:
    payload = {
        "type": "frame",
        "tick": state.tick,
        "score": state.score,
        "orders": list(state.orders),
        "agents": [
            {
                "cell": list(a.pose.cell),
                "facing": a.pose.facing.name.lower(),
                "held": a.held.label() if a.held else None,
            }
            for a in state.agents
        ],
        "pots": [
            {
                "cell": list(c),
                "contents": [k.value for k in p.contents],
                "phase": p.phase.value,
                "ticks_remaining": p.ticks_remaining,
            }
            for c, p in state.pots
        ],
        "counters": [{"cell": list(c), "item": i.label()} for c, i in state.counters],
    }
    if message:
        payload["message"] = message
    if ended:
        payload["ended"] = True
    return payload


def layout_payload(layout) -> dict:
    return {
        "name": layout.name,
        "width": layout.width,
        "height": layout.height,
        "tiles": [[tile.value for tile in row] for row in layout.grid],
    }


@dataclass
class Session:
    id: str
    token: str
    runner: EpisodeRunner
    human_index: int
    tick_period_s: float
    inbox: Optional[AtomicAction] = None
    joined: bool = False
    closed: bool = False
    message_seq: int = 0
    journal: list = field(default_factory=list)
    task: Optional[asyncio.Task] = None
    socket: Optional[WebSocket] = None

    def record(self, direction: str, kind: str, payload: dict):
        self.journal.append({
            "dir": direction,
            "kind": kind,
            "tick": self.runner.state.tick,
            "payload": payload,
        })


def build_session_runner(config: dict) -> tuple[EpisodeRunner, int, list]:
    """Shared by live and headless paths: same engine, same seeding."""
    seed = int(config.get("seed", 0))
    human_index = int(config.get("human_slot", 1))
    if human_index not in (0, 1):
        raise BadConfig("human_slot must be 0 or 1")
    agent_spec = config.get("agent", "monitored:rule")
    horizon = int(config.get("horizon", 400))

    scenario = None
    if "scenario" in config:
        matches = [s for s in bundled_scenarios() if s.id == config["scenario"]]
        if not matches:
            raise BadConfig(f"unknown scenario {config['scenario']!r}")
        scenario = matches[0]
        start = scenario.start
        horizon = int(config.get("horizon", scenario.time_limit))
    else:
        layout_cfg = config.get("layout", "atrium")
        try:
            if isinstance(layout_cfg, dict):
                layout = parse_layout(layout_cfg["text"], name=layout_cfg.get("name", "custom"))
            else:
                layout = layout_by_name(layout_cfg)
        except (KeyError, ValueError) as exc:
            raise BadConfig(str(exc)) from exc
        start = initial_state(layout)

    agents: list = [None, None]
    scripted = config.get("headless_human")
    try:
        agents[1 - human_index] = build_agent(agent_spec, 1 - human_index)
        agents[human_index] = (
            build_agent(scripted, human_index) if scripted else HumanSlot(human_index)
        )
    except ConfigError as exc:
        raise BadConfig(str(exc)) from exc

    stop_when = None
    if scenario is not None:
        def stop_when(_):
            return all(a.pinned_done for a in agents)

    runner = EpisodeRunner(start, agents, seed=seed, horizon=horizon, stop_when=stop_when)
    if scenario is not None:
        for i, agent in enumerate(agents):
            agent.pin_subtask(scenario.assigned[i])
    return runner, human_index, agents


def run_headless(config: dict) -> EpisodeRunner:
    """Advance a session to completion with a scripted human, full speed."""
    if not config.get("headless_human"):
        raise BadConfig("headless sessions need a headless_human agent spec")
    runner, _, _ = build_session_runner(config)
    runner.run()
    return runner


def create_app(log_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="coopkitchen session server")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions
    log_dir = Path(log_dir) if log_dir else Path("sessions")

    @app.post("/session")
    async def create_session(config: dict):
        try:
            runner, human_index, _ = build_session_runner(config)
        except BadConfig as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        session = Session(
            id=uuid.uuid4().hex[:12],
            token=secrets.token_hex(8),
            runner=runner,
            human_index=human_index,
            tick_period_s=max(int(config.get("tick_ms", 150)), 10) / 1000.0,
        )
        sessions[session.id] = session
        return {
            "id": session.id,
            "token": session.token,
            "human_slot": session.human_index,
            "layout": layout_payload(runner.state.layout),
        }

    async def tick_loop(session: Session):
        runner = session.runner
        try:
            while not runner.done and not session.closed:
                started = time.perf_counter()
                action = session.inbox or AtomicAction.STAY
                session.inbox = None
                state, _, results = runner.step_once({session.human_index: action})
                agent_result = results[1 - session.human_index]
                message = None
                if agent_result.message is not None:
                    session.message_seq += 1
                    message = {
                        "id": session.message_seq,
                        "template": agent_result.message.template.value,
                        "text": agent_result.message.text,
                        "location": list(agent_result.message.location) if agent_result.message.location else None,
                    }
                frame = state_frame(state, message, ended=runner.done)
                session.record("out", "frame", {"tick": frame["tick"], "message": message})
                if session.socket is not None:
                    await session.socket.send_text(json.dumps(frame))
                elapsed = time.perf_counter() - started
                await asyncio.sleep(max(0.0, session.tick_period_s - elapsed))
            if session.socket is not None and not session.closed:
                end = {"type": "end", "reason": "horizon", "score": runner.state.score}
                session.record("out", "end", end)
                await session.socket.send_text(json.dumps(end))
        except WebSocketDisconnect:
            pass
        finally:
            _persist(session)

    def _persist(session: Session):
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
            payload = {
                "session": session.id,
                "human_slot": session.human_index,
                "journal": session.journal,
                "log": session.runner.log.to_dict(),
            }
            with open(log_dir / f"{session.id}.json", "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=1, sort_keys=True)
        except OSError:
            pass

    @app.websocket("/session/{session_id}")
    async def session_socket(socket: WebSocket, session_id: str):
        await socket.accept()
        session = sessions.get(session_id)
        if session is None:
            await socket.send_text(json.dumps({"type": "error", "error": "unknown session"}))
            await socket.close()
            return
        try:
            raw = await socket.receive_text()
            hello = json.loads(raw)
        except (WebSocketDisconnect, ValueError):
            await socket.close()
            return
        if hello.get("type") != "join" or hello.get("token") != session.token:
            await socket.send_text(json.dumps({"type": "error", "error": "join rejected"}))
            await socket.close()
            return
        if session.joined:
            await socket.send_text(json.dumps({"type": "error", "error": "slot taken"}))
            await socket.close()
            return

        session.joined = True
        session.socket = socket
        session.record("in", "join", {})
        await socket.send_text(json.dumps({
            "type": "joined",
            "human_slot": session.human_index,
            "tick_ms": int(session.tick_period_s * 1000),
            "layout": layout_payload(session.runner.state.layout),
            "frame": state_frame(session.runner.state),
        }))
        session.task = asyncio.create_task(tick_loop(session))

        try:
            while not session.closed:
                raw = await socket.receive_text()
                try:
                    event = json.loads(raw)
                except ValueError:
                    await socket.send_text(json.dumps({"type": "error", "error": "bad json"}))
                    continue
                kind = event.get("type")
                if kind == "action":
                    name = event.get("action")
                    if name in WIRE_ACTIONS:
                        session.inbox = WIRE_ACTIONS[name]  # latest input wins
                        session.record("in", "action", {"action": name})
                    else:
                        await socket.send_text(json.dumps({"type": "error", "error": f"unknown action {name!r}"}))
                elif kind == "ack":
                    session.record("in", "ack", {"id": event.get("id")})
                elif kind == "leave":
                    session.record("in", "leave", {})
                    break
                else:
                    await socket.send_text(json.dumps({"type": "error", "error": f"unknown event {kind!r}"}))
        except WebSocketDisconnect:
            session.record("in", "disconnect", {})
        finally:
            session.closed = True
            session.socket = None
            if session.task:
                session.task.cancel()
                try:
                    await session.task
                except (asyncio.CancelledError, Exception):
                    pass
            _persist(session)

    client_dir = Path("frontend/dist")
    if client_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(client_dir), html=True), name="client")

    return app
