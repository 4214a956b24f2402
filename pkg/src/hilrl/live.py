"""Live human-in-the-loop mode: a DQN-TAMER agent stepped on wall-clock
ticks, with browser clients watching snapshots and sending {-1,+1} feedback.

Feedback lands in a single-producer/single-consumer queue and is credited
at the next tick, smeared backward over the assumed-delay window exactly
like simulated delayed feedback.  Snapshots fan out to every connected
client; the agent's learning state is touched only inside tick().

Wire protocol (JSON text frames over /session/{id}):
  client -> server:
    {"type": "feedback", "polarity": 1 | -1, "client_ts": <optional number>}
    {"type": "control", "command": "start" | "pause" | "reset" | "set_speed",
     "tick_ms": <int, set_speed only>, "keep_networks": <bool, reset only>}
  server -> client:
    {"type": "snapshot", "seq", "episode", "step", "grid", "grid_size",
     "agent", "goal", "last_action", "episode_return", "epsilon", "alpha_h",
     "done", "status", "clients", "acks"}
    {"type": "ack", "feedback_seq", "episode", "step"}
    {"type": "status", "status", "tick_ms", "episode", "step"}
    {"type": "error", "message"}
"""

from __future__ import annotations

import asyncio
import json
import os
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import __version__
from .agents import AgentConfig, DqnTamerAgent, run_agent_step
from .envs.maze import MazeEnv, maze_generate
from .errors import ConfigError
from .observer import DEFAULT_ASSUMED_DELAY, QueueFeedbackSource


@dataclass
class LiveConfig:
    layout_seed: int = 0
    tick_ms: int = 500
    seed: int = 0
    agent: AgentConfig = field(default_factory=AgentConfig)
    p_delay_assumed: tuple[float, ...] = DEFAULT_ASSUMED_DELAY
    max_episodes: int | None = None
    multi_session: bool = False
    ui_dir: str | None = None


class LiveSession:
    """Synchronous session core: all timing lives in the async wrapper, so
    tests can drive ticks directly."""

    def __init__(self, session_id: str, cfg: LiveConfig):
        self.session_id = session_id
        self.cfg = cfg
        self.tick_ms = cfg.tick_ms
        self.status = "running"
        self.layout = maze_generate(cfg.layout_seed)
        self.env = MazeEnv(self.layout, "mdp")
        self.source = QueueFeedbackSource(cfg.p_delay_assumed)
        self._rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
        self.agent = self._fresh_agent()
        self.seq = 0
        self.episode = 0
        self.episode_return = 0.0
        self.last_action: str | None = None
        self.connected_clients = 0
        self._feedback_seq = 0
        self._acks_pending: list[dict] = []

    def _fresh_agent(self) -> DqnTamerAgent:
        return DqnTamerAgent(self.env.observation_dim, self.env.n_actions,
                             self.cfg.agent, np.random.SeedSequence(self.cfg.seed),
                             self.cfg.p_delay_assumed)

    # -- called from the I/O side -------------------------------------------

    def submit_feedback(self, polarity) -> dict:
        """Queue one human judgment; the ack names the (episode, step) it
        will be credited against at the next tick."""
        if polarity not in (-1, 1):
            raise ConfigError(f"polarity must be -1 or +1, got {polarity!r}")
        self.source.submit(int(polarity))
        self._feedback_seq += 1
        if self.env.done:
            episode, step = self.episode + 1, 0
        else:
            episode, step = self.episode, self.env.steps
        ack = {"type": "ack", "feedback_seq": self._feedback_seq,
               "episode": episode, "step": step}
        self._acks_pending.append({"feedback_seq": self._feedback_seq,
                                   "episode": episode, "step": step})
        return ack

    def control(self, command: str, tick_ms: int | None = None,
                keep_networks: bool = True) -> dict:
        if command == "start":
            if self.status != "finished":
                self.status = "running"
        elif command == "pause":
            if self.status == "running":
                self.status = "paused"
        elif command == "set_speed":
            if not tick_ms or tick_ms < 10:
                raise ConfigError(f"tick_ms must be >= 10, got {tick_ms}")
            self.tick_ms = int(tick_ms)
        elif command == "reset":
            self.env.reset()
            self.episode = 0
            self.episode_return = 0.0
            self.last_action = None
            if not keep_networks:
                self.agent = self._fresh_agent()
            self.agent.begin_episode()
            self.status = "running"
        else:
            raise ConfigError(f"unknown control command {command!r}")
        return {"type": "status", "status": self.status, "tick_ms": self.tick_ms,
                "episode": self.episode, "step": self.env.steps}

    # -- the agent loop ------------------------------------------------------

    def tick(self) -> dict | None:
        """One agent step plus snapshot; None when paused or finished."""
        if self.status != "running":
            return None
        if self.env.done:
            self.episode += 1
            if self.cfg.max_episodes is not None and self.episode >= self.cfg.max_episodes:
                self.status = "finished"
                return None
            self.env.reset()
            self.agent.begin_episode()
            self.episode_return = 0.0
        transition, _ = run_agent_step(self.agent, self.env, self.source,
                                       self._rng, self.episode)
        self.episode_return += transition.reward
        self.last_action = self.env.actions[transition.action]
        self.seq += 1
        acks, self._acks_pending = self._acks_pending, []
        return {
            "type": "snapshot",
            "seq": self.seq,
            "episode": self.episode,
            "step": self.env.steps - 1,
            "grid": self.layout.grid.astype(int).flatten().tolist(),
            "grid_size": self.layout.grid.shape[0],
            "agent": list(self.env.state.position),
            "goal": list(self.layout.goal),
            "last_action": self.last_action,
            "episode_return": self.episode_return,
            "epsilon": self.agent.epsilon,
            "alpha_h": self.agent.alpha_h,
            "done": transition.done,
            "status": self.status,
            "clients": self.connected_clients,
            "acks": acks,
        }


def handle_message(session: LiveSession, text: str) -> dict:
    """Parse and apply one client frame, returning the reply frame."""
    try:
        msg = json.loads(text)
    except json.JSONDecodeError:
        return {"type": "error", "message": "malformed JSON"}
    if not isinstance(msg, dict):
        return {"type": "error", "message": "expected a JSON object"}
    kind = msg.get("type")
    try:
        if kind == "feedback":
            return session.submit_feedback(msg.get("polarity"))
        if kind == "control":
            return session.control(msg.get("command"),
                                   tick_ms=msg.get("tick_ms"),
                                   keep_networks=msg.get("keep_networks", True))
    except ConfigError as exc:
        return {"type": "error", "message": str(exc)}
    return {"type": "error", "message": f"unknown message type {kind!r}"}


class SessionRuntime:
    """Async shell around one LiveSession: tick loop plus client fan-out."""

    def __init__(self, session: LiveSession):
        self.session = session
        self.clients: dict[int, asyncio.Queue] = {}
        self._next_client = 0
        self._task: asyncio.Task | None = None

    def ensure_loop(self) -> None:
        if self._task is None or self._task.done():
            self._task = asyncio.get_running_loop().create_task(self._loop())

    async def _loop(self) -> None:
        while True:
            await asyncio.sleep(self.session.tick_ms / 1000.0)
            self.session.connected_clients = len(self.clients)
            snapshot = self.session.tick()
            if snapshot is None:
                continue
            payload = json.dumps(snapshot)
            for queue in list(self.clients.values()):
                queue.put_nowait(payload)

    def attach(self) -> tuple[int, asyncio.Queue]:
        cid = self._next_client
        self._next_client += 1
        queue: asyncio.Queue = asyncio.Queue()
        self.clients[cid] = queue
        return cid, queue

    def detach(self, cid: int) -> None:
        self.clients.pop(cid, None)


def create_app(cfg: LiveConfig | None = None) -> FastAPI:
    """FastAPI app: websocket sessions, health check, optional static UI."""
    cfg = cfg or LiveConfig()
    app = FastAPI(title="hilrl live service", version=__version__)
    sessions: dict[str, SessionRuntime] = {}
    app.state.sessions = sessions
    app.state.config = cfg

    def _get_runtime(sid: str) -> SessionRuntime | None:
        if sid in sessions:
            return sessions[sid]
        if sessions and not cfg.multi_session:
            return None
        runtime = SessionRuntime(LiveSession(sid, cfg))
        sessions[sid] = runtime
        return runtime

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "version": __version__, "sessions": list(sessions)}

    @app.websocket("/session/{sid}")
    async def session_ws(ws: WebSocket, sid: str):
        await ws.accept()
        runtime = _get_runtime(sid)
        if runtime is None:
            await ws.send_text(json.dumps({
                "type": "error",
                "message": "another session is active (multi_session disabled)",
            }))
            await ws.close()
            return
        runtime.ensure_loop()
        cid, queue = runtime.attach()
        runtime.session.connected_clients = len(runtime.clients)

        async def _pump():
            while True:
                await ws.send_text(await queue.get())

        sender = asyncio.get_running_loop().create_task(_pump())
        try:
            while True:
                text = await ws.receive_text()
                reply = handle_message(runtime.session, text)
                queue.put_nowait(json.dumps(reply))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            runtime.detach(cid)
            runtime.session.connected_clients = len(runtime.clients)

    if cfg.ui_dir and os.path.isdir(cfg.ui_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=cfg.ui_dir, html=True), name="ui")

    return app
