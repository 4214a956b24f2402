"""Experiment runner: seeded sweeps, per-run persistence, learning curves.

A run is one (agent kind, layout index, seed index) cell.  All randomness
derives from the master seed through SeedSequence spawn keys, so any run
can be re-executed in isolation and reproduces its result file byte for
byte.  Runs are independent; a process pool executes them concurrently.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agents import AGENT_KINDS, AgentConfig, make_agent, run_agent_step
from .envs.maze import MazeEnv, maze_generate
from .envs.taxi import TaxiEnv
from .errors import ConfigError, ContractViolation
from .observer import FeedbackCounts, ObserverConfig, SimulatedObserver

_LAYOUT_NS = 101  # spawn-key namespace separating layout seeds from run seeds


@dataclass
class EpisodeResult:
    episode: int
    ret: float
    steps: int
    emitted: int = 0
    delivered: int = 0
    dropped: int = 0
    discarded: int = 0

    def to_dict(self) -> dict:
        return {
            "episode": self.episode,
            "return": self.ret,
            "steps": self.steps,
            "emitted": self.emitted,
            "delivered": self.delivered,
            "dropped": self.dropped,
            "discarded": self.discarded,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeResult":
        return cls(d["episode"], d["return"], d["steps"], d["emitted"],
                   d["delivered"], d["dropped"], d["discarded"])


@dataclass(frozen=True)
class ExperimentConfig:
    env_kind: str = "maze"
    observation_mode: str = "mdp"
    agents: tuple[str, ...] = ("dqn",)
    observer: ObserverConfig = field(default_factory=ObserverConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    agent_overrides: dict = field(default_factory=dict)
    n_layouts: int = 10
    n_seeds_per_layout: int = 3
    n_episodes: int = 150
    master_seed: int = 0
    out_dir: str = "results"

    def __post_init__(self):
        if self.env_kind not in ("maze", "taxi"):
            raise ConfigError(f"unknown env kind {self.env_kind!r}")
        for kind in self.agents:
            if kind not in AGENT_KINDS:
                raise ConfigError(f"unknown agent kind {kind!r}")
        for kind in self.agent_overrides:
            if kind not in AGENT_KINDS:
                raise ConfigError(f"agent override for unknown kind {kind!r}")
        if min(self.n_layouts, self.n_seeds_per_layout, self.n_episodes) < 1:
            raise ConfigError("n_layouts, n_seeds_per_layout and n_episodes must be >= 1")
        object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def n_runs(self) -> int:
        return self.n_layouts * self.n_seeds_per_layout

    def agent_cfg_for(self, kind: str) -> AgentConfig:
        merged = self.agent.to_dict()
        merged.update(self.agent_overrides.get(kind, {}))
        return AgentConfig.from_dict(merged)

    def to_dict(self) -> dict:
        return {
            "env": {"kind": self.env_kind, "observation": self.observation_mode},
            "agents": list(self.agents),
            "observer": self.observer.to_dict(),
            "agent": self.agent.to_dict(),
            "agent_overrides": self.agent_overrides,
            "n_layouts": self.n_layouts,
            "n_seeds_per_layout": self.n_seeds_per_layout,
            "n_episodes": self.n_episodes,
            "master_seed": self.master_seed,
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        env = d.get("env", {})
        return cls(
            env_kind=env.get("kind", "maze"),
            observation_mode=env.get("observation", "mdp"),
            agents=tuple(d.get("agents", ("dqn",))),
            observer=ObserverConfig.from_dict(d.get("observer", {})),
            agent=AgentConfig.from_dict(d.get("agent", {})),
            agent_overrides={k: dict(v) for k, v in d.get("agent_overrides", {}).items()},
            n_layouts=d.get("n_layouts", 10),
            n_seeds_per_layout=d.get("n_seeds_per_layout", 3),
            n_episodes=d.get("n_episodes", 150),
            master_seed=d.get("master_seed", 0),
            out_dir=d.get("out_dir", "results"),
        )


def run_id(kind: str, layout_index: int, seed_index: int) -> str:
    return f"{kind}-L{layout_index:02d}-S{seed_index:02d}"


def layout_seed(master_seed: int, layout_index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(_LAYOUT_NS, layout_index))
    return int(ss.generate_state(1)[0])


def _run_streams(master_seed: int, kind: str, layout_index: int, seed_index: int):
    agent_id = AGENT_KINDS.index(kind)
    ss = np.random.SeedSequence(master_seed, spawn_key=(agent_id, layout_index, seed_index))
    env_ss, init_ss, act_ss, obs_ss = ss.spawn(4)
    return env_ss, init_ss, np.random.default_rng(act_ss), np.random.default_rng(obs_ss)


def _make_env(cfg: ExperimentConfig, layout_index: int, env_ss):
    if cfg.env_kind == "maze":
        layout = maze_generate(layout_seed(cfg.master_seed, layout_index))
        return MazeEnv(layout, cfg.observation_mode)
    return TaxiEnv(env_ss, cfg.observation_mode)


def run_episode(agent, env, observer, rng, episode: int) -> EpisodeResult:
    """One episode; the logged return is the undiscounted env-reward sum."""
    env.reset()
    agent.begin_episode()
    observer.begin_episode(episode)
    ep_return = 0.0
    while not env.done:
        transition, _ = run_agent_step(agent, env, observer, rng, episode)
        ep_return += transition.reward
    counts: FeedbackCounts = observer.end_episode()
    return EpisodeResult(episode, ep_return, env.steps, counts.emitted,
                         counts.delivered, counts.dropped, counts.discarded)


def run_single(cfg: ExperimentConfig, kind: str, layout_index: int,
               seed_index: int) -> dict:
    """Execute one run and return its JSON-ready record."""
    env_ss, init_ss, act_rng, obs_rng = _run_streams(
        cfg.master_seed, kind, layout_index, seed_index)
    env = _make_env(cfg, layout_index, env_ss)
    agent = make_agent(kind, env.observation_dim, env.n_actions,
                       cfg.agent_cfg_for(kind), init_ss,
                       cfg.observer.p_delay_assumed)
    observer = SimulatedObserver(cfg.observer, env.kind, obs_rng)
    episodes = [run_episode(agent, env, observer, act_rng, ep)
                for ep in range(cfg.n_episodes)]
    record = {
        "run_id": run_id(kind, layout_index, seed_index),
        "agent": kind,
        "layout_index": layout_index,
        "seed_index": seed_index,
        "master_seed": cfg.master_seed,
        "episodes": [e.to_dict() for e in episodes],
    }
    if cfg.env_kind == "maze":
        record["layout_seed"] = layout_seed(cfg.master_seed, layout_index)
    return record


def _dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def _worker(cfg_dict: dict, kind: str, layout_index: int, seed_index: int) -> dict:
    return run_single(ExperimentConfig.from_dict(cfg_dict), kind, layout_index, seed_index)


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None,
                   workers: int | None = None) -> dict[str, list[EpisodeResult]]:
    """Execute every (agent, layout, seed) run, writing one file per run
    as it completes plus a manifest; returns all episode sequences."""
    out_dir = out_dir or cfg.out_dir
    runs_dir = os.path.join(out_dir, "runs")
    os.makedirs(runs_dir, exist_ok=True)

    cells = [(kind, li, si)
             for kind in cfg.agents
             for li in range(cfg.n_layouts)
             for si in range(cfg.n_seeds_per_layout)]

    results: dict[str, list[EpisodeResult]] = {}

    def _store(record: dict) -> None:
        rid = record["run_id"]
        path = os.path.join(runs_dir, rid + ".json")
        try:
            with open(path, "w") as fh:
                fh.write(_dump(record))
        except OSError as exc:
            raise OSError(f"failed writing run {rid}: {exc}") from exc
        results[rid] = [EpisodeResult.from_dict(e) for e in record["episodes"]]

    if workers and workers > 1:
        cfg_dict = cfg.to_dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_worker, cfg_dict, *cell) for cell in cells]
            for fut in futures:
                _store(fut.result())
    else:
        for cell in cells:
            _store(run_single(cfg, *cell))

    write_manifest(cfg, out_dir)
    return results


def write_manifest(cfg: ExperimentConfig, out_dir: str) -> None:
    from . import __version__
    expected = [run_id(kind, li, si)
                for kind in cfg.agents
                for li in range(cfg.n_layouts)
                for si in range(cfg.n_seeds_per_layout)]
    runs_dir = os.path.join(out_dir, "runs")
    missing = [rid for rid in expected
               if not os.path.exists(os.path.join(runs_dir, rid + ".json"))]
    manifest = {
        "config": cfg.to_dict(),
        "version": __version__,
        "run_ids": expected,
        "missing": missing,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        fh.write(_dump(manifest))


def load_manifest(out_dir: str) -> tuple[ExperimentConfig, dict]:
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    return ExperimentConfig.from_dict(manifest["config"]), manifest


def load_runs(out_dir: str, cfg: ExperimentConfig) -> dict[str, list[EpisodeResult]]:
    runs_dir = os.path.join(out_dir, "runs")
    results = {}
    for kind in cfg.agents:
        for li in range(cfg.n_layouts):
            for si in range(cfg.n_seeds_per_layout):
                rid = run_id(kind, li, si)
                path = os.path.join(runs_dir, rid + ".json")
                if not os.path.exists(path):
                    continue
                with open(path) as fh:
                    record = json.load(fh)
                results[rid] = [EpisodeResult.from_dict(e) for e in record["episodes"]]
    return results


def trimmed_mean(values, trim_fraction: float = 0.1) -> float:
    """Mean after dropping floor(n*trim_fraction) values from each tail."""
    vals = np.sort(np.asarray(list(values), dtype=float))
    if vals.size == 0:
        raise ContractViolation("trimmed_mean of empty input")
    if not 0.0 <= trim_fraction < 0.5:
        raise ContractViolation(f"trim_fraction must be in [0, 0.5), got {trim_fraction}")
    k = int(vals.size * trim_fraction)
    kept = vals[k:vals.size - k]
    return float(np.mean(kept))


@dataclass
class LearningCurve:
    agent: str
    mean_return: list[float]
    p25: list[float]
    p75: list[float]

    def __len__(self) -> int:
        return len(self.mean_return)


def build_curves(cfg: ExperimentConfig, results: dict[str, list[EpisodeResult]],
                 trim_fraction: float = 0.1) -> dict[str, LearningCurve]:
    curves = {}
    for kind in cfg.agents:
        per_run = [results[rid] for rid in results
                   if rid.startswith(kind + "-L")]
        if not per_run:
            continue
        mean, p25, p75 = [], [], []
        for ep in range(cfg.n_episodes):
            returns = [run[ep].ret for run in per_run]
            mean.append(trimmed_mean(returns, trim_fraction))
            p25.append(float(np.percentile(returns, 25)))
            p75.append(float(np.percentile(returns, 75)))
        curves[kind] = LearningCurve(kind, mean, p25, p75)
    return curves


def emit_curves(cfg: ExperimentConfig, results: dict[str, list[EpisodeResult]],
                out_dir: str) -> dict[str, LearningCurve]:
    """Write per-agent CSV curves and refresh the manifest (which marks
    any missing runs).  Pure function of the results: same input, same bytes."""
    curves = build_curves(cfg, results)
    curves_dir = os.path.join(out_dir, "curves")
    os.makedirs(curves_dir, exist_ok=True)
    for kind, curve in curves.items():
        lines = ["episode,mean_return,p25,p75"]
        for ep in range(len(curve)):
            lines.append(f"{ep},{curve.mean_return[ep]!r},{curve.p25[ep]!r},{curve.p75[ep]!r}")
        with open(os.path.join(curves_dir, kind + ".csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    write_manifest(cfg, out_dir)
    return curves


def replay_run(out_dir: str, rid: str) -> tuple[bool, str]:
    """Re-execute one run from the manifest and diff against its file.

    Returns (matches, message)."""
    cfg, _ = load_manifest(out_dir)
    path = os.path.join(out_dir, "runs", rid + ".json")
    if not os.path.exists(path):
        return False, f"run file missing: {path}"
    with open(path) as fh:
        stored = fh.read()
    kind, lpart, spart = rid.rsplit("-", 2)
    record = run_single(cfg, kind, int(lpart[1:]), int(spart[1:]))
    fresh = _dump(record)
    if fresh == stored:
        return True, f"{rid}: byte-identical"
    return False, f"{rid}: replay differs from stored result"
