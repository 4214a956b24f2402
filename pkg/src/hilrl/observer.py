"""Simulated human feedback channel.

A judgment is formed for every transition (sign of progress toward the
current target), then pushed through the channel model: dropped with
probability 1 - p_feedback, polarity flipped with probability p_flip,
arrival delayed by a draw from the true delay distribution, and silenced
entirely once the observer leaves (t_stop).  Undelivered events are
discarded at episode boundaries.

The FeedbackSource contract is what agents actually consume; the live
service provides another implementation backed by a websocket queue.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

DEFAULT_TRUE_DELAY = (0.3, 0.6, 0.1)
DEFAULT_ASSUMED_DELAY = (1 / 3, 1 / 3, 1 / 3)


def _check_distribution(name: str, probs) -> tuple[float, ...]:
    probs = tuple(float(p) for p in probs)
    if not probs or any(p < 0 for p in probs):
        raise ConfigError(f"{name} entries must be nonnegative, got {probs}")
    if abs(sum(probs) - 1.0) > 1e-9:
        raise ConfigError(f"{name} must sum to 1, got {sum(probs)}")
    return probs


def _check_probability(name: str, p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"{name} must be in [0,1], got {p}")
    return float(p)


@dataclass(frozen=True)
class ObserverConfig:
    """Channel parameters; delay vectors index delay-in-steps from 0."""

    p_delay_true: tuple[float, ...] = DEFAULT_TRUE_DELAY
    p_delay_assumed: tuple[float, ...] = DEFAULT_ASSUMED_DELAY
    p_feedback: float = 1.0
    t_stop: int | None = None          # None = observer never leaves
    t_stop_unit: str = "episode"       # "episode" (default) or "step"
    p_flip: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p_delay_true",
                           _check_distribution("p_delay_true", self.p_delay_true))
        object.__setattr__(self, "p_delay_assumed",
                           _check_distribution("p_delay_assumed", self.p_delay_assumed))
        object.__setattr__(self, "p_feedback", _check_probability("p_feedback", self.p_feedback))
        object.__setattr__(self, "p_flip", _check_probability("p_flip", self.p_flip))
        if self.t_stop_unit not in ("episode", "step"):
            raise ConfigError(f"t_stop_unit must be 'episode' or 'step', got {self.t_stop_unit!r}")

    def to_dict(self) -> dict:
        return {
            "p_delay_true": list(self.p_delay_true),
            "p_delay_assumed": list(self.p_delay_assumed),
            "p_feedback": self.p_feedback,
            "t_stop": self.t_stop,
            "t_stop_unit": self.t_stop_unit,
            "p_flip": self.p_flip,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObserverConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown observer keys: {sorted(unknown)}")
        kwargs = dict(d)
        for key in ("p_delay_true", "p_delay_assumed"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class FeedbackEvent:
    polarity: int  # -1 or +1
    generated_at_step: int
    arrival_step: int
    episode: int

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise ConfigError(f"polarity must be -1 or +1, got {self.polarity}")
        if self.arrival_step < self.generated_at_step:
            raise ConfigError("arrival_step before generated_at_step")


def judge(info: dict, env_kind: str) -> int:
    """The simulated human's verdict on one transition.

    Movement: +1 iff Manhattan distance to the current target strictly
    decreased.  Taxi pickup/drop: +1 for the correct cell, -1 otherwise.
    """
    event = info.get("event")
    if env_kind == "taxi" and event is not None:
        return 1 if event.startswith("correct") else -1
    return 1 if info["dist_after"] < info["dist_before"] else -1


def emit(polarity: int, step: int, episode: int, cfg: ObserverConfig,
         rng: np.random.Generator) -> FeedbackEvent | None:
    """Push one judgment through the channel; None means it was dropped.

    Draw order (drop coin, flip coin, delay) is fixed for replayability.
    """
    if cfg.t_stop is not None:
        clock = episode if cfg.t_stop_unit == "episode" else step
        if clock >= cfg.t_stop:
            return None
    if rng.random() >= cfg.p_feedback:
        return None
    if cfg.p_flip > 0 and rng.random() < cfg.p_flip:
        polarity = -polarity
    delay = int(rng.choice(len(cfg.p_delay_true), p=cfg.p_delay_true))
    return FeedbackEvent(polarity=polarity, generated_at_step=step,
                         arrival_step=step + delay, episode=episode)


def poll(pending: list[FeedbackEvent], current_step: int) -> list[FeedbackEvent]:
    """Remove and return all events due by current_step.

    Ordered by arrival step, ties broken by generation (queue) order.
    """
    due = [e for e in pending if e.arrival_step <= current_step]
    if due:
        pending[:] = [e for e in pending if e.arrival_step > current_step]
        due.sort(key=lambda e: e.arrival_step)
    return due


@dataclass
class FeedbackCounts:
    emitted: int = 0
    delivered: int = 0
    dropped: int = 0
    discarded: int = 0

    def snapshot(self) -> "FeedbackCounts":
        return FeedbackCounts(self.emitted, self.delivered, self.dropped, self.discarded)

    def minus(self, other: "FeedbackCounts") -> "FeedbackCounts":
        return FeedbackCounts(
            self.emitted - other.emitted,
            self.delivered - other.delivered,
            self.dropped - other.dropped,
            self.discarded - other.discarded,
        )


class FeedbackSource:
    """What an agent sees of the human: notify each transition, poll for
    due events.  Delivery is exactly-once, in arrival order."""

    def notify(self, step: int, episode: int, info: dict) -> None:
        raise NotImplementedError

    def poll(self, current_step: int) -> list[FeedbackEvent]:
        raise NotImplementedError

    def begin_episode(self, episode: int) -> None:  # pragma: no cover - default no-op
        pass

    def end_episode(self) -> FeedbackCounts:
        raise NotImplementedError


class SimulatedObserver(FeedbackSource):
    """Scripted human: judges every transition and feeds the channel model."""

    def __init__(self, cfg: ObserverConfig, env_kind: str, rng: np.random.Generator):
        self.cfg = cfg
        self.env_kind = env_kind
        self.rng = rng
        self.pending: list[FeedbackEvent] = []
        self.counts = FeedbackCounts()
        self._episode_start_counts = self.counts.snapshot()
        self._global_step = 0
        # the "step" stop variant counts steps across the whole run, which
        # emit cannot see from an episode-local step; gate here instead
        self._emit_cfg = replace(cfg, t_stop=None) if cfg.t_stop_unit == "step" else cfg

    def _left(self, episode: int) -> bool:
        if self.cfg.t_stop is None:
            return False
        clock = episode if self.cfg.t_stop_unit == "episode" else self._global_step
        return clock >= self.cfg.t_stop

    def begin_episode(self, episode: int) -> None:
        self._episode_start_counts = self.counts.snapshot()

    def notify(self, step: int, episode: int, info: dict) -> None:
        left = self._left(episode)
        self._global_step += 1
        if left:
            return
        self.counts.emitted += 1
        polarity = judge(info, self.env_kind)
        event = emit(polarity, step, episode, self._emit_cfg, self.rng)
        if event is None:
            self.counts.dropped += 1
        else:
            self.pending.append(event)

    def poll(self, current_step: int) -> list[FeedbackEvent]:
        due = poll(self.pending, current_step)
        self.counts.delivered += len(due)
        return due

    def end_episode(self) -> FeedbackCounts:
        """Discard in-flight events and report this episode's counter deltas."""
        self.counts.discarded += len(self.pending)
        self.pending.clear()
        return self.counts.minus(self._episode_start_counts)


class QueueFeedbackSource(FeedbackSource):
    """Human-driven source: polarities pushed from an I/O handler, drained
    by the agent loop.  deque gives the single-producer/single-consumer
    safety the live service needs."""

    def __init__(self, p_delay_assumed: tuple[float, ...] = DEFAULT_ASSUMED_DELAY):
        self.p_delay_assumed = _check_distribution("p_delay_assumed", p_delay_assumed)
        self._incoming: deque[int] = deque()
        self.counts = FeedbackCounts()
        self._episode_start_counts = self.counts.snapshot()

    def submit(self, polarity: int) -> None:
        if polarity not in (-1, 1):
            raise ConfigError(f"polarity must be -1 or +1, got {polarity}")
        self._incoming.append(polarity)
        self.counts.emitted += 1

    def notify(self, step: int, episode: int, info: dict) -> None:
        pass  # a real human judges on their own

    def poll(self, current_step: int) -> list[FeedbackEvent]:
        due = []
        while self._incoming:
            polarity = self._incoming.popleft()
            due.append(FeedbackEvent(polarity=polarity, generated_at_step=current_step,
                                     arrival_step=current_step, episode=-1))
        self.counts.delivered += len(due)
        return due

    def begin_episode(self, episode: int) -> None:
        self._episode_start_counts = self.counts.snapshot()

    def end_episode(self) -> FeedbackCounts:
        return self.counts.minus(self._episode_start_counts)
