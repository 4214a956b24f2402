"""The four learners: DQN, reward-shaped DQN, Deep TAMER, DQN-TAMER.

All share the same tanh MLP approximator.  The TAMER side learns an
H-function regressing binary human feedback; delayed events are credited
to the recent (state, action) pairs spanned by the assumed delay
distribution.  DQN-TAMER acts on alpha_q*Q + alpha_h*H with alpha_h
decaying toward pure DQN behavior.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import nn
from .errors import ConfigError, ContractViolation
from .observer import DEFAULT_ASSUMED_DELAY, FeedbackEvent, FeedbackSource

AGENT_KINDS = ("dqn", "dqn-shaping", "deep-tamer", "dqn-tamer")


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.95
    alpha_q: float = 1.0
    alpha_h: float = 1.0
    alpha_h_decay: float = 0.9999
    epsilon_start: float = 0.3
    epsilon_decrement: float = 0.001
    epsilon_floor: float = 0.1
    update_interval: int = 4
    batch_size: int = 32
    replay_capacity: int = 10_000
    target_sync_interval: int = 100
    shaping_weight: float = 1.0
    hidden_dim: int = 100
    learning_rate: float = 1e-3
    weighted_credit: bool = False

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must be in [0,1), got {self.gamma}")
        if self.alpha_q < 0 or self.alpha_h < 0:
            raise ConfigError("alpha_q and alpha_h must be nonnegative")
        if not 0.0 < self.alpha_h_decay <= 1.0:
            raise ConfigError(f"alpha_h_decay must be in (0,1], got {self.alpha_h_decay}")
        if self.epsilon_floor > self.epsilon_start:
            raise ConfigError("epsilon_floor above epsilon_start")
        for name in ("update_interval", "batch_size", "replay_capacity",
                     "target_sync_interval", "hidden_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown agent keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(eq=False)
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    done: bool


@dataclass(eq=False)
class HTriple:
    """One feedback-labeled sample for the H-function."""

    obs: np.ndarray
    action: int
    feedback: int
    step: int  # the episode step this triple was credited to


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.inserted = 0
        self._items: list[Transition] = []

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self.inserted % self.capacity] = transition
        self.inserted += 1

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def __len__(self) -> int:
        return len(self._items)


class CreditWindow:
    """The last W (obs, action, step) tuples; W covers the assumed delay."""

    def __init__(self, size: int):
        if size < 1:
            raise ConfigError(f"window size must be >= 1, got {size}")
        self.size = size
        self._entries: deque[tuple[int, np.ndarray, int]] = deque(maxlen=size)

    def push(self, obs: np.ndarray, action: int, step: int) -> None:
        self._entries.append((step, obs, action))

    def get(self, step: int):
        for s, obs, action in self._entries:
            if s == step:
                return obs, action
        return None

    def clear(self) -> None:
        self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)


# ---------------------------------------------------------------------------
# action selection

def epsilon_greedy(values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Greedy on values with probability 1-epsilon; ties go to the lowest
    index.  Always consumes one uniform draw so seeded runs stay aligned
    across agent variants."""
    if rng.random() < epsilon:
        return int(rng.integers(len(values)))
    return int(np.argmax(values))


def select_action_dqn(qnet: nn.Network, obs, epsilon: float, rng) -> int:
    return epsilon_greedy(nn.forward(qnet, obs), epsilon, rng)


def select_action_tamer(hnet: nn.Network, obs, epsilon: float, rng) -> int:
    return epsilon_greedy(nn.forward(hnet, obs), epsilon, rng)


def select_action_dqntamer(qnet: nn.Network, hnet: nn.Network, obs,
                           alpha_q: float, alpha_h: float, epsilon: float, rng) -> int:
    values = alpha_q * nn.forward(qnet, obs) + alpha_h * nn.forward(hnet, obs)
    return epsilon_greedy(values, epsilon, rng)


# ---------------------------------------------------------------------------
# value updates

def dqn_td_target(transition: Transition, target_qnet: nn.Network, gamma: float) -> float:
    if transition.done:
        return transition.reward
    return transition.reward + gamma * float(np.max(nn.forward(target_qnet, transition.next_obs)))


def dqn_update(qnet: nn.Network, target_qnet: nn.Network, opt: nn.RmsPropState,
               buffer: ReplayBuffer, cfg: AgentConfig, rng: np.random.Generator,
               update_count: int) -> None:
    """One minibatch regression step toward the TD targets; syncs the target
    network every cfg.target_sync_interval updates.  Empty buffer: no-op."""
    if len(buffer) == 0:
        return
    batch = buffer.sample(cfg.batch_size, rng)
    xs = np.stack([t.obs for t in batch])
    next_xs = np.stack([t.next_obs for t in batch])
    actions = np.array([t.action for t in batch])
    rewards = np.array([t.reward for t in batch])
    live = np.array([0.0 if t.done else 1.0 for t in batch])
    best_next = nn.forward_batch(target_qnet, next_xs).max(axis=1)
    targets = rewards + cfg.gamma * best_next * live
    grad = nn.grad_squared_error_batch(qnet, xs, actions, targets, reduce="mean")
    nn.rmsprop_step(qnet, opt, grad)
    if update_count % cfg.target_sync_interval == 0:
        nn.copy_params(target_qnet, qnet)


def shaped_reward(r_env: float, delivered_feedback_sum: float, shaping_weight: float) -> float:
    """Environment reward plus the weighted sum of polarities that arrived
    on this step (naive shaping credits feedback at its arrival step)."""
    return r_env + shaping_weight * delivered_feedback_sum


def tamer_credit_assign(window: CreditWindow, event: FeedbackEvent,
                        p_delay_assumed: tuple[float, ...]) -> list[HTriple]:
    """Spread one feedback over the recent steps the assumed delay spans.

    Steps before the episode start or already evicted from the window are
    skipped; an empty window yields no triples.
    """
    triples = []
    arrival = event.arrival_step
    for i in range(len(p_delay_assumed) - 1, -1, -1):  # chronological order
        if p_delay_assumed[i] <= 0:
            continue
        step = arrival - i
        if step < 0:
            continue
        entry = window.get(step)
        if entry is not None:
            triples.append(HTriple(obs=entry[0], action=entry[1],
                                   feedback=event.polarity, step=step))
    return triples


def _credit_weights(triples: list[HTriple], arrival: int,
                    p_delay_assumed: tuple[float, ...]) -> np.ndarray:
    return np.array([p_delay_assumed[arrival - t.step] for t in triples])


def tamer_update_local(hnet: nn.Network, opt: nn.RmsPropState,
                       d_local: list[HTriple],
                       weights: np.ndarray | None = None) -> None:
    """One RMSProp step on the summed squared error over a feedback's triples."""
    if not d_local:
        return
    xs = np.stack([t.obs for t in d_local])
    actions = np.array([t.action for t in d_local])
    targets = np.array([float(t.feedback) for t in d_local])
    grad = nn.grad_squared_error_batch(hnet, xs, actions, targets,
                                       reduce="sum", weights=weights)
    nn.rmsprop_step(hnet, opt, grad)


def tamer_update_global(hnet: nn.Network, opt: nn.RmsPropState,
                        d_global: list[HTriple], batch_size: int,
                        rng: np.random.Generator) -> None:
    """One RMSProp step on the mean squared error of a uniform minibatch."""
    if not d_global:
        return
    idx = rng.integers(0, len(d_global), size=batch_size)
    xs = np.stack([d_global[i].obs for i in idx])
    actions = np.array([d_global[i].action for i in idx])
    targets = np.array([float(d_global[i].feedback) for i in idx])
    grad = nn.grad_squared_error_batch(hnet, xs, actions, targets, reduce="mean")
    nn.rmsprop_step(hnet, opt, grad)


def decay_schedules(epsilon: float, alpha_h: float, cfg: AgentConfig) -> tuple[float, float]:
    """Per-step schedule decay: epsilon linearly to its floor, alpha_h
    multiplicatively (never reaching zero)."""
    return max(cfg.epsilon_floor, epsilon - cfg.epsilon_decrement), alpha_h * cfg.alpha_h_decay


# ---------------------------------------------------------------------------
# agents

class AgentBase:
    """Shared schedule state and the per-step orchestration skeleton."""

    kind = "base"

    def __init__(self, obs_dim: int, n_actions: int, cfg: AgentConfig, seed):
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.cfg = cfg
        self.epsilon = cfg.epsilon_start
        self.alpha_h = cfg.alpha_h
        self.steps = 0
        # both nets draw from fixed spawn slots so the Q init is identical
        # across agent kinds under the same seed
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self._q_seed, self._h_seed = ss.spawn(2)

    def begin_episode(self) -> None:
        pass

    def action_values(self, obs) -> np.ndarray:
        raise NotImplementedError

    def select_action(self, obs, rng) -> int:
        raise NotImplementedError

    def handle_transition(self, transition: Transition, step: int,
                          events: list[FeedbackEvent], rng) -> None:
        raise NotImplementedError

    def _tick_schedules(self) -> None:
        self.steps += 1
        self.epsilon, self.alpha_h = decay_schedules(self.epsilon, self.alpha_h, self.cfg)

    def _due(self) -> bool:
        return self.steps % self.cfg.update_interval == 0


class DqnAgent(AgentBase):
    kind = "dqn"

    def __init__(self, obs_dim, n_actions, cfg: AgentConfig, seed,
                 p_delay_assumed=DEFAULT_ASSUMED_DELAY):
        super().__init__(obs_dim, n_actions, cfg, seed)
        self.qnet = nn.init_network(obs_dim, cfg.hidden_dim, n_actions, self._q_seed)
        self.target_qnet = nn.network_copy(self.qnet)
        self.q_opt = nn.RmsPropState.for_network(self.qnet, cfg.learning_rate)
        self.replay = ReplayBuffer(cfg.replay_capacity)
        self.q_updates = 0

    def action_values(self, obs) -> np.ndarray:
        return nn.forward(self.qnet, obs)

    def select_action(self, obs, rng) -> int:
        return select_action_dqn(self.qnet, obs, self.epsilon, rng)

    def _stored_reward(self, transition: Transition, events) -> float:
        return transition.reward

    def handle_transition(self, transition, step, events, rng) -> None:
        stored = self._stored_reward(transition, events)
        if stored != transition.reward:
            transition = replace(transition, reward=stored)
        self.replay.push(transition)
        self._tick_schedules()
        if self._due():
            self.q_updates += 1
            dqn_update(self.qnet, self.target_qnet, self.q_opt, self.replay,
                       self.cfg, rng, self.q_updates)


class ShapedDqnAgent(DqnAgent):
    """DQN whose stored rewards fold in feedback at its arrival step."""

    kind = "dqn-shaping"

    def _stored_reward(self, transition, events) -> float:
        return shaped_reward(transition.reward,
                             sum(e.polarity for e in events),
                             self.cfg.shaping_weight)


class _TamerMixin:
    """H-function state and the on-feedback / every-b update pair."""

    def _init_tamer(self, obs_dim, n_actions, cfg: AgentConfig, p_delay_assumed):
        self.p_delay_assumed = tuple(p_delay_assumed)
        support = [i for i, p in enumerate(self.p_delay_assumed) if p > 0]
        if not support:
            raise ConfigError("assumed delay distribution has empty support")
        self.hnet = nn.init_network(obs_dim, cfg.hidden_dim, n_actions, self._h_seed)
        self.h_opt = nn.RmsPropState.for_network(self.hnet, cfg.learning_rate)
        self.d_global: list[HTriple] = []
        self.window = CreditWindow(max(support) + 1)

    def _absorb_feedback(self, events: list[FeedbackEvent]) -> None:
        for event in events:
            d_local = tamer_credit_assign(self.window, event, self.p_delay_assumed)
            if not d_local:
                continue
            self.d_global.extend(d_local)
            weights = None
            if self.cfg.weighted_credit:
                weights = _credit_weights(d_local, event.arrival_step, self.p_delay_assumed)
            tamer_update_local(self.hnet, self.h_opt, d_local, weights)


class DeepTamerAgent(AgentBase, _TamerMixin):
    """Feedback-only learner: greedy on H, blind to environment reward."""

    kind = "deep-tamer"

    def __init__(self, obs_dim, n_actions, cfg: AgentConfig, seed,
                 p_delay_assumed=DEFAULT_ASSUMED_DELAY):
        super().__init__(obs_dim, n_actions, cfg, seed)
        self._init_tamer(obs_dim, n_actions, cfg, p_delay_assumed)

    def begin_episode(self) -> None:
        self.window.clear()

    def action_values(self, obs) -> np.ndarray:
        return nn.forward(self.hnet, obs)

    def select_action(self, obs, rng) -> int:
        return select_action_tamer(self.hnet, obs, self.epsilon, rng)

    def handle_transition(self, transition, step, events, rng) -> None:
        self.window.push(transition.obs, transition.action, step)
        self._absorb_feedback(events)
        self._tick_schedules()
        if self._due() and self.d_global:
            tamer_update_global(self.hnet, self.h_opt, self.d_global,
                                self.cfg.batch_size, rng)


class DqnTamerAgent(DqnAgent, _TamerMixin):
    """Combined policy over alpha_q*Q + alpha_h*H with decaying alpha_h."""

    kind = "dqn-tamer"

    def __init__(self, obs_dim, n_actions, cfg: AgentConfig, seed,
                 p_delay_assumed=DEFAULT_ASSUMED_DELAY):
        super().__init__(obs_dim, n_actions, cfg, seed)
        self._init_tamer(obs_dim, n_actions, cfg, p_delay_assumed)

    def begin_episode(self) -> None:
        self.window.clear()

    def action_values(self, obs) -> np.ndarray:
        return (self.cfg.alpha_q * nn.forward(self.qnet, obs)
                + self.alpha_h * nn.forward(self.hnet, obs))

    def select_action(self, obs, rng) -> int:
        return select_action_dqntamer(self.qnet, self.hnet, obs,
                                      self.cfg.alpha_q, self.alpha_h,
                                      self.epsilon, rng)

    def handle_transition(self, transition, step, events, rng) -> None:
        self.window.push(transition.obs, transition.action, step)
        self._absorb_feedback(events)
        self.replay.push(transition)
        self._tick_schedules()
        if self._due():
            self.q_updates += 1
            dqn_update(self.qnet, self.target_qnet, self.q_opt, self.replay,
                       self.cfg, rng, self.q_updates)
            if self.d_global:
                tamer_update_global(self.hnet, self.h_opt, self.d_global,
                                    self.cfg.batch_size, rng)


def make_agent(kind: str, obs_dim: int, n_actions: int, cfg: AgentConfig, seed,
               p_delay_assumed=DEFAULT_ASSUMED_DELAY) -> AgentBase:
    classes = {a.kind: a for a in (DqnAgent, ShapedDqnAgent, DeepTamerAgent, DqnTamerAgent)}
    if kind not in classes:
        raise ConfigError(f"unknown agent kind {kind!r}; expected one of {AGENT_KINDS}")
    return classes[kind](obs_dim, n_actions, cfg, seed, p_delay_assumed)


def _net_payload(net: nn.Network, opt: nn.RmsPropState) -> dict:
    payload = json.loads(nn.network_to_json(net))
    payload["optim"] = {name: getattr(opt.acc, name).tolist()
                        for name in ("w1", "b1", "w2", "b2")}
    return payload


def _restore_net(payload: dict, cfg: AgentConfig) -> tuple[nn.Network, nn.RmsPropState]:
    net = nn.network_from_json(json.dumps(payload))
    opt = nn.RmsPropState.for_network(net, cfg.learning_rate)
    for name in ("w1", "b1", "w2", "b2"):
        getattr(opt.acc, name)[:] = np.asarray(payload["optim"][name], dtype=float)
    return net, opt


def agent_checkpoint(agent: AgentBase, include_buffers: bool = False) -> dict:
    """JSON-ready snapshot: networks with optimizer accumulators, schedule
    state, and (optionally) the replay buffer and feedback store."""
    payload = {
        "kind": agent.kind,
        "obs_dim": agent.obs_dim,
        "n_actions": agent.n_actions,
        "config": agent.cfg.to_dict(),
        "schedules": {"epsilon": agent.epsilon, "alpha_h": agent.alpha_h,
                      "steps": agent.steps},
        "networks": {},
    }
    if isinstance(agent, DqnAgent):
        payload["networks"]["q"] = _net_payload(agent.qnet, agent.q_opt)
        payload["networks"]["q_target"] = json.loads(nn.network_to_json(agent.target_qnet))
        payload["schedules"]["q_updates"] = agent.q_updates
    if isinstance(agent, _TamerMixin):
        payload["networks"]["h"] = _net_payload(agent.hnet, agent.h_opt)
        payload["p_delay_assumed"] = list(agent.p_delay_assumed)
        if include_buffers:
            payload["d_global"] = [
                {"obs": t.obs.tolist(), "action": t.action,
                 "feedback": t.feedback, "step": t.step}
                for t in agent.d_global
            ]
    if include_buffers and isinstance(agent, DqnAgent):
        payload["replay"] = [
            {"obs": t.obs.tolist(), "action": t.action, "reward": t.reward,
             "next_obs": t.next_obs.tolist(), "done": t.done}
            for t in agent.replay._items
        ]
        payload["replay_inserted"] = agent.replay.inserted
    return payload


def agent_from_checkpoint(payload: dict) -> AgentBase:
    cfg = AgentConfig.from_dict(payload["config"])
    agent = make_agent(payload["kind"], payload["obs_dim"], payload["n_actions"],
                       cfg, seed=0,
                       p_delay_assumed=tuple(payload.get("p_delay_assumed",
                                                         DEFAULT_ASSUMED_DELAY)))
    sched = payload["schedules"]
    agent.epsilon = sched["epsilon"]
    agent.alpha_h = sched["alpha_h"]
    agent.steps = sched["steps"]
    nets = payload["networks"]
    if isinstance(agent, DqnAgent):
        agent.qnet, agent.q_opt = _restore_net(nets["q"], cfg)
        agent.target_qnet = nn.network_from_json(json.dumps(nets["q_target"]))
        agent.q_updates = sched["q_updates"]
        for item in payload.get("replay", []):
            agent.replay.push(Transition(
                obs=np.asarray(item["obs"]), action=item["action"],
                reward=item["reward"], next_obs=np.asarray(item["next_obs"]),
                done=item["done"]))
        if "replay_inserted" in payload:
            agent.replay.inserted = payload["replay_inserted"]
    if isinstance(agent, _TamerMixin):
        agent.hnet, agent.h_opt = _restore_net(nets["h"], cfg)
        agent.d_global = [
            HTriple(obs=np.asarray(item["obs"]), action=item["action"],
                    feedback=item["feedback"], step=item["step"])
            for item in payload.get("d_global", [])
        ]
    return agent


def run_agent_step(agent: AgentBase, env, source: FeedbackSource,
                   rng: np.random.Generator, episode: int) -> tuple[Transition, list[FeedbackEvent]]:
    """One full interaction step: observe, act, step the env, route feedback,
    run whichever updates the agent's algorithm calls for."""
    if env.done:
        raise ContractViolation("run_agent_step on a finished episode")
    obs = env.observe()
    step = env.steps  # index of the transition about to happen
    action = agent.select_action(obs, rng)
    outcome = env.step(action)
    transition = Transition(obs=obs, action=action, reward=outcome.reward,
                            next_obs=outcome.obs, done=outcome.done)
    source.notify(step, episode, outcome.info)
    events = source.poll(step)
    agent.handle_transition(transition, step, events, rng)
    return transition, events
