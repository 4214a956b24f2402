"""Classic 5x5 taxi task: pick a passenger up at one landmark, drop at another.

The layout is the standard Dietterich arrangement; interior wall segments
block only east/west movement.  Rewards: -1 per step, +20 for a correct
drop (ends the episode), extra -10 for a wrong pickup or drop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ContractViolation
from .maze import StepOutcome, manhattan

SIZE = 5
MAX_STEPS = 1000
STEP_REWARD = -1.0
DROP_REWARD = 20.0
ILLEGAL_PENALTY = -10.0

ACTIONS = ("north", "east", "south", "west", "pickup", "drop")
_MOVES = {0: (-1, 0), 1: (0, 1), 2: (1, 0), 3: (0, -1)}

LANDMARK_NAMES = ("R", "G", "B", "Y")
# (row, col): R and G on the top corners, Y bottom-left, B next to bottom-right
LANDMARKS = {"R": (0, 0), "G": (0, 4), "B": (4, 3), "Y": (4, 0)}
IN_TAXI = "in_taxi"

# wall segment between (r, c) and (r, c+1); three two-cell-tall barriers
WALL_SEGMENTS = frozenset({(0, 1), (1, 1), (3, 0), (4, 0), (3, 2), (4, 2)})

Cell = tuple[int, int]


@dataclass
class TaxiState:
    position: Cell
    passenger: str  # landmark name or "in_taxi"
    destination: str
    steps: int = 0
    done: bool = False

    @property
    def carrying(self) -> bool:
        return self.passenger == IN_TAXI


def _blocked(pos: Cell, action: int) -> bool:
    r, c = pos
    dr, dc = _MOVES[action]
    nr, nc = r + dr, c + dc
    if not (0 <= nr < SIZE and 0 <= nc < SIZE):
        return True
    if dc == 1 and (r, c) in WALL_SEGMENTS:
        return True
    if dc == -1 and (r, c - 1) in WALL_SEGMENTS:
        return True
    return False


def target_cell(state: TaxiState) -> Cell:
    """Where the human oracle measures distance to: passenger, then goal."""
    if state.carrying:
        return LANDMARKS[state.destination]
    return LANDMARKS[state.passenger]


def taxi_reset(seed) -> TaxiState:
    """Fresh episode: uniform taxi cell, passenger and destination are two
    distinct landmarks drawn uniformly."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    position = (int(rng.integers(SIZE)), int(rng.integers(SIZE)))
    src, dst = rng.choice(len(LANDMARK_NAMES), size=2, replace=False)
    return TaxiState(
        position=position,
        passenger=LANDMARK_NAMES[int(src)],
        destination=LANDMARK_NAMES[int(dst)],
    )


def taxi_step(state: TaxiState, action: int) -> StepOutcome:
    """Advance one step; mutates state."""
    if state.done:
        raise ContractViolation("taxi_step called on a finished episode")
    if not 0 <= action < len(ACTIONS):
        raise ContractViolation(f"action {action} out of range")

    dist_before = manhattan(state.position, target_cell(state))
    reward = STEP_REWARD
    event = None

    if action < 4:
        if not _blocked(state.position, action):
            dr, dc = _MOVES[action]
            state.position = (state.position[0] + dr, state.position[1] + dc)
    elif ACTIONS[action] == "pickup":
        if not state.carrying and state.position == LANDMARKS[state.passenger]:
            state.passenger = IN_TAXI
            event = "correct_pickup"
        else:
            reward += ILLEGAL_PENALTY
            event = "wrong_pickup"
    else:  # drop
        if state.carrying and state.position == LANDMARKS[state.destination]:
            reward += DROP_REWARD
            state.done = True
            event = "correct_drop"
        else:
            # wrong drop keeps the passenger in place (or in the taxi)
            reward += ILLEGAL_PENALTY
            event = "wrong_drop"

    dist_after = manhattan(state.position, target_cell(state))

    state.steps += 1
    if state.steps >= MAX_STEPS:
        state.done = True

    return StepOutcome(
        obs=taxi_observe(state),
        reward=reward,
        done=state.done,
        info={"dist_before": dist_before, "dist_after": dist_after, "event": event},
    )


def taxi_observe(state: TaxiState, mode: str = "extended") -> np.ndarray:
    """minimal: one-hot(25) position + in_taxi bit (26).
    extended: additionally one-hot(5) passenger slot + one-hot(4) destination (35)."""
    pos = np.zeros(SIZE * SIZE)
    pos[state.position[0] * SIZE + state.position[1]] = 1.0
    carrying = np.array([1.0 if state.carrying else 0.0])
    if mode == "minimal":
        return np.concatenate([pos, carrying])
    if mode == "extended":
        passenger = np.zeros(len(LANDMARK_NAMES) + 1)
        if state.carrying:
            passenger[-1] = 1.0
        else:
            passenger[LANDMARK_NAMES.index(state.passenger)] = 1.0
        dest = np.zeros(len(LANDMARK_NAMES))
        dest[LANDMARK_NAMES.index(state.destination)] = 1.0
        return np.concatenate([pos, carrying, passenger, dest])
    raise ConfigError(f"unknown observation mode {mode!r}")


class TaxiEnv:
    """Episodic wrapper; each reset draws a fresh initial state from its rng."""

    kind = "taxi"
    actions = ACTIONS

    def __init__(self, seed, observation_mode: str = "extended"):
        if observation_mode not in ("extended", "minimal"):
            raise ConfigError(f"unknown observation mode {observation_mode!r}")
        self.observation_mode = observation_mode
        self._rng = np.random.default_rng(seed)
        self.state = taxi_reset(self._rng)

    @property
    def observation_dim(self) -> int:
        return 35 if self.observation_mode == "extended" else 26

    @property
    def n_actions(self) -> int:
        return len(ACTIONS)

    @property
    def done(self) -> bool:
        return self.state.done

    @property
    def steps(self) -> int:
        return self.state.steps

    def reset(self) -> np.ndarray:
        self.state = taxi_reset(self._rng)
        return self.observe()

    def observe(self) -> np.ndarray:
        return taxi_observe(self.state, self.observation_mode)

    def step(self, action: int) -> StepOutcome:
        out = taxi_step(self.state, action)
        out.obs = self.observe()
        return out

    def render(self) -> str:
        rows = []
        for r in range(SIZE):
            row = []
            for c in range(SIZE):
                cell = "."
                for name, pos in LANDMARKS.items():
                    if pos == (r, c):
                        cell = name.lower()
                if not self.state.carrying and LANDMARKS.get(self.state.passenger) == (r, c):
                    cell = "P"
                if LANDMARKS[self.state.destination] == (r, c):
                    cell = cell.upper() if cell != "P" else "P"
                if self.state.position == (r, c):
                    cell = "T"
                row.append(cell)
                row.append("|" if (r, c) in WALL_SEGMENTS else " ")
            rows.append("".join(row).rstrip())
        return "\n".join(rows)
