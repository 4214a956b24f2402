"""8x8 maze with random interior walls, a goal, and step penalties.

Layouts are generated from a seed (border cells stay open, interior cells
become walls with probability 0.2) and are rejection-sampled until the
start sits at Manhattan distance 5 from the goal with a connecting path.
Observations come in two flavors: full one-hot position (mdp) or the
8-neighborhood wall pattern (pomdp).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, ContractViolation, GenerationError

SIZE = 8
WALL_PROB = 0.2
INITIAL_DISTANCE = 5
STEP_REWARD = -0.01
GOAL_REWARD = 1.0
MAX_STEPS = 1000
GENERATION_RETRIES = 10_000

ACTIONS = ("north", "east", "south", "west")
# (drow, dcol) per action, row 0 at the top
_MOVES = {0: (-1, 0), 1: (0, 1), 2: (1, 0), 3: (0, -1)}
# neighbor order for the pomdp view
_NEIGHBORS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))

Cell = tuple[int, int]


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


@dataclass(frozen=True)
class MazeLayout:
    grid: np.ndarray  # (8, 8) bool, True = wall
    start: Cell
    goal: Cell
    layout_seed: int

    def is_wall(self, cell: Cell) -> bool:
        r, c = cell
        if not (0 <= r < SIZE and 0 <= c < SIZE):
            return True  # outside counts as wall for movement/observation
        return bool(self.grid[r, c])

    def spaces(self) -> list[Cell]:
        return [(r, c) for r in range(SIZE) for c in range(SIZE) if not self.grid[r, c]]


@dataclass
class MazeState:
    position: Cell
    steps: int = 0
    done: bool = False


@dataclass
class StepOutcome:
    """One transition: next observation, reward, done, and judge info."""

    obs: np.ndarray
    reward: float
    done: bool
    info: dict = field(default_factory=dict)


def _path_exists(grid: np.ndarray, start: Cell, goal: Cell) -> bool:
    if grid[start] or grid[goal]:
        return False
    seen = {start}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        if (r, c) == goal:
            return True
        for dr, dc in _MOVES.values():
            nr, nc = r + dr, c + dc
            if 0 <= nr < SIZE and 0 <= nc < SIZE and not grid[nr, nc] and (nr, nc) not in seen:
                seen.add((nr, nc))
                queue.append((nr, nc))
    return False


def maze_generate(layout_seed: int) -> MazeLayout:
    """Sample a solvable layout, deterministic in layout_seed."""
    rng = np.random.default_rng(layout_seed)
    for _ in range(GENERATION_RETRIES):
        grid = np.zeros((SIZE, SIZE), dtype=bool)
        grid[1:-1, 1:-1] = rng.random((SIZE - 2, SIZE - 2)) < WALL_PROB
        spaces = [(r, c) for r in range(SIZE) for c in range(SIZE) if not grid[r, c]]
        goal = spaces[int(rng.integers(len(spaces)))]
        candidates = [c for c in spaces if manhattan(c, goal) == INITIAL_DISTANCE]
        if not candidates:
            continue
        start = candidates[int(rng.integers(len(candidates)))]
        if _path_exists(grid, start, goal):
            return MazeLayout(grid=grid, start=start, goal=goal, layout_seed=int(layout_seed))
    raise GenerationError(f"no solvable maze found for seed {layout_seed} "
                          f"after {GENERATION_RETRIES} attempts")


def maze_step(layout: MazeLayout, state: MazeState, action: int,
              observation_mode: str = "mdp") -> StepOutcome:
    """Advance one step; mutates state. Walls and borders block movement."""
    if state.done:
        raise ContractViolation("maze_step called on a finished episode")
    if not 0 <= action < len(ACTIONS):
        raise ContractViolation(f"action {action} out of range")

    dist_before = manhattan(state.position, layout.goal)
    dr, dc = _MOVES[action]
    nxt = (state.position[0] + dr, state.position[1] + dc)
    if not layout.is_wall(nxt):
        state.position = nxt
    dist_after = manhattan(state.position, layout.goal)

    state.steps += 1
    reward = STEP_REWARD
    if state.position == layout.goal:
        reward += GOAL_REWARD
        state.done = True
    elif state.steps >= MAX_STEPS:
        state.done = True

    return StepOutcome(
        obs=maze_observe(layout, state, observation_mode),
        reward=reward,
        done=state.done,
        info={"dist_before": dist_before, "dist_after": dist_after, "event": None},
    )


def maze_observe(layout: MazeLayout, state: MazeState, mode: str) -> np.ndarray:
    if mode == "mdp":
        obs = np.zeros(SIZE * SIZE)
        obs[state.position[0] * SIZE + state.position[1]] = 1.0
        return obs
    if mode == "pomdp":
        r, c = state.position
        return np.array([float(layout.is_wall((r + dr, c + dc))) for dr, dc in _NEIGHBORS])
    raise ConfigError(f"unknown observation mode {mode!r}")


class MazeEnv:
    """Episodic wrapper around one layout."""

    kind = "maze"
    actions = ACTIONS

    def __init__(self, layout: MazeLayout, observation_mode: str = "mdp"):
        if observation_mode not in ("mdp", "pomdp"):
            raise ConfigError(f"unknown observation mode {observation_mode!r}")
        self.layout = layout
        self.observation_mode = observation_mode
        self.state = MazeState(position=layout.start)

    @property
    def observation_dim(self) -> int:
        return SIZE * SIZE if self.observation_mode == "mdp" else len(_NEIGHBORS)

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
        self.state = MazeState(position=self.layout.start)
        return self.observe()

    def observe(self) -> np.ndarray:
        return maze_observe(self.layout, self.state, self.observation_mode)

    def step(self, action: int) -> StepOutcome:
        return maze_step(self.layout, self.state, action, self.observation_mode)

    def render(self) -> str:
        rows = []
        for r in range(SIZE):
            row = []
            for c in range(SIZE):
                if (r, c) == self.state.position:
                    row.append("A")
                elif (r, c) == self.layout.goal:
                    row.append("G")
                else:
                    row.append("#" if self.layout.grid[r, c] else ".")
            rows.append("".join(row))
        return "\n".join(rows)


def layout_to_json(layout: MazeLayout) -> str:
    return json.dumps({
        "grid": layout.grid.astype(int).tolist(),
        "start": list(layout.start),
        "goal": list(layout.goal),
        "layout_seed": layout.layout_seed,
    })


def layout_from_json(text: str) -> MazeLayout:
    payload = json.loads(text)
    grid = np.asarray(payload["grid"], dtype=bool)
    if grid.shape != (SIZE, SIZE):
        raise ConfigError(f"layout grid must be {SIZE}x{SIZE}, got {grid.shape}")
    return MazeLayout(
        grid=grid,
        start=tuple(payload["start"]),
        goal=tuple(payload["goal"]),
        layout_seed=int(payload["layout_seed"]),
    )
