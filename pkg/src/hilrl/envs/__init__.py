from .maze import MazeEnv, MazeLayout, MazeState, StepOutcome, maze_generate, maze_observe, maze_step
from .taxi import TaxiEnv, TaxiState, taxi_observe, taxi_reset, taxi_step

__all__ = [
    "MazeEnv",
    "MazeLayout",
    "MazeState",
    "StepOutcome",
    "maze_generate",
    "maze_observe",
    "maze_step",
    "TaxiEnv",
    "TaxiState",
    "taxi_observe",
    "taxi_reset",
    "taxi_step",
]
