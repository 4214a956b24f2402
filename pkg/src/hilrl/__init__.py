"""Human-in-the-loop RL workbench.

DQN, reward-shaped DQN, Deep TAMER and DQN-TAMER agents trained against
Maze and Taxi gridworlds, with a fully parameterized simulated human
observer (binary, delayed, stochastic, unsustainable, noisy feedback) and
a live websocket mode for real human feedback.
"""

__version__ = "0.1.0"

from .agents import (
    AGENT_KINDS,
    AgentConfig,
    DeepTamerAgent,
    DqnAgent,
    DqnTamerAgent,
    ShapedDqnAgent,
    make_agent,
    run_agent_step,
)
from .envs import MazeEnv, TaxiEnv, maze_generate
from .harness import EpisodeResult, ExperimentConfig, run_experiment, trimmed_mean
from .observer import FeedbackEvent, ObserverConfig, SimulatedObserver

__all__ = [
    "__version__",
    "AGENT_KINDS",
    "AgentConfig",
    "DeepTamerAgent",
    "DqnAgent",
    "DqnTamerAgent",
    "ShapedDqnAgent",
    "make_agent",
    "run_agent_step",
    "MazeEnv",
    "TaxiEnv",
    "maze_generate",
    "EpisodeResult",
    "ExperimentConfig",
    "run_experiment",
    "trimmed_mean",
    "FeedbackEvent",
    "ObserverConfig",
    "SimulatedObserver",
]
