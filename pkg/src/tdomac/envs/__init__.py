"""Multi-agent environments behind one reset/step interface."""

from .core import EnvSpec, StepResult, collision, trajectory_record, write_trajectory
from .diff_game import DiffGame, diff_game_reward, reward_surface
from .particles import CoopNav, PredatorPrey

ENV_BUILDERS = {
    "diff_game": DiffGame,
    "coop_nav": CoopNav,
    "predator_prey": PredatorPrey,
}

ENV_NAMES = tuple(sorted(ENV_BUILDERS))


def make_env(name: str):
    try:
        builder = ENV_BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; valid names: {', '.join(ENV_NAMES)}") from None
    return builder()


__all__ = [
    "CoopNav",
    "DiffGame",
    "ENV_BUILDERS",
    "ENV_NAMES",
    "EnvSpec",
    "PredatorPrey",
    "StepResult",
    "collision",
    "diff_game_reward",
    "make_env",
    "reward_surface",
    "trajectory_record",
    "write_trajectory",
]
