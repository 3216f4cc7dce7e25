"""Shared environment interface types and geometry helpers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    """Static description of a multi-agent environment."""

    name: str
    n_agents: int
    obs_dims: tuple[int, ...]
    action_dims: tuple[int, ...]
    action_low: float
    action_high: float
    horizon: int
    roles: tuple[str, ...]

    def __post_init__(self):
        if self.n_agents < 2:
            raise ValueError("environments must have at least two agents")
        if not (np.isfinite(self.action_low) and np.isfinite(self.action_high)):
            raise ValueError("action bounds must be finite")
        if not self.action_low < self.action_high:
            raise ValueError("action bounds must satisfy low < high")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_agents": self.n_agents,
            "obs_dims": list(self.obs_dims),
            "action_dims": list(self.action_dims),
            "action_low": self.action_low,
            "action_high": self.action_high,
            "horizon": self.horizon,
            "roles": list(self.roles),
        }


@dataclass
class StepResult:
    """Per-step environment output for all agents."""

    observations: list[np.ndarray]
    rewards: np.ndarray
    done: bool


def collision(p1: np.ndarray, p2: np.ndarray, r1: float, r2: float) -> bool:
    """Strict disk overlap: true iff ||p1 - p2|| < r1 + r2."""
    if r1 <= 0.0 or r2 <= 0.0:
        raise ValueError("radii must be positive")
    d = np.asarray(p1, dtype=np.float64) - np.asarray(p2, dtype=np.float64)
    return bool(np.sqrt(d @ d) < r1 + r2)


def validate_actions(env, joint_action: Sequence[np.ndarray]) -> list[np.ndarray]:
    spec = env.spec
    if len(joint_action) != spec.n_agents:
        raise ValueError(f"expected {spec.n_agents} actions, got {len(joint_action)}")
    actions = []
    for i, a in enumerate(joint_action):
        a = np.asarray(a, dtype=np.float64).reshape(-1)
        if a.shape != (spec.action_dims[i],):
            raise ValueError(
                f"agent {i} action has shape {a.shape}, expected ({spec.action_dims[i]},)"
            )
        if np.any(a < spec.action_low) or np.any(a > spec.action_high):
            raise ValueError(
                f"agent {i} action {a} outside bounds [{spec.action_low}, {spec.action_high}]"
            )
        actions.append(a)
    return actions


def write_trajectory(path: str | Path, records: Sequence[dict]) -> None:
    """Dump one episode as JSONL rows of step/positions/actions/rewards."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def trajectory_record(step: int, env, actions, rewards) -> dict:
    return {
        "step": step,
        "positions": {k: np.asarray(v).tolist() for k, v in env.positions().items()},
        "actions": [np.asarray(a).tolist() for a in actions],
        "rewards": np.asarray(rewards).tolist(),
    }
