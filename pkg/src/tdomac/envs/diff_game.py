"""Max-of-two-quadratics differential game.

Both agents pick one scalar action in [-10, 10] and share the reward
max(f1, f2), where f1 is a wide quadratic peaking at 0 around (-5, -5)
and f2 a narrow one peaking at 10 around (5, 5). One step per episode;
the observation is a constant dummy state so the same replay/bootstrap
machinery as for the particle tasks applies unchanged.
"""

from __future__ import annotations

import numpy as np

from .core import EnvSpec, StepResult, validate_actions

BOUND = 10.0


def reward_surface(a1, a2):
    """Vectorized shared reward over action pairs."""
    a1 = np.asarray(a1, dtype=np.float64)
    a2 = np.asarray(a2, dtype=np.float64)
    f1 = 0.8 * (-(((a1 + 5.0) / 3.0) ** 2) - (((a2 + 5.0) / 3.0) ** 2))
    f2 = -((a1 - 5.0) ** 2) - ((a2 - 5.0) ** 2) + 10.0
    return np.maximum(f1, f2)


def diff_game_reward(a1: float, a2: float) -> tuple[float, float]:
    """Per-agent rewards for one joint action; both agents receive the same."""
    if not (-BOUND <= a1 <= BOUND and -BOUND <= a2 <= BOUND):
        raise ValueError(f"actions ({a1}, {a2}) outside [{-BOUND}, {BOUND}]")
    r = float(reward_surface(a1, a2))
    return r, r


class DiffGame:
    """One-step episodic wrapper around the reward surface."""

    def __init__(self):
        self.spec = EnvSpec(
            name="diff_game",
            n_agents=2,
            obs_dims=(1, 1),
            action_dims=(1, 1),
            action_low=-BOUND,
            action_high=BOUND,
            horizon=1,
            roles=("agent", "agent"),
        )
        self._done = True

    def reset(self, seed: int) -> list[np.ndarray]:
        self._done = False
        return [np.zeros(1), np.zeros(1)]

    def step(self, joint_action) -> StepResult:
        if self._done:
            raise RuntimeError("step() called on a finished episode; reset first")
        actions = validate_actions(self, joint_action)
        r1, r2 = diff_game_reward(float(actions[0][0]), float(actions[1][0]))
        self._done = True
        return StepResult(
            observations=[np.zeros(1), np.zeros(1)],
            rewards=np.array([r1, r2]),
            done=True,
        )

    def positions(self) -> dict:
        return {}
