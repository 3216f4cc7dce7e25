"""Shared off-policy experience buffer holding joint transitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs.core import EnvSpec

DEFAULT_CAPACITY = 1_000_000
WARMUP_STEPS = 1000
_INITIAL_ALLOC = 4096


@dataclass
class Transition:
    """One joint experience tuple: every agent's view of a single step."""

    obs: list[np.ndarray]
    next_obs: list[np.ndarray]
    actions: list[np.ndarray]
    rewards: np.ndarray
    done: bool


@dataclass
class ReplayBatch:
    obs: list[np.ndarray]
    next_obs: list[np.ndarray]
    actions: list[np.ndarray]
    rewards: np.ndarray  # (batch, n_agents)
    done: np.ndarray  # (batch,) float 0/1


class ReplayBuffer:
    """Ring buffer over transitions; uniform sampling with replacement.

    Storage grows in doubling chunks up to capacity so idle capacity
    costs no memory.
    """

    def __init__(self, spec: EnvSpec, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.spec = spec
        self.capacity = int(capacity)
        self.size = 0
        self._cursor = 0
        self._alloc = 0
        n = spec.n_agents
        self._obs = [None] * n
        self._next_obs = [None] * n
        self._actions = [None] * n
        self._rewards = None
        self._done = None
        self._grow(min(_INITIAL_ALLOC, self.capacity))

    def _grow(self, new_alloc: int):
        spec = self.spec
        for i in range(spec.n_agents):
            self._obs[i] = self._resized(self._obs[i], (new_alloc, spec.obs_dims[i]))
            self._next_obs[i] = self._resized(self._next_obs[i], (new_alloc, spec.obs_dims[i]))
            self._actions[i] = self._resized(self._actions[i], (new_alloc, spec.action_dims[i]))
        self._rewards = self._resized(self._rewards, (new_alloc, spec.n_agents))
        self._done = self._resized(self._done, (new_alloc,))
        self._alloc = new_alloc

    @staticmethod
    def _resized(old, shape):
        new = np.zeros(shape)
        if old is not None:
            new[: old.shape[0]] = old
        return new

    def push(self, t: Transition) -> None:
        spec = self.spec
        if len(t.obs) != spec.n_agents or len(t.next_obs) != spec.n_agents or len(t.actions) != spec.n_agents:
            raise ValueError("transition arity does not match agent count")
        rewards = np.asarray(t.rewards, dtype=np.float64)
        if rewards.shape != (spec.n_agents,) or not np.all(np.isfinite(rewards)):
            raise ValueError("transition rewards malformed")
        row = self._cursor
        if row == self._alloc:
            self._grow(min(self._alloc * 2, self.capacity))
        for i in range(spec.n_agents):
            obs = np.asarray(t.obs[i], dtype=np.float64)
            nxt = np.asarray(t.next_obs[i], dtype=np.float64)
            act = np.asarray(t.actions[i], dtype=np.float64)
            if obs.shape != (spec.obs_dims[i],) or nxt.shape != (spec.obs_dims[i],):
                raise ValueError(f"agent {i} observation shape mismatch")
            if act.shape != (spec.action_dims[i],):
                raise ValueError(f"agent {i} action shape mismatch")
            if np.any(act < spec.action_low) or np.any(act > spec.action_high):
                raise ValueError(f"agent {i} action outside bounds")
            self._obs[i][row] = obs
            self._next_obs[i][row] = nxt
            self._actions[i][row] = act
        self._rewards[row] = rewards
        self._done[row] = 1.0 if t.done else 0.0
        self._cursor = (self._cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator) -> ReplayBatch:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        if batch < 1:
            raise ValueError("batch size must be positive")
        idx = rng.integers(0, self.size, size=batch)
        return ReplayBatch(
            obs=[o[idx] for o in self._obs],
            next_obs=[o[idx] for o in self._next_obs],
            actions=[a[idx] for a in self._actions],
            rewards=self._rewards[idx],
            done=self._done[idx],
        )
