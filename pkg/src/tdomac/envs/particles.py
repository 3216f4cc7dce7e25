"""Simplified 2-D particle worlds: Cooperative Navigation and Predator-Prey.

Point masses on the square [-1, 1]^2. Actions are 2-D forces in [-1, 1]^2;
per step each agent's velocity decays toward the commanded force
(v <- 0.5 v + 0.5 a * accel) and positions advance by 0.1 v, clamped to
the arena. Episodes run a fixed horizon of 25 steps. Initial entity
placements are uniform in [-0.9, 0.9]^2, drawn agents-first.
"""

from __future__ import annotations

import numpy as np

from .core import EnvSpec, StepResult, validate_actions

ARENA = 1.0
INIT_RANGE = 0.9
HORIZON = 25
DT = 0.1
VEL_DECAY = 0.5

AGENT_RADIUS = 0.05
PREY_RADIUS = 0.04
PREDATOR_RADIUS = 0.075
LANDMARK_RADIUS = 0.05
OBSTACLE_RADIUS = 0.2

BASE_ACCEL = 1.0
PREY_ACCEL = 1.3  # the prey outruns the predators

COLLISION_MAGNITUDE = 10.0
AGENT_COLLISION_PENALTY = 1.0
SHAPING_COEF = 0.1


class _ParticleWorld:
    """State and kinematics shared by the two particle tasks."""

    n_agents: int
    n_landmarks: int
    agent_radii: np.ndarray
    agent_accels: np.ndarray
    landmarks_are_obstacles: bool

    def __init__(self):
        self.spec = self._build_spec()
        self.positions_a = np.zeros((self.n_agents, 2))
        self.velocities = np.zeros((self.n_agents, 2))
        self.landmarks = np.zeros((self.n_landmarks, 2))
        self.t = 0
        self._done = True

    def _build_spec(self) -> EnvSpec:
        raise NotImplementedError

    def _rewards(self) -> np.ndarray:
        raise NotImplementedError

    def reset(self, seed: int) -> list[np.ndarray]:
        rng = np.random.default_rng(seed)
        self.positions_a = rng.uniform(-INIT_RANGE, INIT_RANGE, (self.n_agents, 2))
        self.velocities = np.zeros((self.n_agents, 2))
        self.landmarks = rng.uniform(-INIT_RANGE, INIT_RANGE, (self.n_landmarks, 2))
        self.t = 0
        self._done = False
        if self.landmarks_are_obstacles:
            self._resolve_obstacles()
        return self._observations()

    def step(self, joint_action) -> StepResult:
        if self._done:
            raise RuntimeError("step() called on a finished episode; reset first")
        actions = validate_actions(self, joint_action)
        forces = np.stack(actions) * self.agent_accels[:, None]
        self.velocities = VEL_DECAY * self.velocities + (1.0 - VEL_DECAY) * forces
        self.positions_a = np.clip(self.positions_a + DT * self.velocities, -ARENA, ARENA)
        if self.landmarks_are_obstacles:
            self._resolve_obstacles()
        rewards = self._rewards()
        self.t += 1
        self._done = self.t >= self.spec.horizon
        return StepResult(observations=self._observations(), rewards=rewards, done=self._done)

    def _resolve_obstacles(self):
        # push any overlapping agent onto the obstacle boundary
        for k in range(self.n_landmarks):
            center = self.landmarks[k]
            for i in range(self.n_agents):
                min_dist = self.agent_radii[i] + OBSTACLE_RADIUS
                delta = self.positions_a[i] - center
                dist = float(np.sqrt(delta @ delta))
                if dist < min_dist:
                    direction = delta / dist if dist > 0.0 else np.array([1.0, 0.0])
                    self.positions_a[i] = center + direction * min_dist

    def _observations(self) -> list[np.ndarray]:
        obs = []
        for i in range(self.n_agents):
            parts = [self.velocities[i]]
            for j in range(self.n_agents):
                if j != i:
                    parts.append(self.positions_a[j] - self.positions_a[i])
            for k in range(self.n_landmarks):
                parts.append(self.landmarks[k] - self.positions_a[i])
            obs.append(np.concatenate(parts))
        return obs

    def positions(self) -> dict:
        return {"agents": self.positions_a.copy(), "landmarks": self.landmarks.copy()}

    def _pair_distances(self) -> np.ndarray:
        diff = self.positions_a[:, None, :] - self.positions_a[None, :, :]
        return np.sqrt((diff * diff).sum(axis=-1))


class CoopNav(_ParticleWorld):
    """Three agents cover three landmarks; everyone shares one reward."""

    n_agents = 3
    n_landmarks = 3
    landmarks_are_obstacles = False

    def __init__(self):
        self.agent_radii = np.full(self.n_agents, AGENT_RADIUS)
        self.agent_accels = np.full(self.n_agents, BASE_ACCEL)
        super().__init__()

    def _build_spec(self) -> EnvSpec:
        obs_dim = 2 + 2 * (self.n_agents - 1) + 2 * self.n_landmarks
        return EnvSpec(
            name="coop_nav",
            n_agents=self.n_agents,
            obs_dims=(obs_dim,) * self.n_agents,
            action_dims=(2,) * self.n_agents,
            action_low=-1.0,
            action_high=1.0,
            horizon=HORIZON,
            roles=("agent",) * self.n_agents,
        )

    def _rewards(self) -> np.ndarray:
        cost = 0.0
        for k in range(self.n_landmarks):
            delta = self.positions_a - self.landmarks[k]
            cost += float(np.min(np.sqrt((delta * delta).sum(axis=1))))
        dists = self._pair_distances()
        n_collisions = 0
        for i in range(self.n_agents):
            for j in range(i + 1, self.n_agents):
                if dists[i, j] < self.agent_radii[i] + self.agent_radii[j]:
                    n_collisions += 1
        shared = -cost - AGENT_COLLISION_PENALTY * n_collisions
        return np.full(self.n_agents, shared)


class PredatorPrey(_ParticleWorld):
    """Three slow cooperating predators chase one faster prey around two
    obstacle disks.

    Each predator-prey contact adds +10 to every predator and -10 to the
    prey. Dense shaping on the summed predator-prey distance (prey gains
    with distance, predators split the opposite sign) keeps the chase
    learnable at small step budgets.
    """

    n_agents = 4
    n_landmarks = 2
    n_predators = 3
    landmarks_are_obstacles = True

    def __init__(self):
        self.agent_radii = np.array([PREDATOR_RADIUS] * self.n_predators + [PREY_RADIUS])
        self.agent_accels = np.array([BASE_ACCEL] * self.n_predators + [PREY_ACCEL])
        super().__init__()

    def _build_spec(self) -> EnvSpec:
        obs_dim = 2 + 2 * (self.n_agents - 1) + 2 * self.n_landmarks
        return EnvSpec(
            name="predator_prey",
            n_agents=self.n_agents,
            obs_dims=(obs_dim,) * self.n_agents,
            action_dims=(2,) * self.n_agents,
            action_low=-1.0,
            action_high=1.0,
            horizon=HORIZON,
            roles=("predator",) * self.n_predators + ("prey",),
        )

    def _rewards(self) -> np.ndarray:
        prey = self.n_predators
        dists = self._pair_distances()
        rewards = np.zeros(self.n_agents)

        n_hits = 0
        for p in range(self.n_predators):
            if dists[p, prey] < self.agent_radii[p] + self.agent_radii[prey]:
                n_hits += 1
        rewards[:prey] += COLLISION_MAGNITUDE * n_hits
        rewards[prey] -= COLLISION_MAGNITUDE * n_hits

        spread = SHAPING_COEF * float(dists[:prey, prey].sum())
        rewards[prey] += spread
        rewards[:prey] -= spread / self.n_predators
        return rewards

    def positions(self) -> dict:
        return {
            "predators": self.positions_a[: self.n_predators].copy(),
            "prey": self.positions_a[self.n_predators :].copy(),
            "obstacles": self.landmarks.copy(),
        }
