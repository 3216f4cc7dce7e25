"""Deterministic evaluation rollouts and cross-play scoring."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..agents import Executor, act, opponent_prediction_error
from ..envs import make_env
from ..envs.core import trajectory_record, write_trajectory
from .checkpoint import find_checkpoint, load_checkpoint


@dataclass
class EvalResult:
    per_agent_return: np.ndarray
    opponent_prediction_error: float
    episodes: int


def evaluate(
    executors: list[Executor],
    env_name: str,
    episodes: int,
    seed: int,
    dump_path: str | Path | None = None,
) -> EvalResult:
    """Run deterministic-mode episodes; returns mean per-agent returns and
    the opponent-model prediction error over all steps."""
    if episodes < 1:
        raise ValueError("episodes must be positive")
    env = make_env(env_name)
    n = env.spec.n_agents
    rng = np.random.default_rng(seed)

    returns = np.zeros(n)
    obs_rows = [[] for _ in range(n)]
    exec_rows = [[] for _ in range(n)]
    layouts = [[(j, a, b) for j, a, b in _layout(env.spec, i)] for i in range(n)]
    dump = [] if dump_path is not None else None

    for _ in range(episodes):
        obs = env.reset(int(rng.integers(0, 2**63)))
        done = False
        step = 0
        while not done:
            results = [act(executors[i], obs[i], deterministic=True) for i in range(n)]
            actions = [r.action for r in results]
            for i in range(n):
                obs_rows[i].append(obs[i])
                exec_rows[i].append(np.concatenate([actions[j] for j, _, _ in layouts[i]]))
            out = env.step(actions)
            returns += out.rewards
            if dump is not None:
                dump.append(trajectory_record(step, env, actions, out.rewards))
            obs = out.observations
            done = out.done
            step += 1

    if dump is not None:
        write_trajectory(dump_path, dump)

    errors = [
        opponent_prediction_error(executors[i], np.stack(obs_rows[i]), np.stack(exec_rows[i]))
        for i in range(n)
    ]
    return EvalResult(
        per_agent_return=returns / episodes,
        opponent_prediction_error=float(np.mean(errors)),
        episodes=episodes,
    )


def _layout(spec, index):
    from ..agents import opponent_layout

    return opponent_layout(spec, index)


def evaluate_checkpoint(run_or_ckpt: str | Path, episodes: int, seed: int,
                        dump_path: str | Path | None = None) -> EvalResult:
    ckpt = load_checkpoint(find_checkpoint(run_or_ckpt))
    return evaluate(ckpt.executors(), ckpt.spec.name, episodes, seed, dump_path=dump_path)


def crossplay_advantage(
    prey_side: str | Path,
    predator_side: str | Path,
    episodes: int,
    seed: int,
) -> float:
    """Mean (prey episode reward - summed predator episode rewards) when the
    prey policy comes from one checkpoint and the predators from another."""
    prey_ckpt = load_checkpoint(find_checkpoint(prey_side))
    pred_ckpt = load_checkpoint(find_checkpoint(predator_side))
    if prey_ckpt.spec != pred_ckpt.spec:
        raise ValueError("checkpoints were trained on incompatible environment specs")
    spec = prey_ckpt.spec
    if "prey" not in spec.roles:
        raise ValueError(f"environment {spec.name!r} has no prey/predator roles")

    executors = []
    for i, role in enumerate(spec.roles):
        source = prey_ckpt if role == "prey" else pred_ckpt
        executors.append(source.executor(i))

    result = evaluate(executors, spec.name, episodes, seed)
    prey_idx = [i for i, r in enumerate(spec.roles) if r == "prey"]
    pred_idx = [i for i, r in enumerate(spec.roles) if r == "predator"]
    prey_return = float(result.per_agent_return[prey_idx].sum())
    pred_return = float(result.per_agent_return[pred_idx].sum())
    return prey_return - pred_return


@dataclass
class CrossplayTable:
    """Pairing table: rows are prey sources, columns predator sources."""

    sides: list[str]
    raw: np.ndarray
    normalized: np.ndarray | None
    degenerate: bool
    row_means: np.ndarray
    col_means: np.ndarray

    def to_dict(self) -> dict:
        return {
            "sides": self.sides,
            "raw": self.raw.tolist(),
            "normalized": None if self.normalized is None else self.normalized.tolist(),
            "degenerate": self.degenerate,
            "row_means": self.row_means.tolist(),
            "col_means": self.col_means.tolist(),
        }


def crossplay_table(run_dirs: list[str | Path], episodes: int, seed: int) -> CrossplayTable:
    """All-pairs advantage scores, min-max normalized to [0, 1] across the
    table. A constant table cannot be normalized and is flagged degenerate,
    reporting raw scores instead."""
    k = len(run_dirs)
    raw = np.zeros((k, k))
    for r, prey_side in enumerate(run_dirs):
        for c, predator_side in enumerate(run_dirs):
            raw[r, c] = crossplay_advantage(prey_side, predator_side, episodes, seed)
    lo, hi = float(raw.min()), float(raw.max())
    degenerate = not hi > lo
    normalized = None if degenerate else (raw - lo) / (hi - lo)
    table = normalized if normalized is not None else raw
    return CrossplayTable(
        sides=[str(d) for d in run_dirs],
        raw=raw,
        normalized=normalized,
        degenerate=degenerate,
        row_means=table.mean(axis=1),
        col_means=table.mean(axis=0),
    )
