"""Checkpoint directories: one serialized network per file plus a manifest."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..agents import AgentNets, Executor, Hyper
from ..envs.core import EnvSpec
from ..nncore import Mlp

_NET_KINDS = ("policy", "opponent_model", "critic", "target_critic")


def save_checkpoint(path: str | Path, agents: list[AgentNets], step: int, seed: int) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    spec = agents[0].spec
    for agent in agents:
        for kind in _NET_KINDS:
            getattr(agent, kind).save(path / f"agent{agent.index}_{kind}.net")
    manifest = {
        "env_spec": spec.to_dict(),
        "hyper": agents[0].hyper.to_dict(),
        "step": step,
        "seed": seed,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


@dataclass
class Checkpoint:
    spec: EnvSpec
    hyper: Hyper
    step: int
    seed: int
    policies: list[Mlp]
    opponent_models: list[Mlp]
    critics: list[Mlp]
    target_critics: list[Mlp]

    def executor(self, index: int) -> Executor:
        return Executor(index, self.spec, self.policies[index], self.opponent_models[index])

    def executors(self) -> list[Executor]:
        return [self.executor(i) for i in range(self.spec.n_agents)]


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    raw = dict(manifest["env_spec"])
    spec = EnvSpec(
        name=raw["name"],
        n_agents=raw["n_agents"],
        obs_dims=tuple(raw["obs_dims"]),
        action_dims=tuple(raw["action_dims"]),
        action_low=raw["action_low"],
        action_high=raw["action_high"],
        horizon=raw["horizon"],
        roles=tuple(raw["roles"]),
    )
    nets = {kind: [] for kind in _NET_KINDS}
    for i in range(spec.n_agents):
        for kind in _NET_KINDS:
            nets[kind].append(Mlp.load(path / f"agent{i}_{kind}.net"))
    return Checkpoint(
        spec=spec,
        hyper=Hyper(**manifest["hyper"]),
        step=manifest["step"],
        seed=manifest["seed"],
        policies=nets["policy"],
        opponent_models=nets["opponent_model"],
        critics=nets["critic"],
        target_critics=nets["target_critic"],
    )


def find_checkpoint(run_or_checkpoint_dir: str | Path) -> Path:
    """Accept either a checkpoint directory or a run directory (in which
    case the final checkpoint is used)."""
    path = Path(run_or_checkpoint_dir)
    if (path / "manifest.json").exists() and (path / "agent0_policy.net").exists():
        return path
    final = path / "checkpoints" / "final"
    if (final / "manifest.json").exists():
        return final
    raise FileNotFoundError(f"no checkpoint found under {path}")
