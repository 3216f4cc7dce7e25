"""The training loop: collect, replay, update, evaluate, checkpoint.

A run is a pure function of (config, seed). Randomness is split into
dedicated lanes (environment, replay sampling, evaluation, one per-agent
sampling lane) spawned from a single seed sequence, so changing what is
measured never changes what is trained. The only non-deterministic field
in the metrics stream is the wall-clock-per-update figure.
"""

from __future__ import annotations

import json
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..agents import AgentNets, act, update_agent
from ..config import RunConfig, render_config
from ..envs import make_env
from ..replay import ReplayBuffer, Transition
from .checkpoint import save_checkpoint
from .evaluation import evaluate


@dataclass
class MetricsRecord:
    """One row of the metrics stream, emitted at every evaluation point."""

    step: int
    return_ma: list  # per-agent moving average over the last 100 episodes
    eval_return: list  # per-agent deterministic-eval mean return
    opponent_prediction_error: float
    critic_loss: list
    policy_loss: list
    opponent_loss: list
    grad_norm_critic: list
    grad_norm_policy: list
    grad_norm_opponent: list
    wall_clock_per_update_ms: float | None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


DETERMINISTIC_METRIC_FIELDS = tuple(
    f for f in MetricsRecord.__dataclass_fields__ if f != "wall_clock_per_update_ms"
)


def _episode_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63))


def train_single(cfg: RunConfig, seed: int, out_dir: str | Path) -> dict:
    """Train one seed, writing config, metrics, checkpoints and a manifest.

    Returns the summary dict that is also stored in the manifest. Any
    exception marks the manifest failed (with the message) and re-raises.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(render_config(cfg), encoding="utf-8")
    manifest = {"seed": seed, "env": cfg.env, "status": "running", "total_steps": cfg.total_steps}
    _write_manifest(out, manifest)
    try:
        summary = _run_loop(cfg, seed, out)
    except Exception as exc:
        manifest.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        _write_manifest(out, manifest)
        raise
    manifest.update(status="completed", final=summary)
    _write_manifest(out, manifest)
    return summary


def _write_manifest(out: Path, manifest: dict) -> None:
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _run_loop(cfg: RunConfig, seed: int, out: Path) -> dict:
    env = make_env(cfg.env)
    spec = env.spec
    n = spec.n_agents

    root = np.random.SeedSequence(seed)
    env_ss, replay_ss, eval_ss, *agent_ss = root.spawn(3 + n)
    env_rng = np.random.default_rng(env_ss)
    replay_rng = np.random.default_rng(replay_ss)
    eval_rng = np.random.default_rng(eval_ss)
    agent_rngs = [np.random.default_rng(ss) for ss in agent_ss]

    agents = [AgentNets(i, spec, cfg.hyper, agent_rngs[i]) for i in range(n)]
    buffer = ReplayBuffer(spec, cfg.buffer_capacity)

    obs = env.reset(_episode_seed(env_rng))
    episode_returns = np.zeros(n)
    return_windows = [deque(maxlen=100) for _ in range(n)]
    last_reports = None
    update_ms: list[float] = []
    record = None

    metrics_path = out / "metrics.jsonl"
    csv_rows = []
    with open(metrics_path, "w", encoding="utf-8") as metrics_fh:
        for step in range(1, cfg.total_steps + 1):
            if step <= cfg.warmup_steps:
                actions = [
                    agent_rngs[i].uniform(spec.action_low, spec.action_high, spec.action_dims[i])
                    for i in range(n)
                ]
            else:
                actions = [act(agents[i], obs[i], agent_rngs[i]).action for i in range(n)]

            result = env.step(actions)
            buffer.push(Transition(obs, result.observations, actions, result.rewards, result.done))
            episode_returns += result.rewards
            if result.done:
                for i in range(n):
                    return_windows[i].append(episode_returns[i])
                episode_returns = np.zeros(n)
                obs = env.reset(_episode_seed(env_rng))
            else:
                obs = result.observations

            if step > cfg.warmup_steps:
                t0 = time.perf_counter()
                last_reports = [
                    update_agent(agents[i], buffer.sample(cfg.hyper.batch_size, replay_rng),
                                 agents, agent_rngs[i])
                    for i in range(n)
                ]
                update_ms.append((time.perf_counter() - t0) * 1000.0 / n)

            if step % cfg.eval_interval == 0:
                record = _emit_record(
                    step, cfg, agents, return_windows, last_reports, update_ms, eval_rng
                )
                metrics_fh.write(record.to_json() + "\n")
                metrics_fh.flush()
                csv_rows.append(record)
                update_ms = []

            if step % cfg.checkpoint_interval == 0:
                save_checkpoint(out / "checkpoints" / f"step_{step:08d}", agents, step, seed)

        if record is None or record.step != cfg.total_steps:
            record = _emit_record(
                cfg.total_steps, cfg, agents, return_windows, last_reports, update_ms, eval_rng
            )
            metrics_fh.write(record.to_json() + "\n")
            csv_rows.append(record)

    save_checkpoint(out / "checkpoints" / "final", agents, cfg.total_steps, seed)
    _write_csv(out / "summary.csv", csv_rows, spec.n_agents)
    return {
        "step": record.step,
        "eval_return": record.eval_return,
        "opponent_prediction_error": record.opponent_prediction_error,
        "return_ma": record.return_ma,
    }


def _emit_record(step, cfg, agents, return_windows, last_reports, update_ms, eval_rng):
    executors = [agent.executor() for agent in agents]
    eval_result = evaluate(executors, cfg.env, cfg.eval_episodes, _episode_seed(eval_rng))
    n = len(agents)
    if last_reports is None:
        losses = {k: [None] * n for k in ("critic", "policy", "opponent")}
        norms = {k: [None] * n for k in ("critic", "policy", "opponent")}
    else:
        losses = {
            "critic": [r.critic_loss for r in last_reports],
            "policy": [r.policy_loss for r in last_reports],
            "opponent": [r.opponent_loss for r in last_reports],
        }
        norms = {
            "critic": [r.grad_norm_critic for r in last_reports],
            "policy": [r.grad_norm_policy for r in last_reports],
            "opponent": [r.grad_norm_opponent for r in last_reports],
        }
    return MetricsRecord(
        step=step,
        return_ma=[float(np.mean(w)) if w else None for w in return_windows],
        eval_return=[float(x) for x in eval_result.per_agent_return],
        opponent_prediction_error=eval_result.opponent_prediction_error,
        critic_loss=losses["critic"],
        policy_loss=losses["policy"],
        opponent_loss=losses["opponent"],
        grad_norm_critic=norms["critic"],
        grad_norm_policy=norms["policy"],
        grad_norm_opponent=norms["opponent"],
        wall_clock_per_update_ms=float(np.mean(update_ms)) if update_ms else None,
    )


def _write_csv(path: Path, rows: list[MetricsRecord], n: int) -> None:
    cols = ["step"]
    cols += [f"eval_return_{i}" for i in range(n)]
    cols += [f"return_ma_{i}" for i in range(n)]
    cols += ["opponent_prediction_error"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            vals = [str(r.step)]
            vals += ["" if v is None else repr(v) for v in r.eval_return]
            vals += ["" if v is None else repr(v) for v in r.return_ma]
            vals.append(repr(r.opponent_prediction_error))
            fh.write(",".join(vals) + "\n")


def seed_dir(out_dir: str | Path, seed: int) -> Path:
    return Path(out_dir) / f"seed_{seed}"


def _train_single_args(args) -> dict:
    cfg, seed, out = args
    return train_single(cfg, seed, out)


def train(cfg: RunConfig, out_dir: str | Path | None = None, workers: int = 1) -> list[dict]:
    """Train every seed in the config, each into its own subdirectory.

    Seeds are independent runs; workers > 1 executes them in separate
    processes.
    """
    out = Path(out_dir if out_dir is not None else (cfg.out_dir or "runs"))
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(render_config(cfg), encoding="utf-8")
    jobs = [(cfg, seed, seed_dir(out, seed)) for seed in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_train_single_args, jobs))
    return [train_single(cfg, seed, path) for cfg, seed, path in jobs]
