"""Flat, human-readable run configuration.

Three sections (env, hyper, run) of key = value lines; every key has a
default, unknown keys are rejected, and the effective config can be
rendered back out so a run directory always reproduces its run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .agents import Hyper
from .envs import ENV_NAMES
from .replay import DEFAULT_CAPACITY, WARMUP_STEPS


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    env: str = "diff_game"
    seeds: tuple[int, ...] = (0,)
    total_steps: int = 100_000
    eval_interval: int = 1000
    eval_episodes: int = 20
    checkpoint_interval: int = 10_000
    warmup_steps: int = WARMUP_STEPS
    buffer_capacity: int = DEFAULT_CAPACITY
    out_dir: str | None = None
    hyper: Hyper = field(default_factory=Hyper)

    def __post_init__(self):
        if self.env not in ENV_NAMES:
            raise ConfigError(
                f"unknown environment {self.env!r}; valid names: {', '.join(ENV_NAMES)}"
            )
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.total_steps <= self.warmup_steps:
            raise ConfigError(
                f"total_steps ({self.total_steps}) must exceed warmup_steps ({self.warmup_steps})"
            )
        for name in ("eval_interval", "eval_episodes", "checkpoint_interval", "buffer_capacity"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")


# key -> (section, parser, render)
def _parse_seeds(text: str) -> tuple[int, ...]:
    items = [p for chunk in text.split(",") for p in chunk.split()]
    if not items:
        raise ValueError("empty seed list")
    return tuple(int(p) for p in items)


_SCHEMA = {
    "env.name": str,
    "hyper.gamma": float,
    "hyper.alpha": float,
    "hyper.tau": float,
    "hyper.lr": float,
    "hyper.batch_size": int,
    "run.seeds": _parse_seeds,
    "run.total_steps": int,
    "run.eval_interval": int,
    "run.eval_episodes": int,
    "run.checkpoint_interval": int,
    "run.warmup_steps": int,
    "run.buffer_capacity": int,
    "run.out_dir": str,
}

_SECTIONS = ("env", "hyper", "run")


def _raw_defaults() -> dict:
    cfg = RunConfig()
    return {
        "env.name": cfg.env,
        "hyper.gamma": cfg.hyper.gamma,
        "hyper.alpha": cfg.hyper.alpha,
        "hyper.tau": cfg.hyper.tau,
        "hyper.lr": cfg.hyper.lr,
        "hyper.batch_size": cfg.hyper.batch_size,
        "run.seeds": cfg.seeds,
        "run.total_steps": cfg.total_steps,
        "run.eval_interval": cfg.eval_interval,
        "run.eval_episodes": cfg.eval_episodes,
        "run.checkpoint_interval": cfg.checkpoint_interval,
        "run.warmup_steps": cfg.warmup_steps,
        "run.buffer_capacity": cfg.buffer_capacity,
        "run.out_dir": cfg.out_dir,
    }


def _build(values: dict) -> RunConfig:
    try:
        hyper = Hyper(
            gamma=values["hyper.gamma"],
            alpha=values["hyper.alpha"],
            tau=values["hyper.tau"],
            lr=values["hyper.lr"],
            batch_size=values["hyper.batch_size"],
        )
        return RunConfig(
            env=values["env.name"],
            seeds=tuple(values["run.seeds"]),
            total_steps=values["run.total_steps"],
            eval_interval=values["run.eval_interval"],
            eval_episodes=values["run.eval_episodes"],
            checkpoint_interval=values["run.checkpoint_interval"],
            warmup_steps=values["run.warmup_steps"],
            buffer_capacity=values["run.buffer_capacity"],
            out_dir=values["run.out_dir"],
            hyper=hyper,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse config file content, citing line numbers for all errors."""
    values = _raw_defaults()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(
                    f"{source}:{lineno}: unknown section [{section}]; expected one of {_SECTIONS}"
                )
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"{source}:{lineno}: key outside of any [section]")
        key, _, value = line.partition("=")
        full = f"{section}.{key.strip()}"
        if full not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {full!r}")
        try:
            values[full] = _SCHEMA[full](value.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {full}: {exc}") from None
    return _build(values)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply section.key=value pairs on top of an existing config."""
    values = _values_of(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown override key {key!r}; valid keys: {', '.join(_SCHEMA)}")
        try:
            values[key] = _SCHEMA[key](value.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return _build(values)


def _values_of(cfg: RunConfig) -> dict:
    return {
        "env.name": cfg.env,
        "hyper.gamma": cfg.hyper.gamma,
        "hyper.alpha": cfg.hyper.alpha,
        "hyper.tau": cfg.hyper.tau,
        "hyper.lr": cfg.hyper.lr,
        "hyper.batch_size": cfg.hyper.batch_size,
        "run.seeds": cfg.seeds,
        "run.total_steps": cfg.total_steps,
        "run.eval_interval": cfg.eval_interval,
        "run.eval_episodes": cfg.eval_episodes,
        "run.checkpoint_interval": cfg.checkpoint_interval,
        "run.warmup_steps": cfg.warmup_steps,
        "run.buffer_capacity": cfg.buffer_capacity,
        "run.out_dir": cfg.out_dir,
    }


def render_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config_text(render_config(c)) == c."""
    values = _values_of(cfg)
    lines = []
    for section in _SECTIONS:
        lines.append(f"[{section}]")
        for key, value in values.items():
            sec, _, name = key.partition(".")
            if sec != section:
                continue
            if value is None:
                continue
            if key == "run.seeds":
                value = ", ".join(str(s) for s in value)
            lines.append(f"{name} = {value}")
        lines.append("")
    return "\n".join(lines)


def default_config_text() -> str:
    return render_config(RunConfig())


def with_seed(cfg: RunConfig, seed: int) -> RunConfig:
    return replace(cfg, seeds=(seed,))
