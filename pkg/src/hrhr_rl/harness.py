"""Experiment orchestration: config files, seeded runs, metrics CSVs,
checkpoints, and landscape exports.

A run is fully determined by (resolved config, seed): one master seed per
seed entry derives independent child streams for environment noise,
action sampling, replay sampling, network initialization, and evaluation,
so no component's draws can perturb another's. Every artifact byte except
the wall-clock column is reproducible.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .action_space import ActionSpaceSpec, decode
from .agent import AgentConfig, TrainStepMetrics, TwinCriticAgent
from .baseline import BaselineConfig, GaussianPolicy, train_baseline
from .envs import (
    Box,
    ChainEnv,
    Grain,
    HRHRLandscape,
    HrhrVerdict,
    TrapCheeseEnv,
    is_hrhr,
    normalize_reward,
    trap_cheese_landscape,
)
from .approximator import load_bundle, save_bundle
from .errors import InvalidInputError
from .value_dist import ValueSupport

METRICS_SCHEMA_VERSION = 1
METRICS_FIELDS = (
    "step",
    "seed",
    "algorithm",
    "episode_return",
    "eval_mean_return",
    "critic_loss_1",
    "critic_loss_2",
    "actor_loss",
    "mean_action_entropy",
    "gate_rate",
    "wall_clock_s",
)

OUTPUT_ROOT_ENV_VAR = "HRHR_RL_OUT_ROOT"

ABLATION_FLAGS = ("normal_actor", "normal_exploration", "single_critic", "raw_weight")


# ---------------------------------------------------------------------------
# Configuration


def _default_ablation() -> dict:
    return {flag: False for flag in ABLATION_FLAGS}


@dataclass
class ExperimentConfig:
    env: dict
    algorithm: str = "discrete"  # or "gaussian"
    agent: dict = field(default_factory=dict)
    baseline: dict = field(default_factory=dict)
    total_steps: int = 4000
    eval_every: int = 200
    eval_episodes: int = 500
    final_eval_episodes: int = 10_000
    seeds: tuple[int, ...] = (0,)
    out_dir: str = "runs/experiment"
    ablation: dict = field(default_factory=_default_ablation)

    def __post_init__(self):
        if self.algorithm not in ("discrete", "gaussian"):
            raise InvalidInputError(f"unknown algorithm {self.algorithm!r}")
        if not self.seeds:
            raise InvalidInputError("seed list must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise InvalidInputError("seeds must be distinct")
        warmup = int(self.agent.get("warmup_steps", 0))
        if self.total_steps != 0 and self.total_steps < warmup:
            raise InvalidInputError(
                f"total_steps {self.total_steps} is below warmup {warmup}"
            )
        missing = set(self.ablation) - set(ABLATION_FLAGS)
        if missing:
            raise InvalidInputError(f"unknown ablation flags {sorted(missing)}")
        self.ablation = {**_default_ablation(), **self.ablation}
        self.seeds = tuple(int(s) for s in self.seeds)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["seeds"] = list(self.seeds)
        return out

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# Defaults for the two desk-scale tasks, plus the published large-task
# hyperparameter rows kept purely as documentation (their environments
# need full simulators and are not runnable here).
PRESETS: dict[str, dict] = {
    "trap_cheese": {
        "env": {"name": "trap_cheese", "delta": 0.2, "action_low": -2.0, "action_high": 2.0},
        "algorithm": "discrete",
        "agent": {
            "v_min": -1.0,
            "v_max": 1.0,
            "n_value_atoms": 51,
            "m_atoms": 51,
            "gamma": 0.99,
            "batch_size": 64,
            "lr_actor": 3e-4,
            "lr_critic": 3e-3,
            "entropy_coef": 0.5,
            "entropy_scale": 0.5,
            "smoothing": 1e-4,
            "tau": 0.01,
            "train_frequency": 1,
            "warmup_steps": 300,
            "hidden": [64],
            "buffer_capacity": 100000,
        },
        "baseline": {"lr": 0.02, "entropy_bonus": 1e-3, "episodes": 4000, "init_log_std": 0.0},
        "total_steps": 10000,
        "eval_every": 500,
        "eval_episodes": 300,
        "final_eval_episodes": 10000,
        "seeds": [0],
        "out_dir": "runs/trap_cheese",
    },
    "chain": {
        "env": {
            "name": "chain",
            "length": 5,
            "band_delta": 0.3,
            "trap_delta": 0.3,
            "action_low": -2.0,
            "action_high": 2.0,
            "horizon": 40,
        },
        "algorithm": "discrete",
        "agent": {
            "v_min": -1.0,
            "v_max": 1.0,
            "n_value_atoms": 51,
            "m_atoms": 51,
            "gamma": 0.99,
            "batch_size": 128,
            "lr_actor": 1e-3,
            "lr_critic": 1e-3,
            "entropy_coef": 0.5,
            "entropy_scale": 0.5,
            "smoothing": 1e-4,
            "tau": 0.005,
            "train_frequency": 1,
            "warmup_steps": 1000,
            "hidden": [64, 64],
            "buffer_capacity": 100000,
        },
        "total_steps": 15000,
        "eval_every": 1000,
        "eval_episodes": 200,
        "final_eval_episodes": 10000,
        "seeds": [0],
        "out_dir": "runs/chain",
    },
    # Documentation-only rows; these environments are out of reach of this
    # package (full physics simulators, tens of millions of steps).
    "bipedal_walker_hardcore_doc": {
        "env": {"name": "bipedal_walker_hardcore", "note": "not runnable here"},
        "agent": {"lr_actor": 2.5e-4, "lr_critic": 2.5e-4, "v_min": -100.0, "v_max": 100.0, "gamma": 0.99, "batch_size": 512},
    },
    "fetch_push_doc": {
        "env": {"name": "fetch_push", "note": "not runnable here"},
        "agent": {"lr_actor": 3e-5, "lr_critic": 3e-5, "v_min": -50.0, "v_max": 50.0, "gamma": 1.0 - 1.0 / 50.0, "batch_size": 512},
    },
    "mujoco_doc": {
        "env": {"name": "mujoco_suite", "note": "not runnable here"},
        "agent": {"lr_actor": 1e-4, "lr_critic": 1e-4, "v_min": -200.0, "v_max": 200.0, "gamma": 0.99, "batch_size": 1024},
    },
}

_RUNNABLE_ENVS = ("trap_cheese", "chain")


def _deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def resolve_config(raw: dict) -> ExperimentConfig:
    """Expand an optional `preset` key and validate the result."""
    raw = dict(raw)
    preset_name = raw.pop("preset", None)
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise InvalidInputError(
                f"unknown preset {preset_name!r}; available: {sorted(PRESETS)}"
            )
        raw = _deep_merge(PRESETS[preset_name], raw)
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise InvalidInputError(f"bad config fields: {exc}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(
            f"config {path} is not valid JSON (line {exc.lineno}, column {exc.colno})"
        ) from exc
    if not isinstance(raw, dict):
        raise InvalidInputError("config root must be a JSON object")
    return resolve_config(raw)


def save_config(config: ExperimentConfig, path: str | Path):
    Path(path).write_text(canonical_json(config.to_dict()))


# ---------------------------------------------------------------------------
# Environment construction


def build_env(env_cfg: dict):
    name = env_cfg.get("name")
    if name == "trap_cheese":
        return TrapCheeseEnv(
            delta=float(env_cfg.get("delta", 0.2)),
            action_low=float(env_cfg.get("action_low", -2.0)),
            action_high=float(env_cfg.get("action_high", 2.0)),
        )
    if name == "chain":
        return ChainEnv(
            length=int(env_cfg.get("length", 5)),
            band_delta=float(env_cfg.get("band_delta", 0.3)),
            trap_delta=float(env_cfg.get("trap_delta", 0.3)),
            action_low=float(env_cfg.get("action_low", -2.0)),
            action_high=float(env_cfg.get("action_high", 2.0)),
            horizon=int(env_cfg.get("horizon", 40)),
        )
    raise InvalidInputError(
        f"environment {name!r} is not runnable here; choose one of {_RUNNABLE_ENVS}"
    )


def build_agent_config(config: ExperimentConfig, seed: int) -> AgentConfig:
    env = build_env(config.env)
    spec = env.spec()
    a = config.agent
    support = ValueSupport(
        float(a.get("v_min", -1.0)),
        float(a.get("v_max", 1.0)),
        int(a.get("n_value_atoms", 51)),
    )
    actions = ActionSpaceSpec.uniform(
        spec.action_dim,
        int(a.get("m_atoms", 51)),
        spec.action_low,
        spec.action_high,
    )
    return AgentConfig(
        support=support,
        actions=actions,
        state_dim=spec.state_dim,
        gamma=float(a.get("gamma", 0.99)),
        batch_size=int(a.get("batch_size", 128)),
        lr_actor=float(a.get("lr_actor", 1e-3)),
        lr_critic=float(a.get("lr_critic", 1e-3)),
        entropy_coef=float(a.get("entropy_coef", 0.5)),
        entropy_scale=float(a.get("entropy_scale", 0.5)),
        smoothing=float(a.get("smoothing", 1e-4)),
        tau=float(a.get("tau", 0.005)),
        train_frequency=int(a.get("train_frequency", 1)),
        warmup_steps=int(a.get("warmup_steps", 300)),
        buffer_capacity=int(a.get("buffer_capacity", 100_000)),
        hidden=tuple(int(h) for h in a.get("hidden", (64, 64))),
        seed=seed,
        eval_mode=str(a.get("eval_mode", "argmax")),
        single_critic=bool(config.ablation["single_critic"]),
        raw_weight=bool(config.ablation["raw_weight"]),
        merged_policy_loss=bool(a.get("merged_policy_loss", False)),
        stored_action_dist=bool(a.get("stored_action_dist", False)),
        normal_exploration=bool(config.ablation["normal_exploration"]),
        explore_noise=float(a.get("explore_noise", 0.1)),
        normal_actor=bool(config.ablation["normal_actor"]),
        actor_noise=float(a.get("actor_noise", 0.2)),
        bootstrap_terminal=bool(a.get("bootstrap_terminal", False)),
    )


# ---------------------------------------------------------------------------
# Seeded streams


def seed_streams(master_seed: int) -> dict[str, np.random.Generator | int]:
    """Derive independent child streams from one master seed. The agent
    seed is a raw integer; the agent derives its own init streams from it."""
    children = np.random.SeedSequence(master_seed).spawn(5)
    return {
        "agent_seed": int(children[0].generate_state(1)[0]),
        "env": np.random.default_rng(children[1]),
        "act": np.random.default_rng(children[2]),
        "buffer": np.random.default_rng(children[3]),
        "eval": np.random.default_rng(children[4]),
    }


# ---------------------------------------------------------------------------
# Evaluation rollouts


def greedy_eval(
    agent: TwinCriticAgent,
    env,
    episodes: int,
    gamma: float,
    rng: np.random.Generator,
    collect_actions: bool = False,
    mode: str = "eval",
) -> tuple[float, np.ndarray, np.ndarray | None]:
    """Roll out `episodes` episodes and return (mean discounted return,
    per-episode returns, optional per-dimension action index histogram)."""
    returns = np.zeros(episodes, dtype=np.float64)
    spec = env.spec()
    hist = (
        np.zeros((spec.action_dim, agent.m), dtype=np.int64)
        if collect_actions
        else None
    )
    for ep in range(episodes):
        x = env.reset(rng)
        done = False
        discount = 1.0
        total = 0.0
        while not done:
            asample, _ = agent.act(x, mode, rng)
            if hist is not None:
                hist[np.arange(spec.action_dim), list(asample.indices)] += 1
            x, reward, terminated, truncated = env.step(decode(asample), rng)
            total += discount * normalize_reward(reward, spec.reward_bound)
            discount *= gamma
            done = terminated or truncated
        returns[ep] = total
    mean = float(returns.mean()) if episodes > 0 else 0.0
    return mean, returns, hist


def eval_gaussian(
    policy: GaussianPolicy, env, episodes: int, rng: np.random.Generator
) -> float:
    """Deterministic rollouts of the Gaussian baseline (action = clamped
    policy mean)."""
    spec = env.spec()
    total = 0.0
    for _ in range(episodes):
        x = env.reset(rng)
        action = np.clip(policy.mean(x), spec.action_low, spec.action_high)
        _, reward, _, _ = env.step(action, rng)
        total += normalize_reward(reward, spec.reward_bound)
    return total / episodes if episodes > 0 else 0.0


# ---------------------------------------------------------------------------
# Seed runs


@dataclass
class SeedResult:
    seed: int
    final_eval_mean: float
    metrics_rows: list[dict]
    checkpoint_path: str | None
    wall_clock_s: float


def _metrics_row(
    step: int,
    seed: int,
    algorithm: str,
    episode_return: float,
    eval_mean: float,
    metrics: TrainStepMetrics,
    started: float,
) -> dict:
    return {
        "step": step,
        "seed": seed,
        "algorithm": algorithm,
        "episode_return": episode_return,
        "eval_mean_return": eval_mean,
        "critic_loss_1": metrics.critic_loss_1,
        "critic_loss_2": metrics.critic_loss_2,
        "actor_loss": -metrics.actor_objective,
        "mean_action_entropy": metrics.mean_entropy,
        "gate_rate": metrics.gate_rate,
        "wall_clock_s": time.perf_counter() - started,
    }


def run_discrete_seed(
    config: ExperimentConfig, seed: int, out_dir: Path | None
) -> SeedResult:
    started = time.perf_counter()
    streams = seed_streams(seed)
    env = build_env(config.env)
    eval_env = build_env(config.env)
    spec = env.spec()
    agent = TwinCriticAgent(build_agent_config(config, streams["agent_seed"]))
    gamma = agent.config.gamma

    rows: list[dict] = []
    episode_returns: list[float] = []
    current_return = 0.0
    current_discount = 1.0
    last_metrics = TrainStepMetrics(skipped=True)
    x = env.reset(streams["env"])
    for step in range(1, config.total_steps + 1):
        asample, adist = agent.act(x, "train", streams["act"])
        x_next, reward, terminated, truncated = env.step(
            decode(asample), streams["env"]
        )
        r_norm = normalize_reward(reward, spec.reward_bound)
        agent.observe(x, asample, r_norm, x_next, terminated, adist)
        current_return += current_discount * r_norm
        current_discount *= gamma
        if terminated or truncated:
            episode_returns.append(current_return)
            current_return = 0.0
            current_discount = 1.0
            x = env.reset(streams["env"])
        else:
            x = x_next
        if step % agent.config.train_frequency == 0:
            metrics = agent.train_step(streams["buffer"])
            if not metrics.skipped:
                last_metrics = metrics
        if config.eval_every > 0 and step % config.eval_every == 0:
            eval_mean, _, _ = greedy_eval(
                agent, eval_env, config.eval_episodes, gamma, streams["eval"]
            )
            recent = (
                float(np.mean(episode_returns[-200:])) if episode_returns else 0.0
            )
            rows.append(
                _metrics_row(
                    step, seed, "discrete", recent, eval_mean, last_metrics, started
                )
            )

    final_eval_mean, _, _ = greedy_eval(
        agent, eval_env, config.final_eval_episodes, gamma, streams["eval"]
    )
    if config.total_steps > 0:
        recent = float(np.mean(episode_returns[-200:])) if episode_returns else 0.0
        rows.append(
            _metrics_row(
                config.total_steps,
                seed,
                "discrete",
                recent,
                final_eval_mean,
                last_metrics,
                started,
            )
        )

    checkpoint_path = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_path = str(out_dir / "checkpoint.npz")
        meta = agent.checkpoint_meta()
        meta["env"] = config.env
        meta["gamma"] = gamma
        meta["seed"] = seed
        save_bundle(checkpoint_path, meta, agent.checkpoint_arrays())
        _write_metrics(out_dir / "metrics.csv", rows)
        _write_manifest(out_dir / "manifest.json", config, seed)
    return SeedResult(
        seed=seed,
        final_eval_mean=final_eval_mean,
        metrics_rows=rows,
        checkpoint_path=checkpoint_path,
        wall_clock_s=time.perf_counter() - started,
    )


def run_gaussian_seed(
    config: ExperimentConfig, seed: int, out_dir: Path | None
) -> SeedResult:
    started = time.perf_counter()
    streams = seed_streams(seed)
    env = build_env(config.env)
    eval_env = build_env(config.env)
    b = config.baseline
    episodes = int(b.get("episodes", config.total_steps or 4000))
    baseline_cfg = BaselineConfig(
        lr=float(b.get("lr", 0.02)),
        entropy_bonus=float(b.get("entropy_bonus", 1e-3)),
        episodes=episodes,
        init_log_std=float(b.get("init_log_std", 0.0)),
    )

    rows: list[dict] = []
    trace: list[float] = []

    def on_episode(ep: int, policy: GaussianPolicy, ep_return: float):
        trace.append(ep_return)
        step = ep + 1
        if config.eval_every > 0 and step % config.eval_every == 0:
            eval_mean = eval_gaussian(
                policy, eval_env, config.eval_episodes, streams["eval"]
            )
            recent = float(np.mean(trace[-200:]))
            rows.append(
                _metrics_row(
                    step,
                    seed,
                    "gaussian",
                    recent,
                    eval_mean,
                    TrainStepMetrics(
                        skipped=False,
                        mean_entropy=float(
                            np.sum(policy.log_std + 0.5 * np.log(2 * np.pi * np.e))
                        ),
                    ),
                    started,
                )
            )

    policy, returns = train_baseline(env, baseline_cfg, streams["env"], on_episode)
    # The baseline's headline number is its stochastic training return
    # over the final window, which is what collapses onto the trap.
    final_window = returns[-1000:] if returns.size else np.zeros(1)
    final_eval_mean = float(final_window.mean())
    if episodes > 0:
        rows.append(
            _metrics_row(
                episodes,
                seed,
                "gaussian",
                final_eval_mean,
                eval_gaussian(policy, eval_env, config.eval_episodes, streams["eval"]),
                TrainStepMetrics(skipped=False),
                started,
            )
        )

    checkpoint_path = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_path = str(out_dir / "checkpoint.npz")
        meta = {
            "kind": "gaussian",
            "env": config.env,
            "seed": seed,
            "state_dim": policy.state_dim,
            "action_dim": policy.action_dim,
        }
        save_bundle(
            checkpoint_path,
            meta,
            {
                "weights": policy.weights,
                "bias": policy.bias,
                "log_std": policy.log_std,
            },
        )
        _write_metrics(out_dir / "metrics.csv", rows)
        _write_manifest(out_dir / "manifest.json", config, seed)
    return SeedResult(
        seed=seed,
        final_eval_mean=final_eval_mean,
        metrics_rows=rows,
        checkpoint_path=checkpoint_path,
        wall_clock_s=time.perf_counter() - started,
    )


def run_experiment(
    config: ExperimentConfig, out_root: Path | None = None
) -> list[SeedResult]:
    """Run every configured seed to completion. Artifacts land under
    out_root/seed_<n>/ when out_root is given."""
    results = []
    for seed in config.seeds:
        seed_dir = None if out_root is None else out_root / f"seed_{seed}"
        if config.algorithm == "gaussian":
            results.append(run_gaussian_seed(config, seed, seed_dir))
        else:
            results.append(run_discrete_seed(config, seed, seed_dir))
    return results


def resolve_out_dir(config: ExperimentConfig, override: str | None) -> Path:
    base = override if override is not None else config.out_dir
    root = os.environ.get(OUTPUT_ROOT_ENV_VAR)
    path = Path(base)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


# ---------------------------------------------------------------------------
# Artifacts


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_metrics(path: Path, rows: list[dict]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(METRICS_FIELDS)
        for row in rows:
            writer.writerow([_format_cell(row[f]) for f in METRICS_FIELDS])


def read_metrics(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_manifest(path: Path, config: ExperimentConfig, seed: int):
    manifest = {
        "config_hash": config.config_hash(),
        "seed": seed,
        "code_version": __version__,
        "metrics_schema_version": METRICS_SCHEMA_VERSION,
    }
    Path(path).write_text(canonical_json(manifest))


# ---------------------------------------------------------------------------
# Landscape export


def landscape_from_dict(raw: dict) -> HRHRLandscape:
    """Build a landscape from a declarative description; either a preset
    reference or the full geometry."""
    preset = raw.get("preset")
    if preset == "trap_cheese":
        return trap_cheese_landscape(float(raw.get("delta", 0.3)))
    if preset == "probe":
        from .envs import probe_landscape

        return probe_landscape(float(raw.get("delta", 0.2)))
    if preset is not None:
        raise InvalidInputError(f"unknown landscape preset {preset!r}")
    try:
        return HRHRLandscape(
            bounds=Box(tuple(raw["bounds"]["low"]), tuple(raw["bounds"]["high"])),
            base_level=float(raw["base_level"]),
            risky_region=Box(
                tuple(raw["risky_region"]["low"]), tuple(raw["risky_region"]["high"])
            ),
            risky_level=float(raw["risky_level"]),
            stable_region=Box(
                tuple(raw["stable_region"]["low"]), tuple(raw["stable_region"]["high"])
            ),
            stable_level=float(raw["stable_level"]),
            grains=tuple(
                Grain(tuple(g["center"]), float(g["diameter"]), float(g["height"]))
                for g in raw.get("grains", [])
            ),
            grain_max_diameter=float(raw["grain_max_diameter"]),
        )
    except KeyError as exc:
        raise InvalidInputError(f"landscape config missing field {exc}") from exc


def export_landscape_csv(
    landscape: HRHRLandscape, path: str | Path, resolution: int = 201
) -> HrhrVerdict:
    """Write (a1[, a2], q) rows over the landscape bounds and return the
    numerical classification."""
    from .envs import _grid_points

    points = _grid_points(landscape.bounds, resolution)
    q = landscape.q_values(points)
    header = ["a1", "q"] if landscape.dim == 1 else ["a1", "a2", "q"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(header)
        for point, value in zip(points, q):
            writer.writerow([repr(float(c)) for c in point] + [repr(float(value))])
    return is_hrhr(landscape, resolution=max(resolution, 100))
