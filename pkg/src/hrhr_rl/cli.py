"""Command line interface.

Subcommands: train (run seeded experiments from a config file), eval
(greedy rollouts of a saved checkpoint), verify (oracle release gate),
landscape (export a return surface to CSV with its classification).

Exit codes: 0 success, 1 check or criterion failure, 2 configuration
error, 3 numerical poisoning during a run.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .agent import AgentConfig, TwinCriticAgent
from .action_space import ActionSpaceSpec
from .approximator import load_bundle
from .envs import normalize_reward
from .errors import InvalidInputError, PoisonError
from .harness import (
    ABLATION_FLAGS,
    build_env,
    canonical_json,
    greedy_eval,
    landscape_from_dict,
    export_landscape_csv,
    load_config,
    resolve_out_dir,
    run_experiment,
)
from .value_dist import ValueSupport
from .verify import run_verify

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_POISON = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hrhr-rl",
        description="Train, evaluate, and verify the distributional agent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run every seed of an experiment config")
    train.add_argument("--config", required=True, help="path to a JSON config")
    train.add_argument("--seed", type=int, default=None, help="override the seed list")
    train.add_argument("--out", default=None, help="override the output directory")
    train.add_argument("--steps", type=int, default=None, help="override total steps")
    train.add_argument(
        "--ablation",
        action="append",
        choices=[f.replace("_", "-") for f in ABLATION_FLAGS],
        default=None,
        help="enable an ablation switch (repeatable)",
    )

    evaluate = sub.add_parser("eval", help="greedy rollouts of a checkpoint")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--episodes", type=int, default=10_000)
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument(
        "--mode", choices=("argmax", "sample"), default="argmax",
        help="argmax is deterministic; sample draws from the policy rows",
    )
    evaluate.add_argument(
        "--out", default=None, help="write per-dimension action histograms as CSV"
    )

    sub.add_parser("verify", help="run the oracle release gate")

    landscape = sub.add_parser("landscape", help="export a return surface")
    landscape.add_argument("--config", required=True, help="landscape JSON")
    landscape.add_argument("--out", required=True, help="CSV output path")
    landscape.add_argument("--resolution", type=int, default=201)
    return parser


def _cmd_train(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seeds = (args.seed,)
    if args.steps is not None:
        config.total_steps = args.steps
        if config.total_steps != 0:
            warmup = int(config.agent.get("warmup_steps", 0))
            if config.total_steps < warmup:
                raise InvalidInputError(
                    f"steps override {config.total_steps} is below warmup {warmup}"
                )
    if args.ablation:
        for flag in args.ablation:
            config.ablation[flag.replace("-", "_")] = True
    out_root = resolve_out_dir(config, args.out)
    results = run_experiment(config, out_root)
    for result in results:
        print(
            f"seed {result.seed}: final eval mean {result.final_eval_mean:+.4f} "
            f"({result.wall_clock_s:.1f}s) -> {result.checkpoint_path}"
        )
    return EXIT_OK


def _rebuild_agent(meta: dict) -> TwinCriticAgent:
    support = ValueSupport(*meta["support"][:2], int(meta["support"][2]))
    actions = meta["actions"]
    config = AgentConfig(
        support=support,
        actions=ActionSpaceSpec(
            int(actions["n_dims"]),
            int(actions["m_atoms"]),
            tuple(actions["low"]),
            tuple(actions["high"]),
        ),
        state_dim=int(meta["state_dim"]),
        hidden=tuple(int(h) for h in meta["hidden"]),
        normal_actor=meta.get("kind") == "normal_actor",
        seed=0,
    )
    return TwinCriticAgent(config)


def _cmd_eval(args) -> int:
    meta, arrays = load_bundle(args.checkpoint)
    if args.episodes == 0:
        print("episodes=0: nothing to evaluate")
        return EXIT_OK
    rng = np.random.default_rng(args.seed)
    if meta.get("kind") == "gaussian":
        from .baseline import GaussianPolicy

        env = build_env(meta["env"])
        spec = env.spec()
        policy = GaussianPolicy(int(meta["state_dim"]), int(meta["action_dim"]))
        policy.weights = arrays["weights"]
        policy.bias = arrays["bias"]
        policy.log_std = arrays["log_std"]
        returns = np.zeros(args.episodes)
        for ep in range(args.episodes):
            x = env.reset(rng)
            action = policy.mean(x)
            if args.mode == "sample":
                action = policy.sample(x, rng)
            action = np.clip(action, spec.action_low, spec.action_high)
            _, reward, _, _ = env.step(action, rng)
            returns[ep] = normalize_reward(reward, spec.reward_bound)
        print(
            f"episodes {args.episodes}: mean return {returns.mean():+.4f} "
            f"(std {returns.std():.4f})"
        )
        return EXIT_OK

    agent = _rebuild_agent(meta)
    agent.load_checkpoint_arrays(arrays)
    env = build_env(meta["env"])
    mode = "eval" if args.mode == "argmax" else "train"
    mean, returns, hist = greedy_eval(
        agent,
        env,
        args.episodes,
        float(meta.get("gamma", 0.99)),
        rng,
        collect_actions=True,
        mode=mode,
    )
    print(
        f"episodes {args.episodes}: mean return {mean:+.4f} "
        f"(std {returns.std():.4f})"
    )
    if args.out is not None and hist is not None:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dimension", "atom_index", "count"])
            for dim in range(hist.shape[0]):
                for atom in range(hist.shape[1]):
                    writer.writerow([dim, atom, int(hist[dim, atom])])
        print(f"action histograms -> {args.out}")
    return EXIT_OK


def _cmd_verify() -> int:
    reports = run_verify()
    for report in reports:
        print(report.row())
    failures = sum(not r.passed for r in reports)
    print(f"{len(reports) - failures}/{len(reports)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_CHECK_FAILURE


def _cmd_landscape(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    landscape = landscape_from_dict(raw)
    verdict = export_landscape_csv(landscape, args.out, args.resolution)
    verdict_path = Path(args.out).with_suffix(".verdict.json")
    verdict_payload = {
        "is_hrhr": verdict.is_hrhr,
        "sup_risky": verdict.sup_risky,
        "sup_stable": verdict.sup_stable,
        "mean_risky": verdict.mean_risky,
        "mean_stable": verdict.mean_stable,
    }
    verdict_path.write_text(canonical_json(verdict_payload))
    print(f"grid -> {args.out}")
    print(f"verdict -> {verdict_path}")
    print(
        f"is_hrhr={verdict.is_hrhr} sup_risky={verdict.sup_risky:+.4f} "
        f"sup_stable={verdict.sup_stable:+.4f} mean_risky={verdict.mean_risky:+.4f} "
        f"mean_stable={verdict.mean_stable:+.4f}"
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "verify":
            return _cmd_verify()
        if args.command == "landscape":
            return _cmd_landscape(args)
        parser.error(f"unknown command {args.command!r}")
    except InvalidInputError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except PoisonError as exc:
        print(f"numerical poisoning: {exc}", file=sys.stderr)
        return EXIT_POISON
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
