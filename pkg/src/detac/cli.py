"""Command line entry point: train, verify, bandit-suite."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import harness
from .agents import BanditConfig, run_bandit
from .config import parse_config
from .envs import make_quadratic_bandit


def _add_train(sub):
    p = sub.add_parser("train", help="run a training experiment")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seeds", type=int)
    p.add_argument("--out")
    p.add_argument("--seed-offset", type=int, dest="seed_offset")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key")


def _add_verify(sub):
    p = sub.add_parser("verify", help="run a randomized verification suite")
    p.add_argument("suite",
                   choices=["lemma1", "lemma2", "theorem1", "gradcheck", "all"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the line-oriented report here")


def _add_bandit(sub):
    p = sub.add_parser("bandit-suite",
                       help="single-state bandit comparison of SPG/DPG/CACLA")
    p.add_argument("--dims", default="5,50",
                   help="comma-separated action dimensions")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--episodes", type=int, default=3000)
    p.add_argument("--out", default="bandit_runs")
    p.add_argument("--seed-offset", type=int, default=0, dest="seed_offset")


def cmd_train(args):
    overrides = {}
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    if args.out is not None:
        overrides["out"] = args.out
    if args.seed_offset is not None:
        overrides["seed_offset"] = args.seed_offset
    for item in args.set:
        if "=" not in item:
            print(f"--set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 2
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    try:
        config = parse_config(args.config, overrides)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    paths = harness.run_experiment(config)
    for path in paths:
        print(path)
    return 0


def cmd_verify(args):
    code, lines = harness.run_verification(args.suite, seed=args.seed,
                                           out=args.out)
    print("\n".join(lines))
    return code


def cmd_bandit_suite(args):
    dims = [int(d) for d in args.dims.split(",") if d.strip()]
    os.makedirs(args.out, exist_ok=True)
    for m in dims:
        env = make_quadratic_bandit(m, seed=0)
        for rule in ("spg", "dpg", "cacla"):
            config = BanditConfig()
            rows = []
            for s in range(args.seeds):
                rng = np.random.default_rng(args.seed_offset + s)
                curve = run_bandit(rule, env, args.episodes, config, rng,
                                   eval_every=max(1, args.episodes // 100))
                rows.append(curve)
            path = os.path.join(args.out, f"bandit_m{m}_{rule}.csv")
            arr = np.stack(rows)
            lines = ["episode,mean,std"]
            stride = max(1, args.episodes // 100)
            for i in range(arr.shape[1]):
                lines.append(f"{(i + 1) * stride},{float(arr[:, i].mean())!r},"
                             f"{float(arr[:, i].std())!r}")
            with open(path, "w", newline="\n") as f:
                f.write("\n".join(lines) + "\n")
            print(path)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="detac",
        description="deterministic-policy actor-critic toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_train(sub)
    _add_verify(sub)
    _add_bandit(sub)
    args = parser.parse_args(argv)
    if args.command == "train":
        return cmd_train(args)
    if args.command == "verify":
        return cmd_verify(args)
    return cmd_bandit_suite(args)


if __name__ == "__main__":
    sys.exit(main())
