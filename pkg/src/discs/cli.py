"""Command line entry point: ``discs train | eval | selftest``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .checkpoint import checkpoint_load
from .config import ConfigError, load_config
from .nn import CheckpointFormatError
from .train import Trainer, TrainingAborted, evaluate


def _train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
        cfg.validate()
    out = args.out or os.path.join("runs", f"{cfg.method}_seed{cfg.seed}")
    if args.resume:
        # the checkpointed config wins, apart from the training horizon
        trainer = Trainer.load(args.resume, out_dir=out)
        trainer.cfg = trainer.cfg.replace(total_timesteps=cfg.total_timesteps)
    else:
        trainer = Trainer(cfg, out_dir=out)
    trainer.run()
    last = trainer.records[-1] if trainer.records else {}
    print(json.dumps({"out": out, "timestep": trainer.timestep, "occupied_cells": last.get("occupied_cells")}))
    return 0


def _eval(args) -> int:
    out = args.out or os.path.join(os.path.dirname(os.path.abspath(args.ckpt)), "eval")
    summary = evaluate(args.ckpt, n_skills=args.skills, out_dir=out)
    summary.pop("trajectories")
    summary["out"] = out
    print(json.dumps(summary, sort_keys=True))
    return 0


def _inspect(args) -> int:
    meta, tensors = checkpoint_load(args.ckpt)
    print(json.dumps({"format_version": meta["format_version"], "timestep": meta["timestep"],
                      "config": meta["config"], "tensors": {k: list(v.shape) for k, v in tensors.items()}},
                     indent=2, sort_keys=True))
    return 0


def _selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest(verbose=True) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discs", description="Skill discovery with vMF discriminators.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run training from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--resume", metavar="CKPT", help="continue from a checkpoint up to the configured horizon")
    p.set_defaults(func=_train)

    p = sub.add_parser("eval", help="deterministic skill rollouts from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--skills", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=_eval)

    p = sub.add_parser("inspect", help="print checkpoint metadata")
    p.add_argument("--ckpt", required=True)
    p.set_defaults(func=_inspect)

    p = sub.add_parser("selftest", help="run the fast numerical property checks")
    p.set_defaults(func=_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, CheckpointFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingAborted as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
