"""Command-line entry point: train, eval, probe, and toy subcommands.

Exit codes: 0 success, 1 user error (bad config, missing files, invalid
arguments), 2 internal error. Existing output files are never overwritten
unless --force is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import probes, toy
from .assignment import save_assignments
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, load_run_config
from .data_io import Dataset, gen_gaussian_mixture, load_features, save_features_bin
from .numerics import make_rng
from .trainer import evaluate, fit, save_logs


class UserError(Exception):
    """Invalid input from the operator; reported on stderr with exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UserError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="secu", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train from a config file")
    p_train.add_argument("--config", required=True, help="INI run configuration")
    p_train.add_argument("--out", help="output directory (overrides config)")
    p_train.add_argument("--seed", type=int, help="seed override")
    p_train.add_argument("--force", action="store_true", help="overwrite outputs")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a feature file")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True, help="CSV or binary feature file")
    p_eval.add_argument("--head", type=int, default=0, help="head index (0 = canonical)")

    p_probe = sub.add_parser("probe", help="run an analysis probe, write CSV")
    p_probe.add_argument("kind", choices=("coverage", "variance", "drift"))
    p_probe.add_argument("--out", required=True, help="output directory")
    p_probe.add_argument("--seed", type=int, default=0)
    p_probe.add_argument("--force", action="store_true")
    p_probe.add_argument("--clusters", type=int, help="number of clusters K")
    p_probe.add_argument("--batch", type=int, default=1024, help="coverage batch size")
    p_probe.add_argument("--trials", type=int, default=1000)
    p_probe.add_argument("--mean-norm", type=float, default=0.9)
    p_probe.add_argument("--dim", type=int, default=32)
    p_probe.add_argument("--samples", type=int, default=100000)
    p_probe.add_argument("--steps", type=int, default=50, help="drift SGD steps")

    p_toy = sub.add_parser("toy", help="two-Gaussian center-update comparison")
    p_toy.add_argument("--out", required=True, help="output directory")
    p_toy.add_argument("--seed", type=int, default=0, help="seed search start")
    p_toy.add_argument("--max-seeds", type=int, default=200)
    p_toy.add_argument("--force", action="store_true")
    return parser


def _prepare_out(out_dir, names, force: bool) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name) for name in names}
    if not force:
        clashes = [p for p in paths.values() if os.path.exists(p)]
        if clashes:
            raise UserError(
                f"output exists (use --force to overwrite): {clashes[0]}"
            )
    return paths


def _build_dataset(cfg: RunConfig) -> Dataset:
    spec = cfg.dataset
    if spec.kind == "file":
        return load_features(spec.path)
    rng = make_rng(cfg.seed, 3)
    return gen_gaussian_mixture(spec.classes, spec.per_class, spec.dim, spec.separation, rng)


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.train.seed = args.seed
    out_dir = args.out or cfg.out_dir
    if not out_dir:
        raise UserError("no output directory: set --out or out_dir in [run]")
    names = ["checkpoint.bin", "assignments.csv", "metrics.jsonl"]
    if cfg.dataset.kind == "gaussian":
        names.append("dataset.secf")
    paths = _prepare_out(out_dir, names, args.force)
    dataset = _build_dataset(cfg)
    enc, heads, logs = fit(dataset, cfg.train)
    save_checkpoint(paths["checkpoint.bin"], enc, [h.centers for h in heads])
    save_assignments(paths["assignments.csv"], heads[0].state.labels)
    save_logs(logs, paths["metrics.jsonl"])
    if "dataset.secf" in paths:
        save_features_bin(dataset, paths["dataset.secf"])
    return 0


def cmd_eval(args) -> int:
    if not os.path.exists(args.checkpoint):
        raise UserError(f"checkpoint not found: {args.checkpoint}")
    if not os.path.exists(args.data):
        raise UserError(f"data file not found: {args.data}")
    try:
        enc, head_centers = load_checkpoint(args.checkpoint)
        dataset = load_features(args.data)
    except ValueError as err:
        raise UserError(str(err)) from err
    if not 0 <= args.head < len(head_centers):
        raise UserError(f"head {args.head} outside [0, {len(head_centers)})")
    try:
        report = evaluate(enc, head_centers[args.head], dataset)
    except ValueError as err:
        raise UserError(str(err)) from err
    print(json.dumps(report.as_dict()))
    return 0


def cmd_probe(args) -> int:
    if args.kind == "coverage":
        k = args.clusters or 10000
        paths = _prepare_out(args.out, ["coverage.csv"], args.force)
        covered = probes.coverage_probe(k, args.batch, args.trials, make_rng(args.seed, 5))
        values, counts = np.unique(covered, return_counts=True)
        with open(paths["coverage.csv"], "w", encoding="utf-8") as fh:
            fh.write("covered,count\n")
            for v, c in zip(values, counts):
                fh.write(f"{int(v)},{int(c)}\n")
    elif args.kind == "variance":
        k = args.clusters or 50
        paths = _prepare_out(args.out, ["variance.csv"], args.force)
        model = probes.SphereClusterModel.sample_model(
            k, args.dim, args.mean_norm, make_rng(args.seed, 6)
        )
        report = probes.variance_ratio_probe(model, args.samples, make_rng(args.seed, 6, 1))
        with open(paths["variance.csv"], "w", encoding="utf-8") as fh:
            fh.write("var_pos,var_neg,predicted_ratio,empirical_ratio\n")
            fh.write(
                f"{report.var_pos:.17g},{report.var_neg:.17g},"
                f"{report.predicted_ratio:.17g},{report.empirical_ratio:.17g}\n"
            )
    else:
        k = args.clusters or 10
        paths = _prepare_out(args.out, ["drift.csv"], args.force)
        model = probes.SphereClusterModel.sample_model(
            k, args.dim, args.mean_norm, make_rng(args.seed, 6)
        )
        rng = make_rng(args.seed, 6, 1)
        labels = rng.integers(0, k, size=min(args.samples, 2000))
        x = model.sample(labels, rng)
        report = probes.drift_probe(x, labels, args.steps, seed=args.seed)
        with open(paths["drift.csv"], "w", encoding="utf-8") as fh:
            fh.write("step,method,mean_displacement\n")
            for name, moves in (
                ("ce", report.displacement_ce),
                ("secu", report.displacement_secu),
            ):
                for t, m in enumerate(moves):
                    fh.write(f"{t},{name},{m:.17g}\n")
    return 0


def cmd_toy(args) -> int:
    paths = _prepare_out(args.out, ["toy.csv"], args.force)
    result = toy.search(max_seeds=args.max_seeds, start_seed=args.seed)
    toy.save_toy_csv(result, paths["toy.csv"])
    print(
        json.dumps(
            {
                "seed": result.seed,
                "acc_uniform": result.acc_uniform,
                "acc_hardness": result.acc_hardness,
            }
        )
    )
    return 0


_COMMANDS = {"train": cmd_train, "eval": cmd_eval, "probe": cmd_probe, "toy": cmd_toy}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (UserError, ConfigError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - report and exit 2, never traceback
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
