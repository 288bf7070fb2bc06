"""Command-line entry point.

Commands: convert, split, train, bench, simsearch, degree-report, ablate,
gradcheck. Every command is deterministic given its flags; all randomness
flows from explicit seeds. Exit codes: 0 success, 2 usage or config error,
3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import evaluation
from .config import (
    apply_overrides,
    build_train_config,
    effective_config_dict,
    load_config_file,
)
from .data import SplitSpec, convert_content_cites, generate_splits, load_dataset
from .errors import ConfigError, DataError, DivergenceError, GrafnError, NumericsError
from .gradcheck import finite_diff_check
from .model import build_from_checkpoint, load_checkpoint, save_checkpoint
from .objective import LossConfig
from .tape import Tape
from .trainer import TrainConfig, fit, prepare_features

GRADCHECK_TOLERANCE = 1e-4


def resolve_dataset_dir(path: str) -> str:
    """Use the path as given, else relative to $GRAFN_DATA_DIR."""
    if os.path.isdir(path):
        return path
    root = os.environ.get("GRAFN_DATA_DIR")
    if root:
        candidate = os.path.join(root, path)
        if os.path.isdir(candidate):
            return candidate
    raise DataError(f"dataset directory not found: {path}")


def _load_effective_config(args) -> TrainConfig:
    values = load_config_file(args.config) if args.config else {}
    values = apply_overrides(values, args.set or [])
    for flag in ("lambda1", "lambda2", "seed"):
        if getattr(args, flag, None) is not None:
            values[flag] = getattr(args, flag)
    try:
        return build_train_config(values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _write_json(path: str, obj: dict) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# commands


def cmd_convert(args) -> int:
    for path in (args.content, args.cites):
        if not os.path.isfile(path):
            raise DataError(f"input file not found: {path}")
    marker = os.path.join(args.out, "meta.json")
    if os.path.exists(marker) and not args.force:
        raise ConfigError(f"{args.out} already converted; pass --force to overwrite")
    summary = convert_content_cites(args.content, args.cites, args.out)
    print(
        f"converted: {summary['num_nodes']} nodes, "
        f"{summary['undirected_edges']} undirected edges "
        f"({summary['raw_edge_lines']} raw lines), "
        f"{summary['num_features']} features, {summary['num_classes']} classes"
    )
    print(
        f"dropped: {summary['dropped_dangling']} dangling, "
        f"{summary['dropped_self_loops']} self-loops, "
        f"{summary['collapsed_duplicates']} duplicates"
    )
    return 0


def cmd_split(args) -> int:
    ds = load_dataset(resolve_dataset_dir(args.dataset_dir))
    splits = generate_splits(ds, args.rate, args.n, args.seed)
    os.makedirs(args.out, exist_ok=True)
    for i, split in enumerate(splits):
        path = os.path.join(args.out, f"split_{i:03d}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(split.to_json())
            fh.write("\n")
    print(f"wrote {len(splits)} split files to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_effective_config(args)
    ds = load_dataset(resolve_dataset_dir(args.dataset_dir))
    with open(args.split, encoding="utf-8") as fh:
        split = SplitSpec.from_json(fh.read())
    os.makedirs(args.out, exist_ok=True)
    run_path = os.path.join(args.out, "run.json")
    ckpt_path = os.path.join(args.out, "checkpoint.bin")
    try:
        result = fit(ds, split, cfg)
    except DivergenceError as exc:
        payload = {
            "error": str(exc),
            "loss_history": [list(r) for r in exc.history],
            "effective_config": effective_config_dict(cfg),
        }
        _write_json(run_path, payload)
        raise
    payload = result.to_dict()
    payload["effective_config"] = effective_config_dict(cfg)
    payload["dataset"] = ds.name
    payload["checkpoint"] = ckpt_path
    _write_json(run_path, payload)
    save_checkpoint(ckpt_path, result.params)
    print(
        f"best val {result.best_val_accuracy:.4f} at epoch {result.epoch_of_best}; "
        f"test {result.test_accuracy_at_best_val:.4f}"
    )
    return 0


def cmd_bench(args) -> int:
    cfg = _load_effective_config(args)
    ds = load_dataset(resolve_dataset_dir(args.dataset_dir))
    report = evaluation.run_benchmark(
        ds, args.rate, args.n, cfg, args.bench_seed, jobs=args.jobs
    )
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "bench.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(report.csv_lines()))
        fh.write("\n")
    payload = report.to_dict()
    payload["effective_config"] = effective_config_dict(cfg)
    _write_json(os.path.join(args.out, "bench.json"), payload)
    print(
        f"{ds.name} rate={args.rate}: mean test accuracy "
        f"{report.mean:.4f} +- {report.std:.4f} over {args.n} splits"
    )
    return 0


def cmd_simsearch(args) -> int:
    cfg = _load_effective_config(args)
    ds = load_dataset(resolve_dataset_dir(args.dataset_dir))
    params = load_checkpoint(args.checkpoint)
    tape, encoder, head = build_from_checkpoint(params)
    features = prepare_features(ds, cfg)
    from .data import normalize_adjacency

    z = encoder.encode(tape, normalize_adjacency(ds.adj), features, training=False)
    query_nodes = None
    if args.split:
        with open(args.split, encoding="utf-8") as fh:
            query_nodes = SplitSpec.from_json(fh.read()).test
    results = {}
    for k in args.k:
        results[f"sim@{k}"] = evaluation.sim_at_k(
            z.data, ds.label_ids(), k, query_nodes=query_nodes
        )
        print(f"Sim@{k} = {results[f'sim@{k}']:.4f}")
    if args.out:
        _write_json(args.out, {
            "dataset": ds.name,
            "checkpoint": args.checkpoint,
            "query_nodes": "test" if args.split else "all",
            "results": results,
            "effective_config": effective_config_dict(cfg),
        })
    return 0


def cmd_degree_report(args) -> int:
    cfg = _load_effective_config(args)
    ds = load_dataset(resolve_dataset_dir(args.dataset_dir))
    params = load_checkpoint(args.checkpoint)
    _, encoder, head = build_from_checkpoint(params)
    with open(args.split, encoding="utf-8") as fh:
        split = SplitSpec.from_json(fh.read())
    boundaries = [int(b) for b in args.boundaries.split(",")]
    report = evaluation.degree_accuracy_report(
        ds, encoder, head, split.test, boundaries,
        features=prepare_features(ds, cfg),
    )
    for row in report["buckets"]:
        acc = "null" if row["accuracy"] is None else f"{row['accuracy']:.4f}"
        print(f"degree {row['degree_range']:>8}: accuracy {acc} (n={row['population']})")
    if args.out:
        report["effective_config"] = effective_config_dict(cfg)
        _write_json(args.out, report)
    return 0


def cmd_ablate(args) -> int:
    cfg = _load_effective_config(args)
    ds = load_dataset(resolve_dataset_dir(args.dataset_dir))
    table = evaluation.ablation_suite(ds, args.rate, args.n, cfg, args.bench_seed)
    for name in evaluation.ABLATION_VARIANTS:
        row = table["variants"][name]
        print(f"{name:>22}: {row['mean_test_accuracy']:.4f} +- {row['std_test_accuracy']:.4f}")
    if args.out:
        table["effective_config"] = effective_config_dict(cfg)
        _write_json(args.out, table)
    return 0


def cmd_gradcheck(args) -> int:
    from .model import init_params
    from .synthetic import random_dataset
    from .trainer import build_step_loss

    ds = random_dataset(args.size, num_classes=3, num_features=12,
                        p_in=0.3, p_out=0.1, seed=args.seed)
    splits = generate_splits(ds, max(3.0 / args.size, 0.15), 1, args.seed)
    split = splits[0]
    worst = 0.0
    for nu in (0.0, 0.9):
        tape = Tape()
        rng0 = np.random.default_rng(args.seed)
        encoder, head = init_params(tape, ds.num_features, 6, 6, ds.class_count,
                                    0.2, rng0)
        loss_cfg = LossConfig(nu=nu, lambda1=1.0, lambda2=1.0)

        # the stop-gradient target is a constant of the step: freeze it at
        # the base parameters before differencing
        cap: dict = {}
        build_step_loss(
            tape, ds, split, encoder, head, loss_cfg,
            np.random.default_rng(args.seed + 1), capture=cap,
        )

        def build(cap=cap, loss_cfg=loss_cfg, encoder=encoder, head=head):
            rng = np.random.default_rng(args.seed + 1)
            total, _ = build_step_loss(
                tape, ds, split, encoder, head, loss_cfg, rng,
                target_override=cap["p_target"],
            )
            return total

        err = finite_diff_check(tape, build, eps=1e-5)
        worst = max(worst, err)
        print(f"nu={nu}: max relative gradient error {err:.3e}")
    if worst >= GRADCHECK_TOLERANCE:
        raise NumericsError(
            f"gradient check failed: {worst:.3e} >= {GRADCHECK_TOLERANCE:.0e}"
        )
    print(f"gradient check passed (worst {worst:.3e} < {GRADCHECK_TOLERANCE:.0e})")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_config_args(sub, include_lambdas: bool = False):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override one config key (repeatable)")
    sub.add_argument("--seed", type=int, default=None, help="training seed override")
    if include_lambdas:
        sub.add_argument("--lambda1", type=float, default=None,
                         help="node-consistency coefficient override")
        sub.add_argument("--lambda2", type=float, default=None,
                         help="label-consistency coefficient override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grafn",
        description="Semi-supervised node classification with label-guided "
                    "consistency over augmented graph views.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("convert", help="convert raw content/cites files")
    p.add_argument("content")
    p.add_argument("cites")
    p.add_argument("out")
    p.add_argument("--force", action="store_true", help="overwrite existing output")
    p.set_defaults(func=cmd_convert)

    p = subs.add_parser("split", help="generate labeled/val/test splits")
    p.add_argument("dataset_dir")
    p.add_argument("--rate", type=float, required=True, help="labeled-node fraction")
    p.add_argument("--n", type=int, default=20, help="number of splits")
    p.add_argument("--seed", type=int, default=0, help="base seed; split i uses seed+i")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = subs.add_parser("train", help="train one configuration on one split")
    p.add_argument("dataset_dir")
    p.add_argument("split")
    p.add_argument("--out", required=True)
    _add_config_args(p, include_lambdas=True)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("bench", help="train over generated splits and aggregate")
    p.add_argument("dataset_dir")
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--bench-seed", type=int, default=0,
                   help="base seed for split generation")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", required=True)
    _add_config_args(p, include_lambdas=True)
    p.set_defaults(func=cmd_bench)

    p = subs.add_parser("simsearch", help="Sim@K of checkpoint embeddings")
    p.add_argument("checkpoint")
    p.add_argument("dataset_dir")
    p.add_argument("--k", type=int, action="append", required=True,
                   help="neighborhood size (repeatable)")
    p.add_argument("--split", help="restrict queries to this split's test set")
    p.add_argument("--out")
    _add_config_args(p)
    p.set_defaults(func=cmd_simsearch)

    p = subs.add_parser("degree-report", help="accuracy per degree bucket")
    p.add_argument("checkpoint")
    p.add_argument("dataset_dir")
    p.add_argument("split")
    p.add_argument("--boundaries", default="2,4,7",
                   help="comma-separated degree thresholds")
    p.add_argument("--out")
    _add_config_args(p)
    p.set_defaults(func=cmd_degree_report)

    p = subs.add_parser("ablate", help="loss-coefficient ablation table")
    p.add_argument("dataset_dir")
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--bench-seed", type=int, default=0)
    p.add_argument("--out")
    _add_config_args(p)
    p.set_defaults(func=cmd_ablate)

    p = subs.add_parser("gradcheck", help="finite-difference check of the objective")
    p.add_argument("--size", type=int, default=20, help="nodes in the random graph")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except GrafnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
