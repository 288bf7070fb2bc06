"""Aggregate metrics: multi-split benchmarks, similarity search, degree
breakdown, and the loss-ablation table."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .data import GraphDataset, degree_buckets, generate_splits, normalize_adjacency
from .errors import GrafnError, NumericsError
from .model import GcnEncoder, LinearHead
from .tape import Tape
from .trainer import RunResult, TrainConfig, fit


def config_fingerprint(cfg: TrainConfig) -> str:
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass
class BenchReport:
    dataset: str
    label_rate: float
    split_seeds: list[int]
    accuracies: list[float]
    val_accuracies: list[float]
    best_epochs: list[int]
    fingerprint: str

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))  # population std: stable for n=1

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "label_rate": self.label_rate,
            "n_splits": len(self.accuracies),
            "mean_test_accuracy": self.mean,
            "std_test_accuracy": self.std,
            "split_seeds": self.split_seeds,
            "test_accuracies": self.accuracies,
            "val_accuracies": self.val_accuracies,
            "best_epochs": self.best_epochs,
            "config_fingerprint": self.fingerprint,
        }

    def csv_lines(self) -> list[str]:
        lines = ["split_index,split_seed,test_accuracy,best_val_accuracy,epoch_of_best"]
        for i, (seed, acc, val, ep) in enumerate(
            zip(self.split_seeds, self.accuracies, self.val_accuracies, self.best_epochs)
        ):
            lines.append(f"{i},{seed},{acc!r},{val!r},{ep}")
        return lines


_WORKER_CTX: dict = {}


def _worker_init(ds, cfg):
    _WORKER_CTX["ds"] = ds
    _WORKER_CTX["cfg"] = cfg


def _worker_fit(task):
    i, split = task
    run_cfg = dataclasses.replace(_WORKER_CTX["cfg"], seed=_WORKER_CTX["cfg"].seed + i)
    result = fit(_WORKER_CTX["ds"], split, run_cfg)
    return (
        result.test_accuracy_at_best_val,
        result.best_val_accuracy,
        result.epoch_of_best,
    )


def run_benchmark(
    ds: GraphDataset,
    label_rate: float,
    n_splits: int,
    cfg: TrainConfig,
    base_seed: int,
    results: list[RunResult] | None = None,
    jobs: int = 1,
) -> BenchReport:
    """fit() once per generated split; run i trains with seed cfg.seed + i.

    Pass a list as `results` to also collect the per-split RunResults
    (sequential mode only). jobs > 1 distributes splits over processes;
    the aggregate is identical to the sequential result.
    """
    splits = generate_splits(ds, label_rate, n_splits, base_seed)
    seeds = [split.seed for split in splits]
    if jobs > 1:
        if results is not None:
            raise NumericsError("per-split results are not collected with jobs > 1")
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(jobs, initializer=_worker_init, initargs=(ds, cfg)) as pool:
            rows = pool.map(_worker_fit, list(enumerate(splits)))
        accs = [r[0] for r in rows]
        vals = [r[1] for r in rows]
        epochs = [r[2] for r in rows]
    else:
        accs, vals, epochs = [], [], []
        for i, split in enumerate(splits):
            run_cfg = dataclasses.replace(cfg, seed=cfg.seed + i)
            try:
                result = fit(ds, split, run_cfg)
            except GrafnError as exc:
                raise type(exc)(f"split seed {split.seed}: {exc}") from exc
            accs.append(result.test_accuracy_at_best_val)
            vals.append(result.best_val_accuracy)
            epochs.append(result.epoch_of_best)
            if results is not None:
                results.append(result)
    return BenchReport(
        dataset=ds.name,
        label_rate=label_rate,
        split_seeds=seeds,
        accuracies=accs,
        val_accuracies=vals,
        best_epochs=epochs,
        fingerprint=config_fingerprint(cfg),
    )


def sim_at_k(
    z: np.ndarray,
    label_ids: np.ndarray,
    k: int,
    query_nodes: np.ndarray | None = None,
    block: int = 512,
) -> float:
    """Mean fraction of each query's k cosine-nearest neighbors (self
    excluded, ties toward the lower index) sharing the query's label."""
    n = z.shape[0]
    if k >= n:
        raise NumericsError(f"k={k} must be smaller than the node count {n}")
    if query_nodes is None:
        query_nodes = np.arange(n)
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    bad = np.flatnonzero(norms[:, 0] == 0.0)
    if bad.size:
        raise NumericsError(f"sim_at_k: zero-norm embedding row {bad[0]}")
    zn = z / norms
    fractions = np.empty(len(query_nodes))
    for start in range(0, len(query_nodes), block):
        q = query_nodes[start:start + block]
        sims = zn[q] @ zn.T
        sims[np.arange(len(q)), q] = -np.inf
        nbrs = np.argsort(-sims, axis=1, kind="stable")[:, :k]
        fractions[start:start + len(q)] = np.mean(
            label_ids[nbrs] == label_ids[q][:, None], axis=1
        )
    return float(np.mean(fractions))


def degree_accuracy_report(
    ds: GraphDataset,
    encoder: GcnEncoder,
    head: LinearHead,
    test_set: np.ndarray,
    boundaries: list[int],
    features=None,
) -> dict:
    """Accuracy per raw-degree bucket over the test set; empty buckets get
    null accuracy rather than zero. Uses the linear-head predictor."""
    from .model import predict_from

    buckets = degree_buckets(ds, boundaries)
    label_ids = ds.label_ids()
    if features is None:
        features = ds.features
    pred = predict_from(Tape(), normalize_adjacency(ds.adj), features, encoder, head)
    rows = []
    n_buckets = len(boundaries) + 1
    labels_txt = (
        [f"<{boundaries[0]}"]
        + [f"[{a},{b})" for a, b in zip(boundaries, boundaries[1:])]
        + [f">={boundaries[-1]}"]
    )
    for bucket in range(n_buckets):
        members = test_set[buckets[test_set] == bucket]
        acc = (
            float(np.mean(pred[members] == label_ids[members])) if len(members) else None
        )
        rows.append({
            "bucket": bucket,
            "degree_range": labels_txt[bucket],
            "population": int(len(members)),
            "accuracy": acc,
        })
    return {"boundaries": list(boundaries), "buckets": rows}


ABLATION_VARIANTS = ("full", "no_label_consistency", "no_node_consistency", "supervised_only")


def ablation_suite(
    ds: GraphDataset,
    label_rate: float,
    n_splits: int,
    base_cfg: TrainConfig,
    base_seed: int,
) -> dict:
    """Benchmark the loss-coefficient ablations over identical splits and
    training seeds, isolating the objective change."""
    variants = {
        "full": base_cfg,
        "no_label_consistency": dataclasses.replace(
            base_cfg, loss=dataclasses.replace(base_cfg.loss, lambda2=0.0)
        ),
        "no_node_consistency": dataclasses.replace(
            base_cfg, loss=dataclasses.replace(base_cfg.loss, lambda1=0.0)
        ),
        "supervised_only": dataclasses.replace(
            base_cfg, loss=dataclasses.replace(base_cfg.loss, lambda1=0.0, lambda2=0.0)
        ),
    }
    table = {}
    for name, cfg in variants.items():
        report = run_benchmark(ds, label_rate, n_splits, cfg, base_seed)
        table[name] = report.to_dict()
    return {
        "dataset": ds.name,
        "label_rate": label_rate,
        "base_seed": base_seed,
        "variants": table,
    }
