"""Stochastic graph augmentation: feature masking and edge dropping.

Each training step draws a fresh weak view and strong view, distinguished
only by their masking/dropping probabilities. Dropping acts on the raw
adjacency; normalization runs afterwards so degrees reflect the thinned
graph (an isolated node keeps its self-loop).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import GraphDataset, normalize_adjacency
from .errors import ConfigError
from .sparse import SparseAdjacency
from .sparse_features import SparseFeatures


@dataclass(frozen=True)
class AugmentConfig:
    p_feature_mask: float
    p_edge_drop: float
    mask_mode: str = "column"  # "column": per feature dimension; "entry": per cell

    def __post_init__(self):
        for name in ("p_feature_mask", "p_edge_drop"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ConfigError(f"{name} must be in [0,1), got {p}")
        if self.mask_mode not in ("column", "entry"):
            raise ConfigError(f"mask_mode must be 'column' or 'entry', got {self.mask_mode!r}")


def mask_features(
    x: np.ndarray | SparseFeatures,
    p: float,
    rng: np.random.Generator,
    mode: str = "column",
):
    """Zero features with probability p: whole columns by default, or
    individual entries with mode='entry'."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"mask probability out of range: {p}")
    if p == 0.0:
        return x
    if mode == "column":
        keep = (rng.random(x.shape[1]) >= p).astype(np.float64)
        if isinstance(x, SparseFeatures):
            return x.scale_columns(keep)
        return x * keep[None, :]
    if mode == "entry":
        if isinstance(x, SparseFeatures):
            return x.mask_entries(p, rng)
        return x * (rng.random(x.shape) >= p)
    raise ConfigError(f"unknown mask mode {mode!r}")


def drop_edges(adj: SparseAdjacency, p: float, rng: np.random.Generator) -> SparseAdjacency:
    """Drop each undirected edge independently with probability p; both CSR
    directions go together, so the result stays symmetric."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"edge drop probability out of range: {p}")
    if p == 0.0:
        return adj
    edges = adj.undirected_edge_list()
    keep = rng.random(len(edges)) >= p
    # values follow the same row-major upper-triangle order as the edge list
    upper_vals = adj.values[adj._entry_rows() < adj.col_indices]
    return SparseAdjacency.from_edges(
        adj.n, [tuple(e) for e in edges[keep]], values=upper_vals[keep]
    )


def augment_view(
    ds: GraphDataset,
    cfg: AugmentConfig,
    rng: np.random.Generator,
    features: np.ndarray | SparseFeatures | None = None,
) -> tuple[SparseAdjacency, np.ndarray | SparseFeatures]:
    """One stochastic view: masked features plus the renormalized adjacency
    of the edge-dropped graph.

    `features` overrides ds.features (e.g. a row-normalized or sparse copy).
    """
    x = ds.features if features is None else features
    x_view = mask_features(x, cfg.p_feature_mask, rng, mode=cfg.mask_mode)
    adj_view = drop_edges(ds.adj, cfg.p_edge_drop, rng)
    return normalize_adjacency(adj_view), x_view
