"""Training losses: node-wise consistency, soft-nearest-neighbor class
assignment, confidence-filtered label-guided consistency, supervised
cross-entropy, and their weighted combination.

The prediction distribution comes from the strongly augmented view, the
target distribution from the weakly augmented one; the target is always
tape-detached so gradients only flow through the prediction branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentConfig
from .data import SplitSpec
from .errors import ConfigError, NumericsError
from .tape import Tape, Tensor


@dataclass(frozen=True)
class LossConfig:
    tau: float = 0.1
    nu: float = 0.9
    lambda1: float = 1.0
    lambda2: float = 1.0
    weak_aug: AugmentConfig = field(default_factory=lambda: AugmentConfig(0.3, 0.3))
    strong_aug: AugmentConfig = field(default_factory=lambda: AugmentConfig(0.5, 0.5))
    cross_view_supports: bool = False  # anchors vs supports from the other view

    def __post_init__(self):
        if self.tau <= 0.0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not 0.0 <= self.nu <= 1.0:
            raise ConfigError(f"nu must be in [0,1], got {self.nu}")
        if self.lambda1 < 0.0 or self.lambda2 < 0.0:
            raise ConfigError("loss coefficients must be non-negative")
        if (
            self.weak_aug.p_feature_mask > self.strong_aug.p_feature_mask
            or self.weak_aug.p_edge_drop > self.strong_aug.p_edge_drop
        ):
            raise ConfigError("weak augmentation must not exceed the strong one")


@dataclass
class SupportSet:
    """b labeled nodes per class, resampled each step; b is the labeled
    count of the scarcest class."""

    indices: np.ndarray   # (b*C,) node ids, class-major order
    y_support: np.ndarray  # (b*C, C) one-hot rows
    b: int


def sample_support(split: SplitSpec, label_ids: np.ndarray, num_classes: int,
                   rng: np.random.Generator) -> SupportSet:
    labeled_by_class = [
        split.labeled[label_ids[split.labeled] == k] for k in range(num_classes)
    ]
    counts = [len(v) for v in labeled_by_class]
    if min(counts) == 0:
        raise NumericsError(f"class {int(np.argmin(counts))} has no labeled node")
    b = min(counts)
    picks = [rng.choice(members, size=b, replace=False) for members in labeled_by_class]
    indices = np.concatenate(picks)
    y_support = np.zeros((b * num_classes, num_classes))
    y_support[np.arange(b * num_classes), np.repeat(np.arange(num_classes), b)] = 1.0
    return SupportSet(indices=indices, y_support=y_support, b=b)


def node_consistency_loss(tape: Tape, z: Tensor, z_prime: Tensor) -> Tensor:
    """Negative mean per-node cosine similarity between the two views;
    gradients flow into both.

    Zero-embedding rows (a node isolated by edge dropping whose features
    were fully masked) contribute similarity 0 for that step.
    """
    return tape.scale(tape.mean(tape.row_cosine(z, z_prime, allow_zero=True)), -1.0)


def snn_distribution(tape: Tape, z_anchor: Tensor, z_support_source: Tensor,
                     support: SupportSet, tau: float) -> Tensor:
    """Soft-nearest-neighbor class distribution per anchor node.

    Softmax over supports of cosine(anchor, support)/tau, folded with the
    support one-hot labels; each output row is a distribution over classes.
    """
    if tau <= 0.0:
        raise ConfigError(f"tau must be positive, got {tau}")
    anchors = tape.normalize_rows(z_anchor, allow_zero=True)
    supports = tape.normalize_rows(
        tape.gather_rows(z_support_source, support.indices), allow_zero=True
    )
    sims = tape.matmul(anchors, tape.transpose(supports))
    weights = tape.softmax_rows(tape.scale(sims, 1.0 / tau))
    return tape.matmul(weights, support.y_support)


def confident_set(p_target: np.ndarray, nu: float, unlabeled: np.ndarray) -> np.ndarray:
    """Unlabeled nodes whose target row-max strictly exceeds nu."""
    row_max = p_target[unlabeled].max(axis=1)
    return unlabeled[row_max > nu]


def label_consistency_loss(
    tape: Tape,
    p_pred: Tensor,
    p_target: Tensor,
    labels: np.ndarray,
    labeled: np.ndarray,
    v_conf: np.ndarray,
) -> Tensor:
    """Mean H(target, prediction) over the confident unlabeled nodes plus
    mean H(one-hot, prediction) over the labeled nodes.

    The target must already be detached; labeled nodes always use their
    one-hot label rows as targets, never the SNN row.
    """
    if p_target.requires_grad:
        raise NumericsError("label consistency target must be tape-detached")
    if len(labeled) == 0:
        raise NumericsError("labeled set is empty")
    labeled_term = tape.cross_entropy_rows(
        labels[labeled], tape.gather_rows(p_pred, labeled)
    )
    if len(v_conf) == 0:
        return labeled_term
    conf_term = tape.cross_entropy_rows(
        Tensor(p_target.data[v_conf]), tape.gather_rows(p_pred, v_conf)
    )
    return tape.add(conf_term, labeled_term)


def supervised_loss(tape: Tape, logits: Tensor, labels: np.ndarray,
                    labeled: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy over the labeled nodes."""
    if len(labeled) == 0:
        raise NumericsError("labeled set is empty")
    return tape.softmax_cross_entropy(tape.gather_rows(logits, labeled), labels[labeled])


def total_loss(tape: Tape, l_nc: Tensor, l_lc: Tensor, l_sup: Tensor,
               cfg: LossConfig) -> Tensor:
    """lambda1 * L_NC + lambda2 * L_LC + L_sup."""
    return tape.add(
        tape.add(tape.scale(l_nc, cfg.lambda1), tape.scale(l_lc, cfg.lambda2)), l_sup
    )
