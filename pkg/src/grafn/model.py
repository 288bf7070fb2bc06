"""Shared two-layer GCN encoder and the linear classification head.

Both augmented views pass through the same parameters; there is no target
network. Inference always runs on the clean, renormalized graph with
dropout off.

Checkpoint format: magic "GRAFN1", then per parameter: name length,
name bytes, rows, cols (little-endian uint32), row-major float64 values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .data import GraphDataset, normalize_adjacency
from .errors import DataError, NumericsError
from .sparse import SparseAdjacency
from .sparse_features import SparseFeatures
from .tape import Parameter, Tape, Tensor

CHECKPOINT_MAGIC = b"GRAFN1"


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class GcnEncoder:
    w1: Parameter  # F x H
    w2: Parameter  # H x D
    dropout: float

    @property
    def hidden_dim(self) -> int:
        return self.w1.data.shape[1]

    @property
    def output_dim(self) -> int:
        return self.w2.data.shape[1]

    def encode(
        self,
        tape: Tape,
        adj_norm: SparseAdjacency,
        x: np.ndarray | SparseFeatures | Tensor,
        training: bool,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Z = A_hat . ReLU(A_hat . dropout(X) . W1) . W2, with dropout between
        layers while training."""
        if training and rng is None:
            raise NumericsError("training-mode encode needs an rng for dropout")
        if isinstance(x, SparseFeatures):
            if training and self.dropout > 0.0:
                x = x.drop_entries(self.dropout, rng)
            h = tape.matmul(x, self.w1)
        else:
            h = tape.dropout(x, self.dropout, rng, training) if training else x
            h = tape.matmul(h, self.w1)
        h = tape.relu(tape.spmm(adj_norm, h))
        if training:
            h = tape.dropout(h, self.dropout, rng, training)
        return tape.spmm(adj_norm, tape.matmul(h, self.w2))


@dataclass
class LinearHead:
    w: Parameter  # D x C
    b: Parameter  # 1 x C

    def classify(self, tape: Tape, z: Tensor) -> Tensor:
        return tape.add_bias(tape.matmul(z, self.w), self.b)


def init_params(
    tape: Tape,
    num_features: int,
    hidden_dim: int,
    embed_dim: int,
    num_classes: int,
    dropout: float,
    rng: np.random.Generator,
) -> tuple[GcnEncoder, LinearHead]:
    """Glorot-uniform weights, zero biases; deterministic given the rng state."""
    encoder = GcnEncoder(
        w1=tape.parameter(glorot(rng, num_features, hidden_dim), "enc.w1"),
        w2=tape.parameter(glorot(rng, hidden_dim, embed_dim), "enc.w2"),
        dropout=dropout,
    )
    head = LinearHead(
        w=tape.parameter(glorot(rng, embed_dim, num_classes), "head.w"),
        b=tape.parameter(np.zeros((1, num_classes)), "head.b"),
    )
    return encoder, head


def predict_from(
    tape: Tape,
    adj_norm: SparseAdjacency,
    x: np.ndarray | SparseFeatures,
    encoder: GcnEncoder,
    head: LinearHead,
) -> np.ndarray:
    """Predicted class per node on an already-normalized graph; argmax ties
    resolve toward the lower class index."""
    z = encoder.encode(tape, adj_norm, x, training=False)
    logits = head.classify(tape, z)
    return np.argmax(logits.data, axis=1)


def predict(ds: GraphDataset, encoder: GcnEncoder, head: LinearHead) -> np.ndarray:
    """Inference on the clean graph (normalized adjacency, no augmentation)."""
    return predict_from(Tape(), normalize_adjacency(ds.adj), ds.features, encoder, head)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path: str, params: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        for name, value in params.items():
            if value.ndim != 2:
                raise NumericsError(f"checkpoint parameter {name!r} must be 2-d")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<II", value.shape[0], value.shape[1]))
            fh.write(np.ascontiguousarray(value, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise DataError(f"{path}: not a checkpoint (bad magic {magic!r})")
        params: dict[str, np.ndarray] = {}
        while True:
            head = fh.read(4)
            if not head:
                break
            if len(head) != 4:
                raise DataError(f"{path}: truncated checkpoint")
            (name_len,) = struct.unpack("<I", head)
            name = fh.read(name_len).decode("utf-8")
            rows, cols = struct.unpack("<II", fh.read(8))
            raw = fh.read(rows * cols * 8)
            if len(raw) != rows * cols * 8:
                raise DataError(f"{path}: truncated checkpoint at {name!r}")
            params[name] = np.frombuffer(raw, dtype="<f8").reshape(rows, cols).copy()
    return params


def build_from_checkpoint(params: dict[str, np.ndarray], dropout: float = 0.0
                          ) -> tuple[Tape, GcnEncoder, LinearHead]:
    """Reconstruct encoder and head on a fresh tape from checkpoint arrays."""
    for key in ("enc.w1", "enc.w2", "head.w", "head.b"):
        if key not in params:
            raise DataError(f"checkpoint missing parameter {key!r}")
    tape = Tape()
    encoder = GcnEncoder(
        w1=tape.parameter(params["enc.w1"], "enc.w1"),
        w2=tape.parameter(params["enc.w2"], "enc.w2"),
        dropout=dropout,
    )
    head = LinearHead(
        w=tape.parameter(params["head.w"], "head.w"),
        b=tape.parameter(params["head.b"], "head.b"),
    )
    return tape, encoder, head
