"""Flat key=value configuration files.

Grammar: one `key = value` per line; `#` starts a comment; blank lines are
ignored. Values are typed per key (int, float, bool, or enumerated string);
unknown keys are rejected. Command-line `--set key=value` overrides win
over the file.
"""

from __future__ import annotations

from .augment import AugmentConfig
from .errors import ConfigError
from .objective import LossConfig
from .trainer import TrainConfig


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


_SCHEMA = {
    "hidden_dim": int,
    "embed_dim": int,
    "learning_rate": float,
    "weight_decay": float,
    "dropout": float,
    "max_epochs": int,
    "seed": int,
    "feature_row_normalize": _parse_bool,
    "snn_inference": _parse_bool,
    "sparse_features": str,
    "tau": float,
    "nu": float,
    "lambda1": float,
    "lambda2": float,
    "weak_feature_mask": float,
    "weak_edge_drop": float,
    "strong_feature_mask": float,
    "strong_edge_drop": float,
    "mask_mode": str,
    "cross_view_supports": _parse_bool,
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Raw text to a typed key/value dict; unknown keys are an error."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if not raw:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        try:
            values[key] = _SCHEMA[key](raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
    return values


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read(), source=path)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc


def apply_overrides(values: dict, overrides: list[str]) -> dict:
    """Merge `key=value` strings (e.g. from repeated --set flags), flags winning."""
    merged = dict(values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            merged[key] = _SCHEMA[key](raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return merged


def build_train_config(values: dict) -> TrainConfig:
    """Assemble the nested config dataclasses; dataclass validators run here."""
    v = dict(values)
    mask_mode = v.pop("mask_mode", "column")
    weak = AugmentConfig(
        p_feature_mask=v.pop("weak_feature_mask", 0.3),
        p_edge_drop=v.pop("weak_edge_drop", 0.3),
        mask_mode=mask_mode,
    )
    strong = AugmentConfig(
        p_feature_mask=v.pop("strong_feature_mask", 0.5),
        p_edge_drop=v.pop("strong_edge_drop", 0.5),
        mask_mode=mask_mode,
    )
    loss = LossConfig(
        tau=v.pop("tau", 0.1),
        nu=v.pop("nu", 0.9),
        lambda1=v.pop("lambda1", 1.0),
        lambda2=v.pop("lambda2", 1.0),
        weak_aug=weak,
        strong_aug=strong,
        cross_view_supports=v.pop("cross_view_supports", False),
    )
    return TrainConfig(loss=loss, **v)


def effective_config_dict(cfg: TrainConfig) -> dict:
    """Flat view of a TrainConfig, matching the file keys."""
    return {
        "hidden_dim": cfg.hidden_dim,
        "embed_dim": cfg.embed_dim,
        "learning_rate": cfg.learning_rate,
        "weight_decay": cfg.weight_decay,
        "dropout": cfg.dropout,
        "max_epochs": cfg.max_epochs,
        "seed": cfg.seed,
        "feature_row_normalize": cfg.feature_row_normalize,
        "snn_inference": cfg.snn_inference,
        "sparse_features": cfg.sparse_features,
        "tau": cfg.loss.tau,
        "nu": cfg.loss.nu,
        "lambda1": cfg.loss.lambda1,
        "lambda2": cfg.loss.lambda2,
        "weak_feature_mask": cfg.loss.weak_aug.p_feature_mask,
        "weak_edge_drop": cfg.loss.weak_aug.p_edge_drop,
        "strong_feature_mask": cfg.loss.strong_aug.p_feature_mask,
        "strong_edge_drop": cfg.loss.strong_aug.p_edge_drop,
        "mask_mode": cfg.loss.weak_aug.mask_mode,
        "cross_view_supports": cfg.loss.cross_view_supports,
    }
