"""Pipeline configuration: one JSON document carrying every tunable of every
stage. Loading is strict: unknown keys are rejected, so typos fail fast
instead of silently running with defaults.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass

from .synthgen import default_style_weights

FORMAT_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainSection:
    epochs: int
    batch_size: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    latent_noise_sigma: float = 0.0
    lr_decay: float = 0.0


@dataclass(frozen=True)
class GenerationConfig:
    n_train: int = 600
    n_holdout: int = 150
    n_points: int = 512
    part_points: int = 256
    cloud_format: str = "xyz"
    style_weights: dict = field(default_factory=default_style_weights)


@dataclass(frozen=True)
class AutoencoderConfig:
    latent_dim: int
    point_dims: tuple = (3, 64, 128, 128)
    decoder_hidden: tuple = (256, 512)
    train: TrainSection = field(default_factory=lambda: TrainSection(
        epochs=60, batch_size=32, lr=2e-3, lr_decay=0.02, latent_noise_sigma=0.01))


@dataclass(frozen=True)
class SegmenterConfig:
    point_dims: tuple = (3, 64, 128, 128)
    head_dims: tuple = (128, 64)
    train: TrainSection = field(default_factory=lambda: TrainSection(
        epochs=30, batch_size=24, lr=2e-3, lr_decay=0.02))


@dataclass(frozen=True)
class ClassifierConfig:
    point_dims: tuple = (3, 32, 64)
    n_points: int = 256
    augment_with_reconstructions: bool = True
    train: TrainSection = field(default_factory=lambda: TrainSection(
        epochs=25, batch_size=32, lr=3e-3, lr_decay=0.02))


@dataclass(frozen=True)
class ClusteringSection:
    k_min: int = 2
    k_max: int = 8
    min_fraction: float = 0.05
    max_fraction: float = 0.5
    min_size_floor: int = 20
    selection_margin: float = 0.02


@dataclass(frozen=True)
class SvmSection:
    lambda_reg: float = 1e-3
    epochs: int = 2000
    lr: float = 0.1
    holdout_fraction: float = 0.2


@dataclass(frozen=True)
class EvaluationConfig:
    n_samples: int = 200
    alpha_sigma: float = 2.0
    baseline_components: int = 16
    match_probes: int = 24
    flip_samples: int = 60


@dataclass(frozen=True)
class AblationConfig:
    n_mixed: int = 200
    subclass_min_count: int = 20


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    format_version: int = FORMAT_VERSION
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    part_ae: AutoencoderConfig = field(default_factory=lambda: AutoencoderConfig(
        latent_dim=32,
        train=TrainSection(epochs=40, batch_size=32, lr=2e-3, lr_decay=0.02,
                           latent_noise_sigma=0.01)))
    object_ae: AutoencoderConfig = field(default_factory=lambda: AutoencoderConfig(
        latent_dim=64))
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    clustering: ClusteringSection = field(default_factory=ClusteringSection)
    svm: SvmSection = field(default_factory=SvmSection)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)

    def to_dict(self) -> dict:
        def convert(obj):
            if is_dataclass(obj):
                return {f.name: convert(getattr(obj, f.name)) for f in fields(obj)}
            if isinstance(obj, tuple):
                return [convert(v) for v in obj]
            if isinstance(obj, dict):
                return {k: convert(v) for k, v in obj.items()}
            return obj
        return convert(self)


_TUPLE_FIELDS = {"point_dims", "decoder_hidden", "head_dims"}


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        value = data[name]
        ftype = f.type if isinstance(f.type, type) else None
        nested = {
            "generation": GenerationConfig, "part_ae": AutoencoderConfig,
            "object_ae": AutoencoderConfig, "segmenter": SegmenterConfig,
            "classifier": ClassifierConfig, "clustering": ClusteringSection,
            "svm": SvmSection, "evaluation": EvaluationConfig,
            "ablation": AblationConfig, "train": TrainSection,
        }
        if name in nested:
            kwargs[name] = _build(nested[name], value, f"{path}.{name}")
        elif name in _TUPLE_FIELDS:
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(data: dict) -> PipelineConfig:
    cfg = _build(PipelineConfig, data, "config")
    if cfg.format_version != FORMAT_VERSION:
        raise ConfigError(f"unsupported config format_version {cfg.format_version}")
    return cfg


def load_config(path: str | os.PathLike) -> PipelineConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(cfg: PipelineConfig, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=1, sort_keys=True)


def small_config(seed: int = 0) -> PipelineConfig:
    """Reduced-size configuration for fast end-to-end runs (tests, the
    determinism check, the UI fixture workspace)."""
    return config_from_dict({
        "seed": seed,
        "generation": {"n_train": 72, "n_holdout": 24, "n_points": 256,
                       "part_points": 128},
        "part_ae": {"latent_dim": 16, "point_dims": [3, 32, 64, 64],
                    "decoder_hidden": [128, 256],
                    "train": {"epochs": 8, "batch_size": 16, "lr": 2e-3,
                              "lr_decay": 0.02, "latent_noise_sigma": 0.01}},
        "object_ae": {"latent_dim": 24, "point_dims": [3, 32, 64, 64],
                      "decoder_hidden": [128, 256],
                      "train": {"epochs": 12, "batch_size": 16, "lr": 2e-3,
                                "lr_decay": 0.02, "latent_noise_sigma": 0.01}},
        "segmenter": {"point_dims": [3, 32, 64, 64], "head_dims": [64, 32],
                      "train": {"epochs": 10, "batch_size": 16, "lr": 2e-3}},
        "classifier": {"point_dims": [3, 24, 48], "n_points": 128,
                       "train": {"epochs": 10, "batch_size": 24, "lr": 3e-3}},
        "clustering": {"min_size_floor": 4, "min_fraction": 0.04},
        "evaluation": {"n_samples": 24, "baseline_components": 8,
                       "match_probes": 8, "flip_samples": 8},
        "ablation": {"n_mixed": 16, "subclass_min_count": 5},
    })
