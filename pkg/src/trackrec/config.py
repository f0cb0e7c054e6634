"""Experiment configuration: strict YAML in, dataclasses out.

A config file has five sections (synth, model, train, kde, augment) plus
a handful of top-level keys. Unknown keys anywhere are an error rather
than a warning, so a typo like ``lr_transfomer`` cannot silently train
with defaults. ``--set section.key=value`` overrides parse their value
as YAML, so ``--set train.epochs=3`` and ``--set kde.bandwidth=scott``
both do what they look like.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, get_origin, get_type_hints

import yaml

from .augment import AugmentPolicy
from .errors import UsageError
from .kdefilter import KdeConfig
from .model import ModelConfig
from .train import TrainConfig

DEFAULT_POINT_COUNTS = (400, 200, 100, 50, 25, 15, 5, 0)


@dataclass(frozen=True)
class SynthSection:
    class_set: str = "motion8"
    train_samples: int = 2000
    val_samples: int = 500
    test_samples: int = 0
    num_frames: int = 8
    image_size: int = 64
    num_points: int = 450
    seed: int = 0
    fps: float = 30.0


@dataclass(frozen=True)
class ModelSection:
    """Architecture knobs; class count, horizon, image size, and mode
    are filled in from the dataset and the experiment at hand."""

    d_model: int = 128
    num_layers: int = 4
    num_heads: int = 4
    ffn_dim: int = 256
    dropout: float = 0.0
    encoder: str = "small"
    encoder_dim: int = 128
    pretrained: bool = False
    max_tokens: int = 1024


@dataclass(frozen=True)
class AugmentSection:
    crop_scale: tuple[float, float] = (0.7, 1.0)
    flip_prob: float = 0.5
    blur_sigma: tuple[float, float] = (0.0, 1.5)
    jitter: float = 0.2


@dataclass(frozen=True)
class ExperimentConfig:
    data_root: str = "data"
    out_root: str = "runs"
    eval_seed: int = 0
    eval_point_count: int | None = None
    point_counts: tuple[int, ...] = DEFAULT_POINT_COUNTS
    forbidden_class_substrings: tuple[str, ...] = ()
    synth: SynthSection = field(default_factory=SynthSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    kde: KdeConfig = field(default_factory=KdeConfig)
    augment: AugmentSection = field(default_factory=AugmentSection)


_SECTIONS = {
    "synth": SynthSection,
    "model": ModelSection,
    "train": TrainConfig,
    "kde": KdeConfig,
    "augment": AugmentSection,
}


def _coerce(name: str, annotation: Any, value: Any) -> Any:
    origin = get_origin(annotation)
    if origin is tuple and isinstance(value, (list, tuple)):
        return tuple(value)
    if annotation is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    # "float | str" (kde bandwidth) and "int | None" pass through as parsed
    return value


def _build_section(cls: type, data: dict[str, Any], where: str) -> Any:
    if not isinstance(data, dict):
        raise UsageError(f"config section {where!r} must be a mapping")
    # field.type is a string under deferred annotations; resolve real types
    hints = get_type_hints(cls)
    unknown = sorted(set(data) - {f.name for f in fields(cls)})
    if unknown:
        raise UsageError(f"unknown config key(s) under {where!r}: {unknown}")
    kwargs = {
        name: _coerce(name, hints[name], value) for name, value in data.items()
    }
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value under {where!r}: {exc}") from exc


def parse_override(text: str) -> tuple[str, str | None, Any]:
    """Parse one ``--set`` item into (section, key, value).

    Top-level keys use ``key=value``; section keys use
    ``section.key=value``. Values go through the YAML parser.
    """
    if "=" not in text:
        raise UsageError(f"override {text!r} must look like key=value")
    target, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise UsageError(f"cannot parse override value {raw!r}: {exc}") from exc
    parts = target.split(".")
    if len(parts) == 1:
        return parts[0], None, value
    if len(parts) == 2:
        return parts[0], parts[1], value
    raise UsageError(f"override target {target!r} has too many dots")


def load_experiment_config(
    path: str | Path | None = None, overrides: list[str] | None = None
) -> ExperimentConfig:
    """Load a YAML config (or pure defaults) and apply --set overrides."""
    data: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise UsageError(f"config file {path} does not exist")
        try:
            loaded = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise UsageError(f"{path} is not valid YAML: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise UsageError(f"{path} must hold a YAML mapping at the top level")
        data = loaded

    for item in overrides or []:
        section, key, value = parse_override(item)
        if key is None:
            data[section] = value
        else:
            if section not in _SECTIONS:
                raise UsageError(
                    f"override section {section!r} is not one of {sorted(_SECTIONS)}"
                )
            bucket = data.setdefault(section, {})
            if not isinstance(bucket, dict):
                raise UsageError(f"config section {section!r} must be a mapping")
            bucket[key] = value

    top_hints = get_type_hints(ExperimentConfig)
    unknown = sorted(set(data) - {f.name for f in fields(ExperimentConfig)})
    if unknown:
        raise UsageError(f"unknown top-level config key(s): {unknown}")
    kwargs: dict[str, Any] = {}
    for name, value in data.items():
        if name in _SECTIONS:
            kwargs[name] = _build_section(_SECTIONS[name], value, name)
        else:
            kwargs[name] = _coerce(name, top_hints[name], value)
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad experiment config: {exc}") from exc


def dump_config(config: ExperimentConfig) -> str:
    """YAML snapshot of a resolved config (tuples become lists)."""

    def plain(obj: Any) -> Any:
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {f.name: plain(getattr(obj, f.name)) for f in fields(obj)}
        if isinstance(obj, tuple):
            return [plain(v) for v in obj]
        return obj

    return yaml.safe_dump(plain(config), sort_keys=True)


def resolve_model_config(
    config: ExperimentConfig, num_classes: int, mode: str = "trec"
) -> ModelConfig:
    """Combine the model section with dataset-derived shape facts."""
    section = config.model
    return ModelConfig(
        num_classes=num_classes,
        d_model=section.d_model,
        num_layers=section.num_layers,
        num_heads=section.num_heads,
        ffn_dim=section.ffn_dim,
        dropout=section.dropout,
        num_frames=config.synth.num_frames,
        image_size=config.synth.image_size,
        encoder=section.encoder,
        encoder_dim=section.encoder_dim,
        pretrained=section.pretrained,
        mode=mode,
        max_tokens=section.max_tokens,
    )


def resolve_policy(
    config: ExperimentConfig, source_height: int, source_width: int
) -> AugmentPolicy:
    section = config.augment
    try:
        return AugmentPolicy(
            source_height=source_height,
            source_width=source_width,
            output_size=config.synth.image_size,
            crop_scale=section.crop_scale,
            flip_prob=section.flip_prob,
            blur_sigma=section.blur_sigma,
            jitter=section.jitter,
        )
    except ValueError as exc:
        raise UsageError(f"bad augment section: {exc}") from exc
