"""Training loop: AdamW with two learning rates, warmup plus cosine
restarts, per-batch point-count randomization, and exact resumability.

The CNN backbone gets its own (smaller) learning rate because image
features transfer with little adaptation while the transformer and the
track projection train from scratch. Warmup is linear over
min(warmup_steps, 10% of total steps); after warmup the rate follows
cosine cycles whose first period is what remains of a
``restart_period_epochs`` cycle, each next period twice as long.

Every random draw is stateless in (seed, stream, epoch, index) and the
torch RNG state is stored in the checkpoint, so interrupting a run after
any epoch and resuming reproduces the uninterrupted run bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch
from torch import nn

from .augment import AugmentPolicy
from .errors import DataError, NumericError
from .kdefilter import KdeConfig
from .model import ModelConfig, TRecModel, save_checkpoint, load_checkpoint
from .pipeline import (
    Batch,
    EvalSpec,
    FilterCache,
    ManifestDataset,
    STREAM_ORDER,
    assemble_train_batch,
    derive_seed,
    evaluate_records,
    topk_correct,
)
from .trackcore import randomized_point_count

STREAM_VAL = 6


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    lr_transformer: float = 1e-4
    lr_backbone: float = 1e-5
    weight_decay: float = 0.01
    warmup_steps: int = 5000
    warmup_cap_fraction: float = 0.1
    restart_period_epochs: int = 5
    restart_mult: int = 2
    min_points: int = 200
    max_points: int = 400
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if min(self.lr_transformer, self.lr_backbone) <= 0.0:
            raise ValueError("learning rates must be positive")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be non-negative")
        if self.warmup_steps < 0 or not 0.0 <= self.warmup_cap_fraction <= 1.0:
            raise ValueError("bad warmup settings")
        if self.restart_period_epochs < 1 or self.restart_mult < 1:
            raise ValueError("bad restart settings")
        if not 0 < self.min_points <= self.max_points:
            raise ValueError("need 0 < min_points <= max_points")


@dataclass
class TrainState:
    epoch: int = 0  # next epoch to run
    global_step: int = 0
    best_val_top1: float = -1.0


@dataclass(frozen=True)
class CosineRestartSchedule:
    """Resolved learning-rate schedule; scale() maps a step to [0, 1]."""

    lr_transformer: float
    lr_backbone: float
    warmup: int
    first_period: int
    mult: int

    @classmethod
    def from_config(
        cls, config: TrainConfig, steps_per_epoch: int
    ) -> "CosineRestartSchedule":
        total = config.epochs * steps_per_epoch
        warmup = min(config.warmup_steps, int(config.warmup_cap_fraction * total))
        first = max(config.restart_period_epochs * steps_per_epoch - warmup, 1)
        return cls(
            lr_transformer=config.lr_transformer,
            lr_backbone=config.lr_backbone,
            warmup=warmup,
            first_period=first,
            mult=config.restart_mult,
        )

    def scale(self, step: int) -> float:
        if step < 0:
            raise ValueError("step must be non-negative")
        if step < self.warmup:
            return step / self.warmup
        s = step - self.warmup
        period = self.first_period
        while s >= period:
            s -= period
            period *= self.mult
        return 0.5 * (1.0 + math.cos(math.pi * s / period))


def lr_at(step: int, schedule: CosineRestartSchedule) -> tuple[float, float]:
    """(transformer lr, backbone lr) at a global step."""
    scale = schedule.scale(step)
    return schedule.lr_transformer * scale, schedule.lr_backbone * scale


def build_optimizer(model: TRecModel, config: TrainConfig) -> torch.optim.AdamW:
    backbone = list(model.encoder.parameters())
    backbone_ids = {id(p) for p in backbone}
    rest = [p for p in model.parameters() if id(p) not in backbone_ids]
    return torch.optim.AdamW(
        [
            {"params": rest, "lr": config.lr_transformer, "name": "transformer"},
            {"params": backbone, "lr": config.lr_backbone, "name": "backbone"},
        ],
        weight_decay=config.weight_decay,
    )


def train_step(
    model: TRecModel,
    batch: Batch,
    optimizer: torch.optim.Optimizer,
    schedule: CosineRestartSchedule,
    state: TrainState,
    loss_fn: nn.Module | None = None,
) -> float:
    """One optimization step; raises NumericError on a non-finite loss."""
    lr_t, lr_b = lr_at(state.global_step, schedule)
    for group in optimizer.param_groups:
        group["lr"] = lr_b if group.get("name") == "backbone" else lr_t
    model.train()
    logits = model(batch.frames, batch.motion)
    loss = (loss_fn or nn.functional.cross_entropy)(logits, batch.labels)
    value = float(loss.detach())
    if not math.isfinite(value):
        raise NumericError(
            f"non-finite loss {value} at step {state.global_step} "
            f"(lr_transformer={lr_t:.3g}, lr_backbone={lr_b:.3g}, "
            f"samples={list(batch.sample_ids)}, "
            f"logit range=[{float(logits.detach().min()):.3g}, "
            f"{float(logits.detach().max()):.3g}])"
        )
    optimizer.zero_grad(set_to_none=True)
    loss.backward()
    optimizer.step()
    state.global_step += 1
    return value


@dataclass
class FitResult:
    last_checkpoint: Path
    best_checkpoint: Path
    history: list[dict[str, Any]]
    best_val_top1: float


def _write_history(path: Path, history: list[dict[str, Any]]) -> None:
    lines = [json.dumps(rec, sort_keys=True) for rec in history]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def _val_spec(model_config: ModelConfig, train_config: TrainConfig,
              filter_kde: KdeConfig | None) -> EvalSpec:
    seed = derive_seed(train_config.seed, STREAM_VAL)
    if model_config.mode == "trec":
        if filter_kde is not None:
            return EvalSpec(seed=seed, kde=filter_kde, kde_stage="before_subsample")
        return EvalSpec(seed=seed, point_count=train_config.max_points)
    return EvalSpec(seed=seed)  # point handling is moot outside trec


def fit(
    train_dataset: ManifestDataset,
    val_dataset: ManifestDataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    policy: AugmentPolicy,
    out_dir: str | Path,
    filter_kde: KdeConfig | None = None,
    resume: bool = False,
) -> FitResult:
    """Train a model and keep the best (val top-1) and last checkpoints.

    With ``filter_kde`` set, track modes train on KDE-filtered point
    sets (filtering runs once per sample on the stored tracks, before
    batching). With ``resume=True`` the run continues from
    ``out_dir/last.pt`` and reproduces the uninterrupted run exactly.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    last_path = out_dir / "last.pt"
    best_path = out_dir / "best.pt"
    history_path = out_dir / "history.jsonl"

    train_ids = {e.sample_id for e in train_dataset.manifest.entries}
    val_ids = {e.sample_id for e in val_dataset.manifest.entries}
    overlap = train_ids & val_ids
    if overlap:
        raise ValueError(
            f"train and val splits share {len(overlap)} sample ids, "
            f"e.g. {sorted(overlap)[:3]}"
        )
    if train_dataset.num_classes != model_config.num_classes:
        raise ValueError(
            f"model expects {model_config.num_classes} classes but the "
            f"dataset defines {train_dataset.num_classes}"
        )

    n = len(train_dataset)
    steps_per_epoch = math.ceil(n / train_config.batch_size)
    schedule = CosineRestartSchedule.from_config(train_config, steps_per_epoch)
    state = TrainState()
    history: list[dict[str, Any]] = []

    if resume:
        if not last_path.exists():
            raise DataError(f"cannot resume: {last_path} does not exist")
        model, payload = load_checkpoint(last_path, expected_config=model_config)
        if payload.get("train_config") != asdict(train_config):
            raise DataError("cannot resume: train config differs from the checkpoint")
        optimizer = build_optimizer(model, train_config)
        optimizer.load_state_dict(payload["optimizer_state"])
        state = TrainState(**payload["train_state"])
        history = list(payload["history"])
        torch.set_rng_state(payload["torch_rng"])
    else:
        torch.manual_seed(train_config.seed)
        model = TRecModel(model_config)
        optimizer = build_optimizer(model, train_config)

    filter_cache = FilterCache(filter_kde) if filter_kde is not None else None
    val_spec = _val_spec(model_config, train_config, filter_kde)

    for epoch in range(state.epoch, train_config.epochs):
        order = np.random.default_rng(
            derive_seed(train_config.seed, STREAM_ORDER, epoch)
        ).permutation(n)
        epoch_losses: list[float] = []
        for b in range(steps_per_epoch):
            indices = order[b * train_config.batch_size : (b + 1) * train_config.batch_size]
            target = randomized_point_count(
                train_config.min_points,
                train_config.max_points,
                train_config.seed,
                batch_index=epoch * steps_per_epoch + b,
            )
            batch = assemble_train_batch(
                train_dataset,
                indices,
                model_config.mode,
                model_config,
                policy,
                seed=train_config.seed,
                epoch=epoch,
                target_points=target,
                filter_cache=filter_cache,
            )
            loss = train_step(model, batch, optimizer, schedule, state)
            epoch_losses.append(loss)
            history.append(
                {
                    "kind": "step",
                    "epoch": epoch,
                    "step": state.global_step - 1,
                    "loss": loss,
                    "lr_transformer": lr_at(state.global_step - 1, schedule)[0],
                }
            )

        records = evaluate_records(model, val_dataset, val_spec)
        logits = np.stack([r.logits for r in records])
        labels = np.array([r.label for r in records])
        k5 = min(5, model_config.num_classes)
        val_top1 = float(topk_correct(logits, labels, 1).mean())
        val_top5 = float(topk_correct(logits, labels, k5).mean())
        history.append(
            {
                "kind": "epoch",
                "epoch": epoch,
                "train_loss": float(np.mean(epoch_losses)),
                "val_top1": val_top1,
                "val_top5": val_top5,
            }
        )

        state.epoch = epoch + 1
        if val_top1 > state.best_val_top1:
            state.best_val_top1 = val_top1
            save_checkpoint(best_path, model, {"val_top1": val_top1, "epoch": epoch})
        save_checkpoint(
            last_path,
            model,
            {
                "optimizer_state": optimizer.state_dict(),
                "train_state": asdict(state),
                "train_config": asdict(train_config),
                "history": history,
                "torch_rng": torch.get_rng_state(),
            },
        )
        _write_history(history_path, history)

    if not best_path.exists():  # zero epochs requested on a fresh dir
        save_checkpoint(best_path, model, {"val_top1": -1.0, "epoch": -1})
    return FitResult(last_path, best_path, history, state.best_val_top1)
