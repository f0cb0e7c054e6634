"""Evaluation metrics, uncertainty spreads, reports, and the standard
experiments: tracks vs no tracks, point-count ablation, KDE filtering,
and single-image probes.

Accuracies in reports are percentages and carry two labeled spreads: a
bootstrap 95% confidence halfwidth over samples ("ci95") and the
standard deviation of per-class accuracies ("class_std"). Report files
contain no timestamps or hostnames, so rerunning an experiment with the
same seeds reproduces them byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .augment import AugmentPolicy
from .errors import UsageError
from .kdefilter import KdeConfig
from .model import ModelConfig, TRecModel, load_checkpoint
from .pipeline import EvalRecord, EvalSpec, ManifestDataset, evaluate_records, topk_correct
from .train import TrainConfig, fit


def topk_accuracy(logits: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Fraction of samples whose label ranks in the top k logits.

    Ties rank the lower class index first, so the result is bit-stable.
    """
    return float(topk_correct(logits, labels, k).mean())


def bootstrap_ci95(correct: np.ndarray, seed: int = 0, resamples: int = 1000) -> float:
    """Halfwidth (percentage points) of a bootstrap 95% CI of the mean."""
    correct = np.asarray(correct, dtype=np.float64)
    if correct.ndim != 1 or correct.size == 0:
        raise ValueError("correct must be a non-empty 1-d array")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, correct.size, size=(resamples, correct.size))
    means = correct[idx].mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return float((hi - lo) / 2.0 * 100.0)


def class_accuracy_std(correct: np.ndarray, labels: np.ndarray) -> float:
    """Standard deviation (percentage points) of per-class accuracies."""
    correct = np.asarray(correct, dtype=np.float64)
    labels = np.asarray(labels)
    if correct.shape != labels.shape:
        raise ValueError("correct and labels must align")
    per_class = [correct[labels == c].mean() for c in np.unique(labels)]
    return float(np.std(per_class) * 100.0)


@dataclass(frozen=True)
class VariantRow:
    """One evaluated variant: accuracies in percent plus labeled spreads."""

    label: str
    top1: float
    top1_ci95: float
    top1_class_std: float
    top5: float
    top5_ci95: float
    top5_class_std: float
    num_samples: int
    seeds: tuple[int, ...]

    def __post_init__(self) -> None:
        if not 0.0 <= self.top1 <= self.top5 <= 100.0:
            raise ValueError("need 0 <= top1 <= top5 <= 100")
        if min(self.top1_ci95, self.top1_class_std, self.top5_ci95, self.top5_class_std) < 0.0:
            raise ValueError("spreads must be non-negative")
        if self.num_samples < 1:
            raise ValueError("a row needs at least one sample")


@dataclass(frozen=True)
class EvalReport:
    experiment: str
    rows: tuple[VariantRow, ...]
    config: dict[str, Any]

    def row(self, label: str) -> VariantRow:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(f"report has no row {label!r}")


def make_row(
    label: str,
    records: Sequence[EvalRecord],
    num_classes: int,
    seeds: tuple[int, ...],
    boot_seed: int = 0,
) -> VariantRow:
    logits = np.stack([r.logits for r in records])
    labels = np.array([r.label for r in records])
    k5 = min(5, num_classes)
    c1 = topk_correct(logits, labels, 1)
    c5 = topk_correct(logits, labels, k5)
    return VariantRow(
        label=label,
        top1=float(c1.mean() * 100.0),
        top1_ci95=bootstrap_ci95(c1, seed=boot_seed),
        top1_class_std=class_accuracy_std(c1, labels),
        top5=float(c5.mean() * 100.0),
        top5_ci95=bootstrap_ci95(c5, seed=boot_seed),
        top5_class_std=class_accuracy_std(c5, labels),
        num_samples=len(records),
        seeds=tuple(seeds),
    )


def report_to_text(report: EvalReport) -> str:
    header = (
        f"experiment: {report.experiment}\n"
        f"{'variant':<28} {'top1%':>7} {'ci95':>6} {'cls_std':>8} "
        f"{'top5%':>7} {'ci95':>6} {'cls_std':>8} {'n':>6}\n"
    )
    lines = [
        f"{r.label:<28} {r.top1:>7.2f} {r.top1_ci95:>6.2f} {r.top1_class_std:>8.2f} "
        f"{r.top5:>7.2f} {r.top5_ci95:>6.2f} {r.top5_class_std:>8.2f} {r.num_samples:>6}"
        for r in report.rows
    ]
    return header + "\n".join(lines) + "\n"


def _sanitize(label: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in label)


def write_records(records: Sequence[EvalRecord], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for r in records:
        logits = np.asarray(r.logits)
        labels = np.array([r.label])
        pred = int(np.argsort(-logits[None, :], axis=1, kind="stable")[0, 0])
        lines.append(
            json.dumps(
                {
                    "sample_id": r.sample_id,
                    "label": r.label,
                    "pred": pred,
                    "correct": bool(pred == r.label),
                    "logits": [float(v) for v in logits],
                },
                sort_keys=True,
            )
        )
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def write_report(report: EvalReport, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "experiment": report.experiment,
        "rows": [asdict(r) for r in report.rows],
        "config": report.config,
    }
    path = out_dir / "report.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    (out_dir / "report.txt").write_text(report_to_text(report))
    return path


def _load_for_eval(checkpoint: str | Path, expect_mode: str | None = None) -> TRecModel:
    model, _ = load_checkpoint(checkpoint)
    if expect_mode is not None and model.config.mode != expect_mode:
        raise UsageError(
            f"{checkpoint} holds a {model.config.mode!r} model; "
            f"this experiment needs {expect_mode!r}"
        )
    return model


def _fit_and_load(
    train_ds: ManifestDataset,
    val_ds: ManifestDataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    policy: AugmentPolicy,
    out_dir: Path,
    filter_kde: KdeConfig | None = None,
) -> TRecModel:
    result = fit(
        train_ds, val_ds, model_config, train_config, policy, out_dir,
        filter_kde=filter_kde,
    )
    model, _ = load_checkpoint(result.best_checkpoint, expected_config=model_config)
    return model


def _snapshot(**sections: Any) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for name, value in sections.items():
        if value is None:
            continue
        out[name] = asdict(value) if hasattr(value, "__dataclass_fields__") else value
    return out


def run_track_vs_notrack(
    train_ds: ManifestDataset,
    val_ds: ManifestDataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    policy: AugmentPolicy,
    out_dir: str | Path,
    eval_seed: int = 0,
    eval_count: int | None = None,
) -> EvalReport:
    """Train and evaluate the fusion model against its no-track twin."""
    out_dir = Path(out_dir)
    count = train_config.max_points if eval_count is None else eval_count
    rows = []
    per_row_records = {}
    for mode, label in (("trec", "trec"), ("baseline", "baseline")):
        cfg = replace(model_config, mode=mode)
        model = _fit_and_load(
            train_ds, val_ds, cfg, train_config, policy, out_dir / mode
        )
        spec = EvalSpec(seed=eval_seed, point_count=count if mode == "trec" else None)
        records = evaluate_records(model, val_ds, spec)
        rows.append(
            make_row(label, records, cfg.num_classes, seeds=(train_config.seed,),
                     boot_seed=eval_seed)
        )
        per_row_records[label] = records
    report = EvalReport(
        "track_vs_notrack",
        tuple(rows),
        _snapshot(
            model=model_config, train=train_config, augment=policy,
            eval={"seed": eval_seed, "point_count": count},
        ),
    )
    write_report(report, out_dir)
    for label, records in per_row_records.items():
        write_records(records, out_dir / f"records_{_sanitize(label)}.jsonl")
    return report


def run_point_ablation(
    checkpoint: str | Path,
    val_ds: ManifestDataset,
    counts: Sequence[int],
    out_dir: str | Path,
    eval_seed: int = 0,
) -> EvalReport:
    """Evaluate one trained fusion model at descending point budgets.

    counts of 0 evaluate the model with tracks absent entirely. The
    point subset for a given (sample, count) depends only on the eval
    seed, so curves from different checkpoints are comparable.
    """
    if not counts:
        raise ValueError("counts must not be empty")
    if any(c < 0 for c in counts):
        raise ValueError("counts must be non-negative")
    out_dir = Path(out_dir)
    model = _load_for_eval(checkpoint, expect_mode="trec")
    rows = []
    for count in counts:
        spec = EvalSpec(seed=eval_seed, point_count=int(count))
        records = evaluate_records(model, val_ds, spec)
        rows.append(
            make_row(
                f"points_{count}", records, model.config.num_classes,
                seeds=(eval_seed,), boot_seed=eval_seed,
            )
        )
        write_records(records, out_dir / f"records_points_{count}.jsonl")
    report = EvalReport(
        "point_ablation",
        tuple(rows),
        _snapshot(
            model=model.config,
            eval={"seed": eval_seed, "counts": [int(c) for c in counts]},
        ),
    )
    write_report(report, out_dir)
    xs = [int(c) for c in counts]
    ys = [r.top1 for r in rows]
    err = [r.top1_ci95 for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(xs, ys, yerr=err, marker="o")
    ax.set_xlabel("points per sample")
    ax.set_ylabel("top-1 accuracy (%)")
    ax.set_title("accuracy vs point budget")
    fig.tight_layout()
    fig.savefig(out_dir / "ablation.png", dpi=120)
    plt.close(fig)
    return report


def run_kde_experiment(
    train_ds: ManifestDataset,
    val_ds: ManifestDataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    policy: AugmentPolicy,
    kde_config: KdeConfig,
    out_dir: str | Path,
    eval_seed: int = 0,
    eval_count: int | None = None,
    vanilla_checkpoint: str | Path | None = None,
    filtered_checkpoint: str | Path | None = None,
) -> EvalReport:
    """Measure what KDE background filtering does to accuracy.

    Three rows: the plain fusion model on unfiltered points; the same
    checkpoint with filtering bolted on at inference (subsample, then
    filter); and a model trained on filtered points, evaluated on
    filtered points. Checkpoints can be supplied to skip (re)training.
    """
    out_dir = Path(out_dir)
    count = train_config.max_points if eval_count is None else eval_count
    cfg = replace(model_config, mode="trec")
    if vanilla_checkpoint is not None:
        vanilla = _load_for_eval(vanilla_checkpoint, expect_mode="trec")
    else:
        vanilla = _fit_and_load(
            train_ds, val_ds, cfg, train_config, policy, out_dir / "vanilla"
        )
    if filtered_checkpoint is not None:
        filtered = _load_for_eval(filtered_checkpoint, expect_mode="trec")
    else:
        filtered = _fit_and_load(
            train_ds, val_ds, cfg, train_config, policy, out_dir / "filter_trec",
            filter_kde=kde_config,
        )
    arms = (
        ("trec", vanilla, EvalSpec(seed=eval_seed, point_count=count)),
        (
            "trec_kde_eval",
            vanilla,
            EvalSpec(
                seed=eval_seed, point_count=count, kde=kde_config,
                kde_stage="after_subsample",
            ),
        ),
        (
            "filter_trec_kde",
            filtered,
            EvalSpec(seed=eval_seed, kde=kde_config, kde_stage="before_subsample"),
        ),
    )
    rows = []
    for label, model, spec in arms:
        records = evaluate_records(model, val_ds, spec)
        rows.append(
            make_row(label, records, cfg.num_classes, seeds=(train_config.seed,),
                     boot_seed=eval_seed)
        )
        write_records(records, out_dir / f"records_{_sanitize(label)}.jsonl")
    report = EvalReport(
        "kde_filter",
        tuple(rows),
        _snapshot(
            model=model_config, train=train_config, augment=policy, kde=kde_config,
            eval={"seed": eval_seed, "point_count": count},
        ),
    )
    write_report(report, out_dir)
    return report


def run_single_image(
    train_ds: ManifestDataset,
    val_ds: ManifestDataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    policy: AugmentPolicy,
    out_dir: str | Path,
    eval_seed: int = 0,
) -> EvalReport:
    """Frame-0-only probes: full-length tracks versus image alone.

    The track variant sees one frame plus every stored point track; the
    baseline variant sees the single frame only. A gap between them
    means the labels live in the motion, not in the picture.
    """
    out_dir = Path(out_dir)
    rows = []
    for mode in ("single_image_trec", "single_image_baseline"):
        cfg = replace(model_config, mode=mode)
        model = _fit_and_load(
            train_ds, val_ds, cfg, train_config, policy, out_dir / mode
        )
        records = evaluate_records(model, val_ds, EvalSpec(seed=eval_seed))
        rows.append(
            make_row(mode, records, cfg.num_classes, seeds=(train_config.seed,),
                     boot_seed=eval_seed)
        )
        write_records(records, out_dir / f"records_{_sanitize(mode)}.jsonl")
    report = EvalReport(
        "single_image",
        tuple(rows),
        _snapshot(
            model=model_config, train=train_config, augment=policy,
            eval={"seed": eval_seed},
        ),
    )
    write_report(report, out_dir)
    return report
