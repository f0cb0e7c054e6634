"""Command-line interface.

Subcommands: synth, import-tracks, train, experiment, filter-kde,
visualize. Every command takes ``--config file.yaml`` plus repeatable
``--set section.key=value`` overrides. Exit codes: 0 success, 1 usage
error, 2 data error, 3 numeric failure.

The output root comes from the config's ``out_root`` unless the
``TRACKREC_OUT_ROOT`` environment variable overrides it, which lets a
scheduler redirect runs without touching config files.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import (
    ExperimentConfig,
    dump_config,
    load_experiment_config,
    resolve_model_config,
    resolve_policy,
)
from .data.manifest import filter_ambiguous_classes, read_manifest
from .data.synthetic import CLASS_SETS, build_synthetic_dataset
from .data.trackfile import read_tracks, write_tracks
from .data.external import import_external_tracks
from .errors import DataError, NumericError, TrackRecError, UsageError
from .evalbench import (
    report_to_text,
    run_kde_experiment,
    run_point_ablation,
    run_single_image,
    run_track_vs_notrack,
)
from .kdefilter import retained_indices
from .model import MODES
from .pipeline import ManifestDataset
from .trackcore import VideoSample, normalize_tracks
from .train import fit
from .viz import draw_tracks

EXPERIMENTS = ("track_vs_notrack", "point_ablation", "kde", "single_image")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="YAML experiment config")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable)",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="trackrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("synth", help="generate a synthetic dataset", parents=[])
    _add_config_args(p)

    p = sub.add_parser("import-tracks", help="convert external tracker dumps")
    p.add_argument("--source", required=True, help=".npz file or directory of them")
    p.add_argument("--layout", required=True, help="JSON layout descriptor")
    p.add_argument("--out", required=True, help="output .trk file or directory")

    p = sub.add_parser("train", help="train one model variant")
    _add_config_args(p)
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--resume", action="store_true", help="continue from last.pt")

    p = sub.add_parser("experiment", help="run a standard experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    _add_config_args(p)
    p.add_argument("--checkpoint", default=None, help="trec checkpoint (point_ablation)")
    p.add_argument("--vanilla-checkpoint", default=None, help="skip vanilla training (kde)")
    p.add_argument("--filtered-checkpoint", default=None, help="skip filter training (kde)")

    p = sub.add_parser("filter-kde", help="apply the KDE filter to a track file")
    _add_config_args(p)
    p.add_argument("--tracks", required=True, help="input .trk file")
    p.add_argument("--out", required=True, help="output .trk file")

    p = sub.add_parser("visualize", help="render a track overlay image")
    _add_config_args(p)
    p.add_argument("--split", default="val")
    p.add_argument("--sample-id", required=True)
    p.add_argument("--out", required=True, help="output .png path")
    p.add_argument("--kde", action="store_true", help="color by KDE filter outcome")
    return parser


def _config_from(args: argparse.Namespace) -> ExperimentConfig:
    return load_experiment_config(args.config, list(args.overrides))


def _out_root(config: ExperimentConfig) -> Path:
    return Path(os.environ.get("TRACKREC_OUT_ROOT", config.out_root))


def _manifest_path(config: ExperimentConfig, split: str) -> Path:
    path = Path(config.data_root) / f"{split}.tsv"
    if not path.exists():
        raise DataError(
            f"{path} does not exist; generate the dataset first (trackrec synth)"
        )
    return path


def _datasets(
    config: ExperimentConfig, filter_classes: bool = False
) -> tuple[ManifestDataset, ManifestDataset]:
    root = Path(config.data_root)
    train_m = read_manifest(_manifest_path(config, "train"))
    val_m = read_manifest(_manifest_path(config, "val"))
    if filter_classes and config.forbidden_class_substrings:
        train_m, _ = filter_ambiguous_classes(train_m, config.forbidden_class_substrings)
        val_m, _ = filter_ambiguous_classes(val_m, config.forbidden_class_substrings)
    return ManifestDataset(train_m, root), ManifestDataset(val_m, root)


def _write_snapshot(config: ExperimentConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.yaml").write_text(dump_config(config))


def _cmd_synth(args: argparse.Namespace) -> int:
    config = _config_from(args)
    synth = config.synth
    if synth.class_set not in CLASS_SETS:
        raise UsageError(
            f"unknown class_set {synth.class_set!r}; pick from {sorted(CLASS_SETS)}"
        )
    manifests = build_synthetic_dataset(
        config.data_root,
        class_set=synth.class_set,
        train_samples=synth.train_samples,
        val_samples=synth.val_samples,
        test_samples=synth.test_samples,
        num_frames=synth.num_frames,
        image_size=synth.image_size,
        num_points=synth.num_points,
        seed=synth.seed,
        fps=synth.fps,
    )
    _write_snapshot(config, Path(config.data_root))
    for split, manifest in manifests.items():
        print(f"{split}: {len(manifest)} samples, {manifest.num_classes} classes")
    return 0


def _cmd_import_tracks(args: argparse.Namespace) -> int:
    source = Path(args.source)
    out = Path(args.out)
    if source.is_dir():
        files = sorted(source.glob("*.npz"))
        if not files:
            raise DataError(f"{source} holds no .npz files")
        out.mkdir(parents=True, exist_ok=True)
        for f in files:
            ts = import_external_tracks(f, args.layout)
            write_tracks(ts, out / (f.stem + ".trk"))
        print(f"imported {len(files)} track files into {out}")
    else:
        ts = import_external_tracks(source, args.layout)
        write_tracks(ts, out)
        print(f"imported {ts.num_points} tracks over {ts.num_frames} frames into {out}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = _config_from(args)
    train_ds, val_ds = _datasets(config)
    model_config = resolve_model_config(config, train_ds.num_classes, mode=args.mode)
    policy = resolve_policy(config, config.synth.image_size, config.synth.image_size)
    out_dir = _out_root(config) / f"train-{args.mode}"
    _write_snapshot(config, out_dir)
    result = fit(
        train_ds, val_ds, model_config, config.train, policy, out_dir,
        resume=args.resume,
    )
    print(f"best val top-1: {result.best_val_top1 * 100.0:.2f}%")
    print(f"best checkpoint: {result.best_checkpoint}")
    print(f"last checkpoint: {result.last_checkpoint}")
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = _config_from(args)
    name = args.name
    out_dir = _out_root(config) / name
    filter_classes = name == "single_image"
    train_ds, val_ds = _datasets(config, filter_classes=filter_classes)
    model_config = resolve_model_config(config, train_ds.num_classes)
    policy = resolve_policy(config, config.synth.image_size, config.synth.image_size)
    _write_snapshot(config, out_dir)

    if name == "track_vs_notrack":
        report = run_track_vs_notrack(
            train_ds, val_ds, model_config, config.train, policy, out_dir,
            eval_seed=config.eval_seed, eval_count=config.eval_point_count,
        )
    elif name == "point_ablation":
        if args.checkpoint is None:
            raise UsageError(
                "point_ablation needs --checkpoint with a trained trec model"
            )
        report = run_point_ablation(
            args.checkpoint, val_ds, config.point_counts, out_dir,
            eval_seed=config.eval_seed,
        )
    elif name == "kde":
        report = run_kde_experiment(
            train_ds, val_ds, model_config, config.train, policy, config.kde,
            out_dir, eval_seed=config.eval_seed, eval_count=config.eval_point_count,
            vanilla_checkpoint=args.vanilla_checkpoint,
            filtered_checkpoint=args.filtered_checkpoint,
        )
    else:
        report = run_single_image(
            train_ds, val_ds, model_config, config.train, policy, out_dir,
            eval_seed=config.eval_seed,
        )
    print(report_to_text(report), end="")
    print(f"report written to {out_dir / 'report.json'}")
    return 0


def _cmd_filter_kde(args: argparse.Namespace) -> int:
    config = _config_from(args)
    ts = read_tracks(args.tracks)
    if ts.num_points < 2:
        raise DataError(f"{args.tracks}: need at least two tracks to filter")
    if ts.num_frames < 2:
        raise DataError(f"{args.tracks}: need at least two frames to filter")
    keep = retained_indices(normalize_tracks(ts), config.kde)
    write_tracks(ts.select_points(keep), args.out)
    print(f"kept {keep.size}/{ts.num_points} tracks -> {args.out}")
    return 0


def _cmd_visualize(args: argparse.Namespace) -> int:
    config = _config_from(args)
    manifest = read_manifest(_manifest_path(config, args.split))
    root = Path(config.data_root)
    dataset = ManifestDataset(manifest, root, cache=False)
    index = next(
        (
            i
            for i, e in enumerate(manifest.entries)
            if e.sample_id == args.sample_id
        ),
        None,
    )
    if index is None:
        raise DataError(f"sample {args.sample_id!r} is not in split {args.split!r}")
    sample: VideoSample = dataset.load(index)
    path = draw_tracks(
        sample, args.out, kde=config.kde if args.kde else None
    )
    print(f"wrote {path}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "import-tracks": _cmd_import_tracks,
    "train": _cmd_train,
    "experiment": _cmd_experiment,
    "filter-kde": _cmd_filter_kde,
    "visualize": _cmd_visualize,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given; see trackrec --help")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TrackRecError as exc:  # pragma: no cover - catch-all for subclasses
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
