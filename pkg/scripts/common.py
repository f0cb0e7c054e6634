"""Shared plumbing for the experiment scripts: config flags and
generate-if-missing dataset loading."""

from __future__ import annotations

import argparse
from pathlib import Path

from trackrec.config import ExperimentConfig, load_experiment_config
from trackrec.data.manifest import read_manifest
from trackrec.data.synthetic import build_synthetic_dataset
from trackrec.pipeline import ManifestDataset


def config_from_args(description: str, extra=None) -> tuple[argparse.Namespace, ExperimentConfig]:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--config", default="configs/desk_8class.yaml",
                        help="YAML experiment config")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="override a config value (repeatable)")
    if extra is not None:
        extra(parser)
    args = parser.parse_args()
    return args, load_experiment_config(args.config, args.overrides)


def load_datasets(config: ExperimentConfig) -> tuple[ManifestDataset, ManifestDataset]:
    """Load train/val datasets, generating them first when absent."""
    root = Path(config.data_root)
    if not (root / "train.tsv").exists():
        synth = config.synth
        print(f"generating {synth.class_set} dataset under {root} ...", flush=True)
        build_synthetic_dataset(
            root,
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
    train = ManifestDataset(read_manifest(root / "train.tsv"), root)
    val = ManifestDataset(read_manifest(root / "val.tsv"), root)
    return train, val
