#!/usr/bin/env python3
"""Frame-0-only probes: train and evaluate the single-image variants,
with full-length tracks versus the image alone."""

from pathlib import Path

from common import config_from_args, load_datasets
from trackrec.config import resolve_model_config, resolve_policy
from trackrec.data.manifest import filter_ambiguous_classes
from trackrec.evalbench import report_to_text, run_single_image
from trackrec.pipeline import ManifestDataset


def main() -> None:
    _, config = config_from_args(__doc__)
    train_ds, val_ds = load_datasets(config)
    if config.forbidden_class_substrings:
        root = Path(config.data_root)
        train_m, _ = filter_ambiguous_classes(
            train_ds.manifest, config.forbidden_class_substrings
        )
        val_m, _ = filter_ambiguous_classes(
            val_ds.manifest, config.forbidden_class_substrings
        )
        train_ds, val_ds = ManifestDataset(train_m, root), ManifestDataset(val_m, root)
    model_config = resolve_model_config(config, train_ds.num_classes)
    policy = resolve_policy(config, config.synth.image_size, config.synth.image_size)
    out_dir = Path(config.out_root) / "single_image"
    report = run_single_image(
        train_ds, val_ds, model_config, config.train, policy, out_dir,
        eval_seed=config.eval_seed,
    )
    print(report_to_text(report), end="")
    print(f"report written to {out_dir / 'report.json'}")


if __name__ == "__main__":
    main()
