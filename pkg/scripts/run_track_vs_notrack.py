#!/usr/bin/env python3
"""Train the track-fusion model and its no-track twin on the same data,
evaluate both, and print the comparison table."""

from pathlib import Path

from common import config_from_args, load_datasets
from trackrec.config import resolve_model_config, resolve_policy
from trackrec.evalbench import report_to_text, run_track_vs_notrack


def main() -> None:
    _, config = config_from_args(__doc__)
    train_ds, val_ds = load_datasets(config)
    model_config = resolve_model_config(config, train_ds.num_classes)
    policy = resolve_policy(config, config.synth.image_size, config.synth.image_size)
    out_dir = Path(config.out_root) / "track_vs_notrack"
    report = run_track_vs_notrack(
        train_ds, val_ds, model_config, config.train, policy, out_dir,
        eval_seed=config.eval_seed, eval_count=config.eval_point_count,
    )
    print(report_to_text(report), end="")
    print(f"report written to {out_dir / 'report.json'}")


if __name__ == "__main__":
    main()
