#!/usr/bin/env python3
"""Measure what KDE background filtering does to accuracy on the
context pack: plain model, the same checkpoint with filtering bolted on
at inference, and a model trained on filtered points."""

from pathlib import Path

from common import config_from_args, load_datasets
from trackrec.config import resolve_model_config, resolve_policy
from trackrec.evalbench import report_to_text, run_kde_experiment


def add_args(parser) -> None:
    parser.add_argument("--vanilla-checkpoint", default=None,
                        help="skip training the plain model")
    parser.add_argument("--filtered-checkpoint", default=None,
                        help="skip training the filter-trained model")


def main() -> None:
    args, config = config_from_args(__doc__, add_args)
    train_ds, val_ds = load_datasets(config)
    model_config = resolve_model_config(config, train_ds.num_classes)
    policy = resolve_policy(config, config.synth.image_size, config.synth.image_size)
    out_dir = Path(config.out_root) / "kde"
    report = run_kde_experiment(
        train_ds, val_ds, model_config, config.train, policy, config.kde,
        out_dir, eval_seed=config.eval_seed, eval_count=config.eval_point_count,
        vanilla_checkpoint=args.vanilla_checkpoint,
        filtered_checkpoint=args.filtered_checkpoint,
    )
    print(report_to_text(report), end="")
    print(f"report written to {out_dir / 'report.json'}")


if __name__ == "__main__":
    main()
