#!/usr/bin/env python3
"""Evaluate a trained track-fusion checkpoint at descending point
budgets and plot the accuracy curve. Defaults to the checkpoint the
track-vs-notrack script leaves behind."""

from pathlib import Path

from common import config_from_args, load_datasets
from trackrec.errors import UsageError
from trackrec.evalbench import report_to_text, run_point_ablation


def add_args(parser) -> None:
    parser.add_argument("--checkpoint", default=None,
                        help="trained trec checkpoint (.pt)")


def main() -> None:
    args, config = config_from_args(__doc__, add_args)
    checkpoint = args.checkpoint
    if checkpoint is None:
        checkpoint = Path(config.out_root) / "track_vs_notrack" / "trec" / "best.pt"
        if not checkpoint.exists():
            raise UsageError(
                f"{checkpoint} not found; run run_track_vs_notrack.py first "
                "or pass --checkpoint"
            )
    _, val_ds = load_datasets(config)
    out_dir = Path(config.out_root) / "point_ablation"
    report = run_point_ablation(
        checkpoint, val_ds, config.point_counts, out_dir, eval_seed=config.eval_seed
    )
    print(report_to_text(report), end="")
    print(f"report and plot written under {out_dir}")


if __name__ == "__main__":
    main()
