"""trackrec: action recognition from 2D point tracks fused with
per-frame image features in one transformer."""

from .trackcore import (
    PointTrack,
    TrackSet,
    VideoSample,
    denormalize_tracks,
    motion_matrix_to_tracks,
    normalize_tracks,
    randomized_point_count,
    reshape_for_model,
    sample_points,
)
from .kdefilter import KdeConfig, filter_background, kde_density, motion_vectors
from .model import ModelConfig, TRecModel, load_checkpoint, save_checkpoint
from .train import TrainConfig, fit
from .evalbench import EvalReport, VariantRow, topk_accuracy

__version__ = "0.1.0"

__all__ = [
    "PointTrack",
    "TrackSet",
    "VideoSample",
    "normalize_tracks",
    "denormalize_tracks",
    "sample_points",
    "randomized_point_count",
    "reshape_for_model",
    "motion_matrix_to_tracks",
    "KdeConfig",
    "motion_vectors",
    "kde_density",
    "filter_background",
    "ModelConfig",
    "TRecModel",
    "save_checkpoint",
    "load_checkpoint",
    "TrainConfig",
    "fit",
    "EvalReport",
    "VariantRow",
    "topk_accuracy",
    "__version__",
]
