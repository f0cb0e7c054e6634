"""Dataset IO: track files, frame stacks, manifests, external imports,
and the synthetic scene generator."""

from .trackfile import read_tracks, write_tracks
from .frames import load_frames, sample_frames, save_frames, take_frames
from .manifest import (
    DatasetManifest,
    ManifestEntry,
    filter_ambiguous_classes,
    read_manifest,
    write_manifest,
)
from .external import import_external_tracks
from .synthetic import (
    CONTEXT_CLASSES,
    MOTION_CLASSES,
    SyntheticSceneSpec,
    build_synthetic_dataset,
    generate_sample,
    nearest_centroid_accuracy,
    track_motion_summary,
)

__all__ = [
    "read_tracks",
    "write_tracks",
    "load_frames",
    "sample_frames",
    "save_frames",
    "take_frames",
    "DatasetManifest",
    "ManifestEntry",
    "filter_ambiguous_classes",
    "read_manifest",
    "write_manifest",
    "import_external_tracks",
    "CONTEXT_CLASSES",
    "MOTION_CLASSES",
    "SyntheticSceneSpec",
    "build_synthetic_dataset",
    "generate_sample",
    "nearest_centroid_accuracy",
    "track_motion_summary",
]
