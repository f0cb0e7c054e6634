"""Batch assembly shared by training and evaluation.

All randomness here is stateless: every draw derives a fresh generator
from integer seed parts (base seed, stream tag, epoch, sample index), so
any batch can be re-created from scratch given the run seed. That is
what makes training runs replayable and resumable bit for bit.

Evaluation deliberately runs one sample at a time. Filtered track sets
have ragged point counts, and a batch size of one sidesteps padding
while keeping per-sample logits exact; the point-selection seed depends
only on (eval seed, sample index, count), never on the model variant, so
every variant sees identical point subsets.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import augment as aug
from .data.frames import load_frames, sample_frames
from .data.manifest import DatasetManifest
from .data.trackfile import read_tracks
from .errors import EmptyDatasetError
from .kdefilter import KdeConfig, retained_indices
from .model import ModelConfig, SINGLE_IMAGE_MODES, TRACK_MODES, frames_to_tensor
from .trackcore import (
    TrackSet,
    VideoSample,
    normalize_tracks,
    reshape_for_model,
    sample_points,
)

# stream tags keeping the stateless seed derivations disjoint
STREAM_ORDER = 1
STREAM_AUGMENT = 2
STREAM_POINTS = 3
STREAM_COUNT = 4
STREAM_FRAMES = 5


def derive_seed(*parts: int) -> int:
    """Collapse integer seed parts into one independent integer seed."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def topk_correct(logits: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Boolean per-sample top-k hits with a deterministic tie rule.

    Classes are ranked by descending logit with ties broken toward the
    lower class index (stable sort), so equal logits never make the
    metric depend on array layout.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ValueError("logits must be (N, C) and labels (N,)")
    if not 1 <= k <= logits.shape[1]:
        raise ValueError(f"k must lie in [1, {logits.shape[1]}]")
    order = np.argsort(-logits, axis=1, kind="stable")
    return (order[:, :k] == labels[:, None]).any(axis=1)


class ManifestDataset:
    """Loads the (frames, tracks) pairs a manifest points at.

    Paths in the manifest are relative to ``root``. With ``cache=True``
    decoded samples stay in memory, which a desk-scale dataset easily
    affords and repeated epochs amortize.
    """

    def __init__(self, manifest: DatasetManifest, root: str | Path, cache: bool = True):
        if len(manifest) == 0:
            raise EmptyDatasetError(f"manifest for split {manifest.split!r} is empty")
        self.manifest = manifest
        self.root = Path(root)
        self._cache: dict[int, VideoSample] | None = {} if cache else None

    def __len__(self) -> int:
        return len(self.manifest)

    @property
    def num_classes(self) -> int:
        return self.manifest.num_classes

    def load(self, index: int) -> VideoSample:
        if self._cache is not None and index in self._cache:
            return self._cache[index]
        entry = self.manifest.entries[index]
        frames = load_frames(self.root / entry.video_path)
        tracks = read_tracks(self.root / entry.track_path)
        sample = VideoSample(entry.sample_id, frames, tracks, entry.label)
        if self._cache is not None:
            self._cache[index] = sample
        return sample


@dataclass
class Batch:
    frames: torch.Tensor  # (B, T', 3, S, S)
    motion: torch.Tensor | None  # (B, k, 2T) or None when no point tokens
    labels: torch.Tensor  # (B,) int64
    sample_ids: tuple[str, ...]


def _horizon_indices(
    total: int, horizon: int, train: bool, seed_parts: tuple[int, ...]
) -> np.ndarray:
    if total == horizon:
        return np.arange(total)
    mode = "random-offset" if train else "uniform"
    return sample_frames(total, horizon, seed=derive_seed(*seed_parts), mode=mode)


def _eval_record(height: int, width: int, image_size: int) -> aug.AugmentRecord:
    if height == width == image_size:
        return aug.identity_record(height, width)
    return aug.resize_record(height, width, image_size)


def _to_motion_tensor(tracks: TrackSet) -> torch.Tensor:
    rows = reshape_for_model(normalize_tracks(tracks))
    return torch.from_numpy(rows.astype(np.float32))


class FilterCache:
    """Per-sample KDE retention indices, computed once on the stored tracks."""

    def __init__(self, config: KdeConfig):
        self.config = config
        self._cache: dict[str, np.ndarray] = {}

    def retained(self, sample: VideoSample) -> np.ndarray:
        hit = self._cache.get(sample.sample_id)
        if hit is None:
            hit = retained_indices(normalize_tracks(sample.tracks), self.config)
            self._cache[sample.sample_id] = hit
        return hit


def assemble_train_batch(
    dataset: ManifestDataset,
    indices: np.ndarray,
    mode: str,
    model_config: ModelConfig,
    policy: aug.AugmentPolicy,
    seed: int,
    epoch: int,
    target_points: int,
    filter_cache: FilterCache | None = None,
) -> Batch:
    """Build one augmented training batch.

    For track modes every sample in the batch contributes the same
    number of points: the randomized target, capped by the smallest
    point count available in the batch (relevant when a KDE filter has
    thinned some samples). Single-image modes keep all stored points and
    use only frame 0.
    """
    frames_list: list[torch.Tensor] = []
    tracks_list: list[TrackSet] = []
    labels: list[int] = []
    ids: list[str] = []
    single = mode in SINGLE_IMAGE_MODES
    for index in indices:
        index = int(index)
        sample = dataset.load(index)
        horizon = _horizon_indices(
            sample.num_frames,
            model_config.num_frames,
            train=True,
            seed_parts=(seed, STREAM_FRAMES, epoch, index),
        )
        frames = sample.frames[horizon]
        tracks = sample.tracks.select_frames(horizon)
        if filter_cache is not None and mode in TRACK_MODES:
            tracks = tracks.select_points(filter_cache.retained(sample))
        record = aug.sample_augmentation(
            derive_seed(seed, STREAM_AUGMENT, epoch, index), policy
        )
        if single:
            frames = frames[:1]
        frames_list.append(frames_to_tensor(aug.apply_to_frames(frames, record)))
        if mode in TRACK_MODES:
            tracks_list.append(aug.apply_to_tracks(tracks, record))
        labels.append(sample.label)
        ids.append(sample.sample_id)

    motion = None
    if mode == "trec":
        k = min(target_points, min(ts.num_points for ts in tracks_list))
        rows = [
            _to_motion_tensor(
                sample_points(ts, k, derive_seed(seed, STREAM_POINTS, epoch, int(i)))
            )
            for ts, i in zip(tracks_list, indices)
        ]
        motion = torch.stack(rows)
    elif mode == "single_image_trec":
        counts = {ts.num_points for ts in tracks_list}
        if len(counts) > 1:
            # stored sets are normally same-sized; cap at the smallest
            k = min(counts)
            tracks_list = [
                sample_points(ts, k, derive_seed(seed, STREAM_POINTS, epoch, int(i)))
                for ts, i in zip(tracks_list, indices)
            ]
        motion = torch.stack([_to_motion_tensor(ts) for ts in tracks_list])

    return Batch(
        frames=torch.stack(frames_list),
        motion=motion,
        labels=torch.tensor(labels, dtype=torch.int64),
        sample_ids=tuple(ids),
    )


@dataclass(frozen=True)
class EvalSpec:
    """How to prepare points at evaluation time.

    point_count None feeds every available point; 0 feeds none (tracks
    absent). With a KDE config, stage "after_subsample" subsamples to
    point_count first and filters what remains (filtering as an
    inference-time shim on a vanilla model), while "before_subsample"
    filters the full stored set first (matching how a filter-trained
    model saw its data) and subsamples afterwards if a count is set.
    """

    seed: int = 0
    point_count: int | None = None
    kde: KdeConfig | None = None
    kde_stage: str = "after_subsample"

    def __post_init__(self) -> None:
        if self.point_count is not None and self.point_count < 0:
            raise ValueError("point_count must be non-negative")
        if self.kde_stage not in ("after_subsample", "before_subsample"):
            raise ValueError(f"unknown kde_stage {self.kde_stage!r}")


@dataclass(frozen=True)
class EvalRecord:
    sample_id: str
    label: int
    logits: np.ndarray  # (C,) float32


def _eval_points(
    tracks: TrackSet, index: int, spec: EvalSpec
) -> TrackSet | None:
    count = spec.point_count

    def subsample(ts: TrackSet, k: int) -> TrackSet:
        seed = derive_seed(spec.seed, STREAM_POINTS, index, k)
        return sample_points(ts, min(k, ts.num_points), seed)

    if count == 0:
        return None
    if spec.kde is None:
        return tracks if count is None else subsample(tracks, count)
    norm = normalize_tracks(tracks)
    if spec.kde_stage == "after_subsample":
        if count is not None:
            tracks = subsample(tracks, count)
            norm = normalize_tracks(tracks)
        keep = retained_indices(norm, spec.kde)
        return tracks.select_points(keep)
    keep = retained_indices(norm, spec.kde)
    filtered = tracks.select_points(keep)
    return filtered if count is None else subsample(filtered, count)


def evaluate_records(
    model: torch.nn.Module,
    dataset: ManifestDataset,
    spec: EvalSpec,
    indices: np.ndarray | None = None,
) -> list[EvalRecord]:
    """Forward every sample once (batch of one) and collect logits."""
    config: ModelConfig = model.config
    single = config.mode in SINGLE_IMAGE_MODES
    use_tracks = config.mode in TRACK_MODES
    if indices is None:
        indices = np.arange(len(dataset))
    records: list[EvalRecord] = []
    was_training = model.training
    model.eval()
    with torch.no_grad():
        for index in indices:
            index = int(index)
            sample = dataset.load(index)
            horizon = _horizon_indices(
                sample.num_frames,
                config.num_frames,
                train=False,
                seed_parts=(spec.seed, STREAM_FRAMES, 0, index),
            )
            frames = sample.frames[horizon]
            tracks = sample.tracks.select_frames(horizon)
            record = _eval_record(frames.shape[1], frames.shape[2], config.image_size)
            if single:
                frames = frames[:1]
            frames_t = frames_to_tensor(aug.apply_to_frames(frames, record))
            motion = None
            if use_tracks:
                chosen = _eval_points(aug.apply_to_tracks(tracks, record), index, spec)
                if chosen is not None:
                    motion = _to_motion_tensor(chosen).unsqueeze(0)
            logits = model(frames_t.unsqueeze(0), motion)
            records.append(
                EvalRecord(
                    sample.sample_id,
                    sample.label,
                    logits[0].detach().cpu().numpy().astype(np.float32),
                )
            )
    if was_training:
        model.train()
    return records
