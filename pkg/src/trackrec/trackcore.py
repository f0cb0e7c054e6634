"""Core trajectory types and the operations that prepare tracks for a model.

Coordinate conventions, which the file format and the model both rely on:

* raw tracks live in pixel units with x in [0, W) and y in [0, H);
* normalized tracks live in [-1, 1] per axis via x' = 2x/(W-1) - 1
  (and the same map for y with H);
* the flattened per-point motion row interleaves coordinates frame by
  frame as (x_0, y_0, x_1, y_1, ...), so one point yields one row of
  length 2T and one model token.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientPointsError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PointTrack:
    """A single point followed across T frames.

    coords is (T, 2) float64 holding (x, y) per frame; visible is (T,)
    bool and marks frames where the point is inside the frame and not
    occluded.
    """

    coords: np.ndarray
    visible: np.ndarray

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=np.float64)
        visible = np.asarray(self.visible, dtype=bool)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError(f"coords must have shape (T, 2), got {coords.shape}")
        if coords.shape[0] < 1:
            raise ValueError("a track needs at least one frame")
        if visible.shape != (coords.shape[0],):
            raise ValueError("visible must hold one flag per frame")
        if not np.all(np.isfinite(coords)):
            raise ValueError("track coordinates must be finite")
        object.__setattr__(self, "coords", _frozen(coords))
        object.__setattr__(self, "visible", _frozen(visible))

    @property
    def num_frames(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class TrackSet:
    """P point tracks over a common frame grid plus image metadata.

    Stored as two arrays rather than a list of PointTrack so that an
    empty set (P == 0) still knows its frame count: coords is (P, T, 2)
    float64 and visible is (P, T) bool. Use ``tracks`` / ``from_tracks``
    to move between the array and per-point views.
    """

    coords: np.ndarray
    visible: np.ndarray
    width: int
    height: int
    fps: float = 30.0
    normalized: bool = False

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=np.float64)
        visible = np.asarray(self.visible, dtype=bool)
        if coords.ndim != 3 or coords.shape[2] != 2:
            raise ValueError(f"coords must have shape (P, T, 2), got {coords.shape}")
        if coords.shape[1] < 1:
            raise ValueError("a track set needs at least one frame")
        if visible.shape != coords.shape[:2]:
            raise ValueError("visible must have shape (P, T)")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if not np.all(np.isfinite(coords)):
            raise ValueError("track coordinates must be finite")
        if coords.size:
            if self.normalized:
                if np.any(np.abs(coords) > 1.0 + 1e-12):
                    raise ValueError("normalized coordinates must lie in [-1, 1]")
            else:
                x, y = coords[..., 0], coords[..., 1]
                if (
                    np.any(x < 0)
                    or np.any(x >= self.width)
                    or np.any(y < 0)
                    or np.any(y >= self.height)
                ):
                    raise ValueError(
                        "raw coordinates must lie in [0, W) x [0, H); "
                        "clamp before constructing the set"
                    )
        object.__setattr__(self, "coords", _frozen(coords))
        object.__setattr__(self, "visible", _frozen(visible))

    @classmethod
    def from_tracks(
        cls,
        tracks: Sequence[PointTrack] | Iterable[PointTrack],
        width: int,
        height: int,
        fps: float = 30.0,
        normalized: bool = False,
        num_frames: int | None = None,
    ) -> "TrackSet":
        tracks = tuple(tracks)
        if not tracks:
            if num_frames is None:
                raise ValueError("num_frames is required for an empty TrackSet")
            coords = np.zeros((0, num_frames, 2), dtype=np.float64)
            visible = np.zeros((0, num_frames), dtype=bool)
        else:
            t0 = tracks[0].num_frames
            if any(t.num_frames != t0 for t in tracks):
                raise ValueError("all tracks must span the same number of frames")
            coords = np.stack([t.coords for t in tracks])
            visible = np.stack([t.visible for t in tracks])
        return cls(coords, visible, width, height, fps=fps, normalized=normalized)

    @property
    def tracks(self) -> tuple[PointTrack, ...]:
        return tuple(
            PointTrack(self.coords[i], self.visible[i]) for i in range(self.num_points)
        )

    @property
    def num_points(self) -> int:
        return self.coords.shape[0]

    @property
    def num_frames(self) -> int:
        return self.coords.shape[1]

    def select_points(self, indices: np.ndarray) -> "TrackSet":
        indices = np.asarray(indices, dtype=np.int64)
        return TrackSet(
            self.coords[indices],
            self.visible[indices],
            self.width,
            self.height,
            fps=self.fps,
            normalized=self.normalized,
        )

    def select_frames(self, indices: Sequence[int] | np.ndarray) -> "TrackSet":
        indices = np.asarray(indices, dtype=np.int64)
        if indices.ndim != 1 or indices.size < 1:
            raise ValueError("frame indices must be a non-empty 1-d sequence")
        if np.any(indices < 0) or np.any(indices >= self.num_frames):
            raise ValueError("frame index out of range")
        return TrackSet(
            self.coords[:, indices],
            self.visible[:, indices],
            self.width,
            self.height,
            fps=self.fps,
            normalized=self.normalized,
        )


@dataclass(frozen=True)
class VideoSample:
    """Frames, the tracks that live on them, and a class label."""

    sample_id: str
    frames: np.ndarray  # (T, H, W, 3) uint8
    tracks: TrackSet
    label: int

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames)
        if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
            raise ValueError("frames must be (T, H, W, 3) uint8")
        if frames.shape[0] != self.tracks.num_frames:
            raise ValueError("frame count must match the track horizon")
        if not self.tracks.normalized and (
            frames.shape[1] != self.tracks.height or frames.shape[2] != self.tracks.width
        ):
            raise ValueError("frame size must match the track set's image size")
        if self.label < 0:
            raise ValueError("label must be non-negative")
        object.__setattr__(self, "frames", _frozen(frames))

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


def normalize_tracks(ts: TrackSet) -> TrackSet:
    """Map raw pixel tracks onto [-1, 1] per axis.

    Uses x' = 2x/(W-1) - 1 so that pixel 0 maps to -1 and pixel W-1 to
    +1 exactly. Requires W > 1 and H > 1; a 1-pixel axis has no extent
    to normalize over.
    """
    if ts.normalized:
        raise ValueError("track set is already normalized")
    if ts.width < 2 or ts.height < 2:
        raise ValueError("image dimensions must be at least 2 px to normalize")
    scale = np.array([ts.width - 1, ts.height - 1], dtype=np.float64)
    coords = 2.0 * ts.coords / scale - 1.0
    return TrackSet(
        coords, ts.visible, ts.width, ts.height, fps=ts.fps, normalized=True
    )


def denormalize_tracks(ts: TrackSet) -> TrackSet:
    """Inverse of :func:`normalize_tracks`; returns raw pixel tracks."""
    if not ts.normalized:
        raise ValueError("track set is not normalized")
    if ts.width < 2 or ts.height < 2:
        raise ValueError("image dimensions must be at least 2 px to denormalize")
    scale = np.array([ts.width - 1, ts.height - 1], dtype=np.float64)
    coords = (ts.coords + 1.0) * scale / 2.0
    # Round-off can push a coordinate a hair past the open upper bound.
    coords = np.clip(coords, 0.0, [ts.width - 1, ts.height - 1])
    return TrackSet(
        coords, ts.visible, ts.width, ts.height, fps=ts.fps, normalized=False
    )


def sample_points(ts: TrackSet, k: int, seed: int) -> TrackSet:
    """Draw k tracks without replacement, deterministically in (ts, k, seed).

    k == 0 yields an empty TrackSet with the same horizon and metadata;
    k > P raises InsufficientPointsError.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > ts.num_points:
        raise InsufficientPointsError(
            f"requested {k} points but the set holds {ts.num_points}"
        )
    rng = np.random.default_rng(seed)
    indices = rng.choice(ts.num_points, size=k, replace=False)
    return ts.select_points(indices)


def sample_points_with_replacement(ts: TrackSet, k: int, seed: int) -> TrackSet:
    """Draw k tracks with replacement; used to fill a batch when a
    filtered set holds fewer points than the batch's target count."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if ts.num_points == 0 and k > 0:
        raise InsufficientPointsError("cannot draw points from an empty set")
    rng = np.random.default_rng(seed)
    indices = rng.integers(0, ts.num_points, size=k)
    return ts.select_points(indices)


def randomized_point_count(
    min_pts: int, max_pts: int, seed: int, batch_index: int = 0
) -> int:
    """Per-mini-batch point count, uniform over [min_pts, max_pts].

    Deterministic in (seed, batch_index) so a training run can be
    replayed; min_pts == max_pts pins the count.
    """
    if min_pts <= 0 or min_pts > max_pts:
        raise ValueError("need 0 < min_pts <= max_pts")
    rng = np.random.default_rng(np.random.SeedSequence([seed, batch_index]))
    return int(rng.integers(min_pts, max_pts + 1))


def reshape_for_model(ts: TrackSet) -> np.ndarray:
    """Flatten a normalized TrackSet to a (P, 2T) motion matrix.

    Row p interleaves frames as (x_0, y_0, x_1, y_1, ...); the result is
    what :meth:`trackrec.model.TRecModel.project_tracks` consumes.
    """
    if not ts.normalized:
        raise ValueError("reshape_for_model expects normalized tracks")
    p, t = ts.num_points, ts.num_frames
    return ts.coords.reshape(p, t * 2).copy()


def motion_matrix_to_tracks(
    matrix: np.ndarray,
    width: int,
    height: int,
    fps: float = 30.0,
    visible: np.ndarray | None = None,
) -> TrackSet:
    """Inverse of :func:`reshape_for_model` (visibility defaults to all True)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] % 2 != 0 or matrix.shape[1] < 2:
        raise ValueError("motion matrix must be (P, 2T) with T >= 1")
    p, two_t = matrix.shape
    coords = matrix.reshape(p, two_t // 2, 2)
    if visible is None:
        visible = np.ones(coords.shape[:2], dtype=bool)
    return TrackSet(coords, visible, width, height, fps=fps, normalized=True)
