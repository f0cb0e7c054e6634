"""Density-based background rejection for point tracks.

Most tracked points sit on background and share (near-)identical motion,
so in a low-dimensional motion-feature space they pile into one dense
cluster while points on the moving subject stay sparse. Estimating the
feature density with a kernel density estimate and keeping only the
points below a density quantile therefore discards background and keeps
the subject.

The kernel is isotropic Gaussian,

    K_h(u) = (2 pi h^2)^(-d/2) * exp(-||u||^2 / (2 h^2)),

and the density at point i averages the kernel over all points,
including j = i. The cut keeps densities strictly below the requested
quantile; if nothing falls strictly below (all features identical), the
single lowest-density point survives, ties resolved toward the lowest
index, so the result is never empty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trackcore import TrackSet

FEATURE_MODES = ("displacement_and_step", "displacement")


@dataclass(frozen=True)
class KdeConfig:
    """Bandwidth, cut quantile, and feature choice for the filter.

    bandwidth is either a positive float or "scott" for Scott's rule
    h = sigma * P^(-1 / (d + 4)) with sigma the root mean per-dimension
    variance. feature_mode "displacement_and_step" uses total
    displacement plus mean absolute per-step motion (4-d);
    "displacement" uses the endpoint displacement alone (2-d).
    """

    bandwidth: float | str = "scott"
    quantile: float = 0.5
    feature_mode: str = "displacement_and_step"

    def __post_init__(self) -> None:
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "scott":
                raise ValueError(f"unknown bandwidth rule {self.bandwidth!r}")
        elif not self.bandwidth > 0.0:
            raise ValueError("numeric bandwidth must be positive")
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must lie strictly inside (0, 1)")
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(f"unknown feature_mode {self.feature_mode!r}")


@dataclass(frozen=True)
class MotionVector:
    """Motion summary of one track: where it went and how much it moved."""

    index: int
    displacement: np.ndarray  # (2,) last position minus first
    mean_step: np.ndarray  # (2,) mean |per-frame step| per axis

    def feature(self, mode: str = "displacement_and_step") -> np.ndarray:
        if mode == "displacement_and_step":
            return np.concatenate([self.displacement, self.mean_step])
        if mode == "displacement":
            return np.asarray(self.displacement, dtype=np.float64)
        raise ValueError(f"unknown feature_mode {mode!r}")


def motion_vectors(ts: TrackSet) -> list[MotionVector]:
    """Per-track motion summaries of a normalized track set, in order."""
    if not ts.normalized:
        raise ValueError("motion vectors are defined over normalized tracks")
    if ts.num_frames < 2:
        raise ValueError("need at least two frames to describe motion")
    disp = ts.coords[:, -1, :] - ts.coords[:, 0, :]
    steps = np.abs(np.diff(ts.coords, axis=1)).mean(axis=1)
    return [
        MotionVector(i, disp[i].copy(), steps[i].copy()) for i in range(ts.num_points)
    ]


def feature_matrix(vectors: list[MotionVector], mode: str) -> np.ndarray:
    if not vectors:
        raise ValueError("need at least one motion vector")
    return np.stack([v.feature(mode) for v in vectors])


def _bandwidth(features: np.ndarray, config: KdeConfig) -> float:
    if isinstance(config.bandwidth, str):
        p, d = features.shape
        sigma = float(np.sqrt(features.var(axis=0).mean()))
        if sigma == 0.0:
            # degenerate cloud: every density is equal for any h
            return 1.0
        return sigma * p ** (-1.0 / (d + 4))
    return float(config.bandwidth)


def kde_density(features: np.ndarray, config: KdeConfig) -> np.ndarray:
    """Gaussian KDE density at each feature point, self term included."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError("features must be a (P, d) matrix")
    p, d = features.shape
    if p < 2:
        raise ValueError("density needs at least two points")
    h = _bandwidth(features, config)
    diff = features[:, None, :] - features[None, :, :]
    sq = (diff**2).sum(axis=2)
    norm = (2.0 * np.pi * h * h) ** (d / 2.0)
    kernel = np.exp(-sq / (2.0 * h * h)) / norm
    return kernel.mean(axis=1)


def retained_indices(ts: TrackSet, config: KdeConfig) -> np.ndarray:
    """Indices of the tracks that survive the density cut, ascending."""
    vectors = motion_vectors(ts)
    features = feature_matrix(vectors, config.feature_mode)
    density = kde_density(features, config)
    threshold = np.quantile(density, config.quantile)
    keep = np.flatnonzero(density < threshold)
    if keep.size == 0:
        keep = np.array([int(np.argmin(density))])
    return keep


def filter_background(ts: TrackSet, config: KdeConfig) -> TrackSet:
    """Drop high-density (background-like) tracks from a normalized set.

    Returns the surviving tracks in their original order; never empty.
    """
    return ts.select_points(retained_indices(ts, config))
