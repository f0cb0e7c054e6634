"""Geometry-consistent augmentation for frames and tracks.

One sampled :class:`AugmentRecord` describes every random choice for a
sample, and the same record is applied to the frame stack and to the
track set, so a point that sat on an image feature still sits on it
after cropping, resizing, and flipping.

The geometric map is fixed by the record: a crop box (x0, y0, w, h)
resized to a square output S gives x' = (x - x0) * S / w (y alike), and
a horizontal flip then sends x' to (S - 1) - x'. Frames are warped with
exactly this pixel-index map, not with cv2.resize, whose half-pixel
convention would shift content relative to the tracks by up to half the
scale factor. Photometric steps (blur, brightness, contrast, saturation)
never touch coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .trackcore import TrackSet


@dataclass(frozen=True)
class AugmentPolicy:
    """Ranges the per-sample augmentation draws from."""

    source_height: int
    source_width: int
    output_size: int = 256
    crop_scale: tuple[float, float] = (0.7, 1.0)
    flip_prob: float = 0.5
    blur_sigma: tuple[float, float] = (0.0, 1.5)
    jitter: float = 0.2

    def __post_init__(self) -> None:
        if self.source_height < 1 or self.source_width < 1 or self.output_size < 1:
            raise ValueError("image sizes must be positive")
        lo, hi = self.crop_scale
        if not 0.0 < lo <= hi <= 1.0:
            raise ValueError("crop_scale must satisfy 0 < lo <= hi <= 1")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError("flip_prob must lie in [0, 1]")
        blo, bhi = self.blur_sigma
        if blo < 0.0 or blo > bhi:
            raise ValueError("blur_sigma must satisfy 0 <= lo <= hi")
        if not 0.0 <= self.jitter < 1.0:
            raise ValueError("jitter must lie in [0, 1)")


@dataclass(frozen=True)
class AugmentRecord:
    """Concrete augmentation choices for one sample."""

    crop_x: int
    crop_y: int
    crop_w: int
    crop_h: int
    flipped: bool
    blur_sigma: float
    brightness: float
    contrast: float
    saturation: float
    output_size: int

    def __post_init__(self) -> None:
        if self.crop_w < 1 or self.crop_h < 1 or self.output_size < 1:
            raise ValueError("crop and output sizes must be positive")
        if self.crop_x < 0 or self.crop_y < 0:
            raise ValueError("crop origin must be non-negative")
        if self.blur_sigma < 0.0:
            raise ValueError("blur_sigma must be non-negative")
        if min(self.brightness, self.contrast, self.saturation) <= 0.0:
            raise ValueError("photometric factors must be positive")


def identity_record(height: int, width: int) -> AugmentRecord:
    """A record that maps a square source onto itself unchanged."""
    if height != width:
        raise ValueError("identity_record needs a square source")
    return AugmentRecord(
        crop_x=0,
        crop_y=0,
        crop_w=width,
        crop_h=height,
        flipped=False,
        blur_sigma=0.0,
        brightness=1.0,
        contrast=1.0,
        saturation=1.0,
        output_size=width,
    )


def resize_record(height: int, width: int, output_size: int) -> AugmentRecord:
    """A record that only resizes the full source to a square output."""
    return AugmentRecord(
        crop_x=0,
        crop_y=0,
        crop_w=width,
        crop_h=height,
        flipped=False,
        blur_sigma=0.0,
        brightness=1.0,
        contrast=1.0,
        saturation=1.0,
        output_size=output_size,
    )


def sample_augmentation(seed: int, policy: AugmentPolicy) -> AugmentRecord:
    """Draw one record; deterministic in (seed, policy)."""
    rng = np.random.default_rng(seed)
    scale = rng.uniform(*policy.crop_scale)
    crop_w = max(1, round(scale * policy.source_width))
    crop_h = max(1, round(scale * policy.source_height))
    crop_x = int(rng.integers(0, policy.source_width - crop_w + 1))
    crop_y = int(rng.integers(0, policy.source_height - crop_h + 1))
    flipped = bool(rng.random() < policy.flip_prob)
    blur = float(rng.uniform(*policy.blur_sigma))
    j = policy.jitter
    brightness, contrast, saturation = rng.uniform(1.0 - j, 1.0 + j, size=3)
    return AugmentRecord(
        crop_x=crop_x,
        crop_y=crop_y,
        crop_w=crop_w,
        crop_h=crop_h,
        flipped=flipped,
        blur_sigma=blur,
        brightness=float(brightness),
        contrast=float(contrast),
        saturation=float(saturation),
        output_size=policy.output_size,
    )


def _check_crop(record: AugmentRecord, height: int, width: int) -> None:
    if record.crop_x + record.crop_w > width or record.crop_y + record.crop_h > height:
        raise ValueError(
            f"crop box ({record.crop_x}, {record.crop_y}, {record.crop_w}, "
            f"{record.crop_h}) exceeds a {width}x{height} source"
        )


def _is_geometric_identity(record: AugmentRecord, height: int, width: int) -> bool:
    return (
        record.crop_x == 0
        and record.crop_y == 0
        and record.crop_w == width
        and record.crop_h == height
        and record.output_size == width
        and width == height
    )


def apply_to_frames(frames: np.ndarray, record: AugmentRecord) -> np.ndarray:
    """Apply a record to a (T, H, W, 3) uint8 stack; returns (T, S, S, 3).

    A flip-only record is an exact involution: applying it twice gives
    back the original stack bit for bit, because the flip is a pure
    index reversal.
    """
    frames = np.asarray(frames)
    if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
        raise ValueError("frames must be (T, H, W, 3) uint8")
    t, h, w = frames.shape[:3]
    _check_crop(record, h, w)
    s = record.output_size
    if _is_geometric_identity(record, h, w):
        out = frames.copy()
    else:
        rx = s / record.crop_w
        ry = s / record.crop_h
        # pixel-index map x' = (x - x0) * rx, matching apply_to_tracks
        mat = np.array(
            [[rx, 0.0, -record.crop_x * rx], [0.0, ry, -record.crop_y * ry]]
        )
        out = np.empty((t, s, s, 3), dtype=np.uint8)
        for i in range(t):
            out[i] = cv2.warpAffine(
                frames[i],
                mat,
                (s, s),
                flags=cv2.INTER_LINEAR,
                borderMode=cv2.BORDER_REPLICATE,
            )
    if record.flipped:
        out = out[:, :, ::-1, :].copy()
    if record.blur_sigma > 0.0:
        for i in range(t):
            out[i] = cv2.GaussianBlur(out[i], (0, 0), record.blur_sigma)
    if (record.brightness, record.contrast, record.saturation) != (1.0, 1.0, 1.0):
        x = out.astype(np.float32) / 255.0
        x = x * record.brightness
        mean = x.mean(axis=(1, 2, 3), keepdims=True)
        x = (x - mean) * record.contrast + mean
        gray = x.mean(axis=3, keepdims=True)
        x = (x - gray) * record.saturation + gray
        out = np.clip(np.rint(x * 255.0), 0, 255).astype(np.uint8)
    return out


def apply_to_tracks(ts: TrackSet, record: AugmentRecord) -> TrackSet:
    """Apply a record's geometric part to a raw-pixel track set.

    Points that land outside the output square are clamped to its border
    and marked invisible; photometric fields are ignored.
    """
    if ts.normalized:
        raise ValueError("augmentation operates on raw pixel tracks")
    _check_crop(record, ts.height, ts.width)
    s = record.output_size
    rx = s / record.crop_w
    ry = s / record.crop_h
    x = (ts.coords[..., 0] - record.crop_x) * rx
    y = (ts.coords[..., 1] - record.crop_y) * ry
    if record.flipped:
        x = (s - 1) - x
    inside = (x >= 0.0) & (x <= s - 1) & (y >= 0.0) & (y <= s - 1)
    coords = np.stack([np.clip(x, 0.0, s - 1), np.clip(y, 0.0, s - 1)], axis=-1)
    visible = ts.visible & inside
    return TrackSet(coords, visible, s, s, fps=ts.fps, normalized=False)
