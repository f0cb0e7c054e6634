"""Frame stack IO and temporal subsampling."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import cv2
import numpy as np

from ..errors import DataError
from ..trackcore import VideoSample

_IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp")


def sample_frames(
    total_frames: int, horizon: int, seed: int = 0, mode: str = "uniform"
) -> np.ndarray:
    """Pick ``horizon`` frame indices out of ``total_frames``.

    "uniform" takes the deterministic grid floor(i * total / horizon),
    e.g. 16 frames at horizon 8 give [0, 2, 4, 6, 8, 10, 12, 14].
    "random-offset" jitters each pick inside its stratum, seeded, which
    keeps the result sorted and of exact length. Repeats appear only
    when horizon > total_frames.
    """
    if total_frames < 1:
        raise ValueError("total_frames must be positive")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if mode == "uniform":
        idx = (np.arange(horizon) * total_frames) // horizon
    elif mode == "random-offset":
        rng = np.random.default_rng(seed)
        offsets = rng.random(horizon)
        idx = ((np.arange(horizon) + offsets) * total_frames / horizon).astype(np.int64)
        idx = np.minimum(idx, total_frames - 1)
    else:
        raise ValueError(f"unknown frame sampling mode {mode!r}")
    return idx.astype(np.int64)


def save_frames(frames: np.ndarray, path: str | Path) -> Path:
    """Store a (T, H, W, 3) uint8 stack as a single .npy file."""
    frames = np.asarray(frames)
    if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
        raise ValueError("frames must be (T, H, W, 3) uint8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, frames)
    return path if path.suffix == ".npy" else path.with_suffix(path.suffix + ".npy")


def load_frames(path: str | Path) -> np.ndarray:
    """Load frames from an .npy stack or a directory of numbered images."""
    path = Path(path)
    if path.is_dir():
        files = sorted(
            p for p in path.iterdir() if p.suffix.lower() in _IMAGE_EXTS
        )
        if not files:
            raise DataError(f"{path}: no image files found")
        frames = []
        for f in files:
            img = cv2.imread(str(f), cv2.IMREAD_COLOR)
            if img is None:
                raise DataError(f"{f}: unreadable image")
            frames.append(cv2.cvtColor(img, cv2.COLOR_BGR2RGB))
        stack = np.stack(frames)
    else:
        try:
            stack = np.load(path)
        except (OSError, ValueError) as exc:
            raise DataError(f"{path}: cannot load frame stack: {exc}") from exc
    if stack.ndim != 4 or stack.shape[3] != 3 or stack.dtype != np.uint8:
        raise DataError(f"{path}: frame stack must be (T, H, W, 3) uint8")
    return stack


def take_frames(sample: VideoSample, indices: Sequence[int] | np.ndarray) -> VideoSample:
    """Restrict a sample to the given frame indices, tracks included."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.ndim != 1 or indices.size < 1:
        raise ValueError("indices must be a non-empty 1-d sequence")
    if np.any(indices < 0) or np.any(indices >= sample.num_frames):
        raise ValueError("frame index out of range")
    return VideoSample(
        sample.sample_id,
        sample.frames[indices],
        sample.tracks.select_frames(indices),
        sample.label,
    )
