"""Transformer fusion of per-frame image features and point-track tokens.

Token layout for one sample:

    [class token; frame tokens 0..T'-1; point tokens 0..P-1]

Frame tokens are CNN features with a learned temporal position embedding
and a learned "frame" kind embedding. Point tokens are linear-GELU-linear
projections of the flattened (x_0, y_0, ..., x_{T-1}, y_{T-1}) motion
rows with a "point" kind embedding and, deliberately, no positional
embedding: points carry no order, which makes the logits invariant to
point permutation up to floating-point reduction order.

Four operating modes share this one architecture. "trec" sees all frames
plus point tokens, "baseline" all frames and no points, and the
"single_image_*" pair sees only frame 0 (with and without the full-length
point tokens). A trec forward with zero points is bit-identical to a
baseline forward with the same weights.
"""

from __future__ import annotations

import math
import pickle
import zipfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np
import torch
from torch import nn

from .errors import DataError

MODES = ("trec", "baseline", "single_image_trec", "single_image_baseline")
SINGLE_IMAGE_MODES = ("single_image_trec", "single_image_baseline")
TRACK_MODES = ("trec", "single_image_trec")

KIND_CLASS, KIND_FRAME, KIND_POINT = 0, 1, 2
KIND_NAMES = ("class", "frame", "point")

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    num_classes: int
    d_model: int = 512
    num_layers: int = 6
    num_heads: int = 4
    ffn_dim: int = 2048
    dropout: float = 0.0
    num_frames: int = 8  # track horizon T; also the number of video frame tokens
    image_size: int = 256
    encoder: str = "small"  # "small" or "resnet18"
    encoder_dim: int = 256
    pretrained: bool = False
    mode: str = "trec"
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ValueError("need at least two classes")
        if self.d_model < 1 or self.d_model % self.num_heads != 0:
            raise ValueError("d_model must be a positive multiple of num_heads")
        if self.num_layers < 1:
            raise ValueError("need at least one transformer layer")
        if self.ffn_dim < 1:
            raise ValueError("ffn_dim must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.num_frames < 1:
            raise ValueError("num_frames must be positive")
        if self.image_size < 8:
            raise ValueError("image_size must be at least 8")
        if self.encoder not in ("small", "resnet18"):
            raise ValueError(f"unknown encoder {self.encoder!r}")
        if self.encoder == "small" and (self.encoder_dim % 8 != 0 or self.encoder_dim < 8):
            raise ValueError("the small encoder needs encoder_dim to be a multiple of 8")
        if self.encoder == "small" and self.pretrained:
            raise ValueError(
                "the small encoder has no pretrained weights; use encoder='resnet18'"
            )
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; pick from {MODES}")
        if self.max_tokens < 1 + self.num_frames:
            raise ValueError("max_tokens cannot even hold the class and frame tokens")


@dataclass(frozen=True)
class TokenSequence:
    """Fused token tensor plus the kind of every position.

    tokens is (B, N, d_model); kinds is (N,) over {class, frame, point}
    with exactly one class token, at position 0.
    """

    tokens: torch.Tensor
    kinds: np.ndarray

    def __post_init__(self) -> None:
        if self.tokens.ndim != 3:
            raise ValueError("tokens must be (B, N, d_model)")
        kinds = np.asarray(self.kinds, dtype=np.int8)
        if kinds.shape != (self.tokens.shape[1],):
            raise ValueError("kinds must label every token position")
        if not (kinds[0] == KIND_CLASS and np.all(kinds[1:] != KIND_CLASS)):
            raise ValueError("exactly one class token is allowed, at position 0")
        object.__setattr__(self, "kinds", kinds)

    @property
    def num_tokens(self) -> int:
        return self.tokens.shape[1]


class _ResBlock(nn.Module):
    def __init__(self, channels: int) -> None:
        super().__init__()
        groups = math.gcd(8, channels)
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1, bias=False)
        self.norm1 = nn.GroupNorm(groups, channels)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1, bias=False)
        self.norm2 = nn.GroupNorm(groups, channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = torch.relu(self.norm1(self.conv1(x)))
        y = self.norm2(self.conv2(y))
        return torch.relu(x + y)


class SmallEncoder(nn.Module):
    """Four-stage residual CNN with GroupNorm, so a forward pass depends
    only on the input and the weights (no batch statistics)."""

    def __init__(self, out_dim: int) -> None:
        super().__init__()
        c = out_dim // 8
        widths = [c, c * 2, c * 4, c * 8]
        layers: list[nn.Module] = [
            nn.Conv2d(3, widths[0], 3, padding=1, bias=False),
            nn.GroupNorm(math.gcd(8, widths[0]), widths[0]),
            nn.ReLU(),
        ]
        prev = widths[0]
        for width in widths:
            layers += [
                nn.Conv2d(prev, width, 3, stride=2, padding=1, bias=False),
                nn.GroupNorm(math.gcd(8, width), width),
                nn.ReLU(),
                _ResBlock(width),
            ]
            prev = width
        self.body = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.pool(self.body(x)).flatten(1)


def _make_encoder(config: ModelConfig) -> tuple[nn.Module, int]:
    if config.encoder == "small":
        return SmallEncoder(config.encoder_dim), config.encoder_dim
    try:
        from torchvision.models import resnet18
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise ImportError("encoder='resnet18' requires torchvision") from exc
    net = resnet18(weights="DEFAULT" if config.pretrained else None)
    net.fc = nn.Identity()
    return net, 512


class TRecModel(nn.Module):
    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config
        d = config.d_model
        self.encoder, enc_dim = _make_encoder(config)
        self.frame_proj = nn.Linear(enc_dim, d)
        self.temporal_pos = nn.Embedding(config.num_frames, d)
        self.track_proj = nn.Sequential(
            nn.Linear(2 * config.num_frames, d), nn.GELU(), nn.Linear(d, d)
        )
        self.class_token = nn.Parameter(torch.empty(d))
        self.kind_frame = nn.Parameter(torch.empty(d))
        self.kind_point = nn.Parameter(torch.empty(d))
        for p in (self.class_token, self.kind_frame, self.kind_point):
            nn.init.normal_(p, std=0.02)
        layer = nn.TransformerEncoderLayer(
            d_model=d,
            nhead=config.num_heads,
            dim_feedforward=config.ffn_dim,
            dropout=config.dropout,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.transformer = nn.TransformerEncoder(
            layer, config.num_layers, norm=nn.LayerNorm(d), enable_nested_tensor=False
        )
        self.pool_attn = nn.MultiheadAttention(
            d, config.num_heads, dropout=config.dropout, batch_first=True
        )
        self.head = nn.Sequential(nn.Linear(d, d), nn.GELU(), nn.Linear(d, config.num_classes))

    def encode_frames(self, frames: torch.Tensor) -> torch.Tensor:
        """(B, T', 3, S, S) images -> (B, T', d_model) frame tokens."""
        if frames.ndim != 5 or frames.shape[2] != 3:
            raise ValueError("frames must be (B, T', 3, H, W)")
        b, t = frames.shape[:2]
        if t < 1 or t > self.config.num_frames:
            raise ValueError(
                f"got {t} frames; this model takes 1..{self.config.num_frames}"
            )
        s = self.config.image_size
        if frames.shape[3] != s or frames.shape[4] != s:
            raise ValueError(f"frames must be {s}x{s}, got {tuple(frames.shape[3:])}")
        feats = self.encoder(frames.reshape(b * t, 3, s, s))
        tokens = self.frame_proj(feats).reshape(b, t, -1)
        pos = self.temporal_pos(torch.arange(t, device=tokens.device))
        return tokens + pos + self.kind_frame

    def project_tracks(self, motion: torch.Tensor) -> torch.Tensor:
        """(B, P, 2T) motion rows -> (B, P, d_model) point tokens; P may be 0."""
        if motion.ndim != 3:
            raise ValueError("motion must be (B, P, 2T)")
        want = 2 * self.config.num_frames
        if motion.shape[2] != want:
            raise ValueError(
                f"motion rows must have width {want} (2 coordinates x horizon), "
                f"got {motion.shape[2]}"
            )
        return self.track_proj(motion) + self.kind_point

    def fuse(
        self,
        frame_tokens: torch.Tensor,
        point_tokens: torch.Tensor,
        attn_mask: torch.Tensor | None = None,
    ) -> TokenSequence:
        """Run [class; frames; points] through the transformer encoder.

        attn_mask, if given, is an (N, N) bool tensor with True meaning
        "may not attend"; it exists so tests can probe that attention
        actually mixes tokens.
        """
        if frame_tokens.shape[0] != point_tokens.shape[0]:
            raise ValueError("frame and point tokens disagree on batch size")
        b = frame_tokens.shape[0]
        n = 1 + frame_tokens.shape[1] + point_tokens.shape[1]
        if n > self.config.max_tokens:
            raise ValueError(
                f"{n} tokens exceed the configured capacity {self.config.max_tokens}"
            )
        cls = self.class_token.view(1, 1, -1).expand(b, 1, -1)
        tokens = torch.cat([cls, frame_tokens, point_tokens], dim=1)
        out = self.transformer(tokens, mask=attn_mask)
        kinds = np.concatenate(
            [
                [KIND_CLASS],
                np.full(frame_tokens.shape[1], KIND_FRAME),
                np.full(point_tokens.shape[1], KIND_POINT),
            ]
        ).astype(np.int8)
        return TokenSequence(out, kinds)

    def pool(self, seq: TokenSequence) -> torch.Tensor:
        """Attention pooling: the fused class token queries all tokens."""
        query = seq.tokens[:, :1]
        pooled, _ = self.pool_attn(query, seq.tokens, seq.tokens, need_weights=False)
        return pooled[:, 0]

    def classify(self, pooled: torch.Tensor) -> torch.Tensor:
        return self.head(pooled)

    def forward(
        self,
        frames: torch.Tensor,
        motion: torch.Tensor | None = None,
        attn_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Mode-checked forward pass; returns (B, num_classes) logits."""
        mode = self.config.mode
        if mode in SINGLE_IMAGE_MODES and frames.shape[1] != 1:
            raise ValueError(f"mode {mode} takes exactly one frame")
        has_points = motion is not None and motion.shape[1] > 0
        if mode not in TRACK_MODES and has_points:
            raise ValueError(f"mode {mode} does not accept point tokens")
        frame_tokens = self.encode_frames(frames)
        if motion is None:
            motion = torch.zeros(
                frames.shape[0],
                0,
                2 * self.config.num_frames,
                dtype=frame_tokens.dtype,
                device=frame_tokens.device,
            )
        point_tokens = self.project_tracks(motion)
        seq = self.fuse(frame_tokens, point_tokens, attn_mask=attn_mask)
        return self.classify(self.pool(seq))


def frames_to_tensor(frames: np.ndarray) -> torch.Tensor:
    """(T, H, W, 3) uint8 -> (T, 3, H, W) float32 scaled to [-1, 1]."""
    frames = np.asarray(frames)
    if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
        raise ValueError("frames must be (T, H, W, 3) uint8")
    arr = np.ascontiguousarray(frames)
    if not arr.flags.writeable:
        arr = arr.copy()  # torch.from_numpy rejects read-only memory-maps
    x = torch.from_numpy(arr).permute(0, 3, 1, 2).float()
    return x / 127.5 - 1.0


def save_checkpoint(
    path: str | Path, model: TRecModel, extra: dict[str, Any] | None = None
) -> Path:
    """Write weights plus the full ModelConfig (and optional train state)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload: dict[str, Any] = {
        "version": CHECKPOINT_VERSION,
        "model_config": asdict(model.config),
        "model_state": model.state_dict(),
    }
    if extra:
        overlap = set(extra) & set(payload)
        if overlap:
            raise ValueError(f"extra state may not shadow {sorted(overlap)}")
        payload.update(extra)
    torch.save(payload, path)
    return path


def load_checkpoint(
    path: str | Path, expected_config: ModelConfig | None = None
) -> tuple[TRecModel, dict[str, Any]]:
    """Rebuild a model from disk; refuses config mismatches outright.

    Returns the model and the raw payload (for optimizer state etc.).
    """
    path = Path(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except (OSError, RuntimeError, ValueError, EOFError, pickle.UnpicklingError,
            zipfile.BadZipFile) as exc:
        raise DataError(f"cannot load checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "model_config" not in payload:
        raise DataError(f"{path} is not a model checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    try:
        config = ModelConfig(**payload["model_config"])
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad model config: {exc}") from exc
    if expected_config is not None and config != expected_config:
        stored = asdict(config)
        wanted = asdict(expected_config)
        diff = {k: (stored[k], wanted[k]) for k in stored if stored[k] != wanted[k]}
        raise DataError(
            f"{path}: checkpoint config does not match the requested one "
            f"(stored, requested): {diff}"
        )
    model = TRecModel(config)
    model.load_state_dict(payload["model_state"])
    return model, payload
