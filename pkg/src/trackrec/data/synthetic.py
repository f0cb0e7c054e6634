"""Synthetic motion scenes with analytic ground-truth point tracks.

Each scene shows one textured disk over a textured background. The disk
translates, rotates, or rescales while the camera either stays put or
pans, and every tracked point follows the closed form

    object point:      p_t = c_img(t) + exp(rho * t) * R(omega * t) @ o
    background point:  p_t = b - cam * t

with c_img(t) = c_0 + v_obj * t - cam * t and o the point's offset from
the disk center at t = 0. Coordinates are clamped to the frame after
evaluation, and a clamped or occluded point is marked invisible.

Two class sets exist. "motion8" varies the disk's motion under a static
camera (four translations, two rotations, two scalings). "context2"
contrasts an object moving right under a static camera with a static
object under a left-panning camera; in the second class every point in
the frame shares the same image motion.

The label lives in the tracks alone. Appearance (disk radius, position,
textures) is drawn from seeds that do not depend on the class label, the
disk center is confined to a safe region sized for the worst-case motion
of any class, and the motion the renderer shows is a separate program
drawn from the same family independently of the label. Generated pixels
are therefore identically distributed across classes for every frame,
not just the first one, so a model without tracks can do no better than
chance. The tracks stand in for an ideal external tracker and follow the
true program in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import cv2
import numpy as np

from ..errors import SceneSpecError
from ..trackcore import TrackSet, VideoSample
from .frames import save_frames
from .manifest import DatasetManifest, ManifestEntry, write_manifest
from .trackfile import write_tracks

MOTION_CLASSES = (
    "translate_left",
    "translate_right",
    "translate_up",
    "translate_down",
    "rotate_cw",
    "rotate_ccw",
    "scale_up",
    "scale_down",
)
CONTEXT_CLASSES = (
    "object_right_camera_static",
    "object_static_camera_pan_left",
)
CLASS_SETS = {"motion8": MOTION_CLASSES, "context2": CONTEXT_CLASSES}

MARGIN = 4.0  # px the disk must keep from every frame edge
RADIUS_FRAC = (0.12, 0.185)  # disk radius as a fraction of min(H, W)
DRIFT_FRAC = 0.16  # worst-case center drift as a fraction of min(H, W)
MAX_SCALE = 1.30  # upper bound on exp(total log-scale change)
# Share of tracked points seeded on the disk, the way interest-point
# trackers concentrate features on textured foreground regions.
OBJECT_POINT_FRAC = 0.25
_OBJ_TEX_SIZE = 64


@dataclass(frozen=True)
class SyntheticSceneSpec:
    """Full recipe for one scene; two equal specs render bit-identically.

    The object/camera program drives the analytic tracks. The render_*
    program, when set, is what the renderer draws instead; it defaults
    to the track program. Dataset generation always sets it to a draw
    that ignores the label, so pixels carry no class information.
    """

    sample_id: str
    label: int
    object_velocity: tuple[float, float]  # px / frame
    angular_velocity: float  # rad / frame about the disk center
    scale_rate: float  # per-frame log-scale rate
    camera_velocity: tuple[float, float]  # px / frame camera pan
    shape_seed: int
    background_seed: int
    track_seed: int
    num_frames: int
    width: int
    height: int
    num_points: int
    render_velocity: tuple[float, float] | None = None
    render_angular_velocity: float | None = None
    render_scale_rate: float | None = None
    render_camera_velocity: tuple[float, float] | None = None
    fps: float = 30.0

    def __post_init__(self) -> None:
        if self.num_frames < 1:
            raise ValueError("num_frames must be positive")
        if self.width < 2 or self.height < 2:
            raise ValueError("frame size must be at least 2x2")
        if self.num_points < 0:
            raise ValueError("num_points must be non-negative")
        if self.label < 0:
            raise ValueError("label must be non-negative")

    @property
    def render_program(self) -> tuple[tuple[float, float], float, float, tuple[float, float]]:
        """(v_obj, omega, rho, v_cam) the renderer draws."""
        return (
            self.object_velocity if self.render_velocity is None else self.render_velocity,
            self.angular_velocity
            if self.render_angular_velocity is None
            else self.render_angular_velocity,
            self.scale_rate if self.render_scale_rate is None else self.render_scale_rate,
            self.camera_velocity
            if self.render_camera_velocity is None
            else self.render_camera_velocity,
        )


@dataclass(frozen=True)
class _Scene:
    r0: float
    center: np.ndarray  # (2,) disk center at t = 0
    obj_tex: np.ndarray  # (S, S, 3) float32 in [0, 1]
    bg_tex: np.ndarray  # (H + 2 pad, W + 2 pad, 3) float32
    pad: int


def _noise_texture(rng: np.random.Generator, coarse: tuple[int, int], size: tuple[int, int], amp: float) -> np.ndarray:
    base = rng.uniform(0.25, 0.75, size=3)
    grid = rng.random((coarse[0], coarse[1], 3))
    smooth = cv2.resize(grid.astype(np.float32), (size[1], size[0]), interpolation=cv2.INTER_LINEAR)
    return np.clip(base.astype(np.float32) + (smooth - 0.5) * 2.0 * amp, 0.0, 1.0)


def _build_scene(spec: SyntheticSceneSpec) -> _Scene:
    """Draw appearance from the class-independent seeds."""
    rng = np.random.default_rng(spec.shape_seed)
    m = min(spec.width, spec.height)
    r0 = rng.uniform(*RADIUS_FRAC) * m
    pad = MARGIN + MAX_SCALE * r0 + DRIFT_FRAC * m
    lo_x, hi_x = pad, spec.width - 1 - pad
    lo_y, hi_y = pad, spec.height - 1 - pad
    if lo_x >= hi_x or lo_y >= hi_y:
        raise SceneSpecError(
            f"{spec.width}x{spec.height} frame is too small for the safe region; "
            "use at least ~48 px per side"
        )
    center = np.array([rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)])
    obj_tex = _noise_texture(rng, (12, 12), (_OBJ_TEX_SIZE, _OBJ_TEX_SIZE), amp=0.25)

    bg_pad = int(np.ceil(DRIFT_FRAC * m)) + 2
    bg_h, bg_w = spec.height + 2 * bg_pad, spec.width + 2 * bg_pad
    bg_rng = np.random.default_rng(spec.background_seed)
    bg_tex = _noise_texture(bg_rng, (bg_h // 6 + 2, bg_w // 6 + 2), (bg_h, bg_w), amp=0.2)
    return _Scene(r0, center, obj_tex, bg_tex, bg_pad)


def _validate_motion(spec: SyntheticSceneSpec, scene: _Scene) -> None:
    t = np.arange(spec.num_frames, dtype=np.float64)
    programs = {"track": (spec.object_velocity, spec.angular_velocity,
                          spec.scale_rate, spec.camera_velocity)}
    programs["render"] = spec.render_program
    bounds_hi = np.array([spec.width - 1, spec.height - 1]) - MARGIN
    for name, (v_obj, _, rho, v_cam) in programs.items():
        cam = t[:, None] * np.asarray(v_cam)
        center_img = scene.center + t[:, None] * np.asarray(v_obj) - cam
        radius = scene.r0 * np.exp(rho * t)
        lo = center_img - radius[:, None]
        hi = center_img + radius[:, None]
        if np.any(lo < MARGIN - 1e-9) or np.any(hi > bounds_hi + 1e-9):
            raise SceneSpecError(
                f"{spec.sample_id}: disk leaves the safe region under the "
                f"{name} program (center path {center_img.min(0)}..{center_img.max(0)}, "
                f"radius up to {radius.max():.2f})"
            )


def _analytic_tracks(spec: SyntheticSceneSpec, scene: _Scene) -> TrackSet:
    rng = np.random.default_rng(spec.track_seed)
    w1, h1 = spec.width - 1, spec.height - 1
    n_obj = int(round(OBJECT_POINT_FRAC * spec.num_points))
    # seeded object points: uniform over the disk, strictly inside the rim
    rad = scene.r0 * 0.999 * np.sqrt(rng.uniform(size=n_obj))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n_obj)
    on_disk = scene.center + rad[:, None] * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    rest = rng.uniform([0.0, 0.0], [w1, h1], size=(spec.num_points - n_obj, 2))
    starts = np.concatenate([on_disk, rest], axis=0)

    t = np.arange(spec.num_frames, dtype=np.float64)
    cam = t[:, None] * np.asarray(spec.camera_velocity)  # (T, 2)
    center_img = scene.center + t[:, None] * np.asarray(spec.object_velocity) - cam
    scale = np.exp(spec.scale_rate * t)  # (T,)
    ang = spec.angular_velocity * t
    cos_a, sin_a = np.cos(ang), np.sin(ang)

    offsets = starts - scene.center  # (P, 2)
    is_obj = (offsets**2).sum(axis=1) <= scene.r0**2
    # rotated offsets, shape (P, T, 2)
    rot_x = offsets[:, None, 0] * cos_a[None, :] - offsets[:, None, 1] * sin_a[None, :]
    rot_y = offsets[:, None, 0] * sin_a[None, :] + offsets[:, None, 1] * cos_a[None, :]
    rot = np.stack([rot_x, rot_y], axis=2)
    obj_pos = center_img[None, :, :] + scale[None, :, None] * rot
    bg_pos = starts[:, None, :] - cam[None, :, :]
    pos = np.where(is_obj[:, None, None], obj_pos, bg_pos)

    radius = scene.r0 * scale
    d2 = ((bg_pos - center_img[None, :, :]) ** 2).sum(axis=2)
    occluded = (~is_obj[:, None]) & (d2 <= radius[None, :] ** 2)
    in_frame = (
        (pos[..., 0] >= 0.0)
        & (pos[..., 0] <= w1)
        & (pos[..., 1] >= 0.0)
        & (pos[..., 1] <= h1)
    )
    visible = (~occluded) & in_frame
    coords = np.clip(pos, 0.0, [w1, h1])
    return TrackSet(coords, visible, spec.width, spec.height, fps=spec.fps)


def _render(spec: SyntheticSceneSpec, scene: _Scene) -> np.ndarray:
    h, w = spec.height, spec.width
    v_obj, omega, rho, v_cam = spec.render_program
    frames = np.empty((spec.num_frames, h, w, 3), dtype=np.uint8)
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float32), np.arange(h, dtype=np.float32))
    s1 = _OBJ_TEX_SIZE - 1
    for t in range(spec.num_frames):
        cam = np.asarray(v_cam) * t
        # image pixel (x, y) shows background world point (x, y) + cam
        shift = np.array(
            [[1.0, 0.0, scene.pad + cam[0]], [0.0, 1.0, scene.pad + cam[1]]]
        )
        bg = cv2.warpAffine(
            scene.bg_tex,
            shift,
            (w, h),
            flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP,
            borderMode=cv2.BORDER_REPLICATE,
        )
        center = scene.center + np.asarray(v_obj) * t - cam
        scale = float(np.exp(rho * t))
        ang = omega * t
        cos_a, sin_a = np.cos(ang), np.sin(ang)
        rel_x, rel_y = gx - center[0], gy - center[1]
        # undo the disk's rotation and scaling to find texture coordinates
        off_x = (cos_a * rel_x + sin_a * rel_y) / scale
        off_y = (-sin_a * rel_x + cos_a * rel_y) / scale
        map_x = ((off_x / scene.r0) + 1.0) * 0.5 * s1
        map_y = ((off_y / scene.r0) + 1.0) * 0.5 * s1
        obj = cv2.remap(
            scene.obj_tex,
            map_x.astype(np.float32),
            map_y.astype(np.float32),
            cv2.INTER_LINEAR,
            borderMode=cv2.BORDER_REPLICATE,
        )
        mask = (rel_x**2 + rel_y**2) <= (scene.r0 * scale) ** 2
        frame = np.where(mask[..., None], obj, bg)
        frames[t] = np.clip(np.rint(frame * 255.0), 0, 255).astype(np.uint8)
    return frames


def generate_sample(spec: SyntheticSceneSpec) -> VideoSample:
    """Render one scene and evaluate its tracks from the closed form."""
    scene = _build_scene(spec)
    _validate_motion(spec, scene)
    tracks = _analytic_tracks(spec, scene)
    frames = _render(spec, scene)
    return VideoSample(spec.sample_id, frames, tracks, spec.label)


def _draw_motion(
    class_name: str, rng: np.random.Generator, num_frames: int, min_dim: int
) -> tuple[tuple[float, float], float, float, tuple[float, float]]:
    """Per-sample motion magnitudes; returns (v_obj, omega, rho, v_cam)."""
    steps = max(num_frames - 1, 1)
    drift = rng.uniform(0.55, 0.95) * DRIFT_FRAC * min_dim
    speed = drift / steps
    v = (0.0, 0.0)
    omega = 0.0
    rho = 0.0
    cam = (0.0, 0.0)
    if class_name == "translate_left":
        v = (-speed, 0.0)
    elif class_name == "translate_right":
        v = (speed, 0.0)
    elif class_name == "translate_up":
        v = (0.0, -speed)
    elif class_name == "translate_down":
        v = (0.0, speed)
    elif class_name in ("rotate_cw", "rotate_ccw"):
        theta = rng.uniform(1.7, 2.7)
        omega = theta / steps if class_name == "rotate_cw" else -theta / steps
    elif class_name in ("scale_up", "scale_down"):
        lam = rng.uniform(0.20, 0.26)
        rho = lam / steps if class_name == "scale_up" else -lam / steps
    elif class_name == "object_right_camera_static":
        v = (speed, 0.0)
    elif class_name == "object_static_camera_pan_left":
        cam = (-speed, 0.0)
    else:
        raise ValueError(f"unknown class {class_name!r}")
    return v, omega, rho, cam


def build_synthetic_dataset(
    out_dir: str | Path,
    class_set: str = "motion8",
    train_samples: int = 2000,
    val_samples: int = 500,
    test_samples: int = 0,
    num_frames: int = 8,
    image_size: int = 64,
    num_points: int = 450,
    seed: int = 0,
    fps: float = 30.0,
) -> dict[str, DatasetManifest]:
    """Generate a dataset on disk and return its split manifests.

    Labels are assigned round-robin over the class set while every seed
    derives from (seed, split, index) alone, which keeps appearance
    independent of the label. The rendered motion comes from its own
    seed stream and a uniformly drawn class, so swapping a sample's
    label changes its track file and nothing else. Frames go to
    ``frames/<id>.npy``, tracks to ``tracks/<id>.trk``, and each split
    gets a ``<split>.tsv``.
    """
    if class_set not in CLASS_SETS:
        raise ValueError(f"unknown class set {class_set!r}; pick from {sorted(CLASS_SETS)}")
    classes = CLASS_SETS[class_set]
    out_dir = Path(out_dir)
    manifests: dict[str, DatasetManifest] = {}
    split_sizes = [("train", train_samples), ("val", val_samples), ("test", test_samples)]
    for split_idx, (split, count) in enumerate(split_sizes):
        if count <= 0:
            continue
        entries = []
        for i in range(count):
            state = np.random.SeedSequence([seed, split_idx, i]).generate_state(5)
            shape_seed, background_seed, track_seed, motion_seed, render_seed = (
                int(s) for s in state
            )
            label = i % len(classes)
            motion_rng = np.random.default_rng(motion_seed)
            v, omega, rho, cam = _draw_motion(
                classes[label], motion_rng, num_frames, image_size
            )
            render_rng = np.random.default_rng(render_seed)
            shown = classes[int(render_rng.integers(len(classes)))]
            rv, romega, rrho, rcam = _draw_motion(
                shown, render_rng, num_frames, image_size
            )
            sample_id = f"{split}-{i:05d}"
            spec = SyntheticSceneSpec(
                sample_id=sample_id,
                label=label,
                object_velocity=v,
                angular_velocity=omega,
                scale_rate=rho,
                camera_velocity=cam,
                shape_seed=shape_seed,
                background_seed=background_seed,
                track_seed=track_seed,
                num_frames=num_frames,
                width=image_size,
                height=image_size,
                num_points=num_points,
                render_velocity=rv,
                render_angular_velocity=romega,
                render_scale_rate=rrho,
                render_camera_velocity=rcam,
                fps=fps,
            )
            sample = generate_sample(spec)
            video_rel = f"frames/{sample_id}.npy"
            track_rel = f"tracks/{sample_id}.trk"
            save_frames(sample.frames, out_dir / video_rel)
            write_tracks(sample.tracks, out_dir / track_rel)
            entries.append(ManifestEntry(sample_id, video_rel, track_rel, label))
        manifest = DatasetManifest(tuple(entries), classes, split)
        write_manifest(manifest, out_dir)
        manifests[split] = manifest
    if not manifests:
        raise ValueError("all split sizes are zero")
    return manifests


def track_motion_summary(ts: TrackSet) -> np.ndarray:
    """Six-dimensional motion summary of a track set.

    Only points that actually move (endpoint displacement above a
    quarter of the largest one) enter the statistics, and geometric
    moments are taken about the displacement-weighted centroid of the
    moving points, which estimates the motion center without access to
    the scene. Components: mean displacement of the moving points
    (x, y); curl- and divergence-like moments of their displacement
    field (sin(theta) and cos(theta) - 1 for a rigid rotation by theta,
    0 and s - 1 for a rescale by s); the mean log ratio of end-to-start
    offsets from the motion center (exactly log s for a rescale, 0 for
    rotations and translations); and the moving fraction. A fully
    static set returns zeros except the fraction.
    """
    if ts.num_points < 1:
        raise ValueError("need at least one track")
    disp = ts.coords[:, -1] - ts.coords[:, 0]  # (P, 2)
    mag = np.hypot(disp[:, 0], disp[:, 1])
    top = float(mag.max())
    if top <= 1e-9:
        return np.zeros(6)
    moving = mag > 0.25 * top
    d = disp[moving]
    start = ts.coords[moving, 0]
    end = ts.coords[moving, -1]
    weights = mag[moving][:, None]
    center_0 = (start * weights).sum(axis=0) / weights.sum()
    center_1 = (end * weights).sum(axis=0) / weights.sum()
    off = start - center_0
    denom = float((off**2).sum(axis=1).mean()) + 1e-9
    curl = float((off[:, 0] * d[:, 1] - off[:, 1] * d[:, 0]).mean()) / denom
    div = float((off[:, 0] * d[:, 0] + off[:, 1] * d[:, 1]).mean()) / denom
    r_0 = np.hypot(*off.T) + 1e-6
    r_1 = np.hypot(*(end - center_1).T) + 1e-6
    growth = float(np.log(r_1 / r_0).mean())
    frac = float(moving.mean())
    return np.array([d[:, 0].mean(), d[:, 1].mean(), curl, div, growth, frac])


def nearest_centroid_accuracy(
    train_sets: Sequence[TrackSet],
    train_labels: Sequence[int],
    eval_sets: Sequence[TrackSet],
    eval_labels: Sequence[int],
) -> float:
    """Accuracy of a nearest-centroid classifier on motion summaries.

    Features are standardized with train-split statistics before
    centroids are formed; ties break toward the lower class index. This
    is the sanity oracle that certifies a generated dataset is solvable
    from tracks alone.
    """
    if not train_sets or not eval_sets:
        raise ValueError("train and eval sets must be non-empty")
    train_f = np.stack([track_motion_summary(ts) for ts in train_sets])
    eval_f = np.stack([track_motion_summary(ts) for ts in eval_sets])
    train_y = np.asarray(train_labels)
    eval_y = np.asarray(eval_labels)
    mu, sd = train_f.mean(axis=0), train_f.std(axis=0) + 1e-9
    train_f = (train_f - mu) / sd
    eval_f = (eval_f - mu) / sd
    classes = np.unique(train_y)
    centroids = np.stack([train_f[train_y == c].mean(axis=0) for c in classes])
    d2 = ((eval_f[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    pred = classes[np.argmin(d2, axis=1)]
    return float((pred == eval_y).mean())
