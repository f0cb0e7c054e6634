"""Dataset manifests: one TSV row per sample, plus a class list.

A manifest file holds tab-separated ``id\\tvideo_path\\ttrack_path\\tlabel``
rows; the class names live next to it in ``classes.txt`` (one per line)
so that several split manifests can share them. Paths are stored
relative to the manifest's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from ..errors import DataError, EmptyDatasetError


@dataclass(frozen=True)
class ManifestEntry:
    sample_id: str
    video_path: str
    track_path: str
    label: int


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    class_names: tuple[str, ...]
    split: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if not self.class_names:
            raise ValueError("a manifest needs at least one class name")
        seen: set[str] = set()
        for e in self.entries:
            if e.sample_id in seen:
                raise ValueError(f"duplicate sample id {e.sample_id!r}")
            seen.add(e.sample_id)
            if not 0 <= e.label < len(self.class_names):
                raise ValueError(
                    f"label {e.label} of {e.sample_id!r} is outside "
                    f"[0, {len(self.class_names)})"
                )

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def __len__(self) -> int:
        return len(self.entries)


def write_manifest(manifest: DatasetManifest, directory: str | Path) -> Path:
    """Write ``<split>.tsv`` plus a shared ``classes.txt``; returns the TSV path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    classes_path = directory / "classes.txt"
    if classes_path.exists():
        existing = tuple(classes_path.read_text().splitlines())
        if existing != manifest.class_names:
            raise DataError(
                f"{classes_path} already lists different classes; "
                "refusing to mix datasets in one directory"
            )
    else:
        classes_path.write_text("\n".join(manifest.class_names) + "\n")
    path = directory / f"{manifest.split}.tsv"
    lines = [
        f"{e.sample_id}\t{e.video_path}\t{e.track_path}\t{e.label}"
        for e in manifest.entries
    ]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))
    return path


def read_manifest(path: str | Path, split: str | None = None) -> DatasetManifest:
    """Read a split TSV written by :func:`write_manifest`."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest {path} does not exist")
    classes_path = path.parent / "classes.txt"
    if not classes_path.exists():
        raise DataError(f"{classes_path} is missing next to {path.name}")
    class_names = tuple(classes_path.read_text().splitlines())
    entries = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise DataError(f"{path}:{lineno}: expected 4 tab-separated fields")
        sample_id, video_path, track_path, label_s = parts
        try:
            label = int(label_s)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad label {label_s!r}") from exc
        entries.append(ManifestEntry(sample_id, video_path, track_path, label))
    try:
        return DatasetManifest(
            tuple(entries), class_names, split if split is not None else path.stem
        )
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def filter_ambiguous_classes(
    manifest: DatasetManifest, forbidden_substrings: Sequence[str]
) -> tuple[DatasetManifest, dict[int, int]]:
    """Drop classes whose name contains a forbidden substring.

    Matching is case-insensitive. Remaining classes are renumbered
    densely in their original order; the returned dict maps old label to
    new label for the survivors. Removing everything raises
    EmptyDatasetError; an empty substring list is a usage error since it
    silently filters nothing.
    """
    if not forbidden_substrings:
        raise ValueError("forbidden_substrings must not be empty")
    lowered = [s.lower() for s in forbidden_substrings]
    keep = [
        i
        for i, name in enumerate(manifest.class_names)
        if not any(s in name.lower() for s in lowered)
    ]
    if not keep:
        raise EmptyDatasetError("every class matched a forbidden substring")
    mapping = {old: new for new, old in enumerate(keep)}
    entries = tuple(
        replace(e, label=mapping[e.label])
        for e in manifest.entries
        if e.label in mapping
    )
    if not entries:
        raise EmptyDatasetError("no samples left after class filtering")
    class_names = tuple(manifest.class_names[i] for i in keep)
    return (
        DatasetManifest(entries, class_names, manifest.split),
        mapping,
    )
