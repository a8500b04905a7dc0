"""Dataset directories: event files plus a ``manifest.csv`` index.

The manifest has the columns ``file,label,split`` with ``file`` relative to
the directory and ``split`` one of ``train`` / ``test``.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .events import EventError, EventStream
from .formats import guess_format, read_events, write_events
from .pipeline import EmptyDataset

MANIFEST = "manifest.csv"


@dataclass
class Sample:
    file: str
    label: int
    split: str


def stratified_split(labels, test_fraction: float = 0.3, seed: int = 0) -> list[str]:
    """Seeded per-class shuffle; the first ``round(n_c * test_fraction)`` go to test."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    split = np.array(["train"] * len(labels), dtype=object)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        split[idx[: int(round(len(idx) * test_fraction))]] = "test"
    return split.tolist()


def write_dataset(root, streams: list[EventStream], split=None, format: str = "canonical") -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    if split is None:
        split = ["train"] * len(streams)
    ext = ".csv" if format == "csv" else ".evt"
    rows = []
    for i, (s, sp) in enumerate(zip(streams, split)):
        name = f"sample_{i:06d}{ext}"
        write_events(s, root / name, format)
        rows.append(Sample(name, int(s.label) if s.label is not None else 0, sp))
    write_manifest(root, rows)
    return root


def write_manifest(root, rows: list[Sample]) -> None:
    with open(Path(root) / MANIFEST, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "label", "split"])
        for r in rows:
            w.writerow([r.file, r.label, r.split])


def read_manifest(root) -> list[Sample]:
    root = Path(root)
    path = root / MANIFEST
    if not root.is_dir():
        raise FileNotFoundError(f"{root}: not a dataset directory")
    if not path.exists():
        raise EmptyDataset(f"{root}: no {MANIFEST}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"file", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: manifest needs 'file' and 'label' columns")
        rows = []
        for lineno, r in enumerate(reader, 2):
            try:
                rows.append(Sample(r["file"], int(r["label"]), r.get("split") or "train"))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad label {r['label']!r}") from None
    if not rows:
        raise EmptyDataset(f"{path}: manifest lists no samples")
    return rows


def load_dataset(root, split: str = "all", format: str | None = None, geometry=None):
    """Yield ``(Sample, EventStream)`` for the chosen split (``all``, ``train``, ``test``)."""
    root = Path(root)
    for s in read_manifest(root):
        if split != "all" and s.split != split:
            continue
        fmt = format or guess_format(s.file)
        path = root / s.file
        try:
            stream = read_events(path, fmt, geometry=geometry, label=s.label)
        except EventError as exc:
            raise EventError(f"{path}: {exc}") from exc
        yield s, stream


def scan_labelled_tree(root, pattern: str = "*.bin"):
    """``root/<split>/<label>/file`` layout (as N-MNIST ships) -> Sample rows.

    Split directories named like ``Train``/``Test`` are mapped to train/test.
    """
    root = Path(root)
    rows = []
    for split_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        split = "test" if split_dir.name.lower().startswith("test") else "train"
        for label_dir in sorted(p for p in split_dir.iterdir() if p.is_dir()):
            try:
                label = int(label_dir.name)
            except ValueError:
                continue
            for f in sorted(label_dir.glob(pattern)):
                rows.append(Sample(os.path.relpath(f, root), label, split))
    return rows
