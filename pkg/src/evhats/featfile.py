"""Feature-matrix files.

Layout (little-endian): ``b"HATSFTR1"``, u32 sample count, u32 feature
dimension, then the matrix as row-major float64. Labels, when present, live
in a sidecar ``<path>.labels`` holding one u32 class id per sample.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .formats import MalformedHeader, TruncatedRecord

MAGIC = b"HATSFTR1"
_HEADER = struct.Struct("<8sII")


def labels_path(path) -> str:
    return f"{os.fspath(path)}.labels"


def write_features(path, features, labels=None) -> None:
    X = np.ascontiguousarray(features, dtype="<f8")
    if X.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {X.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, X.shape[0], X.shape[1]))
        fh.write(X.tobytes())
    if labels is not None:
        lab = np.asarray(labels)
        if len(lab) != X.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {len(lab)} labels")
        if lab.size and (lab.min() < 0 or lab.max() > 0xFFFFFFFF):
            raise ValueError("labels must fit in u32")
        lab.astype("<u4").tofile(labels_path(path))


def read_features(path, with_labels: bool = True):
    """Return ``(X, labels)``; labels is None when no sidecar exists."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise MalformedHeader(f"{path}: feature header needs {_HEADER.size} bytes")
    magic, n, d = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedHeader(f"{path}: bad magic {magic!r}")
    need = n * d * 8
    body = len(data) - _HEADER.size
    if body < need:
        raise TruncatedRecord(f"{path}: expected {need} bytes of features, found {body}")
    if body > need:
        raise MalformedHeader(f"{path}: {body - need} bytes beyond the declared matrix")
    X = np.frombuffer(data, dtype="<f8", count=n * d, offset=_HEADER.size).reshape(n, d).astype(np.float64)
    labels = None
    lp = labels_path(path)
    if with_labels and os.path.exists(lp):
        labels = np.fromfile(lp, dtype="<u4").astype(np.int64)
        if len(labels) != n:
            raise MalformedHeader(f"{lp}: {len(labels)} labels for {n} samples")
    return X, labels
