"""Feature matrices and labels: loading, validation and class-balanced subsampling."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BoundsError, ParseError, ShapeError, UsageError, ValidationError

FORMATS = ("csv", "idx", "raw-f64")

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
_RAW_HEADER = struct.Struct("<QQ")


@dataclass(frozen=True)
class Dataset:
    """An immutable N x D feature matrix with optional integer labels."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64, copy=True)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2:
            raise ShapeError(f"points must be 2-D, got shape {points.shape}")
        n, d = points.shape
        if n < 1 or d < 1:
            raise ShapeError(f"dataset must have N >= 1 and D >= 1, got {points.shape}")
        bad = ~np.isfinite(points)
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise ValidationError(f"non-finite value at row {row}, column {col}")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.ndim != 1 or labels.shape[0] != n:
                raise ShapeError(f"expected {n} labels, got shape {labels.shape}")
            if labels.size and not np.issubdtype(labels.dtype, np.integer):
                if not np.all(labels == np.round(labels)):
                    raise ValidationError("labels must be integers")
            labels = labels.astype(np.int64)
            if (labels < 0).any():
                raise ValidationError("labels must be non-negative")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


def _read_csv(path: Path, header: bool) -> np.ndarray:
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ShapeError(f"{path}:{lineno}: expected {width} columns, got {len(values)}")
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def _read_idx(path: Path) -> np.ndarray:
    """Unsigned-byte IDX tensor, returned as a raw uint8 array of its stated shape."""
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise ParseError(f"{path}: truncated IDX header at offset 0")
    zero, dtype_code, ndim = struct.unpack(">HBB", raw[:4])
    if zero != 0 or dtype_code != 0x08:
        raise ParseError(f"{path}: unsupported IDX magic 0x{int.from_bytes(raw[:4], 'big'):08x} at offset 0")
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise ParseError(f"{path}: truncated IDX dimension list at offset 4")
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    count = int(np.prod(dims, dtype=np.int64))
    if len(raw) - header_end != count:
        raise ParseError(
            f"{path}: expected {count} data bytes after offset {header_end}, found {len(raw) - header_end}"
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=header_end).reshape(dims)


def _read_raw_f64(path: Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _RAW_HEADER.size:
        raise ParseError(f"{path}: truncated header at offset 0")
    n, d = _RAW_HEADER.unpack_from(raw)
    expected = n * d * 8
    if len(raw) - _RAW_HEADER.size != expected:
        raise ParseError(
            f"{path}: expected {expected} payload bytes after offset {_RAW_HEADER.size}, "
            f"found {len(raw) - _RAW_HEADER.size}"
        )
    return np.frombuffer(raw, dtype="<f8", offset=_RAW_HEADER.size).reshape(n, d).astype(np.float64)


def read_labels(path) -> np.ndarray:
    """Read labels from an IDX label vector or a text file with one integer per line."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if len(head) == 4 and int.from_bytes(head, "big") == IDX_LABELS_MAGIC:
        return _read_idx(path).astype(np.int64)
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                labels.append(int(text))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: not an integer label: {text!r}") from None
    return np.array(labels, dtype=np.int64)


def load_dataset(path, format: str = "csv", labels_path=None, csv_header: bool = False) -> Dataset:
    """Load a dataset file.

    ``format`` is one of ``csv`` (headerless unless ``csv_header``), ``idx``
    (unsigned-byte images flattened row-major and scaled to [0, 1]) or
    ``raw-f64`` (two little-endian u64 N, D followed by N*D doubles).
    """
    path = Path(path)
    if format == "csv":
        points = _read_csv(path, csv_header)
    elif format == "idx":
        tensor = _read_idx(path)
        if tensor.ndim < 2:
            raise ShapeError(f"{path}: IDX feature file needs at least 2 dimensions")
        points = tensor.reshape(tensor.shape[0], -1).astype(np.float64) / 255.0
    elif format == "raw-f64":
        points = _read_raw_f64(path)
    else:
        raise UsageError(f"unknown format {format!r}; expected one of {FORMATS}")

    labels = read_labels(labels_path) if labels_path is not None else None
    return Dataset(points, labels)


def write_raw_f64(ds: Dataset, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_RAW_HEADER.pack(ds.n, ds.d))
        fh.write(np.ascontiguousarray(ds.points, dtype="<f8").tobytes())


def write_csv(ds: Dataset, path, labels_path=None) -> None:
    np.savetxt(path, ds.points, delimiter=",", fmt="%.17g")
    if labels_path is not None:
        if ds.labels is None:
            raise UsageError("dataset has no labels to write")
        np.savetxt(labels_path, ds.labels, fmt="%d")


def subsample(ds: Dataset, per_class: int, seed=0) -> Dataset:
    """Draw exactly ``per_class`` points from every class without replacement.

    Output rows are grouped by class in ascending label order.
    """
    if ds.labels is None:
        raise UsageError("subsample requires labels")
    classes, counts = np.unique(ds.labels, return_counts=True)
    if per_class < 1 or per_class > counts.min():
        raise BoundsError(f"per_class={per_class} outside [1, {counts.min()}] (smallest class size)")
    rng = np.random.default_rng(seed)
    picked = []
    for c in classes:
        members = np.flatnonzero(ds.labels == c)
        picked.append(rng.choice(members, size=per_class, replace=False))
    idx = np.concatenate(picked)
    return Dataset(ds.points[idx], ds.labels[idx])
