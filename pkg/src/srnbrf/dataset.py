"""Labeled binary datasets and their loaders (KEEL ``.dat`` and CSV).

Polarity is fixed at ingestion: the less frequent class becomes positive
(label 1) and the other negative (label 0). Nothing downstream re-derives it.
"""
from __future__ import annotations

import csv
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

POSITIVE = 1
NEGATIVE = 0


class DatasetError(ValueError):
    """Base class for ingestion failures."""


class ParseError(DatasetError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


class SchemaError(DatasetError):
    pass


class PolarityWarning(UserWarning):
    """An explicitly chosen positive label is not the minority class."""


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Immutable n x d feature matrix with 0/1 labels (1 = minority/positive).

    ``origin`` carries, per row, the index of the row in the dataset it was
    first loaded as, or -1 for synthetic rows. Samplers and ``subset``
    propagate it so that evaluation can prove no test row leaked into training.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    class_names: tuple[str, str] = ("positive", "negative")
    name: str = ""
    origin: np.ndarray | None = field(default=None)

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, order="C")
        y = np.array(self.labels, dtype=np.int8)
        if X.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        n, d = X.shape
        if d < 1:
            raise DatasetError("need at least one feature")
        if y.shape != (n,):
            raise DatasetError(f"labels length {y.shape} does not match {n} rows")
        if not np.all((y == 0) | (y == 1)):
            raise DatasetError("labels must be 0 (negative) or 1 (positive)")
        if not np.all(np.isfinite(X)):
            raise DatasetError("features contain NaN or Inf")
        if len(self.feature_names) != d:
            raise DatasetError(f"{len(self.feature_names)} feature names for {d} columns")
        origin = np.arange(n, dtype=np.int64) if self.origin is None else np.array(self.origin, dtype=np.int64)
        if origin.shape != (n,):
            raise DatasetError("origin length does not match rows")
        for arr in (X, y, origin):
            arr.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def __len__(self):
        return self.n

    def replace(self, features, labels, origin) -> "LabeledDataset":
        return LabeledDataset(features, labels, self.feature_names, self.class_names, self.name, origin)


@dataclass(frozen=True)
class ClassStats:
    n_min: int
    n_maj: int

    @property
    def rho(self) -> float:
        return self.n_maj / self.n_min if self.n_min else float("inf")

    @property
    def n(self) -> int:
        return self.n_min + self.n_maj


def class_stats(data: LabeledDataset) -> ClassStats:
    """Exact positive/negative counts.

    Resampling stages can leave the negative class smaller than the positive
    one, so ``rho`` may drop below 1 for intermediate data; only freshly
    ingested datasets are guaranteed ``n_min <= n_maj``.
    """
    n_pos = int(np.count_nonzero(data.labels))
    return ClassStats(n_min=n_pos, n_maj=data.n - n_pos)


def subset(data: LabeledDataset, row_indices: Sequence[int]) -> LabeledDataset:
    idx = np.asarray(row_indices, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= data.n):
        raise IndexError(f"row index out of range for dataset with {data.n} rows")
    return data.replace(data.features[idx], data.labels[idx], data.origin[idx])


def _binarize(raw_labels: list[str], positive_label: str | None, source) -> tuple[np.ndarray, tuple[str, str]]:
    counts = Counter(raw_labels)
    if len(counts) != 2:
        raise SchemaError(f"{source}: expected exactly 2 class values, found {len(counts)}: {sorted(counts)}")
    (a, na), (b, nb) = sorted(counts.items())
    if positive_label is not None:
        if positive_label not in counts:
            raise SchemaError(f"{source}: positive label {positive_label!r} not present")
        pos = positive_label
        neg = b if pos == a else a
        if counts[pos] > counts[neg]:
            warnings.warn(
                f"{source}: positive label {pos!r} is the majority class ({counts[pos]} vs {counts[neg]})",
                PolarityWarning,
                stacklevel=3,
            )
    else:
        # ties go to the lexicographically first label
        pos, neg = (a, b) if na <= nb else (b, a)
    y = np.fromiter((lab == pos for lab in raw_labels), dtype=np.int8, count=len(raw_labels))
    return y, (pos, neg)


def _check_rows(n: int, source):
    if n < 2:
        raise SchemaError(f"{source}: need at least 2 rows, found {n}")


def load_keel(path, positive_label: str | None = None) -> LabeledDataset:
    """Parse a KEEL ``.dat`` file whose attributes are all numeric."""
    path = Path(path)
    names: list[str] = []
    nominal: list[bool] = []
    rows: list[list[float]] = []
    raw_labels: list[str] = []
    in_data = False
    n_cols = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            if not in_data:
                if not s.startswith("@"):
                    raise ParseError(path, lineno, "data row before @data")
                key = s.split(None, 1)[0].lower()
                if key == "@attribute":
                    rest = s.split(None, 1)[1]
                    attr = rest.split("{")[0].split("[")[0].split()
                    if not attr:
                        raise ParseError(path, lineno, "attribute without a name")
                    names.append(attr[0])
                    nominal.append("{" in rest)
                elif key == "@data":
                    in_data = True
                    if len(names) < 2:
                        raise SchemaError(f"{path}: need at least one feature and a class attribute")
                    for nm, is_nominal in zip(names[:-1], nominal):
                        if is_nominal:
                            raise SchemaError(f"{path}: nominal attribute {nm!r} is not supported; encode it numerically")
                    n_cols = len(names)
                continue
            toks = [t.strip() for t in s.split(",")]
            if len(toks) != n_cols:
                raise ParseError(path, lineno, f"expected {n_cols} values, found {len(toks)}")
            try:
                rows.append([float(t) for t in toks[:-1]])
            except ValueError as exc:
                raise ParseError(path, lineno, f"non-numeric feature ({exc})") from None
            raw_labels.append(toks[-1])
    if not in_data:
        raise SchemaError(f"{path}: no @data section")
    if not rows:
        raise SchemaError(f"{path}: empty @data section")
    _check_rows(len(rows), path)
    y, classes = _binarize(raw_labels, positive_label, path)
    return LabeledDataset(np.array(rows, dtype=np.float64), y, tuple(names[:-1]), classes, path.stem)


def load_csv(path, label_column: str | int = -1, positive_label: str | None = None) -> LabeledDataset:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        if isinstance(label_column, int):
            if not -len(header) <= label_column < len(header):
                raise SchemaError(f"{path}: label column {label_column} out of range")
            li = label_column % len(header)
        else:
            if label_column not in header:
                raise SchemaError(f"{path}: no column named {label_column!r}")
            li = header.index(label_column)
        rows, raw_labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} values, found {len(rec)}")
            try:
                rows.append([float(c) for i, c in enumerate(rec) if i != li])
            except ValueError as exc:
                raise ParseError(path, lineno, f"non-numeric feature ({exc})") from None
            raw_labels.append(rec[li].strip())
    _check_rows(len(rows), path)
    y, classes = _binarize(raw_labels, positive_label, path)
    names = tuple(h for i, h in enumerate(header) if i != li)
    return LabeledDataset(np.array(rows, dtype=np.float64), y, names, classes, path.stem)


def save_csv(data: LabeledDataset, path, label_name: str = "class") -> None:
    """Write features with ``repr`` floats (round-trips bit-exactly) and the original class names."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*data.feature_names, label_name])
        pos, neg = data.class_names
        for row, lab in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in row] + [pos if lab == POSITIVE else neg])


def load(path, **kwargs) -> LabeledDataset:
    """Dispatch on file suffix: ``.dat`` is KEEL, anything else CSV."""
    path = Path(path)
    if path.suffix.lower() == ".dat":
        return load_keel(path, **kwargs)
    return load_csv(path, **kwargs)


def standardize(data: LabeledDataset) -> LabeledDataset:
    """Zero-mean, unit-variance columns (constant columns left centered). Off by default."""
    X = data.features
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return data.replace((X - X.mean(axis=0)) / sd, data.labels, data.origin)
