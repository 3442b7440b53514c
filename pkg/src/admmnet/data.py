"""Dataset loading, normalization and seeded synthetic generators.

Samples are stored column-wise: a feature matrix is ``d x n`` and the
one-hot label matrix is ``classes x n``.  Column layout makes the
data-parallel sharding a contiguous slice.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class DataFormatError(ValueError):
    """Malformed input file; the message carries the offending line number."""


@dataclass(frozen=True)
class Dataset:
    """Column-per-sample features with one-hot labels."""

    features: np.ndarray  # d x n
    labels: np.ndarray    # classes x n, one-hot

    def __post_init__(self):
        f, y = self.features, self.labels
        if f.ndim != 2 or y.ndim != 2:
            raise ValueError("features and labels must be 2-D")
        if f.shape[1] != y.shape[1]:
            raise ValueError(
                f"sample count mismatch: {f.shape[1]} features vs {y.shape[1]} labels"
            )
        col_sums = y.sum(axis=0)
        if not (np.all((y == 0) | (y == 1)) and np.all(col_sums == 1)):
            raise ValueError("labels must be one-hot with exactly one 1 per column")

    @property
    def n_samples(self) -> int:
        return self.features.shape[1]

    @property
    def n_features(self) -> int:
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return self.labels.shape[0]

    def class_indices(self) -> np.ndarray:
        return np.argmax(self.labels, axis=0)


def one_hot(class_ids, n_classes: int) -> np.ndarray:
    ids = np.asarray(class_ids, dtype=np.intp)
    out = np.zeros((n_classes, ids.size), dtype=np.float64)
    out[ids, np.arange(ids.size)] = 1.0
    return out


def _encode_labels(raw_labels) -> np.ndarray:
    values = sorted(set(raw_labels))
    index = {v: i for i, v in enumerate(values)}
    return one_hot([index[v] for v in raw_labels], len(values))


def load_csv(path, label_column: int = -1, has_header: bool = False) -> Dataset:
    """Load a numeric CSV with one sample per row.

    ``label_column`` selects the label field (negative indices allowed);
    labels become one-hot in sorted order of their distinct values.
    """
    rows: list[list[float]] = []
    raw_labels: list[float] = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not rec:
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise DataFormatError(
                    f"{path}:{lineno}: ragged row ({len(rec)} fields, expected {width})"
                )
            try:
                vals = [float(v) for v in rec]
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
            lc = label_column if label_column >= 0 else len(vals) + label_column
            if not 0 <= lc < len(vals):
                raise DataFormatError(f"{path}:{lineno}: label column out of range")
            raw_labels.append(vals.pop(lc))
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    features = np.asarray(rows, dtype=np.float64).T
    return Dataset(features=features, labels=_encode_labels(raw_labels))


def save_csv(data: Dataset, path) -> None:
    """Write samples one per row, label (class index) last; round-trips
    through :func:`load_csv` with ``label_column=-1``."""
    ids = data.class_indices()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for j in range(data.n_samples):
            writer.writerow([repr(float(v)) for v in data.features[:, j]] + [int(ids[j])])


def load_libsvm(path) -> Dataset:
    """Load sparse ``label index:value`` text data (1-based indices)."""
    cols: list[dict[int, float]] = []
    raw_labels: list[float] = []
    max_index = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                raw_labels.append(float(parts[0]))
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: bad label {parts[0]!r}") from exc
            entries: dict[int, float] = {}
            for token in parts[1:]:
                try:
                    idx_s, val_s = token.split(":", 1)
                    idx, val = int(idx_s), float(val_s)
                except ValueError as exc:
                    raise DataFormatError(
                        f"{path}:{lineno}: malformed pair {token!r}"
                    ) from exc
                if idx < 1:
                    raise DataFormatError(f"{path}:{lineno}: index {idx} not 1-based")
                if idx in entries:
                    raise DataFormatError(f"{path}:{lineno}: duplicate index {idx}")
                entries[idx] = val
            max_index = max(max_index, max(entries, default=0))
            cols.append(entries)
    if not cols:
        raise DataFormatError(f"{path}: no data rows")
    features = np.zeros((max_index, len(cols)), dtype=np.float64)
    for j, entries in enumerate(cols):
        for idx, val in entries.items():
            features[idx - 1, j] = val
    return Dataset(features=features, labels=_encode_labels(raw_labels))


@dataclass(frozen=True)
class FeatureTransform:
    """Per-row shift/scale recorded on the training set."""

    mean: np.ndarray
    scale: np.ndarray

    def apply(self, data: Dataset) -> Dataset:
        feats = (data.features - self.mean[:, None]) / self.scale[:, None]
        return Dataset(features=feats, labels=data.labels)


def normalize(data: Dataset) -> tuple[Dataset, FeatureTransform]:
    """Standardize each feature row to zero mean, unit variance.

    Variance is floored at 1e-12 so constant rows map to zero.  The
    returned transform reapplies the training statistics to held-out data.
    """
    mean = data.features.mean(axis=1)
    var = data.features.var(axis=1)
    scale = np.sqrt(np.maximum(var, 1e-12))
    transform = FeatureTransform(mean=mean, scale=scale)
    return transform.apply(data), transform


def gen_blobs(n: int, d: int, classes: int, separation: float, seed: int) -> Dataset:
    """Gaussian clusters with unit within-class variance.

    Class centers are drawn once and rescaled so the minimum pairwise
    center distance equals ``separation``; samples cycle through classes.
    """
    if n < classes or classes < 2 or d < 1:
        raise ValueError("need n >= classes >= 2 and d >= 1")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((classes, d))
    dists = [
        np.linalg.norm(centers[i] - centers[j])
        for i in range(classes)
        for j in range(i + 1, classes)
    ]
    centers *= separation / min(dists)
    ids = np.arange(n) % classes
    features = centers[ids].T + rng.standard_normal((d, n))
    return Dataset(features=features, labels=one_hot(ids, classes))


def gen_xor(n: int, noise: float, seed: int) -> Dataset:
    """Noisy XOR quadrants: label 1 when the coordinate signs agree."""
    if n < 4:
        raise ValueError("need n >= 4")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    corners = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=np.float64)
    which = np.arange(n) % 4
    features = corners[which].T + noise * rng.standard_normal((2, n))
    ids = np.where(corners[which, 0] * corners[which, 1] > 0, 1, 0)
    return Dataset(features=features, labels=one_hot(ids, 2))


def split(data: Dataset, n_test: int, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle-split into train and held-out parts."""
    if not 0 < n_test < data.n_samples:
        raise ValueError("n_test must be in (0, n_samples)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(data.n_samples)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    return (
        Dataset(data.features[:, train_idx], data.labels[:, train_idx]),
        Dataset(data.features[:, test_idx], data.labels[:, test_idx]),
    )
