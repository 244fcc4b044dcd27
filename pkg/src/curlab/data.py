"""Datasets, SSL splits, and pseudo-label provenance records.

All containers are frozen after construction and safe to share; operations
are pure functions of (inputs, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import derive_rng


class DataError(ValueError):
    """Malformed dataset, file, or split request."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with optional class labels and stable row identifiers."""

    features: np.ndarray
    labels: np.ndarray | None
    sample_ids: np.ndarray

    def __post_init__(self):
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        if feats.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {feats.shape}")
        if not np.isfinite(feats).all():
            raise DataError("features contain non-finite entries")
        ids = np.asarray(self.sample_ids, dtype=np.int64)
        if ids.shape != (feats.shape[0],):
            raise DataError("sample_ids length must match the number of rows")
        if len(np.unique(ids)) != len(ids):
            raise DataError("sample_ids must be unique")
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (feats.shape[0],):
                raise DataError("labels length must match the number of rows")
            if labels.size and labels.min() < 0:
                raise DataError("labels must be non-negative class indices")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sample_ids", ids)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            raise DataError("dataset has no labels")
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def take(self, rows: np.ndarray) -> "Dataset":
        labels = self.labels[rows] if self.labels is not None else None
        return Dataset(self.features[rows], labels, self.sample_ids[rows])

    def without_labels(self) -> "Dataset":
        return Dataset(self.features, None, self.sample_ids)


@dataclass(frozen=True)
class PseudoLabelRecord:
    """Provenance of one pseudo-labeled sample."""

    sample_id: int
    predicted_class: int
    confidence: float
    round_index: int

    def __post_init__(self):
        if not 0.0 < self.confidence <= 1.0:
            raise DataError(f"confidence must be in (0, 1], got {self.confidence}")
        if self.round_index < 1:
            raise DataError("round_index starts at 1")


@dataclass(frozen=True)
class SslSplit:
    """Labeled/unlabeled/validation/test partition of one dataset.

    hidden_unlabeled_labels keeps the stripped ground truth of the unlabeled
    rows (-1 where there is none, e.g. out-of-distribution samples). It
    exists only for the per-round diagnostics; training code paths consume
    `unlabeled`, which carries no labels.
    """

    labeled: Dataset
    unlabeled: Dataset
    validation: Dataset
    test: Dataset
    hidden_unlabeled_labels: np.ndarray | None = None

    def __post_init__(self):
        for name in ("labeled", "validation", "test"):
            if getattr(self, name).labels is None:
                raise DataError(f"{name} split must carry labels")
        if self.unlabeled.labels is not None:
            raise DataError("unlabeled split must not carry labels")
        id_sets = [set(getattr(self, n).sample_ids.tolist())
                   for n in ("labeled", "unlabeled", "validation", "test")]
        total = sum(len(s) for s in id_sets)
        if len(set().union(*id_sets)) != total:
            raise DataError("split sample_ids must be pairwise disjoint")
        hidden = self.hidden_unlabeled_labels
        if hidden is not None:
            hidden = np.asarray(hidden, dtype=np.int64)
            if hidden.shape != (len(self.unlabeled),):
                raise DataError("hidden_unlabeled_labels length must match unlabeled rows")
            object.__setattr__(self, "hidden_unlabeled_labels", hidden)

    @property
    def n_classes(self) -> int:
        return self.labeled.n_classes

    def oracle_pseudo_label_accuracy(self, selected_rows: np.ndarray,
                                     predicted: np.ndarray) -> float | None:
        """Accuracy of pseudo-labels against the hidden truth; diagnostics only.

        Rows whose hidden label is -1 (no in-distribution ground truth) are
        excluded. Returns None when no truth is available.
        """
        if self.hidden_unlabeled_labels is None or len(selected_rows) == 0:
            return None
        truth = self.hidden_unlabeled_labels[selected_rows]
        known = truth >= 0
        if not known.any():
            return None
        return float(np.mean(predicted[known] == truth[known]))


@dataclass(frozen=True)
class StandardizeStats:
    """Per-feature centering/scaling estimated on labeled + unlabeled rows."""

    mean: np.ndarray
    scale: np.ndarray  # stdev, with 1.0 substituted for zero-variance features

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.scale


def split_ssl(dataset: Dataset, n_labeled: int, n_val: int, n_test: int, seed: int) -> SslSplit:
    """Partition a labeled dataset into a stratified SSL split.

    Test and validation rows are drawn first from a seeded permutation; the
    labeled subset is then class-stratified over the remaining rows (equal
    counts per class, lower class indices absorbing the remainder). Whatever
    is left becomes the unlabeled pool with labels stripped but retained on
    the split for evaluation-only oracle checks.
    """
    if dataset.labels is None:
        raise DataError("split_ssl needs a labeled dataset")
    n = len(dataset)
    if n_labeled + n_val + n_test > n:
        raise DataError(f"requested {n_labeled + n_val + n_test} rows from a dataset of {n}")
    if min(n_labeled, n_val, n_test) < 0:
        raise DataError("split sizes must be non-negative")

    k = dataset.n_classes
    quotas = [n_labeled // k + (1 if c < n_labeled % k else 0) for c in range(k)]
    for c, q in enumerate(quotas):
        if q == 0:
            raise DataError(f"class {c} has zero labeled samples")

    perm = derive_rng(seed, "split").permutation(n)
    test_rows = perm[:n_test]
    val_rows = perm[n_test:n_test + n_val]
    pool = perm[n_test + n_val:]

    pool_labels = dataset.labels[pool]
    labeled_rows = []
    taken = np.zeros(len(pool), dtype=bool)
    for c, q in enumerate(quotas):
        candidates = np.flatnonzero(pool_labels == c)
        if len(candidates) < q:
            raise DataError(
                f"class {c} has only {len(candidates)} training rows for {q} labeled samples")
        chosen = candidates[:q]
        labeled_rows.append(pool[chosen])
        taken[chosen] = True
    labeled_rows = np.sort(np.concatenate(labeled_rows))
    unlabeled_rows = np.sort(pool[~taken])

    unlabeled = dataset.take(unlabeled_rows)
    return SslSplit(
        labeled=dataset.take(labeled_rows),
        unlabeled=unlabeled.without_labels(),
        validation=dataset.take(np.sort(val_rows)),
        test=dataset.take(np.sort(test_rows)),
        hidden_unlabeled_labels=unlabeled.labels,
    )


def standardize(split: SslSplit) -> tuple[SslSplit, StandardizeStats]:
    """Standardize all four splits with stats from labeled + unlabeled features.

    Validation/test rows do not contribute to the statistics (transductive
    setting); zero-variance features are centered and divided by 1.
    """
    if len(split.labeled) == 0:
        raise DataError("standardize needs a non-empty labeled split")
    fit = np.concatenate([split.labeled.features, split.unlabeled.features], axis=0)
    mean = fit.mean(axis=0)
    scale = fit.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    stats = StandardizeStats(mean=mean, scale=scale)

    def tx(ds: Dataset) -> Dataset:
        return Dataset(stats.apply(ds.features), ds.labels, ds.sample_ids)

    out = SslSplit(
        labeled=tx(split.labeled),
        unlabeled=tx(split.unlabeled),
        validation=tx(split.validation),
        test=tx(split.test),
        hidden_unlabeled_labels=split.hidden_unlabeled_labels,
    )
    return out, stats


def load_csv(
    path: str | Path,
    label_column: str | None = None,
    feature_columns: list[str] | None = None,
    label_map: dict[str, int] | None = None,
) -> tuple[Dataset, dict[str, int] | None]:
    """Load a comma-separated, UTF-8, headered file into a Dataset.

    Feature cells must parse as finite floats; label values are mapped to
    contiguous class indices in first-seen order unless a fixed label_map is
    supplied, in which case unknown labels are an error. Row order is
    preserved and sample_ids are the 0-based data-row indices. Returns the
    dataset together with the label mapping used (None without labels).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)

    if label_column is not None and label_column not in header:
        raise DataError(f"{path}: no column named {label_column!r}")
    if feature_columns is None:
        feature_columns = [c for c in header if c != label_column]
    col_idx = {}
    for c in feature_columns:
        if c not in header:
            raise DataError(f"{path}: no column named {c!r}")
        col_idx[c] = header.index(c)
    label_idx = header.index(label_column) if label_column is not None else None

    n = len(rows)
    feats = np.empty((n, len(feature_columns)), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64) if label_column is not None else None
    mapping: dict[str, int] | None = None
    fixed = label_map is not None
    if label_column is not None:
        mapping = dict(label_map) if fixed else {}

    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for j, c in enumerate(feature_columns):
            cell = row[col_idx[c]]
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {i}, column {c!r}: non-numeric value {cell!r}") from None
            if not np.isfinite(v):
                raise DataError(f"{path}: row {i}, column {c!r}: non-finite value {cell!r}")
            feats[i, j] = v
        if labels is not None:
            raw = row[label_idx]
            if raw not in mapping:
                if fixed:
                    raise DataError(f"{path}: row {i}: unknown label {raw!r}")
                mapping[raw] = len(mapping)
            labels[i] = mapping[raw]

    ds = Dataset(feats, labels, np.arange(n, dtype=np.int64))
    return ds, mapping


def save_csv(path: str | Path, dataset: Dataset,
             feature_names: list[str] | None = None,
             label_names: dict[int, str] | None = None) -> None:
    """Write a dataset as CSV with shortest round-trip decimal formatting."""
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(dataset.n_features)]
    if len(feature_names) != dataset.n_features:
        raise DataError("feature_names length must match feature count")
    header = list(feature_names)
    if dataset.labels is not None:
        header.append("label")
    lines = [",".join(header)]
    for i in range(len(dataset)):
        cells = [repr(float(v)) for v in dataset.features[i]]
        if dataset.labels is not None:
            lab = int(dataset.labels[i])
            cells.append(label_names[lab] if label_names else str(lab))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
