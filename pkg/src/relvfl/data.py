"""Dataset loading, synthetic generation, standardization, splits and per-client column views."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted


@dataclass
class Dataset:
    """Feature matrix plus regression labels.

    Parameters
    ----------
    features:
        Two-dimensional float array, one row per sample, one column per feature.
    labels:
        One-dimensional float array aligned with ``features`` rows.
    feature_names:
        Unique name per column. Defaults to ``f0, f1, ...`` when omitted.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("features must be a 2D array")
        if labels.ndim != 1:
            raise ValueError("labels must be a 1D array")
        if features.shape[0] != labels.shape[0]:
            raise ValueError(
                f"labels length {labels.shape[0]} does not match "
                f"{features.shape[0]} feature rows"
            )
        if not np.all(np.isfinite(features)):
            raise ValueError("features contain non-finite entries")
        if not np.all(np.isfinite(labels)):
            raise ValueError("labels contain non-finite entries")
        if not self.feature_names:
            self.feature_names = [f"f{j}" for j in range(features.shape[1])]
        else:
            self.feature_names = [str(n) for n in self.feature_names]
        if len(self.feature_names) != features.shape[1]:
            raise ValueError("feature_names length must match the column count")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature_names must be unique")
        self.features = features
        self.labels = labels

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass
class DataSplit:
    """Disjoint train/test row index sets."""

    train_indices: np.ndarray
    test_indices: np.ndarray

    def __post_init__(self) -> None:
        train = np.asarray(self.train_indices, dtype=np.intp)
        test = np.asarray(self.test_indices, dtype=np.intp)
        if train.size == 0 or test.size == 0:
            raise ValueError("train and test index sets must both be non-empty")
        if np.intersect1d(train, test).size > 0:
            raise ValueError("train and test index sets overlap")
        self.train_indices = train
        self.test_indices = test


@dataclass
class ClientView:
    """A client's projection of the parent dataset onto its owned columns.

    Row order is preserved so sample ``i`` stays aligned across all clients.
    """

    client_id: int
    columns: list[int]
    data: np.ndarray


def load_csv(path: str, label_column: str) -> Dataset:
    """Load a comma-separated file with one header row into a :class:`Dataset`.

    Cells use a ``.`` decimal point and no quoting; every cell must parse as a
    finite float. The ``label_column`` is removed from the feature matrix and
    becomes the label vector.
    """
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ValueError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
        rows: list[list[float]] = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {row_no} has {len(row)} cells, expected {len(header)}"
                )
            parsed = []
            for col_idx, cell in enumerate(row):
                try:
                    value = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: row {row_no}, column {header[col_idx]!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
                if not math.isfinite(value):
                    raise ValueError(
                        f"{path}: row {row_no}, column {header[col_idx]!r}: "
                        f"non-finite value {cell!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, found {len(rows)}")
    table = np.asarray(rows, dtype=np.float64)
    feature_cols = [j for j in range(len(header)) if j != label_idx]
    return Dataset(
        features=table[:, feature_cols],
        labels=table[:, label_idx],
        feature_names=[header[j] for j in feature_cols],
    )


def generate_synthetic(
    n_samples: int,
    n_features: int,
    informative: Iterable[int],
    noise_std: float,
    seed: int,
) -> Dataset:
    """Generate a regression dataset with a known importance ordering.

    Features are i.i.d. standard normal. With the informative indices sorted
    ascending as ``j_0 < j_1 < ...``, labels are

        y = sum_r (3 - r/4) * x[j_r]  +  0.5 * x[j_0]**2  +  noise_std * eps

    so the weight of informative feature ``j_r`` strictly decreases in its
    rank ``r`` and the ground-truth importance ordering is the index ordering.
    """
    informative = sorted(set(int(j) for j in informative))
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    if n_features < 1:
        raise ValueError(f"n_features must be >= 1, got {n_features}")
    if not informative:
        raise ValueError("informative index set must be non-empty")
    if informative[0] < 0 or informative[-1] >= n_features:
        raise ValueError(
            f"informative indices {informative} outside [0, {n_features})"
        )
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n_samples, n_features))
    labels = np.zeros(n_samples)
    for rank, j in enumerate(informative):
        labels += (3.0 - 0.25 * rank) * features[:, j]
    labels += 0.5 * features[:, informative[0]] ** 2
    if noise_std > 0:
        labels += noise_std * rng.standard_normal(n_samples)
    return Dataset(features=features, labels=labels)


class ColumnStandardizer(BaseEstimator, TransformerMixin):
    """Center columns to mean 0 and scale to unit population std.

    Constant columns (zero variance) are mapped to all-zero columns rather
    than raising. Statistics use the 1/N population convention.
    """

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be a 2D array")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X must have {self.n_features_in_} columns, got shape {X.shape}"
            )
        denom = np.where(self.scale_ > 0, self.scale_, 1.0)
        out = (X - self.mean_) / denom
        # zero-variance columns: force exact zeros even under float residue
        out[:, self.scale_ == 0] = 0.0
        return out


def standardize(ds: Dataset) -> tuple[Dataset, ColumnStandardizer]:
    """Return a standardized copy of ``ds`` and the fitted per-column record."""
    scaler = ColumnStandardizer().fit(ds.features)
    return (
        Dataset(
            features=scaler.transform(ds.features),
            labels=ds.labels.copy(),
            feature_names=list(ds.feature_names),
        ),
        scaler,
    )


def make_split(ds: Dataset, test_fraction: float, seed: int) -> DataSplit:
    """Uniformly shuffle rows by ``seed`` and cut off round(fraction * I) test rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = ds.n_samples
    n_test = int(math.floor(test_fraction * n + 0.5))
    n_train = n - n_test
    if n_test < 1 or n_train < 2:
        raise ValueError(
            f"test_fraction {test_fraction} leaves train={n_train}, test={n_test}; "
            "need train >= 2 and test >= 1"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return DataSplit(train_indices=perm[n_test:], test_indices=perm[:n_test])


def project(ds: Dataset, columns: Sequence[int], client_id: int) -> ClientView:
    """Project ``ds`` onto an ordered, duplicate-free column list for one client."""
    columns = [int(c) for c in columns]
    if not columns:
        raise ValueError(f"client {client_id}: column list must be non-empty")
    if len(set(columns)) != len(columns):
        raise ValueError(f"client {client_id}: duplicate column index in {columns}")
    for c in columns:
        if c < 0 or c >= ds.n_features:
            raise ValueError(
                f"client {client_id}: column {c} outside [0, {ds.n_features})"
            )
    return ClientView(client_id=client_id, columns=columns, data=ds.features[:, columns])
