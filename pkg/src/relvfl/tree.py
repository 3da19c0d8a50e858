"""CART regression tree with variance-reduction splits and impurity-based importances."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

LEAF = -1


@dataclass
class Node:
    """Arena entry. ``split_feature`` is LEAF for leaves; ``impurity`` is the
    node variance weighted by its sample share of the root."""

    split_feature: int
    threshold: float
    left: int
    right: int
    prediction: float
    n_samples: int
    impurity: float


class RegressionTree(BaseEstimator, RegressorMixin):
    """Binary regression tree grown by greedy variance reduction.

    At each node every (feature, threshold) pair is scored, with thresholds at
    midpoints between consecutive sorted unique values; the split maximizing
    the weighted variance reduction wins, ties broken by lowest feature index
    then lowest threshold, which makes fitting fully deterministic. Samples
    with ``x[feature] <= threshold`` route left.

    Parameters
    ----------
    max_depth:
        Maximum tree depth; ``None`` grows until purity or no positive gain.
    min_samples_split:
        Minimum node size eligible for splitting.
    min_impurity_decrease:
        A split must improve the root-weighted impurity by strictly more than
        this to be accepted.

    Attributes
    ----------
    nodes_ : list[Node]
        Flat arena; index 0 is the root.
    feature_importances_ : ndarray
        Per-feature summed weighted impurity decrease, normalized to sum 1.
    """

    def __init__(
        self,
        max_depth: Optional[int] = 8,
        min_samples_split: int = 5,
        min_impurity_decrease: float = 0.0,
    ):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_impurity_decrease = min_impurity_decrease

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be a 2D array")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y shape {y.shape} does not match {X.shape[0]} rows")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 samples")
        if np.all(y == y[0]):
            raise ValueError("y is constant; a regression tree cannot be fit")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_impurity_decrease < 0:
            raise ValueError("min_impurity_decrease must be >= 0")
        self.n_features_in_ = X.shape[1]
        self._n_total = X.shape[0]
        self.nodes_: list[Node] = []
        self._grow(X, y, np.arange(X.shape[0]), depth=0)
        self.feature_importances_ = self._importances()
        return self

    def predict(self, X):
        check_is_fitted(self, "nodes_")
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, tree was fit on {self.n_features_in_}"
            )
        out = np.array([self._route(row) for row in X])
        return out[0] if single else out

    def _route(self, row: np.ndarray) -> float:
        idx = 0
        while self.nodes_[idx].split_feature != LEAF:
            node = self.nodes_[idx]
            idx = node.left if row[node.split_feature] <= node.threshold else node.right
        return self.nodes_[idx].prediction

    def _grow(self, X, y, indices, depth) -> int:
        y_node = y[indices]
        n = indices.size
        weight = n / self._n_total
        variance = float(y_node.var())
        node_idx = len(self.nodes_)
        self.nodes_.append(
            Node(
                split_feature=LEAF,
                threshold=0.0,
                left=LEAF,
                right=LEAF,
                prediction=float(y_node.mean()),
                n_samples=n,
                impurity=weight * variance,
            )
        )
        if (
            (self.max_depth is not None and depth >= self.max_depth)
            or n < self.min_samples_split
            or variance <= 0.0
        ):
            return node_idx
        best = self._best_split(X, y, indices, variance)
        if best is None:
            return node_idx
        feature, threshold = best
        mask = X[indices, feature] <= threshold
        left_idx = self._grow(X, y, indices[mask], depth + 1)
        right_idx = self._grow(X, y, indices[~mask], depth + 1)
        node = self.nodes_[node_idx]
        node.split_feature = feature
        node.threshold = threshold
        node.left = left_idx
        node.right = right_idx
        return node_idx

    def _best_split(self, X, y, indices, node_variance):
        """Best (feature, threshold) by weighted variance reduction, or None.

        Candidate gains come from cumulative sums over each feature's sort
        order; strict `>` comparisons walking features ascending and
        thresholds ascending realize the total tie order. Gains are weighted
        by the node's sample share of the root so they compare directly
        against ``min_impurity_decrease``.
        """
        n = indices.size
        weight = n / self._n_total
        y_node = y[indices]
        best_gain = self.min_impurity_decrease
        best: Optional[tuple[int, float]] = None
        for feature in range(self.n_features_in_):
            x = X[indices, feature]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            ys = y_node[order]
            cut = np.nonzero(xs[:-1] < xs[1:])[0]
            if cut.size == 0:
                continue
            csum = np.cumsum(ys)
            csq = np.cumsum(ys * ys)
            n_left = cut + 1.0
            n_right = n - n_left
            sum_l = csum[cut]
            sq_l = csq[cut]
            var_l = np.maximum(sq_l / n_left - (sum_l / n_left) ** 2, 0.0)
            var_r = np.maximum(
                (csq[-1] - sq_l) / n_right - ((csum[-1] - sum_l) / n_right) ** 2, 0.0
            )
            gains = weight * (node_variance - (n_left / n) * var_l - (n_right / n) * var_r)
            local = int(np.argmax(gains))
            if gains[local] > best_gain:
                best_gain = float(gains[local])
                pos = cut[local]
                best = (feature, float((xs[pos] + xs[pos + 1]) / 2.0))
        return best

    def _importances(self) -> np.ndarray:
        values = np.zeros(self.n_features_in_)
        has_split = False
        for node in self.nodes_:
            if node.split_feature == LEAF:
                continue
            has_split = True
            decrease = (
                node.impurity
                - self.nodes_[node.left].impurity
                - self.nodes_[node.right].impurity
            )
            values[node.split_feature] += decrease
        if not has_split:
            raise ValueError("tree has no splits; importances are undefined")
        return values / values.sum()


def write_importances_csv(
    feature_names: Sequence[str], importances: np.ndarray, path: str
) -> None:
    """Two-column export (feature_name, importance) for reporting."""
    if len(feature_names) != len(importances):
        raise ValueError("feature_names and importances lengths differ")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_name", "importance"])
        for name, value in zip(feature_names, importances):
            writer.writerow([name, repr(float(value))])
