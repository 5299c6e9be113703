"""Depth-limited CART regression trees and deterministically seeded bagging.

Split search is exhaustive: candidate thresholds are the midpoints between
consecutive distinct sorted values of each feature, scored by the summed
squared error of the two children.  Ties break to the lowest feature index,
then the lowest threshold.  A sample routes left iff its feature value is
strictly below the threshold, so a value exactly at a threshold goes right.

A constant feature yields no candidates and can never be selected, which is
what makes the two-variable control response ignore its session-count input.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput

_SEED_SPACE = 2**64


def _tree_rng(seed: int, index: int) -> np.random.Generator:
    # keyed on (seed, tree index): tree i's stream is independent of fit
    # order and thread scheduling
    return np.random.default_rng([seed % _SEED_SPACE, index])


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 2
    min_samples_split: int = 2
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_split < 1:
            raise ValueError("min_samples_split must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")

    def to_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
        }


@dataclass
class TreeNode:
    """A fitted node: sample count, mean outcome, and an optional split.

    ``split`` is (feature index, threshold); internal nodes have both
    children, leaves have neither.
    """

    n: int
    mean: float
    split: tuple | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    def predict(self, x) -> float:
        node = self
        while node.split is not None:
            feature, threshold = node.split
            node = node.left if x[feature] < threshold else node.right
        return node.mean

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=float)
        self._route(X, np.arange(X.shape[0]), out)
        return out

    def _route(self, X, idx, out):
        if self.split is None:
            out[idx] = self.mean
            return
        feature, threshold = self.split
        mask = X[idx, feature] < threshold
        self.left._route(X, idx[mask], out)
        self.right._route(X, idx[~mask], out)


def _coerce_rows(rows):
    rows = list(rows)
    if not rows:
        raise EmptyInput("no training rows")
    try:
        X = np.asarray([np.asarray(r[0], dtype=float) for r in rows], dtype=float)
    except ValueError as exc:
        raise DimensionMismatch("feature vectors differ in length") from exc
    if X.ndim != 2:
        raise DimensionMismatch("feature vectors must be one-dimensional sequences")
    y = np.asarray([float(r[1]) for r in rows], dtype=float)
    return X, y


def _partition_sse(y, mask):
    # canonical child-SSE sum: a function of the row partition only, so two
    # candidates that split the rows identically score bitwise equal and the
    # lowest-feature tie-break is well defined
    left = y[mask]
    right = y[~mask]
    dl = left - left.mean()
    dr = right - right.mean()
    return float(dl @ dl + dr @ dr)


def _best_split(X, y, min_leaf, feature_ids):
    """Lowest-SSE (feature, threshold) among all midpoint candidates, or None."""
    n = y.size
    best = None
    for j in feature_ids:
        order = np.argsort(X[:, j], kind="stable")
        sx = X[order, j]
        sy = y[order]
        cut = np.nonzero(sx[:-1] < sx[1:])[0]  # last index of each value block
        if cut.size == 0:
            continue
        n_left = cut + 1
        n_right = n - n_left
        ok = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not ok.any():
            continue
        csum = np.cumsum(sy)
        csq = np.cumsum(sy * sy)
        s_left = csum[cut]
        q_left = csq[cut]
        s_tot = csum[-1]
        q_tot = csq[-1]
        sse = (q_left - s_left**2 / n_left) + (
            q_tot - q_left - (s_tot - s_left) ** 2 / n_right
        )
        sse[~ok] = np.inf
        k = int(np.argmin(sse))  # first minimum: lowest threshold wins ties
        if not np.isfinite(sse[k]):
            continue
        threshold = (sx[cut[k]] + sx[cut[k] + 1]) / 2.0
        canonical = _partition_sse(y, X[:, j] < threshold)
        if best is None or canonical < best[0]:
            best = (canonical, int(j), float(threshold))
    if best is None:
        return None
    return best[1], best[2]


def _grow(X, y, depth, params, rng, max_features) -> TreeNode:
    node = TreeNode(n=int(y.size), mean=float(y.mean()))
    if depth >= params.max_depth or y.size < params.min_samples_split:
        return node
    if y.min() == y.max():
        return node
    d = X.shape[1]
    if max_features is not None and max_features < d:
        feature_ids = np.sort(rng.choice(d, size=max_features, replace=False))
    else:
        feature_ids = range(d)
    found = _best_split(X, y, params.min_samples_leaf, feature_ids)
    if found is None:
        return node
    feature, threshold = found
    mask = X[:, feature] < threshold
    node.split = (feature, threshold)
    node.left = _grow(X[mask], y[mask], depth + 1, params, rng, max_features)
    node.right = _grow(X[~mask], y[~mask], depth + 1, params, rng, max_features)
    return node


def fit_tree(rows, params: TreeParams | None = None, *, rng=None, max_features=None) -> TreeNode:
    """Fit one CART regression tree on (feature vector, outcome) pairs.

    ``max_features`` enables per-split feature subsampling (off by default;
    with one or two features it degenerates) and then requires ``rng``.
    """
    X, y = _coerce_rows(rows)
    params = params or TreeParams()
    if max_features is not None and rng is None:
        raise ValueError("max_features requires an rng")
    return _grow(X, y, 0, params, rng, max_features)


@dataclass(frozen=True)
class RegressionForest:
    """Bagged CART trees; the prediction is the mean of per-tree predictions."""

    trees: tuple
    n_trees: int
    seed: int
    feature_count: int
    params: TreeParams
    bootstrap: bool = True

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.feature_count,):
            raise DimensionMismatch(
                f"expected a vector of {self.feature_count} features, got shape {x.shape}"
            )
        return float(self.predict_many(x[np.newaxis, :])[0])

    def predict_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise DimensionMismatch(
                f"expected an (n, {self.feature_count}) matrix, got shape {X.shape}"
            )
        # accumulate tree by tree so the summation order is the same for
        # every batch size (scalar predict goes through here with one row)
        acc = self.trees[0].predict_many(X)
        for tree in self.trees[1:]:
            acc += tree.predict_many(X)
        return acc / len(self.trees)


def fit_forest(
    rows,
    params: TreeParams | None = None,
    n_trees: int = 100,
    seed: int = 0,
    *,
    bootstrap: bool = True,
    max_features=None,
    n_jobs: int = 1,
) -> RegressionForest:
    """Bag ``n_trees`` trees; tree i resamples from the (seed, i) stream.

    Results are identical for any ``n_jobs`` because each tree owns its
    stream and the training data is read-only.
    """
    X, y = _coerce_rows(rows)
    params = params or TreeParams()
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    n = y.size

    def fit_one(i: int) -> TreeNode:
        rng = _tree_rng(seed, i)
        if bootstrap:
            idx = rng.integers(0, n, size=n)
            Xi, yi = X[idx], y[idx]
        else:
            Xi, yi = X, y
        return _grow(Xi, yi, 0, params, rng if max_features is not None else None, max_features)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(fit_one, range(n_trees)))
    else:
        trees = tuple(fit_one(i) for i in range(n_trees))
    return RegressionForest(trees, n_trees, seed, X.shape[1], params, bootstrap)


@dataclass(frozen=True)
class TreeReport:
    """Rendered tree: indented text plus a nested dict for JSON export."""

    text: str
    data: dict


def _fmt(v: float) -> str:
    return format(v, "g")


def _max_feature(node) -> int:
    if node.split is None:
        return -1
    return max(node.split[0], _max_feature(node.left), _max_feature(node.right))


def _render_text(node, names, depth, lines):
    pad = "  " * depth
    if node.split is not None:
        feature, threshold = node.split
        lines.append(f"{pad}{names[feature]} < {_fmt(threshold)}")
    lines.append(f"{pad}n = {node.n}")
    lines.append(f"{pad}mean = {_fmt(node.mean)}")
    if node.split is not None:
        _render_text(node.left, names, depth + 1, lines)
        _render_text(node.right, names, depth + 1, lines)


def _node_dict(node, names) -> dict:
    if node.split is None:
        return {"split": None, "n": node.n, "mean": node.mean}
    feature, threshold = node.split
    return {
        "split": {"feature": feature, "name": names[feature], "threshold": threshold},
        "n": node.n,
        "mean": node.mean,
        "left": _node_dict(node.left, names),
        "right": _node_dict(node.right, names),
    }


def export_tree(tree: TreeNode, feature_names) -> TreeReport:
    """Render a fitted tree, one block per node in depth-first order.

    Internal nodes show ``<name> < <threshold>`` then the sample count and
    mean outcome; terminal nodes have no splitting criterion.
    """
    names = list(feature_names)
    if _max_feature(tree) >= len(names):
        raise DimensionMismatch("feature name list shorter than the tree's feature indices")
    lines: list[str] = []
    _render_text(tree, names, 0, lines)
    return TreeReport(text="\n".join(lines) + "\n", data=_node_dict(tree, names))
