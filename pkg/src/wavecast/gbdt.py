"""Gradient-boosted oblivious regression trees with ordered boosting.

Every tree is symmetric: all nodes at one level share a single
(feature, threshold) split, so a depth-d tree is a lookup table over 2^d
leaves. Fitting supports two modes:

* ``ordered`` — the gradient of each training row is taken against a
  supporting model fitted only on rows that precede it in a randomly chosen
  permutation, which removes the target leakage of standard boosting on
  sequential data. Supporting models are maintained at power-of-two prefix
  lengths; a row reads the largest prefix that ends strictly before it.
* ``plain`` — standard gradient boosting (gradients against the full current
  model); kept as the leakage-prone comparison baseline.

Split candidates come from a per-feature quantile sketch. When a feature has
no more distinct values than bins, the sketch degenerates to every midpoint
between consecutive distinct values, so small problems are searched
exhaustively. The loss is squared error L(y, a) = 0.5*(y - a)^2 throughout.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import ordered_level_scores, plain_level_scores
from .errors import EmptyDataError, WavecastError

__all__ = [
    "LagMatrix",
    "GBDTParams",
    "ObliviousTree",
    "OrderedGBDTModel",
    "FitAudit",
    "make_lag_matrix",
    "gradient",
    "fit",
    "predict",
]

SNAPSHOT_FORMAT = "wavecast-gbdt-v1"


@dataclass(frozen=True)
class LagMatrix:
    """Sliding-window regression view of a series: p lagged values per target.

    Row i holds the p values immediately preceding its target, oldest first;
    ``time_index`` maps each row back to the target's position in the series.
    """

    features: np.ndarray
    targets: np.ndarray
    time_index: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2 or self.targets.ndim != 1:
            raise WavecastError("malformed lag matrix")
        if len(self.features) != len(self.targets) or len(self.targets) != len(self.time_index):
            raise WavecastError("lag matrix rows misaligned")

    @property
    def lag(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return len(self.targets)


def make_lag_matrix(values, p: int) -> LagMatrix:
    """Build the (N-p) x p lag matrix for one series."""
    y = np.asarray(values, dtype=float)
    if p < 1:
        raise WavecastError(f"lag count must be >= 1, got {p}")
    if p >= y.size:
        raise WavecastError(f"lag count p={p} must be smaller than series length N={y.size}")
    n_rows = y.size - p
    idx = np.arange(n_rows)[:, None] + np.arange(p)[None, :]
    return LagMatrix(features=y[idx], targets=y[p:], time_index=np.arange(p, y.size))


def gradient(y, a):
    """d/da of the squared-error loss 0.5*(y - a)^2, i.e. a - y."""
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(a))):
        raise WavecastError("gradient requires finite inputs")
    out = a - y
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GBDTParams:
    trees: int = 500
    depth: int = 6
    learning_rate: float = 0.05
    permutations: int = 3
    bins: int = 32
    mode: str = "ordered"
    seed: int = 0

    def __post_init__(self):
        if self.trees < 1:
            raise WavecastError("need at least one boosting iteration")
        if self.depth < 0:
            raise WavecastError("depth must be >= 0")
        if not 0 < self.learning_rate <= 1:
            raise WavecastError("learning rate must lie in (0, 1]")
        if self.mode not in ("ordered", "plain"):
            raise WavecastError(f"unknown mode {self.mode!r}")
        if self.mode == "ordered" and self.permutations < 1:
            raise WavecastError("ordered mode needs at least one shuffle permutation")
        if self.bins < 2:
            raise WavecastError("need at least 2 bins")

    def replace(self, **kw) -> "GBDTParams":
        doc = self.__dict__ | kw
        return GBDTParams(**doc)


@dataclass(frozen=True)
class ObliviousTree:
    """d shared (feature, threshold) splits and 2^d leaf values.

    An input routes to leaf sum_k bit_k * 2^(d-1-k) where bit_k is 1 iff
    x[feature_k] > threshold_k.
    """

    splits: tuple[tuple[int, float], ...]
    leaf_values: np.ndarray

    def __post_init__(self):
        if len(self.leaf_values) != 2 ** len(self.splits):
            raise WavecastError("leaf count must be 2^depth")

    @property
    def depth(self) -> int:
        return len(self.splits)

    def leaf_index(self, x: np.ndarray) -> int:
        idx = 0
        for f, thr in self.splits:
            idx = idx * 2 + (1 if x[f] > thr else 0)
        return idx

    def leaf_indices(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(len(X), dtype=np.int64)
        for f, thr in self.splits:
            idx = idx * 2 + (X[:, f] > thr)
        return idx


@dataclass
class OrderedGBDTModel:
    """A fitted boosted ensemble; prediction = base + lr * sum of leaf values."""

    trees: list[ObliviousTree]
    learning_rate: float
    base_prediction: float
    permutation_count: int
    seed: int
    training_log: list[float]
    mode: str
    n_features: int

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise WavecastError(f"expected {self.n_features} features, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise WavecastError("prediction input must be finite")
        acc = 0.0
        for tree in self.trees:
            acc += tree.leaf_values[tree.leaf_index(x)]
        return self.base_prediction + self.learning_rate * acc

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise WavecastError(f"expected (n, {self.n_features}) features, got {X.shape}")
        acc = np.zeros(len(X))
        for tree in self.trees:
            acc += tree.leaf_values[tree.leaf_indices(X)]
        return self.base_prediction + self.learning_rate * acc

    def to_json(self) -> str:
        doc = {
            "format": SNAPSHOT_FORMAT,
            "base_prediction": self.base_prediction,
            "learning_rate": self.learning_rate,
            "mode": self.mode,
            "n_features": self.n_features,
            "permutation_count": self.permutation_count,
            "seed": self.seed,
            "training_log": self.training_log,
            "trees": [
                {
                    "splits": [[f, thr] for f, thr in tree.splits],
                    "leaves": [float(v) for v in tree.leaf_values],
                }
                for tree in self.trees
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "OrderedGBDTModel":
        doc = json.loads(text)
        if doc.get("format") != SNAPSHOT_FORMAT:
            raise WavecastError(f"unknown snapshot format {doc.get('format')!r}")
        trees = [
            ObliviousTree(
                splits=tuple((int(f), float(thr)) for f, thr in t["splits"]),
                leaf_values=np.asarray(t["leaves"], dtype=float),
            )
            for t in doc["trees"]
        ]
        return cls(
            trees=trees,
            learning_rate=doc["learning_rate"],
            base_prediction=doc["base_prediction"],
            permutation_count=doc["permutation_count"],
            seed=doc["seed"],
            training_log=list(doc["training_log"]),
            mode=doc["mode"],
            n_features=doc["n_features"],
        )


def predict(model: OrderedGBDTModel, x) -> float:
    return model.predict(x)


@dataclass
class FitAudit:
    """Optional instrumentation: which rows fed each row's gradient, per iteration.

    ``permutations[r]`` lists row indices in permutation order. For iteration v,
    ``chosen_perm[v]`` is the permutation used and ``prefix_lengths[v][i]`` says
    row i's gradient was computed against a supporting model fitted on the
    first ``prefix_lengths[v][i]`` rows of that permutation (0 = base only).
    """

    permutations: list[np.ndarray] = field(default_factory=list)
    chosen_perm: list[int] = field(default_factory=list)
    prefix_lengths: list[np.ndarray] = field(default_factory=list)

    def dependency_rows(self, v: int, i: int) -> np.ndarray:
        order = self.permutations[self.chosen_perm[v]]
        return order[: self.prefix_lengths[v][i]]


def _quantile_candidates(col: np.ndarray, bins: int) -> np.ndarray:
    distinct = np.unique(col)
    if distinct.size <= 1:
        return np.empty(0)
    if distinct.size <= bins:
        return (distinct[:-1] + distinct[1:]) / 2.0
    qs = np.quantile(col, np.arange(1, bins) / bins, method="midpoint")
    return np.unique(qs)


def fit(data: LagMatrix, params: GBDTParams, audit: FitAudit | None = None) -> OrderedGBDTModel:
    """Train the boosted ensemble.

    One tree per iteration. Tree structure is chosen by scoring every
    (feature, quantile-threshold) candidate per level, with leaf estimates per
    the fitting mode; final leaf values are the mean residuals of the full
    training pass, and in ordered mode every supporting model is then boosted
    with the new tree on its own prefix.
    """
    n = len(data)
    if n == 0:
        raise EmptyDataError("empty lag matrix")
    X = np.ascontiguousarray(data.features, dtype=float)
    y = np.ascontiguousarray(data.targets, dtype=float)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise WavecastError("lag matrix contains non-finite values")
    p = data.lag

    depth = params.depth
    if depth > 0 and 2 ** depth > n:
        depth = max(0, int(math.floor(math.log2(n))))
        warnings.warn(f"depth {params.depth} exceeds log2 of {n} rows; clamped to {depth}")

    thresholds = [_quantile_candidates(X[:, f], params.bins) for f in range(p)]
    cand_counts = np.array([t.size for t in thresholds], dtype=np.int64)
    bins_mat = np.empty((n, p), dtype=np.int16)
    for f in range(p):
        bins_mat[:, f] = np.searchsorted(thresholds[f], X[:, f], side="left")

    ordered = params.mode == "ordered"
    rng = np.random.default_rng(params.seed)
    base = float(y.mean())
    F = np.full(n, base)

    if ordered:
        u = params.permutations
        orders = [rng.permutation(n) for _ in range(u)]
        positions = [np.empty(n, dtype=np.int64) for _ in range(u)]
        for r in range(u):
            positions[r][orders[r]] = np.arange(n)
        # supporting models at power-of-two prefix lengths; row at position k
        # reads prefix size 2^floor(log2 k), the largest ending strictly before it
        sizes = []
        size = 1
        while size <= n - 1:
            sizes.append(size)
            size *= 2
        n_prefix = len(sizes)
        support = np.full((u, max(n_prefix, 1), n), base)
        lvl_of_pos = np.zeros(n, dtype=np.int64)
        for k in range(1, n):
            lvl_of_pos[k] = int(math.floor(math.log2(k)))
        if audit is not None:
            audit.permutations = [o.copy() for o in orders]

    row_ids = np.arange(n)
    trees: list[ObliviousTree] = []
    training_log: list[float] = []

    for _ in range(params.trees):
        if ordered:
            r = int(rng.integers(params.permutations))
            pos = positions[r]
            approx = np.where(pos >= 1, support[r, lvl_of_pos[pos], row_ids], base)
            residual = y - approx
            order = orders[r]
            if audit is not None:
                audit.chosen_perm.append(r)
                audit.prefix_lengths.append(
                    np.where(pos >= 1, 2 ** lvl_of_pos[pos].astype(np.int64), 0)
                )
        else:
            residual = y - F
            order = row_ids

        g_ord = np.ascontiguousarray(residual[order])
        bins_ord = np.ascontiguousarray(bins_mat[order])
        leaf = np.zeros(n, dtype=np.int64)
        leaf_ord = np.zeros(n, dtype=np.int64)
        splits: list[tuple[int, float]] = []
        scorer = ordered_level_scores if ordered else plain_level_scores
        for level in range(depth):
            scores = scorer(bins_ord, leaf_ord, g_ord, cand_counts, 2 ** level)
            if scores.size == 0 or not np.isfinite(scores.min()):
                break
            flat = int(np.argmin(scores))  # ties resolve to the first candidate
            f_best, c_best = divmod(flat, scores.shape[1])
            splits.append((int(f_best), float(thresholds[f_best][c_best])))
            leaf = leaf * 2 + (bins_mat[:, f_best] > c_best)
            leaf_ord = leaf[order]

        n_leaves = 2 ** len(splits)
        res_main = y - F
        sums = np.bincount(leaf, weights=res_main, minlength=n_leaves)
        cnts = np.bincount(leaf, minlength=n_leaves)
        leaf_vals = np.where(cnts > 0, sums / np.maximum(cnts, 1), 0.0)
        F = F + params.learning_rate * leaf_vals[leaf]
        trees.append(ObliviousTree(splits=tuple(splits), leaf_values=leaf_vals))
        training_log.append(float(np.mean((y - F) ** 2)))

        if ordered:
            for r2 in range(params.permutations):
                for s, size in enumerate(sizes):
                    prefix = orders[r2][:size]
                    res = y[prefix] - support[r2, s, prefix]
                    psums = np.bincount(leaf[prefix], weights=res, minlength=n_leaves)
                    pcnts = np.bincount(leaf[prefix], minlength=n_leaves)
                    pvals = np.where(pcnts > 0, psums / np.maximum(pcnts, 1), 0.0)
                    support[r2, s] += params.learning_rate * pvals[leaf]

    return OrderedGBDTModel(
        trees=trees,
        learning_rate=params.learning_rate,
        base_prediction=base,
        permutation_count=params.permutations if ordered else 0,
        seed=params.seed,
        training_log=training_log,
        mode=params.mode,
        n_features=p,
    )
