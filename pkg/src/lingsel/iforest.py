"""Isolation forest: random-partition trees and path-length anomaly scores.

Each tree is grown on a seeded without-replacement subsample of ψ rows; at a
node a uniformly random dimension and a uniform split inside that dimension's
(min, max) are drawn, stopping at height ⌈log₂ψ⌉ or when one point (or only
constant columns) remains. Scores: s(x) = 2^(−E[h(x)]/c(ψ)) where a path h(x)
adds c(size) at the reached leaf; the decision is 0.5 − s so that higher
means more target-like and 0 is the conventional inlier cutoff.

Per-tree seeds are derived from the config seed, so the model and the scores
are bit-identical for any worker-thread count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError, UsageError
from .numcore import MASK64, derive_seed

EULER_GAMMA = 0.5772156649
_CHUNK = 1024


@dataclass
class IForestConfig:
    n_trees: int = 200
    subsample: int = 256
    seed: int = 0

    def validate(self):
        if not (isinstance(self.n_trees, int) and self.n_trees >= 1):
            raise UsageError(f"n_trees must be an integer >= 1, got {self.n_trees!r}")
        if not (isinstance(self.subsample, int) and self.subsample >= 2):
            raise UsageError(
                f"subsample must be an integer >= 2, got {self.subsample!r}"
            )


class IsolationTree:
    """Flattened node arrays; leaves have split_dim == -1."""

    __slots__ = ("split_dim", "split_val", "left", "right", "size")

    def __init__(self, split_dim, split_val, left, right, size):
        self.split_dim = split_dim
        self.split_val = split_val
        self.left = left
        self.right = right
        self.size = size

    def __len__(self):
        return self.split_dim.shape[0]


@dataclass
class IForestModel:
    trees: list
    psi: int
    height_limit: int
    dim: int
    n_trees: int
    seed: int
    normalized: bool = False

    def __post_init__(self):
        self.c_psi = avg_path_length(self.psi)
        self._flat = None

    def _flattened(self):
        """Concatenated node arrays + offsets + leaf c-table, cached."""
        if self._flat is None:
            offsets = np.zeros(len(self.trees) + 1, dtype=np.int64)
            for t, tree in enumerate(self.trees):
                offsets[t + 1] = offsets[t] + len(tree)
            self._flat = (
                np.concatenate([t.split_dim for t in self.trees]),
                np.concatenate([t.split_val for t in self.trees]),
                np.concatenate([t.left for t in self.trees]),
                np.concatenate([t.right for t in self.trees]),
                np.concatenate([t.size for t in self.trees]),
                offsets,
                build_c_table(self.psi),
            )
        return self._flat


def avg_path_length(n):
    """Expected unsuccessful-search path length c(n); c(0)=c(1)=0, c(2)=1."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


def build_c_table(max_size):
    return np.asarray([avg_path_length(i) for i in range(max_size + 1)], dtype=np.float64)


def iforest_train(data, config=None):
    """Grow n_trees seeded isolation trees over `data` (n ≥ 2 rows)."""
    config = config or IForestConfig()
    config.validate()
    x = np.ascontiguousarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError(f"training needs an (n>=2, d) matrix, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("training data contains non-finite values")
    n = x.shape[0]
    psi = min(config.subsample, n)
    height_limit = math.ceil(math.log2(psi))
    seed = config.seed & MASK64
    tree_seeds = [derive_seed(seed, t) for t in range(config.n_trees)]

    def grow(tree_seed):
        return IsolationTree(*kernels.iforest_build(x, psi, tree_seed, height_limit))

    workers = kernels.worker_count()
    if workers == 1:
        trees = [grow(s) for s in tree_seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(grow, tree_seeds))
    return IForestModel(
        trees=trees,
        psi=psi,
        height_limit=height_limit,
        dim=x.shape[1],
        n_trees=config.n_trees,
        seed=seed,
    )


def _path_sums(model, queries):
    sd, sv, lc, rc, sz, offsets, c_table = model._flattened()
    workers = kernels.worker_count()
    chunks = [queries[s : s + _CHUNK] for s in range(0, queries.shape[0], _CHUNK)]
    if not chunks:
        return np.empty(0, dtype=np.float64)

    def score(chunk):
        return kernels.iforest_path_sums(sd, sv, lc, rc, sz, offsets, chunk, c_table)

    if workers == 1 or len(chunks) == 1:
        parts = [score(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(score, chunks))
    return np.concatenate(parts)


def _as_queries(model, x):
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != model.dim:
        raise DataError(f"query dimension {arr.shape} does not match {model.dim}")
    return np.ascontiguousarray(arr), single


def iforest_anomaly_score(model, x):
    """s(x, ψ) ∈ (0, 1); higher = more anomalous."""
    queries, single = _as_queries(model, x)
    mean_path = _path_sums(model, queries) / model.n_trees
    scores = np.exp2(-mean_path / model.c_psi)
    return float(scores[0]) if single else scores


def iforest_decision(model, x):
    """0.5 − s(x, ψ); higher = more target-like, 0 the inlier cutoff."""
    s = iforest_anomaly_score(model, x)
    return 0.5 - s
