"""Random forest of Gini decision trees stored as flat node arrays."""
import dataclasses
import logging
from typing import Any
from typing import ClassVar
from typing import Optional
from typing import Union

import numpy as np
from joblib import Parallel
from joblib import delayed

from ...errors import ShapeMismatch
from ...errors import SingleClass
from .base import Detector

logger = logging.getLogger(__name__)

LEAF = -1


@dataclasses.dataclass
class DecisionTree:
    feature: np.ndarray  # LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) training class counts

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``x``."""
        node = np.zeros(len(x), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            current = node[rows]
            go_left = x[rows, self.feature[current]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[node] != LEAF
        return node

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.counts[self.apply(x)].argmax(axis=1)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        return cls(
            feature=np.asarray(data["feature"], dtype=np.int64),
            threshold=np.asarray(data["threshold"], dtype=np.float64),
            left=np.asarray(data["left"], dtype=np.int64),
            right=np.asarray(data["right"], dtype=np.int64),
            counts=np.asarray(data["counts"], dtype=np.int64).reshape(-1, len(data["counts"][0])),
        )


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity of class-count rows."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)
    return 1.0 - np.sum((counts / safe[..., None]) ** 2, axis=-1)


def _best_split_on(
    x_col: np.ndarray, onehot: np.ndarray
) -> Optional[tuple[float, float]]:
    """Lowest weighted Gini over midpoints of one feature: (impurity, threshold)."""
    order = np.argsort(x_col, kind="stable")
    xs = x_col[order]
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    n = len(xs)
    left_counts = np.cumsum(onehot[order], axis=0)[:-1]
    right_counts = left_counts[-1] + onehot[order][-1] - left_counts
    n_left = np.arange(1, n)
    weighted = (n_left * gini(left_counts) + (n - n_left) * gini(right_counts)) / n
    weighted = np.where(valid, weighted, np.inf)
    i = int(np.argmin(weighted))
    thr = (xs[i] + xs[i + 1]) / 2.0
    # Midpoint of adjacent floats may round up to the upper value
    if thr >= xs[i + 1]:
        thr = xs[i]
    return float(weighted[i]), float(thr)


def _resolve_features_per_split(value: Union[str, int, None], n_features: int) -> int:
    if value is None:
        return n_features
    if value == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    if isinstance(value, int) and 1 <= value <= n_features:
        return value
    raise ValueError(f"features_per_split must be 'sqrt' or 1..{n_features}, got {value!r}")


def grow_tree(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    rng: np.random.Generator,
    max_depth: Optional[int] = None,
    features_per_split: Union[str, int, None] = None,
    min_samples_split: int = 2,
) -> DecisionTree:
    """Grow one tree depth-first until leaves are pure or cannot be split."""
    n_features = x.shape[1]
    m = _resolve_features_per_split(features_per_split, n_features)
    onehot = np.eye(n_classes, dtype=np.int64)[y]

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(rows: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(onehot[rows].sum(axis=0))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if (
            gini(counts[node]) == 0.0
            or len(rows) < min_samples_split
            or (max_depth is not None and depth >= max_depth)
        ):
            continue
        candidates = rng.permutation(n_features)
        best = None
        # Keep drawing features past m until a usable split shows up
        for position, f in enumerate(candidates):
            if position >= m and best is not None:
                break
            found = _best_split_on(x[rows, f], onehot[rows])
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], found[1], int(f))
        if best is None:
            continue
        _, thr, f = best
        goes_left = x[rows, f] <= thr
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        if len(left_rows) == 0 or len(right_rows) == 0:
            continue
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        stack.append((right[node], right_rows, depth + 1))
        stack.append((left[node], left_rows, depth + 1))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        counts=np.vstack(counts),
    )


@dataclasses.dataclass
class RandomForest(Detector):
    trees: list[DecisionTree]
    n_classes: int = 2
    max_depth: Optional[int] = None
    features_per_split: Union[str, int, None] = "sqrt"
    bootstrap: bool = True
    seed: int = 0

    kind: ClassVar[str] = "random_forest"

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def votes(self, x: np.ndarray) -> np.ndarray:
        """Per-class vote counts, shape (n_samples, n_classes); rows sum to n_trees."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        votes = np.zeros((len(x), self.n_classes), dtype=np.int64)
        rows = np.arange(len(x))
        for tree in self.trees:
            np.add.at(votes, (rows, tree.predict(x)), 1)
        return votes

    def predict(self, x: np.ndarray) -> np.ndarray:
        # argmax resolves ties to the lowest class
        return self.votes(x).argmax(axis=1)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        votes = self.votes(x)
        return votes[:, 1] / votes.sum(axis=1)

    def to_params(self) -> dict[str, Any]:
        return {
            "n_classes": self.n_classes,
            "max_depth": self.max_depth,
            "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_params(cls, params: dict[str, Any]) -> "RandomForest":
        return cls(
            trees=[DecisionTree.from_dict(t) for t in params["trees"]],
            n_classes=int(params["n_classes"]),
            max_depth=params.get("max_depth"),
            features_per_split=params.get("features_per_split"),
            bootstrap=bool(params.get("bootstrap", True)),
            seed=int(params.get("seed", 0)),
        )


def _grow_one(x, y, n_classes, seed_seq, bootstrap, max_depth, features_per_split):
    rng = np.random.default_rng(seed_seq)
    if bootstrap:
        rows = rng.integers(0, len(y), size=len(y))
        x, y = x[rows], y[rows]
    return grow_tree(x, y, n_classes, rng, max_depth, features_per_split)


def rf_train(
    x: np.ndarray,
    y: np.ndarray,
    n_trees: int = 100,
    max_depth: Optional[int] = None,
    features_per_split: Union[str, int, None] = "sqrt",
    seed: int = 0,
    bootstrap: bool = True,
    n_jobs: int = 1,
) -> RandomForest:
    """
    Train a forest of Gini trees on bootstrap resamples.

    Each tree draws from its own child of ``SeedSequence(seed)``, so the
    result does not depend on ``n_jobs``.

    Raises:
        SingleClass: If ``y`` holds only one class
        ShapeMismatch: If ``x`` and ``y`` do not align
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if x.ndim != 2 or len(x) != len(y) or len(y) < 2:
        raise ShapeMismatch(f"Need >= 2 aligned samples, got {x.shape} and {y.shape}")
    if len(np.unique(y)) < 2:
        raise SingleClass(f"Need both classes to fit, got only {np.unique(y).tolist()}")
    n_classes = max(2, int(y.max()) + 1)
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = Parallel(n_jobs=n_jobs)(
        delayed(_grow_one)(x, y, n_classes, s, bootstrap, max_depth, features_per_split)
        for s in seeds
    )
    logger.info("Grew %d trees on %d samples with %d features", n_trees, len(y), x.shape[1])
    return RandomForest(
        trees=list(trees),
        n_classes=n_classes,
        max_depth=max_depth,
        features_per_split=features_per_split,
        bootstrap=bootstrap,
        seed=seed,
    )


def rf_predict(forest: RandomForest, x: np.ndarray):
    """Majority-vote class; an int for one row, an array for a matrix."""
    pred = forest.predict(x)
    return int(pred[0]) if np.ndim(x) == 1 else pred
