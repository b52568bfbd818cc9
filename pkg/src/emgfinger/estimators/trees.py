"""Bagged regression-tree ensembles: Random Forest and Gradient Boosting.

Both ensemble kinds sit behind the same bagging scheme: every bag is a base
learner trained on a bootstrap resample of the training set, and the ensemble
prediction is the arithmetic mean over bags. Splits use exhaustive variance
reduction over sorted unique feature values, with ties broken toward the
smaller threshold (and lower feature index), so fits are deterministic per
seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset


@dataclass(frozen=True)
class TreeParams:
    n_bags: int = 10
    trees_per_bag: int = 20  # random forest
    max_depth: int = 8
    min_samples_leaf: int = 2
    boost_trees: int = 25  # gradient boosting
    boost_depth: int = 3
    learning_rate: float = 0.1


def _best_split(X: np.ndarray, y: np.ndarray) -> tuple[int, float, float] | None:
    """Return (feature, threshold, sse_reduction) or None if no valid split.

    Threshold is an observed value; samples with x <= threshold go left.
    """
    n = len(y)
    total_sse = np.sum((y - y.mean()) ** 2)
    best = None  # (reduction, feature, threshold)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        # candidate boundaries sit after the last occurrence of each unique value
        boundaries = np.nonzero(np.diff(xs) > 0)[0]
        if boundaries.size == 0:
            continue
        csum = np.cumsum(ys)
        csum2 = np.cumsum(ys**2)
        nl = boundaries + 1
        nr = n - nl
        sl, sl2 = csum[boundaries], csum2[boundaries]
        sr, sr2 = csum[-1] - sl, csum2[-1] - sl2
        sse = (sl2 - sl**2 / nl) + (sr2 - sr**2 / nr)
        reduction = total_sse - sse
        k = int(np.argmax(reduction))  # argmax keeps the first (smaller threshold) on ties
        cand = (float(reduction[k]), j, float(xs[boundaries[k]]))
        if best is None or cand[0] > best[0] + 1e-15:
            best = cand
    if best is None or best[0] <= 1e-12:
        return None
    return best[1], best[2], best[0]


@dataclass
class TreeNode:
    value: float
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        return {
            "value": self.value,
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeNode":
        node = cls(value=float(doc["value"]))
        if "feature" in doc:
            node.feature = int(doc["feature"])
            node.threshold = float(doc["threshold"])
            node.left = cls.from_dict(doc["left"])
            node.right = cls.from_dict(doc["right"])
        return node


class RegressionTree:
    def __init__(self, max_depth: int = 8, min_samples_leaf: int = 2):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.root: TreeNode | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RegressionTree":
        self.root = self._grow(np.asarray(X, float), np.asarray(y, float), 0)
        return self

    def _grow(self, X: np.ndarray, y: np.ndarray, depth: int) -> TreeNode:
        node = TreeNode(value=float(y.mean()))
        if depth >= self.max_depth or len(y) < 2 * self.min_samples_leaf:
            return node
        split = _best_split(X, y)
        if split is None:
            return node
        j, thr, _ = split
        mask = X[:, j] <= thr
        if mask.sum() < self.min_samples_leaf or (~mask).sum() < self.min_samples_leaf:
            return node
        node.feature, node.threshold = j, thr
        node.left = self._grow(X[mask], y[mask], depth + 1)
        node.right = self._grow(X[~mask], y[~mask], depth + 1)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        out = np.empty(len(X))
        stack = [(self.root, np.arange(len(X)))]
        while stack:
            node, idx = stack.pop()
            if node.is_leaf:
                out[idx] = node.value
                continue
            mask = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
        return out

    def to_dict(self) -> dict:
        return {"max_depth": self.max_depth, "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict) -> "RegressionTree":
        tree = cls(max_depth=int(doc["max_depth"]))
        tree.root = TreeNode.from_dict(doc["root"])
        return tree


class ForestBag:
    """One bag of a Random Forest: several trees, each on its own bootstrap."""

    def __init__(self, trees: list[RegressionTree]):
        self.trees = trees

    @classmethod
    def fit(cls, X, y, params: TreeParams, rng: np.random.Generator) -> "ForestBag":
        trees = []
        for _ in range(params.trees_per_bag):
            idx = rng.integers(0, len(y), len(y))
            tree = RegressionTree(params.max_depth, params.min_samples_leaf)
            trees.append(tree.fit(X[idx], y[idx]))
        return cls(trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {"type": "forest", "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestBag":
        return cls([RegressionTree.from_dict(d) for d in doc["trees"]])


class BoostedBag:
    """One bag of bagged Gradient Boosting: a small boosted ensemble."""

    def __init__(self, base: float, trees: list[RegressionTree], learning_rate: float):
        self.base = base
        self.trees = trees
        self.learning_rate = learning_rate

    @classmethod
    def fit(cls, X, y, params: TreeParams) -> "BoostedBag":
        base = float(y.mean())
        residual = y - base
        trees = []
        for _ in range(params.boost_trees):
            tree = RegressionTree(params.boost_depth, params.min_samples_leaf)
            tree.fit(X, residual)
            residual = residual - params.learning_rate * tree.predict(X)
            trees.append(tree)
        return cls(base, trees, params.learning_rate)

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.full(len(np.atleast_2d(X)), self.base)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out

    def to_dict(self) -> dict:
        return {
            "type": "boosted",
            "base": self.base,
            "learning_rate": self.learning_rate,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BoostedBag":
        return cls(
            float(doc["base"]),
            [RegressionTree.from_dict(d) for d in doc["trees"]],
            float(doc["learning_rate"]),
        )


@dataclass
class BaggedTreeEnsemble:
    kind: str  # "random_forest" | "gradient_boosting"
    bags: list
    params: TreeParams = field(default_factory=TreeParams)
    seed: int = 0

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(features, float))
        return np.mean([bag.predict(X) for bag in self.bags], axis=0)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "params": vars(self.params).copy(),
            "bags": [bag.to_dict() for bag in self.bags],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BaggedTreeEnsemble":
        loader = {"forest": ForestBag, "boosted": BoostedBag}
        bags = [loader[d["type"]].from_dict(d) for d in doc["bags"]]
        return cls(doc["kind"], bags, TreeParams(**doc["params"]), int(doc["seed"]))


def fit_bagged_trees(
    train: Dataset,
    kind: str = "gradient_boosting",
    params: TreeParams | None = None,
    seed: int = 0,
) -> BaggedTreeEnsemble:
    """Fit a bagged ensemble: each bag gets its own bootstrap resample."""
    if len(train) == 0:
        raise ValueError("empty dataset")
    if len(train) < 10:
        raise ValueError("need at least 10 samples")
    if kind not in ("random_forest", "gradient_boosting"):
        raise ValueError(f"unknown ensemble kind {kind!r}")
    params = params or TreeParams()
    rng = np.random.default_rng(seed)
    X, y = train.features, train.force
    bags = []
    for _ in range(params.n_bags):
        idx = rng.integers(0, len(y), len(y))
        if kind == "random_forest":
            bags.append(ForestBag.fit(X[idx], y[idx], params, rng))
        else:
            bags.append(BoostedBag.fit(X[idx], y[idx], params))
    return BaggedTreeEnsemble(kind, bags, params, seed)
