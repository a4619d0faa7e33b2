"""CART trees and the three forest flavors: plain RF, BRF and SRN-BRF.

All three draw a size-n bootstrap per tree. Plain RF trains on it directly,
BRF first undersamples it to parity, SRN-BRF balances it with
:func:`~srnbrf.samplers.smote_rus_nc`. Tree ``t`` uses only streams derived
from ``(seed, t)``, so training with one worker or many gives the same model.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import _cart
from . import rng as _rng
from .dataset import NEGATIVE, POSITIVE, ClassStats, LabeledDataset, class_stats, subset
from .samplers import SamplerConfig, rus, smote_rus_nc

KINDS = ("plain-rf", "brf", "srn-brf")
FORMAT = "srnbrf-forest"
FORMAT_VERSION = 1
MAX_BOOTSTRAP_DRAWS = 10


@dataclass(frozen=True, eq=False)
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    pos: np.ndarray
    neg: np.ndarray
    n_features: int
    # audit trail: rows the tree saw and the class counts at each balancing stage
    n_train: int = 0
    stage_counts: dict[str, ClassStats] = field(default_factory=dict)
    bootstrap_fallback: bool = False

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def votes(self, rows) -> np.ndarray:
        X = _as_rows(rows, self.n_features)
        return _cart.leaf_votes(X, self.feature, self.threshold, self.left, self.right, self.pos, self.neg)

    def predict(self, rows) -> np.ndarray:
        return self.votes(rows)


def _as_rows(rows, d: int) -> np.ndarray:
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(rows, dtype=np.float64)))
    if X.shape[1] != d:
        raise ValueError(f"expected {d} columns, got {X.shape[1]}")
    return X


def max_features(d: int, rule: str) -> int:
    if rule == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    if rule == "all":
        return d
    raise ValueError(f"unknown feature subset rule {rule!r}")


def train_tree(data: LabeledDataset, feature_subset_rule: str = "sqrt", seed: int = 0) -> DecisionTree:
    """Unpruned Gini CART, min_samples_split = 2, fresh feature draw per node."""
    if data.n < 1:
        raise ValueError("cannot train on an empty dataset")
    arrays = _cart.grow(data.features, data.labels.astype(np.int64),
                        max_features(data.d, feature_subset_rule), np.uint64(_rng.derive_seed(seed, "cart")))
    return DecisionTree(*arrays, n_features=data.d, n_train=data.n)


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: list[DecisionTree]
    kind: str
    config: SamplerConfig
    seed: int
    n_features: int

    def tree_votes(self, rows) -> np.ndarray:
        X = _as_rows(rows, self.n_features)
        return np.vstack([t.votes(X) for t in self.trees])


def _bootstrap(data: LabeledDataset, seed: int) -> tuple[np.ndarray, bool]:
    """Size-n draw with replacement; redrawn when a class goes missing,
    then replaced by a per-class (stratified) draw."""
    gen = _rng.stream(seed, "bootstrap")
    n = data.n
    has_both = data.labels.min() != data.labels.max()
    for _ in range(MAX_BOOTSTRAP_DRAWS):
        idx = gen.integers(0, n, size=n)
        if not has_both or 0 < data.labels[idx].sum() < n:
            return idx, False
    parts = [gen.choice(rows, size=len(rows), replace=True)
             for rows in (np.flatnonzero(data.labels == POSITIVE), np.flatnonzero(data.labels == NEGATIVE))]
    return np.sort(np.concatenate(parts)), True


def _fit_one(data: LabeledDataset, kind: str, config: SamplerConfig, seed: int, t: int) -> DecisionTree:
    tree_seed = _rng.derive_seed(seed, "tree", t)
    idx, fallback = _bootstrap(data, tree_seed)
    boot = subset(data, idx)
    stages = {"bootstrap": class_stats(boot)}
    if kind == "brf":
        out = rus(boot, 1.0, tree_seed)
        boot = out.data
        stages.update(out.stage_counts)
    elif kind == "srn-brf":
        out = smote_rus_nc(boot, config.with_(seed=tree_seed))
        boot = out.data
        stages.update(out.stage_counts)
    tree = train_tree(boot, "sqrt", tree_seed)
    return DecisionTree(tree.feature, tree.threshold, tree.left, tree.right, tree.pos, tree.neg,
                        tree.n_features, boot.n, stages, fallback)


def train_forest(data: LabeledDataset, kind: str = "plain-rf", n_trees: int = 100,
                 config: SamplerConfig = SamplerConfig(), seed: int = 0, n_jobs: int = 1) -> ForestModel:
    if kind not in KINDS:
        raise ValueError(f"unknown forest kind {kind!r}; choose from {KINDS}")
    if n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    if n_jobs == 1:
        trees = [_fit_one(data, kind, config, seed, t) for t in range(n_trees)]
    else:
        trees = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_fit_one)(data, kind, config, seed, t) for t in range(n_trees))
    return ForestModel(list(trees), kind, config, seed, data.d)


def predict_score(model: ForestModel, rows) -> np.ndarray:
    """Fraction of trees voting positive."""
    votes = model.tree_votes(rows)
    return votes.sum(axis=0) / votes.shape[0]


def predict(model: ForestModel, rows) -> np.ndarray:
    """Majority vote; an even split goes to the positive class."""
    votes = model.tree_votes(rows)
    return np.where(2 * votes.sum(axis=0) >= votes.shape[0], POSITIVE, NEGATIVE).astype(np.int8)


def save_model(model: ForestModel, path) -> None:
    doc = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "kind": model.kind,
        "seed": model.seed,
        "n_features": model.n_features,
        "config": asdict(model.config),
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": [float.hex(float(v)) for v in t.threshold],
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "pos": t.pos.tolist(),
                "neg": t.neg.tolist(),
                "n_train": t.n_train,
            }
            for t in model.trees
        ],
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path) -> ForestModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT:
        raise ValueError(f"{path}: not a {FORMAT} file")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {doc.get('version')}")
    d = doc["n_features"]
    trees = [
        DecisionTree(
            np.array(t["feature"], dtype=np.int64),
            np.array([float.fromhex(v) for v in t["threshold"]], dtype=np.float64),
            np.array(t["left"], dtype=np.int64),
            np.array(t["right"], dtype=np.int64),
            np.array(t["pos"], dtype=np.int64),
            np.array(t["neg"], dtype=np.int64),
            d,
            t["n_train"],
        )
        for t in doc["trees"]
    ]
    return ForestModel(trees, doc["kind"], SamplerConfig(**doc["config"]), doc["seed"], d)
