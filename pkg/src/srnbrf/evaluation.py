"""Stratified cross-validation with resampling confined to training folds.

Resampling and training only ever see ``subset(data, train)``; every row
that reaches a sampler or learner is checked, through its ``origin`` tag,
against the fold's test indices.
"""
from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from . import rng as _rng
from .dataset import POSITIVE, LabeledDataset, class_stats, subset
from .forest import KINDS, predict, predict_score, train_forest
from .samplers import SamplerConfig, feasible, nc, resample

METRICS = ("accuracy", "sensitivity", "specificity", "gmean", "roc_auc")
DEFAULT_GRID = (0.3, 0.4, 0.5, 0.6)
UNDEFINED = float("nan")


class LeakageError(AssertionError):
    pass


@dataclass(frozen=True)
class FoldPlan:
    folds: list[tuple[np.ndarray, np.ndarray]]
    n_folds: int
    seed: int

    def digest(self) -> str:
        """Short hash identifying the partition (same plan, same digest)."""
        h = hashlib.sha256()
        for _, test in self.folds:
            h.update(np.asarray(test, dtype=np.int64).tobytes())
            h.update(b"|")
        return h.hexdigest()[:16]


def stratified_kfold(labels, n_folds: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class with its own stream and deal it round-robin.

    The negative class continues dealing where the positive class stopped,
    so fold sizes stay within one of each other as well.
    """
    y = np.asarray(labels)
    n = len(y)
    if n_folds < 2:
        raise ValueError("n_folds must be at least 2")
    if n_folds > n:
        raise ValueError(f"n_folds={n_folds} exceeds the {n} samples")
    assignment = np.empty(n, dtype=np.int64)
    offset = 0
    for cls in (POSITIVE, 1 - POSITIVE):
        rows = np.flatnonzero(y == cls)
        if rows.size == 0:
            raise ValueError("each class needs at least one sample")
        rows = _rng.stream(seed, "kfold", int(cls)).permutation(rows)
        assignment[rows] = (offset + np.arange(rows.size)) % n_folds
        offset = (offset + rows.size) % n_folds
    all_rows = np.arange(n)
    folds = [(all_rows[assignment != f], all_rows[assignment == f]) for f in range(n_folds)]
    return FoldPlan(folds, n_folds, seed)


@dataclass(frozen=True)
class FoldMetrics:
    accuracy: float
    sensitivity: float
    specificity: float
    gmean: float
    roc_auc: float
    confusion: tuple[int, int, int, int]  # TP, FN, TN, FP

    def as_dict(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}


def _ratio(num, den) -> float:
    return num / den if den else UNDEFINED


def roc_auc(truth, scores) -> float:
    """P(score of a random positive > score of a random negative), ties count half.

    Computed from midranks (Mann-Whitney U); NaN when a class is absent.
    """
    y = np.asarray(truth) == POSITIVE
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return UNDEFINED
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s), dtype=np.float64)
    sorted_s = s[order]
    # midrank of each tie block
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], len(s)]
    mid = (starts + ends + 1) / 2.0
    ranks[order] = np.repeat(mid, ends - starts)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def compute_metrics(truth, predicted, scores) -> FoldMetrics:
    t = np.asarray(truth)
    p = np.asarray(predicted)
    if not (len(t) == len(p) == len(scores)):
        raise ValueError("truth, predicted and scores must have equal length")
    if len(t) == 0:
        raise ValueError("need at least one sample")
    tp = int(np.sum((t == POSITIVE) & (p == POSITIVE)))
    fn = int(np.sum((t == POSITIVE) & (p != POSITIVE)))
    tn = int(np.sum((t != POSITIVE) & (p != POSITIVE)))
    fp = int(np.sum((t != POSITIVE) & (p == POSITIVE)))
    sens = _ratio(tp, tp + fn)
    spec = _ratio(tn, tn + fp)
    gmean = math.sqrt(sens * spec) if not (math.isnan(sens) or math.isnan(spec)) else UNDEFINED
    return FoldMetrics(_ratio(tp + tn, len(t)), sens, spec, gmean, roc_auc(t, scores), (tp, fn, tn, fp))


def mean_metrics(per_fold: list[FoldMetrics]) -> tuple[dict[str, float], dict[str, int]]:
    """Per-metric mean over the folds where it is defined, and how many folds were skipped."""
    means, skipped = {}, {}
    for m in METRICS:
        vals = np.array([getattr(f, m) for f in per_fold], dtype=np.float64)
        ok = ~np.isnan(vals)
        means[m] = float(vals[ok].mean()) if ok.any() else UNDEFINED
        skipped[m] = int((~ok).sum())
    return means, skipped


@dataclass
class CvReport:
    method: str
    dataset: str
    per_fold: list[FoldMetrics]
    mean: dict[str, float]
    undefined_folds: dict[str, int]
    plan_digest: str
    chosen_alpha: float | None = None
    grid_selected: bool = False
    grid_scores: dict[float, float] = field(default_factory=dict)
    runtime_s: float = 0.0


@dataclass(frozen=True)
class LearnerSpec:
    kind: str = "plain-rf"
    n_trees: int = 100
    n_jobs: int = 1


def _assert_no_leak(train: LabeledDataset, test_idx: np.ndarray) -> None:
    seen = train.origin[train.origin >= 0]
    if np.intersect1d(seen, test_idx).size:
        raise LeakageError("test rows reached the training pipeline")


def _run_fold(data, sampler_id, config, learner, plan, f):
    train_idx, test_idx = plan.folds[f]
    fold_seed = _rng.derive_seed(plan.seed, "fold", f)
    train = subset(data, train_idx)
    _assert_no_leak(train, test_idx)
    out = resample(sampler_id, train, config.with_(seed=_rng.derive_seed(config.seed, "fold", f, "sampler")))
    _assert_no_leak(out.data, test_idx)
    model = train_forest(out.data, learner.kind, learner.n_trees, config, fold_seed)
    X_test = data.features[test_idx]
    return compute_metrics(data.labels[test_idx], predict(model, X_test), predict_score(model, X_test))


def evaluate_sampler(data: LabeledDataset, sampler_id: str, config: SamplerConfig = SamplerConfig(),
                     learner: LearnerSpec = LearnerSpec(), plan: FoldPlan | None = None,
                     n_jobs: int = 1, method: str | None = None) -> CvReport:
    """Cross-validate ``sampler_id`` followed by ``learner`` on ``plan``.

    Ensemble learners (brf, srn-brf) do their own balancing; pair them with
    sampler ``"none"``.
    """
    if learner.kind not in KINDS:
        raise ValueError(f"unknown learner kind {learner.kind!r}")
    plan = plan or stratified_kfold(data.labels, 10, config.seed)
    start = time.perf_counter()
    if n_jobs == 1:
        per_fold = [_run_fold(data, sampler_id, config, learner, plan, f) for f in range(plan.n_folds)]
    else:
        per_fold = Parallel(n_jobs=n_jobs)(
            delayed(_run_fold)(data, sampler_id, config, learner, plan, f) for f in range(plan.n_folds))
    means, skipped = mean_metrics(per_fold)
    return CvReport(method or sampler_id, data.name, list(per_fold), means, skipped, plan.digest(),
                    runtime_s=time.perf_counter() - start)


def feasible_grid(data: LabeledDataset, grid, plan: FoldPlan, k_nc: int = 3) -> list[float]:
    """Grid values that let RUS remove rows in every training fold after NC."""
    counts = []
    for train_idx, _ in plan.folds:
        train = subset(data, train_idx)
        stats = nc(train, min(k_nc, train.n - 1)).stage_counts["nc"]
        counts.append((stats.n_min, stats.n_maj))
    return [a for a in grid if all(feasible(a, n_min, n_maj) for n_min, n_maj in counts)]


def evaluate_with_alpha_grid(data: LabeledDataset, config: SamplerConfig = SamplerConfig(), grid=None,
                             plan: FoldPlan | None = None, learner: LearnerSpec = LearnerSpec(),
                             sampler_id: str = "smote-rus-nc", n_jobs: int = 1) -> CvReport:
    """Evaluate each alpha_rus in ``grid`` and keep the one with the best mean g-mean.

    The winner is scored on the same folds it was selected on, so the report
    is flagged ``grid_selected``. An empty grid falls back to alpha_rus = 0.5.
    Pass ``learner.kind = "srn-brf"`` with ``sampler_id = "none"`` to tune the
    ensemble instead of the standalone sampler.
    """
    plan = plan or stratified_kfold(data.labels, 10, config.seed)
    grid = list(grid or [])
    if not grid:
        rep = evaluate_sampler(data, sampler_id, config.with_(alpha_rus=0.5), learner, plan, n_jobs)
        rep.chosen_alpha = 0.5
        return rep
    best = None
    scores = {}
    start = time.perf_counter()
    for alpha in grid:
        rep = evaluate_sampler(data, sampler_id, config.with_(alpha_rus=alpha), learner, plan, n_jobs)
        g = rep.mean["gmean"]
        scores[alpha] = g
        # strict improvement only: ties keep the earlier grid value
        if best is None or (not math.isnan(g) and (math.isnan(best.mean["gmean"]) or g > best.mean["gmean"])):
            best = rep
            best.chosen_alpha = alpha
    best.grid_selected = len(grid) > 1
    best.grid_scores = scores
    best.runtime_s = time.perf_counter() - start
    return best
