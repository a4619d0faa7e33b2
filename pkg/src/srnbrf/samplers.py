"""Resampling transforms for binary data where label 1 is the minority class.

Every sampler is a pure function of its inputs. Undersamplers only ever drop
negative (majority) rows; oversamplers append synthetic positive rows after
all original rows. The result is a :class:`ResampleOutcome` that carries the
new dataset plus the bookkeeping needed to audit it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .dataset import NEGATIVE, POSITIVE, ClassStats, LabeledDataset, class_stats
from .neighbors import NeighborIndex, knn_votes


class SmoteFallbackWarning(UserWarning):
    """SMOTE ran with a single minority row and fell back to duplication."""


@dataclass(frozen=True)
class SamplerConfig:
    alpha_rus: float = 0.5
    alpha_smote: float = 1.0
    k_nc: int = 3
    k_smote: int = 5
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha_rus <= 1:
            raise ValueError(f"alpha_rus must lie in (0, 1], got {self.alpha_rus}")
        if not self.alpha_smote > 0:
            raise ValueError(f"alpha_smote must be positive, got {self.alpha_smote}")
        if self.k_nc < 1 or self.k_smote < 1:
            raise ValueError("k_nc and k_smote must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def with_(self, **changes) -> "SamplerConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class ResampleOutcome:
    data: LabeledDataset
    removed_majority: int
    synthesized_minority: int
    stage_counts: dict[str, ClassStats] = field(default_factory=dict)
    # (source row, neighbor row) in the input minority pool of the SMOTE stage, one per synthetic row
    smote_pairs: np.ndarray | None = None
    smote_input: LabeledDataset | None = None


def _check_minority_preserved(before: LabeledDataset, after: LabeledDataset) -> None:
    orig_pos = before.origin[(before.labels == POSITIVE) & (before.origin >= 0)]
    kept = after.origin[(after.labels == POSITIVE) & (after.origin >= 0)]
    assert np.array_equal(np.sort(orig_pos), np.sort(kept)), "a minority row was removed"


def _drop(data: LabeledDataset, remove_mask: np.ndarray, stage: str) -> ResampleOutcome:
    assert not np.any(remove_mask & (data.labels == POSITIVE))
    keep = ~remove_mask
    out = data.replace(data.features[keep], data.labels[keep], data.origin[keep])
    return ResampleOutcome(out, int(remove_mask.sum()), 0, {stage: class_stats(out)})


def rus_target(n_min: int, n_maj: int, alpha_rus: float) -> int:
    """Majority count kept by RUS: floor(n_min / alpha), clamped to [n_min, n_maj]."""
    # guard the floor against 100/0.5 style divisions landing a hair under an integer
    target = math.floor(n_min / alpha_rus + 1e-9)
    return max(min(target, n_maj), min(n_min, n_maj))


def rus(data: LabeledDataset, alpha_rus: float, seed: int) -> ResampleOutcome:
    """Random undersampling of the majority class to ratio ``alpha_rus``."""
    if not 0 < alpha_rus <= 1:
        raise ValueError(f"alpha_rus must lie in (0, 1], got {alpha_rus}")
    stats = class_stats(data)
    target = rus_target(stats.n_min, stats.n_maj, alpha_rus)
    maj_rows = np.flatnonzero(data.labels == NEGATIVE)
    remove = np.zeros(data.n, dtype=bool)
    if target < stats.n_maj:
        keep = _rng.stream(seed, "rus").choice(stats.n_maj, size=target, replace=False)
        remove[maj_rows] = True
        remove[maj_rows[keep]] = False
    return _drop(data, remove, "rus")


def smote_target(n_min: int, n_maj: int, alpha_smote: float) -> int:
    """Total minority count after SMOTE: round-half-up(alpha * n_maj), at least n_min."""
    return max(n_min, math.floor(alpha_smote * n_maj + 0.5))


def smote(data: LabeledDataset, alpha_smote: float, k_smote: int, seed: int) -> ResampleOutcome:
    """Synthetic minority oversampling.

    Draw order from the ``(seed, "smote")`` stream, all vectorized over the
    G synthetic rows: source positions (integers in [0, n_min)), neighbor
    ranks (integers in [0, k_eff)), then gaps (uniform [0, 1)). Positions
    refer to minority rows in their order of appearance; neighbors are the
    k_eff nearest minority rows of the source, ranked by (distance, position).
    """
    if k_smote < 1:
        raise ValueError("k_smote must be positive")
    stats = class_stats(data)
    G = smote_target(stats.n_min, stats.n_maj, alpha_smote) - stats.n_min
    if G == 0:
        return ResampleOutcome(data, 0, 0, {"smote": stats}, np.empty((0, 2), np.int64), data)
    if stats.n_min == 0:
        raise ValueError("SMOTE needs at least one minority row")
    pool = np.flatnonzero(data.labels == POSITIVE)
    P = data.features[pool]
    gen = _rng.stream(seed, "smote")
    src = gen.integers(0, stats.n_min, size=G)
    if stats.n_min == 1:
        warnings.warn("only one minority row; SMOTE duplicates it instead of interpolating",
                      SmoteFallbackWarning, stacklevel=2)
        nbr = src.copy()
        synth = P[src]
    else:
        k_eff = min(k_smote, stats.n_min - 1)
        nbr_table, _ = NeighborIndex(P).knn_rows(k_eff)
        rank = gen.integers(0, k_eff, size=G)
        gap = gen.random(G)
        nbr = nbr_table[src, rank]
        synth = P[src] + gap[:, None] * (P[nbr] - P[src])
    X = np.vstack([data.features, synth])
    y = np.concatenate([data.labels, np.full(G, POSITIVE, dtype=np.int8)])
    origin = np.concatenate([data.origin, np.full(G, -1, dtype=np.int64)])
    out = data.replace(X, y, origin)
    pairs = np.column_stack([pool[src], pool[nbr]])
    return ResampleOutcome(out, 0, G, {"smote": class_stats(out)}, pairs, data)


def _check_k(data: LabeledDataset, k: int, what: str):
    if k < 1:
        raise ValueError(f"{what} must be positive")
    if k > data.n - 1:
        raise ValueError(f"{what}={k} needs at least {k + 1} rows, dataset has {data.n}")


def enn_mask(data: LabeledDataset, k: int) -> np.ndarray:
    votes, _ = knn_votes(NeighborIndex(data.features), data.labels, k)
    return (data.labels == NEGATIVE) & (votes != NEGATIVE)


def enn(data: LabeledDataset, k: int = 3) -> ResampleOutcome:
    """Edited nearest neighbors, majority rows only, decided in one batch."""
    _check_k(data, k, "k")
    return _drop(data, enn_mask(data, k), "enn")


def nc_mask(data: LabeledDataset, k_nc: int) -> np.ndarray:
    y = data.labels
    votes, nbrs = knn_votes(NeighborIndex(data.features), y, k_nc)
    wrong = votes != y
    remove = (y == NEGATIVE) & wrong
    flagged = nbrs[(y == POSITIVE) & wrong].ravel()
    remove[flagged[y[flagged] == NEGATIVE]] = True
    return remove


def nc(data: LabeledDataset, k_nc: int = 3) -> ResampleOutcome:
    """Neighborhood cleaning: drop misclassified majority rows and the
    majority neighbors of misclassified minority rows."""
    _check_k(data, k_nc, "k_nc")
    return _drop(data, nc_mask(data, k_nc), "nc")


def tomek_links(data: LabeledDataset) -> np.ndarray:
    """(i, j) pairs, i < j, of opposite-label mutual nearest neighbors."""
    nn, _ = NeighborIndex(data.features).knn_rows(1)
    nn = nn[:, 0]
    i = np.arange(data.n)
    mutual = (nn[nn] == i) & (data.labels != data.labels[nn]) & (i < nn)
    return np.column_stack([i[mutual], nn[mutual]])


def tomek(data: LabeledDataset) -> ResampleOutcome:
    if data.n < 2:
        raise ValueError("Tomek links need at least 2 rows")
    links = tomek_links(data)
    remove = np.zeros(data.n, dtype=bool)
    ends = links.ravel()
    remove[ends[data.labels[ends] == NEGATIVE]] = True
    return _drop(data, remove, "tomek")


def _chain(first: ResampleOutcome, second: ResampleOutcome, before: LabeledDataset) -> ResampleOutcome:
    out = ResampleOutcome(
        second.data,
        first.removed_majority + second.removed_majority,
        first.synthesized_minority + second.synthesized_minority,
        {**first.stage_counts, **second.stage_counts},
        first.smote_pairs if first.smote_pairs is not None else second.smote_pairs,
        first.smote_input if first.smote_input is not None else second.smote_input,
    )
    _check_minority_preserved(before, out.data)
    return out


def smote_tomek(data: LabeledDataset, config: SamplerConfig = SamplerConfig()) -> ResampleOutcome:
    over = smote(data, config.alpha_smote, config.k_smote, config.seed)
    return _chain(over, tomek(over.data), data)


def smote_enn(data: LabeledDataset, config: SamplerConfig = SamplerConfig(), k: int = 3) -> ResampleOutcome:
    over = smote(data, config.alpha_smote, config.k_smote, config.seed)
    return _chain(over, enn(over.data, min(k, over.data.n - 1)), data)


def smote_rus_nc(data: LabeledDataset, config: SamplerConfig = SamplerConfig()) -> ResampleOutcome:
    """NC cleaning, then partial RUS to ``alpha_rus``, then SMOTE up to the
    remaining majority count.

    Stops after NC when the cleaned majority is no larger than the minority.
    An ``alpha_rus`` that would not remove anything (n_min / alpha >= cleaned
    majority) is clamped by RUS, so SMOTE then balances against the whole
    cleaned majority.
    """
    base = class_stats(data)
    if data.n < 2 or base.n_min == 0 or base.n_maj == 0:
        return ResampleOutcome(data, 0, 0, {"nc": base})
    cleaned = nc(data, min(config.k_nc, data.n - 1))
    stages = dict(cleaned.stage_counts)
    after_nc = stages["nc"]
    if after_nc.n_maj <= after_nc.n_min:
        return ResampleOutcome(cleaned.data, cleaned.removed_majority, 0, stages)
    under = rus(cleaned.data, config.alpha_rus, config.seed)
    stages.update(under.stage_counts)
    over = smote(under.data, config.alpha_smote, config.k_smote, config.seed)
    stages.update(over.stage_counts)
    out = ResampleOutcome(
        over.data,
        cleaned.removed_majority + under.removed_majority,
        over.synthesized_minority,
        stages,
        over.smote_pairs,
        over.smote_input,
    )
    _check_minority_preserved(data, out.data)
    return out


def no_sampling(data: LabeledDataset, config: SamplerConfig = SamplerConfig()) -> ResampleOutcome:
    return ResampleOutcome(data, 0, 0, {"none": class_stats(data)})


def alpha_grid(n_min: int, n_nc_maj: int, step: float = 0.1) -> list[float]:
    """Multiples of ``step`` in (0, 1] with n_min / alpha < n_nc_maj, ascending."""
    steps = round(1 / step)
    if not math.isclose(steps * step, 1.0):
        raise ValueError("step must divide 1")
    grid = [round(i * step, 10) for i in range(1, steps + 1)]
    return [a for a in grid if n_min < a * n_nc_maj]


def feasible(alpha: float, n_min: int, n_nc_maj: int) -> bool:
    return n_min < alpha * n_nc_maj


SAMPLERS = {
    "none": no_sampling,
    "rus": lambda data, cfg: rus(data, 1.0, cfg.seed),
    "smote": lambda data, cfg: smote(data, cfg.alpha_smote, cfg.k_smote, cfg.seed),
    "nc": lambda data, cfg: nc(data, min(cfg.k_nc, data.n - 1)),
    "enn": lambda data, cfg: enn(data, min(3, data.n - 1)),
    "tomek": lambda data, cfg: tomek(data),
    "smote-enn": smote_enn,
    "smote-tomek": smote_tomek,
    "smote-rus-nc": smote_rus_nc,
}


def resample(method: str, data: LabeledDataset, config: SamplerConfig) -> ResampleOutcome:
    try:
        fn = SAMPLERS[method]
    except KeyError:
        raise ValueError(f"unknown sampler {method!r}; choose from {sorted(SAMPLERS)}") from None
    return fn(data, config)
