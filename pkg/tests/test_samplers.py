import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srnbrf import rng as srng
from srnbrf.dataset import class_stats
from srnbrf.samplers import (
    SamplerConfig,
    SmoteFallbackWarning,
    alpha_grid,
    enn,
    nc,
    resample,
    rus,
    smote,
    smote_enn,
    smote_rus_nc,
    smote_tomek,
    tomek,
    tomek_links,
)

import oracles
from conftest import blobs, make_data, random_data


def counts_data(n_pos, n_neg, d=1, seed=0):
    rng = np.random.default_rng(seed)
    return make_data(rng.normal(size=(n_pos + n_neg, d)), [1] * n_pos + [0] * n_neg)


def removed_rows(data, out):
    return set(range(data.n)) - set(out.data.origin[out.data.origin >= 0].tolist())


def rus_oracle(n_min, n_maj, alpha):
    target = math.floor(Fraction(n_min) / Fraction(str(alpha)))
    return min(max(target, n_min), n_maj)


# --- RUS ---------------------------------------------------------------------

def test_rus_alpha_one_balances():
    out = rus(counts_data(100, 10000), 1.0, seed=1)
    assert out.removed_majority == 9900
    assert class_stats(out.data).n_maj == 100


def test_rus_half():
    out = rus(counts_data(100, 10000), 0.5, seed=1)
    assert class_stats(out.data).n_maj == 200


def test_rus_clamps_instead_of_growing():
    data = counts_data(100, 150)
    out = rus(data, 0.5, seed=1)
    assert out.removed_majority == 0
    assert np.array_equal(out.data.features, data.features)


def test_rus_keeps_order_and_minority():
    data = counts_data(20, 200, seed=3)
    out = rus(data, 0.25, seed=9)
    assert np.all(np.diff(out.data.origin) > 0)
    assert set(np.flatnonzero(data.labels == 1)) <= set(out.data.origin.tolist())


def test_rus_counts_randomized():
    rng = np.random.default_rng(2024)
    for trial in range(1000):
        n_min = int(rng.integers(1, 60))
        n_maj = int(rng.integers(n_min, 400))
        alpha = round(float(rng.choice(np.arange(1, 21) * 0.05)), 2)
        data = make_data(np.zeros(n_min + n_maj), [1] * n_min + [0] * n_maj)
        out = rus(data, alpha, seed=trial)
        assert class_stats(out.data) == class_stats(data).__class__(n_min, rus_oracle(n_min, n_maj, alpha))


# --- SMOTE -------------------------------------------------------------------

def test_smote_balanced_is_identity():
    data = counts_data(30, 30)
    out = smote(data, 1.0, 5, seed=0)
    assert out.synthesized_minority == 0
    assert out.data is data


def test_smote_two_points_collinear():
    p, q = np.array([0.0, 0.0]), np.array([3.0, 1.0])
    data = make_data(np.vstack([p, q, np.full((52, 2), 10.0)]), [1, 1] + [0] * 52)
    out = smote(data, 1.0, 5, seed=4)
    synth = out.data.features[data.n:]
    assert len(synth) == 50
    for x in synth:
        assert oracles.point_segment_distance(x, p, q) < 1e-9


def smote_replay(data, alpha, k, seed):
    """Independent replay of the documented SMOTE draw order."""
    pool = np.flatnonzero(data.labels == 1)
    P = data.features[pool]
    n_min, n_maj = len(pool), data.n - len(pool)
    G = max(n_min, math.floor(alpha * n_maj + 0.5)) - n_min
    k_eff = min(k, n_min - 1)
    table = oracles.neighbor_table(P, k_eff)
    gen = srng.stream(seed, "smote")
    src = gen.integers(0, n_min, size=G)
    rank = gen.integers(0, k_eff, size=G)
    gap = gen.random(G)
    rows, pairs = [], []
    for s, r, u in zip(src, rank, gap):
        j = table[s][r]
        rows.append(P[s] + u * (P[j] - P[s]))
        pairs.append((pool[s], pool[j]))
    return np.array(rows), np.array(pairs)


def test_smote_matches_replay():
    data = blobs(20, 100, d=3, seed=8)
    out = smote(data, 1.0, 5, seed=77)
    assert out.synthesized_minority == 80
    rows, pairs = smote_replay(data, 1.0, 5, 77)
    np.testing.assert_allclose(out.data.features[data.n:], rows, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(out.smote_pairs, pairs)
    for x, (i, j) in zip(out.data.features[data.n:], pairs):
        assert oracles.point_segment_distance(x, data.features[i], data.features[j]) < 1e-9


def test_smote_alpha_target_rounding():
    data = counts_data(10, 101)
    assert class_stats(smote(data, 0.5, 5, 0).data).n_min == 51  # 50.5 rounds up
    assert class_stats(smote(data, 0.05, 5, 0).data).n_min == 10  # never below n_min


def test_smote_single_minority_falls_back():
    data = counts_data(1, 5)
    with pytest.warns(SmoteFallbackWarning):
        out = smote(data, 1.0, 5, 0)
    assert out.synthesized_minority == 4
    assert np.all(out.data.features[data.n:] == data.features[0])


# --- ENN / NC / Tomek ----------------------------------------------------------

def test_enn_keeps_interior_majority_removes_isolated():
    X = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [0.1, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1], [5.05, 5.05]])
    y = [0, 0, 0, 0, 1, 1, 1, 0]
    out = enn(make_data(X, y), 3)
    assert removed_rows(make_data(X, y), out) == {7}


def test_enn_k_too_large():
    with pytest.raises(ValueError):
        enn(counts_data(2, 2), 4)


def test_nc_clean_data_unchanged():
    X = np.r_[np.arange(5.0), 100 + np.arange(5.0)]
    data = make_data(X, [1] * 5 + [0] * 5)
    out = nc(data, 3)
    assert out.removed_majority == 0 and out.data.n == data.n


def test_nc_rule_b_one_dimensional():
    data = make_data([0.0, 0.1, 0.2, 0.3, 10, 11, 12], [1, 0, 0, 0, 0, 0, 0])
    out = nc(data, 3)
    assert removed_rows(data, out) == {1, 2, 3}
    assert removed_rows(data, out) == oracles.nc_removed(data.features, data.labels, 3)


def test_tomek_separated_and_forced():
    far = make_data([0.0, 0.1, 10.0, 10.1], [1, 1, 0, 0])
    assert tomek(far).removed_majority == 0
    pair = make_data([0.0, 1.0], [1, 0])
    out = tomek(pair)
    assert out.removed_majority == 1 and list(out.data.labels) == [1]


@pytest.mark.parametrize("grid", [False, True])
def test_cleaners_match_oracles(grid):
    rng = np.random.default_rng(17 + grid)
    for _ in range(25):
        data = random_data(rng, n=int(rng.integers(8, 150)), grid=grid)
        X, y = data.features, data.labels
        assert removed_rows(data, enn(data, 3)) == oracles.enn_removed(X, y, 3)
        assert removed_rows(data, nc(data, 3)) == oracles.nc_removed(X, y, 3)
        assert set(map(tuple, tomek_links(data).tolist())) == oracles.tomek_pairs(X, y)
        links = oracles.tomek_pairs(X, y)
        assert removed_rows(data, tomek(data)) == {r for pair in links for r in pair if y[r] == 0}


# --- composites ------------------------------------------------------------------

def test_composites_equal_chained_stages():
    data = blobs(20, 200, d=2, sep=1.5, seed=2)
    cfg = SamplerConfig(seed=42)
    over = smote(data, 1.0, 5, 42)
    for composite, stage in [(smote_tomek, tomek), (smote_enn, lambda d: enn(d, 3))]:
        out = composite(data, cfg)
        chained = stage(over.data)
        np.testing.assert_array_equal(out.data.features, chained.data.features)
        assert class_stats(out.data) == class_stats(chained.data)
        assert out.synthesized_minority == 180
        assert out.removed_majority == chained.removed_majority
        assert set(out.stage_counts) == {"smote", stage.__name__ if stage is tomek else "enn"}


def test_composites_identity_on_balanced_separated():
    data = make_data(np.r_[np.arange(5.0), 50 + np.arange(5.0)], [1] * 5 + [0] * 5)
    for composite in (smote_tomek, smote_enn):
        out = composite(data, SamplerConfig())
        assert out.data.n == data.n and out.removed_majority == 0 and out.synthesized_minority == 0


# --- SMOTE-RUS-NC ------------------------------------------------------------------

def test_srn_counts_example():
    # 100 minority far from 900 majority: NC removes nothing, RUS keeps 200, SMOTE adds 100
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(10, 1, (100, 2)), rng.normal(-10, 1, (900, 2))])
    data = make_data(X, [1] * 100 + [0] * 900)
    out = smote_rus_nc(data, SamplerConfig(alpha_rus=0.5, seed=3))
    sc = out.stage_counts
    assert sc["nc"].n_maj == 900
    assert sc["rus"].n_maj == 200
    assert (sc["smote"].n_min, sc["smote"].n_maj) == (200, 200)
    assert out.data.n == 400
    assert out.data.n == data.n - out.removed_majority + out.synthesized_minority


def test_srn_early_stop_when_nc_balances():
    # three minority points each flanked by majority points; NC removes enough majority
    data = make_data([0.0, 0.1, 0.2, 0.3, 5.0, 5.1, 5.2, 5.3, 5.4], [1, 0, 0, 0, 1, 1, 1, 1, 0])
    cleaned = nc(data, 3)
    stats = class_stats(cleaned.data)
    assert stats.n_maj <= stats.n_min
    out = smote_rus_nc(data, SamplerConfig())
    np.testing.assert_array_equal(out.data.features, cleaned.data.features)
    assert set(out.stage_counts) == {"nc"}
    assert out.synthesized_minority == 0


def test_srn_blobs_balanced_and_on_segments():
    data = blobs(30, 900, d=2, sep=2.0, seed=5)
    out = smote_rus_nc(data, SamplerConfig(alpha_rus=0.5, seed=11))
    final = class_stats(out.data)
    assert final.rho == 1.0
    src = out.smote_input
    synth = out.data.features[src.n:]
    assert len(synth) == out.synthesized_minority == len(out.smote_pairs)
    for x, (i, j) in zip(synth, out.smote_pairs):
        assert oracles.point_segment_distance(x, src.features[i], src.features[j]) < 1e-9


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), alpha=st.sampled_from([0.3, 0.4, 0.5, 0.6, 0.75, 1.0]))
def test_srn_invariants(seed, alpha):
    rng = np.random.default_rng(seed)
    n_pos = int(rng.integers(2, 30))
    data = blobs(n_pos, int(rng.integers(n_pos, 10 * n_pos + 5)), d=int(rng.integers(1, 4)), sep=1.0, seed=seed)
    out = smote_rus_nc(data, SamplerConfig(alpha_rus=alpha, seed=seed))
    sc = out.stage_counts
    # minority originals survive
    assert set(np.flatnonzero(data.labels == 1)) <= set(out.data.origin.tolist())
    assert out.data.n == data.n - out.removed_majority + out.synthesized_minority
    assert sc["nc"].n_min == class_stats(data).n_min
    if "rus" in sc:
        assert sc["rus"].n_min == sc["nc"].n_min
        assert sc["rus"].n_maj == rus_oracle(sc["nc"].n_min, sc["nc"].n_maj, alpha)
        assert sc["smote"].n_maj == sc["rus"].n_maj
        assert sc["smote"].rho == 1.0
    else:
        assert sc["nc"].n_maj <= sc["nc"].n_min
    again = smote_rus_nc(data, SamplerConfig(alpha_rus=alpha, seed=seed))
    assert again.data.features.tobytes() == out.data.features.tobytes()


def test_every_sampler_preserves_minority():
    rng = np.random.default_rng(99)
    for _ in range(10):
        data = random_data(rng, n=int(rng.integers(20, 120)))
        for method in ["none", "rus", "smote", "nc", "enn", "tomek", "smote-enn", "smote-tomek", "smote-rus-nc"]:
            out = resample(method, data, SamplerConfig(seed=3))
            kept = set(out.data.origin[out.data.labels == 1].tolist())
            assert set(np.flatnonzero(data.labels == 1)) <= kept, method


def test_unknown_sampler():
    with pytest.raises(ValueError):
        resample("adasyn", counts_data(2, 2), SamplerConfig())


def test_config_validation():
    for bad in [dict(alpha_rus=0), dict(alpha_rus=1.2), dict(alpha_smote=0), dict(k_nc=0), dict(seed=-1)]:
        with pytest.raises(ValueError):
            SamplerConfig(**bad)


# --- alpha grid ---------------------------------------------------------------------

def test_alpha_grid_examples():
    assert alpha_grid(100, 400, 0.1) == [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    assert alpha_grid(100, 100, 0.1) == []
    # 100 / a < 500 for a > 0.2
    assert alpha_grid(100, 500, 0.1)[:4] == [0.3, 0.4, 0.5, 0.6]
    assert alpha_grid(100, 400, 0.05)[0] == 0.3
    assert alpha_grid(100, 390, 0.05)[0] == 0.3
    assert alpha_grid(100, 410, 0.05)[0] == 0.25
