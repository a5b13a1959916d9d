import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gelation.duality import solve_duality
from gelation.simulate import (
    MomentAccumulator,
    _decode_pairs,
    clt_constants_check,
    cmax_variance_candidates,
    cn_variance_limit,
    count_variance_limit,
    jackknife_variance_se,
    parse_track,
    run_replicas,
    sample_edges,
    sample_graph_stats,
    replica_rng,
    stats_from_sizes,
)


def test_single_vertex():
    s = sample_graph_stats(1, 0.5, seed=3)
    assert (s.cmax, s.cn, s.t(1)) == (1, 1, 1)


def test_decode_round_trip():
    idx = np.arange(0, 100_000)
    i, j = _decode_pairs(idx)
    assert np.all(i < j)
    assert np.all(j * (j - 1) // 2 + i == idx)


def test_decode_large_indices():
    idx = np.array([10**12, 1_249_999_975_000 - 1], dtype=np.int64)
    i, j = _decode_pairs(idx)
    assert np.all(j * (j - 1) // 2 + i == idx) and np.all(i < j)


def test_edges_distinct_and_in_range():
    rows, cols = sample_edges(500, 0.02, replica_rng(1, 0))
    assert np.all(rows < cols) and cols.max() < 500
    assert len(set(zip(rows.tolist(), cols.tolist()))) == len(rows)


def test_edge_count_mean():
    n, p = 400, 0.01
    counts = [len(sample_edges(n, p, replica_rng(5, r))[0]) for r in range(200)]
    expected = n * (n - 1) / 2 * p
    sd = math.sqrt(expected * (1 - p) / 200)
    assert abs(np.mean(counts) - expected) <= 4 * sd


def test_three_vertex_connectivity_frequency():
    # mu_3 = 3p^2 - 2p^3 at p = 1/3
    p = 1 / 3
    mu3 = 3 * p**2 - 2 * p**3
    R = 10_000
    hits = sum(sample_graph_stats(3, 1.0, 11, r).cmax == 3 for r in range(R))
    assert abs(hits / R - mu3) <= 3 * math.sqrt(mu3 * (1 - mu3) / R)


def test_reject_c_at_least_n():
    with pytest.raises(ValueError):
        sample_graph_stats(5, 5.0, 0)


def test_stats_assert_mass():
    with pytest.raises(AssertionError):
        stats_from_sizes(10, np.array([3, 3]))


def test_same_seed_same_stats():
    a = sample_graph_stats(2000, 2.0, 42, 7)
    b = sample_graph_stats(2000, 2.0, 42, 7)
    assert a.cmax == b.cmax and np.array_equal(a.counts, b.counts)


def test_thread_count_does_not_change_results():
    track = parse_track("cmax,cn,t:1")
    a = run_replicas(300, 2.0, 40, 9, track, threads=1)
    b = run_replicas(300, 2.0, 40, 9, track, threads=4)
    assert np.array_equal(a.values, b.values)


def test_giant_fraction_law_of_large_numbers():
    n, c = 100_000, 2.0
    tab = run_replicas(n, c, 100, 2024, ["cmax"], threads=1)
    assert abs(tab.column("cmax").mean() / n - solve_duality(c).giant_fraction) <= 0.01


def test_parse_track():
    assert parse_track("cmax, t:3") == ["cmax", "t:3"]
    with pytest.raises(ValueError):
        parse_track("t:0")
    with pytest.raises(ValueError):
        parse_track("size")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=60), st.integers(1, 59))
def test_accumulator_matches_numpy_and_merges(xs, cut):
    cut = min(cut, len(xs) - 1)
    whole = MomentAccumulator()
    whole.extend(xs)
    a, b = MomentAccumulator(), MomentAccumulator()
    a.extend(xs[:cut])
    b.extend(xs[cut:])
    merged = a.merge(b)
    scale = max(1.0, np.var(xs) * len(xs))
    assert merged.count == whole.count
    assert abs(merged.M2 - whole.M2) <= 1e-12 * scale
    assert whole.variance == pytest.approx(np.var(xs, ddof=1), rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=3, max_size=20), st.lists(st.floats(-100, 100), min_size=3, max_size=20), st.lists(st.floats(-100, 100), min_size=3, max_size=20))
def test_merge_associative(x, y, z):
    acc = []
    for v in (x, y, z):
        m = MomentAccumulator()
        m.extend(v)
        acc.append(m)
    left = acc[0].merge(acc[1]).merge(acc[2])
    right = acc[0].merge(acc[1].merge(acc[2]))
    scale = max(1.0, left.M2)
    assert abs(left.M2 - right.M2) <= 1e-12 * scale
    assert left.mean == pytest.approx(right.mean, rel=1e-12, abs=1e-12)


def test_jackknife_matches_explicit_loop():
    x = np.random.default_rng(0).normal(size=40)
    loo = np.array([np.var(np.delete(x, i), ddof=1) for i in range(len(x))])
    explicit = math.sqrt((len(x) - 1) / len(x) * ((loo - loo.mean()) ** 2).sum())
    assert jackknife_variance_se(x) == pytest.approx(explicit, rel=1e-10)


def test_variance_limits_hand_values():
    # k = 1: e^{-c} + (c - 1) e^{-2c}; C_n at c = 2 collapses to T/2
    assert count_variance_limit(0.5, 1) == pytest.approx(math.exp(-0.5) - 0.5 * math.exp(-1.0), rel=1e-14)
    T = solve_duality(2.0).T
    assert cn_variance_limit(2.0) == pytest.approx(T / 2, rel=1e-14)
    cand = cmax_variance_candidates(2.0)
    assert cand["A"] == pytest.approx(cand["B"] * (1 - T / 2), rel=1e-14)


def test_clt_requires_replicas():
    with pytest.raises(ValueError):
        clt_constants_check(100, 2.0, 100, 0)


def test_clt_small_run_structure():
    rep = clt_constants_check(2000, 2.0, 500, 3, k_max=2, threads=1)
    assert [c.name for c in rep.checks] == ["t:1", "t:2", "cn"]
    assert {c.name for c in rep.cmax_candidates} == {"cmax:A", "cmax:B"}
