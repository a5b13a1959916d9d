import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gelation.duality import solve_duality
from gelation.ensemble import JumpLaw, auto_theta, jump_law
from gelation.exactgraph import derived_laws, law_by_partitions, total_variation
from gelation.panjer import (
    compound_pmf,
    condition,
    conditional_count_pmf,
    conditional_ensemble,
    conditional_max_pmf,
    conditional_N_pmf,
    hit_probability_identity,
    giant_shift_limit,
    knbeta_ratio,
    panjer_levy,
    profile_law,
    ratio_identity_fra,
)


def _toy_law(probs):
    logp = np.log(np.asarray(probs, dtype=float))
    return JumpLaw(n=len(probs), c=1.0, theta=1.0, logZ=0.0, logp=logp)


def test_convolution_power_oracle():
    law = _toy_law([0.6, 0.4])
    tab = compound_pmf(law, lam=1.0, n_max=6)
    px = np.array([0.0, 0.6, 0.4])
    oracle = np.zeros(7)
    conv = np.array([1.0])
    for j in range(7):
        m = min(len(conv), 7)
        oracle[:m] += math.exp(-1.0) / math.factorial(j) * conv[:m]
        conv = np.convolve(conv, px)
    assert np.allclose(np.exp(tab.logpmf), oracle, rtol=1e-13, atol=0)


def test_first_two_masses():
    law = jump_law(30, 2.0)
    tab = compound_pmf(law)
    assert tab.logpmf[0] == -tab.lam
    assert tab.logpmf[1] == pytest.approx(-tab.lam + math.log(tab.lam) + law.logp[0], rel=1e-14)


@pytest.mark.parametrize("n, c", [(200, 2.0), (500, 0.5)])
def test_panjer_residuals(n, c):
    tab = compound_pmf(jump_law(n, c))
    assert tab.panjer_residuals().max() <= 1e-11
    assert math.fsum(np.exp(tab.logpmf)) <= 1 + 1e-12


def test_panjer_rejects_negative_range():
    with pytest.raises(ValueError):
        compound_pmf(jump_law(10, 2.0), n_max=-1)


def test_absent_sizes_allowed():
    lp = panjer_levy(np.array([-math.inf, 0.0]), 5)
    assert lp[1] == -math.inf and lp[3] == -math.inf
    assert lp[4] == pytest.approx(-1.0 - math.log(2), rel=1e-14)


def test_hit_identity_untruncated():
    assert hit_probability_identity(10, 0.5, 1.0) <= 1e-9


@pytest.mark.parametrize("n, c", [(20, 2.0), (12, 2.0), (30, 1.2)])
def test_hit_identity_truncated(n, c):
    assert hit_probability_identity(n, c, "auto") <= 1e-8


def test_hit_identity_half_theta():
    assert hit_probability_identity(16, 2.0, 0.5) <= 1e-8


@pytest.mark.parametrize("n, m, c", [(15, 10, 2.0), (30, 29, 0.5), (40, 20, 2.0), (9, 9, 0.5)])
def test_ratio_identity(n, m, c):
    assert ratio_identity_fra(n, m, c) <= 1e-9


def test_ratio_identity_rejects():
    with pytest.raises(ValueError):
        ratio_identity_fra(5, 6, 0.5)


@pytest.mark.parametrize("c", [0.5, 2.0])
@pytest.mark.parametrize("n", [3, 7, 12])
@pytest.mark.parametrize("theta", [1.0, 0.5])
def test_conditional_laws_match_graph(n, c, theta):
    if theta * n < 1:
        pytest.skip("empty support")
    ens = conditional_ensemble(n, c, theta)
    law = law_by_partitions(n, c).restrict(ens.law.K)
    d = derived_laws(law)
    assert total_variation(profile_law(ens), law.probs()) <= 1e-9
    assert total_variation(conditional_max_pmf(ens), d.cmax) <= 1e-9
    assert total_variation(dict(enumerate(conditional_N_pmf(ens))), d.cn) <= 1e-9
    for k in (1, 2, 3):
        pmf = conditional_count_pmf(ens, k)
        assert total_variation(dict(enumerate(pmf)), d.counts[k]) <= 1e-9


@pytest.mark.parametrize("n, c, k", [(12, 0.5, 1), (12, 2.0, 3)])
def test_count_mean_matches_graph(n, c, k):
    pmf = conditional_count_pmf(conditional_ensemble(n, c), k)
    d = derived_laws(law_by_partitions(n, c))
    assert math.fsum(pmf) == pytest.approx(1.0, abs=1e-10)
    assert math.fsum(j * p for j, p in enumerate(pmf)) == pytest.approx(d.mean(d.counts[k]), abs=1e-9)


def test_count_beyond_n_is_point_mass():
    pmf = conditional_count_pmf(conditional_ensemble(8, 2.0, 0.5), 6)
    assert pmf[0] == 1.0 and pmf.sum() == 1.0


def test_conditional_sums_to_one_at_scale():
    ens = conditional_ensemble(600, 2.0)
    assert math.fsum(conditional_max_pmf(ens).values()) == pytest.approx(1.0, abs=1e-10)
    assert math.fsum(conditional_count_pmf(ens, 2)) == pytest.approx(1.0, abs=1e-10)
    assert math.fsum(conditional_N_pmf(ens)) == pytest.approx(1.0, abs=1e-10)


def test_max_mode_near_giant():
    n, c = 200, 2.0
    pmf = conditional_max_pmf(conditional_ensemble(n, c))
    mode = max(pmf, key=pmf.get)
    assert abs(mode - solve_duality(c).giant_fraction * n) <= 3


def test_N_mean_law_of_large_numbers():
    n, c = 1000, 2.0
    T = solve_duality(c).T
    pmf = conditional_N_pmf(conditional_ensemble(n, c))
    mean = math.fsum(j * p for j, p in enumerate(pmf))
    assert abs(mean / n - (T / c) * (1 - T / 2)) <= 0.01


def test_N_cap():
    with pytest.raises(ValueError):
        conditional_N_pmf(conditional_ensemble(2001, 0.5))


def test_giant_shift_ratio_trend():
    c, beta = 2.0, 1.0
    vals = []
    for n in (1000, 4000):
        ens = conditional_ensemble(n, c)
        vals.append(knbeta_ratio(n, c, beta, n**0.25, ens=ens))
    lim = giant_shift_limit(c, beta)
    assert lim > 0
    assert abs(vals[1] - lim) < abs(vals[0] - lim)


def test_giant_shift_ratio_zero_beta():
    vals = [abs(knbeta_ratio(n, 2.0, 0.0, n**0.25)) for n in (500, 2000)]
    assert vals[1] < vals[0] < 0.01


def test_giant_shift_ratio_rejects_subcritical():
    with pytest.raises(ValueError):
        knbeta_ratio(100, 0.5, 1.0, 3.0)


def test_condition_helper():
    tab = compound_pmf(jump_law(20, 2.0), n_max=25)
    assert condition(tab, 20).logP_hit == tab.logpmf[20]
    with pytest.raises(ValueError):
        condition(tab, 30)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.sampled_from([0.3, 0.5, 1.5, 2.0]))
def test_ratio_identity_property(n, c):
    if c >= n:
        return
    tab = compound_pmf(jump_law(n, c))
    for m in {n - 1, n // 2}:
        assert ratio_identity_fra(n, m, c, tab) <= 1e-8
