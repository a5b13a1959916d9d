import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gelation.connectivity import (
    complement_residuals,
    mu_exact,
    mu_graph,
    mu_rational,
    mu_sandwich_check,
    mu_stepanov_linear,
    mu_stepanov_small,
    stepanov_prefactor,
)


def test_small_k_closed_forms():
    p = 0.3
    t = mu_exact(p, 4)
    assert t[1] == 1.0
    assert t[2] == pytest.approx(p, rel=1e-15)
    assert t[3] == pytest.approx(3 * p**2 - 2 * p**3, rel=1e-14)
    # 16 spanning trees on 4 vertices plus the denser connected graphs
    q = 1 - p
    mu4 = 16 * p**3 * q**3 + 15 * p**4 * q**2 + 6 * p**5 * q + p**6
    assert t[4] == pytest.approx(mu4, rel=1e-14)


def test_rational_oracle_exact_values():
    mu = mu_rational(Fraction(1, 2), 4)
    assert mu[1] == Fraction(1, 2)
    assert mu[2] == Fraction(3, 4) - Fraction(2, 8)
    # 38 connected labelled graphs on 4 vertices out of 64
    assert mu[3] == Fraction(38, 64)


@pytest.mark.parametrize("p", [0.01, 0.3, 0.9])
def test_log_route_matches_rationals(p):
    t = mu_exact(p, 30, exact_rational=True)
    exact = np.array([float(v) for v in t.rational])
    assert np.allclose(np.exp(t.log_mu), exact, rtol=1e-12, atol=0)


def test_complement_residual_small_at_scale():
    t = mu_graph(100, 2.0)
    assert complement_residuals(t).max() <= 1e-12


@pytest.mark.parametrize("c, n", [(2.0, 100), (0.5, 200), (3.0, 60)])
def test_sandwich_bounds_hold(c, n):
    assert mu_sandwich_check(c, n, min(40, n)).ok


def test_sandwich_flags_corrupted_table():
    t = mu_exact(0.02, 20, exact_rational=False)
    bad = type(t)(t.p, t.log_mu + 0.1, t.log_b)
    rep = mu_sandwich_check(2.0, 100, 20, table=bad)
    # mu_1 = 1 already sits on the upper bound, so k = 1 is the first violation
    assert not rep.ok and rep.first_violation == 1


def test_stepanov_small_k_trend():
    # relative error of the leading term at k = 3 shrinks with n
    c = 2.0
    errs = []
    for n in (100, 1000, 10000):
        exact = float(mu_graph(n, c).log_mu[2])
        errs.append(abs(exact - mu_stepanov_small(3, c, n)))
    assert errs[0] > errs[1] > errs[2]


def test_stepanov_linear_trend():
    # per-vertex log error of the linear-size estimate vanishes
    c, alpha = 2.0, 0.5
    errs = []
    for n in (200, 800, 3200):
        k = math.ceil(alpha * n)
        exact = float(mu_graph(n, c).log_mu[k - 1])
        errs.append(abs(exact - mu_stepanov_linear(alpha, c, n)) / n)
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_stepanov_prefactor_positive():
    assert 0 < stepanov_prefactor(0.3, 2.0) < 1


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        mu_exact(0.0, 5)
    with pytest.raises(ValueError):
        mu_exact(1.0, 5)
    with pytest.raises(ValueError):
        mu_graph(3, 3.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.001, 0.999), st.integers(2, 25))
def test_mu_is_a_probability_and_increasing_in_p(p, K):
    lo = mu_exact(p * 0.9, K, exact_rational=False).log_mu
    hi = mu_exact(p, K, exact_rational=False).log_mu
    assert np.all(hi <= 1e-12)
    assert np.all(hi >= lo - 1e-12)
