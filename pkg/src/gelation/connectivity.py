"""Probability that G(k, p) is connected, exactly and asymptotically.

The textbook complement recursion

    mu_k = 1 - sum_{j<k} C(k-1, j-1) mu_j (1-p)^{j(k-j)}

cancels catastrophically once ``mu_k`` drops below machine epsilon, which
happens for ``k`` of order ``n`` when ``p = c/n``.  The main route therefore
goes through the tree inversion enumerator ``I_k``::

    mu_k(p) = p^(k-1) (1-p)^C(k-1,2) I_k(1/(1-p))

and Kreweras' recursion, whose terms are all positive.  With
``B_k = I_k / (k-1)!`` and ``[j]_x = 1 + x + ... + x^(j-1)``::

    B_1 = 1,    m B_{m+1} = sum_{j=1}^{m} [j]_x B_j B_{m+1-j}.

The complement recursion survives as an exact-rational oracle for small k and
as a residual check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

RATIONAL_K_MAX = 30


def _check_p(p: float) -> float:
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    return p


def log_inversion_table(p: float, K: int) -> np.ndarray:
    """``log B_k`` for k = 1..K at ``x = 1/(1-p)`` (index 0 <-> k = 1)."""
    p = _check_p(p)
    lx = -math.log1p(-p)
    log_xm1 = math.log(p) - math.log1p(-p)
    j = np.arange(1, K + 1, dtype=float)
    # log [j]_x = log(x^j - 1) - log(x - 1)
    log_bracket = np.log(np.expm1(j * lx)) - log_xm1

    log_b = np.empty(K)
    log_b[0] = 0.0
    for m in range(1, K):
        terms = log_bracket[:m] + log_b[:m] + log_b[m - 1 :: -1]
        top = terms.max()
        log_b[m] = top + math.log(np.exp(terms - top).sum()) - math.log(m)
    return log_b


@dataclass(frozen=True)
class MuTable:
    p: float
    log_mu: np.ndarray  # log mu_1..mu_K, index 0 <-> k = 1
    log_b: np.ndarray = field(repr=False)
    rational: tuple[Fraction, ...] | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return len(self.log_mu)

    def __getitem__(self, k: int) -> float:
        return float(np.exp(self.log_mu[k - 1]))


def mu_exact(p: float, K: int, exact_rational: bool | None = None) -> MuTable:
    """Connectivity probabilities mu_1..mu_K of G(k, p).

    ``exact_rational`` defaults to True for ``K <= 30`` and attaches the
    complement recursion evaluated in exact rationals.
    """
    p = _check_p(p)
    if K < 1:
        raise ValueError("K must be >= 1")
    log_b = log_inversion_table(p, K)
    k = np.arange(1, K + 1, dtype=float)
    log_mu = (k - 1) * math.log(p) + 0.5 * (k - 1) * (k - 2) * math.log1p(-p) + log_b + gammaln(k)
    if exact_rational is None:
        exact_rational = K <= RATIONAL_K_MAX
    rational = tuple(mu_rational(p, K)) if exact_rational else None
    return MuTable(p, log_mu, log_b, rational)


def mu_rational(p, K: int) -> list[Fraction]:
    """Complement recursion in exact rationals; ``p`` is converted exactly."""
    p = Fraction(p)
    q = 1 - p
    max_pow = (K // 2) * (K - K // 2)
    qpow = [Fraction(1)]
    for _ in range(max_pow):
        qpow.append(qpow[-1] * q)
    mu: list[Fraction] = []
    for kk in range(1, K + 1):
        s = Fraction(0)
        for jj in range(1, kk):
            s += math.comb(kk - 1, jj - 1) * mu[jj - 1] * qpow[jj * (kk - jj)]
        mu.append(1 - s)
    return mu


def complement_residuals(table: MuTable) -> np.ndarray:
    """``|1 - sum_{j<=k} C(k-1, j-1) mu_j q^{j(k-j)}|`` for every k in the table."""
    lq = math.log1p(-table.p)
    out = np.empty(table.K)
    for kk in range(1, table.K + 1):
        jj = np.arange(1, kk + 1)
        log_binom = gammaln(kk) - gammaln(jj) - gammaln(kk - jj + 1)
        terms = np.exp(log_binom + table.log_mu[:kk] + jj * (kk - jj) * lq)
        out[kk - 1] = abs(1.0 - math.fsum(terms))
    return out


# --------------------------------------------------------------------------
# Asymptotic estimates for mu_k(c/n)


def mu_stepanov_small(k: int, c: float, n: int) -> float:
    """Log of the leading term ``k^(k-2) (c/n)^(k-1)`` (valid for k = o(sqrt n))."""
    if k < 1 or n < k:
        raise ValueError("need 1 <= k <= n")
    return (k - 2) * math.log(k) + (k - 1) * (math.log(c) - math.log(n))


def stepanov_prefactor(alpha: float, c: float) -> float:
    """``1 - a/(e^a - 1)`` with ``a = alpha c``."""
    a = alpha * c
    return 1.0 - a / math.expm1(a)


def mu_stepanov_linear(alpha: float, c: float, n: int) -> float:
    """Log of the linear-size estimate of ``mu_{ceil(alpha n)}(c/n)``."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    a = alpha * c
    return math.log(stepanov_prefactor(alpha, c)) + alpha * n * math.log(-math.expm1(-a))


@dataclass(frozen=True)
class SandwichReport:
    c: float
    n: int
    K: int
    log_ratio: np.ndarray  # log of n^{k-1} mu_k / (k^{k-2} c^{k-1})
    log_lower: np.ndarray  # (k-1)(k-2)/2 log(1 - c/n)
    first_violation: int | None

    @property
    def ok(self) -> bool:
        return self.first_violation is None


def sandwich_bounds(c: float, n: int, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Log lower and upper bounds on ``mu_k(c/n)`` for k = 1..K."""
    k = np.arange(1, K + 1, dtype=float)
    upper = (k - 2) * np.log(k) + (k - 1) * (math.log(c) - math.log(n))
    lower = upper + 0.5 * (k - 1) * (k - 2) * math.log1p(-c / n)
    return lower, upper


def mu_sandwich_check(c: float, n: int, K: int, tol: float = 1e-12, table: MuTable | None = None) -> SandwichReport:
    if K > n:
        raise ValueError("K must not exceed n")
    if table is None:
        table = mu_exact(c / n, K, exact_rational=False)
    k = np.arange(1, K + 1, dtype=float)
    log_ratio = (k - 1) * math.log(n) + table.log_mu[:K] - (k - 2) * np.log(k) - (k - 1) * math.log(c)
    log_lower = 0.5 * (k - 1) * (k - 2) * math.log1p(-c / n)
    bad = np.flatnonzero((log_ratio < log_lower - tol) | (log_ratio > tol))
    first = int(bad[0]) + 1 if bad.size else None
    return SandwichReport(c, n, K, log_ratio, log_lower, first)


@lru_cache(maxsize=32)
def mu_graph(n: int, c: float) -> MuTable:
    """Cached ``mu_exact(c/n, n)``; the table every G(n, c/n) computation needs."""
    if not (0 < c < n):
        raise ValueError(f"need 0 < c < n, got c={c}, n={n}")
    return mu_exact(c / n, n, exact_rational=False)
