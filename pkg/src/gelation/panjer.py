"""Exact laws of the compound Poisson total and its conditioned versions.

A compound Poisson sum is described here by its jump intensity measure
``nu_j = lambda P(X = j)`` (kept in log domain).  Panjer's recursion gives

    P(S = 0) = exp(-sum nu),    m P(S = m) = sum_j j nu_j P(S = m - j).

Conditioning on ``S = n`` reproduces the component structure of G(n, c/n);
every conditional law below is built from one or more Panjer tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .duality import solve_duality
from .ensemble import JumpLaw, auto_theta, jump_law

N_CONDITIONAL_CAP = 2000


def panjer_levy(log_nu: np.ndarray, n_max: int, total: float | None = None) -> np.ndarray:
    """Log pmf of S on ``0..n_max`` for log jump intensities ``log_nu[j-1] = log nu_j``.

    Entries of ``log_nu`` may be ``-inf`` (absent jump sizes).  ``total`` is
    the total intensity if known exactly (default: summed from ``log_nu``).
    """
    K = len(log_nu)
    if total is None:
        finite = log_nu[np.isfinite(log_nu)]
        total = math.fsum(np.exp(finite)) if finite.size else 0.0
    a = np.log(np.arange(1, K + 1, dtype=float)) + log_nu
    out = np.full(n_max + 1, -math.inf)
    out[0] = -total
    for m in range(1, n_max + 1):
        J = min(m, K)
        terms = a[:J] + out[m - J : m][::-1]
        top = terms.max()
        if top == -math.inf:
            continue
        out[m] = top + math.log(np.exp(terms - top).sum()) - math.log(m)
    return out


@dataclass(frozen=True)
class CompoundSumTable:
    lam: float
    law: JumpLaw
    logpmf: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return len(self.logpmf) - 1

    @property
    def log_nu(self) -> np.ndarray:
        return math.log(self.lam) + self.law.logp

    def panjer_residuals(self) -> np.ndarray:
        """Relative defect of ``m p(m) = lam sum_j j p_X(j) p(m-j)`` at every m >= 1."""
        a = np.log(np.arange(1, self.law.K + 1, dtype=float)) + self.log_nu
        res = np.zeros(self.n_max + 1)
        for m in range(1, self.n_max + 1):
            J = min(m, self.law.K)
            rhs = float(logsumexp(a[:J] + self.logpmf[m - J : m][::-1]))
            lhs = math.log(m) + self.logpmf[m]
            if np.isfinite(rhs):
                res[m] = abs(math.expm1(lhs - rhs))
        return res


def compound_pmf(law: JumpLaw, lam: float | None = None, n_max: int | None = None) -> CompoundSumTable:
    """Panjer table of S on ``0..n_max``; ``lam`` defaults to ``Z n``."""
    lam = law.intensity if lam is None else float(lam)
    n_max = law.n if n_max is None else n_max
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    return CompoundSumTable(lam, law, panjer_levy(math.log(lam) + law.logp, n_max, total=lam))


@dataclass(frozen=True)
class ConditionalEnsemble:
    table: CompoundSumTable
    n: int

    @property
    def logP_hit(self) -> float:
        return float(self.table.logpmf[self.n])

    @property
    def law(self) -> JumpLaw:
        return self.table.law


def conditional_ensemble(n: int, c: float, theta: float | str = 1.0) -> ConditionalEnsemble:
    if theta == "auto":
        theta = auto_theta(c)
    law = jump_law(n, c, float(theta))
    return ConditionalEnsemble(compound_pmf(law, n_max=n), n)


def condition(table: CompoundSumTable, n: int | None = None) -> ConditionalEnsemble:
    n = table.law.n if n is None else n
    if n > table.n_max:
        raise ValueError("table does not reach the conditioning target")
    return ConditionalEnsemble(table, n)


# --------------------------------------------------------------------------
# Closed-form identities


def log_hit_closed_form(n: int, c: float, logZ: float, m: int | None = None) -> float:
    """``log[ n^m e^{-Zn} q^{mn - m^2/2} / m! ]`` (m = n gives the hitting probability)."""
    m = n if m is None else m
    lq = math.log1p(-c / n)
    return -n * math.exp(logZ) + m * math.log(n) + (m * n - 0.5 * m * m) * lq - math.lgamma(m + 1)


def hit_probability_identity(n: int, c: float, theta: float | str = 1.0, log_p_cmax_le: float | None = None) -> float:
    """``|log P(S = n) - log RHS|``, RHS the closed form times ``P(C_max <= floor(theta n))``.

    For theta < 1 the conditioning probability comes from the exact graph law
    unless supplied.
    """
    ens = conditional_ensemble(n, c, theta)
    K = ens.law.K
    if log_p_cmax_le is None:
        if K >= n:
            log_p_cmax_le = 0.0
        else:
            from .exactgraph import law_by_partitions

            log_p_cmax_le = law_by_partitions(n, c).log_prob_cmax_le(K)
    rhs = log_hit_closed_form(n, c, ens.law.logZ) + log_p_cmax_le
    return abs(ens.logP_hit - rhs)


def ratio_identity_fra(n: int, m: int, c: float, table: CompoundSumTable | None = None) -> float:
    """Residual of ``P(S=m)/P(S=n) = n^{m-n} q^{-(n-m)^2/2} n!/m!`` (untruncated law)."""
    if not (0 <= m <= n):
        raise ValueError("need 0 <= m <= n")
    if table is None:
        table = compound_pmf(jump_law(n, c, 1.0), n_max=n)
    lhs = table.logpmf[m] - table.logpmf[n]
    lq = math.log1p(-c / n)
    rhs = (m - n) * math.log(n) - 0.5 * (n - m) ** 2 * lq + math.lgamma(n + 1) - math.lgamma(m + 1)
    return abs(lhs - rhs)


# --------------------------------------------------------------------------
# Conditional laws given S = n


def _log_poisson(log_rate: float, j: np.ndarray) -> np.ndarray:
    return -math.exp(log_rate) + j * log_rate - gammaln(j + 1)


def conditional_count_pmf(ens: ConditionalEnsemble, k: int) -> np.ndarray:
    """``P(#{i : X_i = k} = j | S = n)`` for j = 0..floor(n/k).

    The k-atom count is Poisson(nu_k) and independent of the sum of the other
    jumps, whose table is computed with the k-atom removed from the intensity.
    """
    n = ens.n
    if k < 1:
        raise ValueError("k must be >= 1")
    log_nu = ens.table.log_nu
    if k > ens.law.K or k > n:
        out = np.zeros(n // k + 1)
        out[0] = 1.0
        return out
    rest = log_nu.copy()
    rest[k - 1] = -math.inf
    rest_pmf = panjer_levy(rest[: min(len(rest), n)], n)
    j = np.arange(0, n // k + 1)
    lp = _log_poisson(float(log_nu[k - 1]), j) + rest_pmf[n - j * k] - ens.logP_hit
    return np.exp(lp)


def conditional_max_log_joint(ens: ConditionalEnsemble, ms=None) -> dict[int, float]:
    """``log P(max X_i = m, S = n)`` for the requested m (default: all of 1..min(K, n)).

    For ``2m > n`` only one jump of size m fits: the joint is
    ``nu_m P(S = n - m)``.  Smaller m need a Panjer table of the jumps below m.
    """
    n = ens.n
    log_nu = ens.table.log_nu
    K = min(ens.law.K, n)
    ms = range(1, K + 1) if ms is None else ms
    nu = np.exp(log_nu)
    out: dict[int, float] = {}
    for m in ms:
        if m < 1 or m > K:
            out[m] = -math.inf
            continue
        if 2 * m > n:
            out[m] = float(log_nu[m - 1] + ens.table.logpmf[n - m])
            continue
        above = math.fsum(nu[m:])
        below = panjer_levy(log_nu[: m - 1], n) if m > 1 else np.r_[0.0, np.full(n, -math.inf)]
        j = np.arange(1, n // m + 1)
        terms = _log_poisson(float(log_nu[m - 1]), j) + below[n - j * m]
        out[m] = -above + float(logsumexp(terms))
    return out


def conditional_max_pmf(ens: ConditionalEnsemble, ms=None) -> dict[int, float]:
    joint = conditional_max_log_joint(ens, ms)
    return {m: math.exp(v - ens.logP_hit) for m, v in joint.items()}


def jump_count_log_joint(ens: ConditionalEnsemble) -> np.ndarray:
    """``log P(N = j, S = n)`` for j = 0..n.

    ``f_j = f_{j-1} * p_X`` is propagated in linear scale with a running log
    offset per row; only entries up to n are kept.
    """
    n = ens.n
    if n > N_CONDITIONAL_CAP:
        raise ValueError(f"jump-count law is capped at n <= {N_CONDITIONAL_CAP}")
    K = min(ens.law.K, n)
    px = np.zeros(K + 1)
    px[1:] = ens.law.probs[:K]
    f = np.zeros(n + 1)
    f[0] = 1.0
    offset = 0.0
    log_fn = np.full(n + 1, -math.inf)
    for j in range(1, n + 1):
        f = np.convolve(f, px)[: n + 1]
        top = f.max()
        if top == 0.0:
            break
        f /= top
        offset += math.log(top)
        if f[n] > 0:
            log_fn[j] = offset + math.log(f[n])
    j = np.arange(n + 1)
    log_lam = math.log(ens.table.lam)
    return _log_poisson(log_lam, j) + log_fn


def conditional_N_pmf(ens: ConditionalEnsemble) -> np.ndarray:
    """``P(N = j | S = n)`` for j = 0..n."""
    return np.exp(jump_count_log_joint(ens) - ens.logP_hit)


def profile_law(ens: ConditionalEnsemble) -> dict[tuple[int, ...], float]:
    """Law of the jump-size counts given S = n, profile by profile.

    Computed from the Poisson counts directly:
    ``prod_k e^{-nu_k} nu_k^{g_k} / g_k!  /  P(S = n)``.
    """
    from .exactgraph import iter_profiles

    n = ens.n
    log_nu = ens.table.log_nu
    K = min(ens.law.K, n)
    total_nu = math.fsum(np.exp(log_nu))
    out = {}
    for gamma in iter_profiles(n, max_part=K):
        lp = -total_nu
        for kk, g in enumerate(gamma[:K]):
            if g:
                lp += g * log_nu[kk] - math.lgamma(g + 1)
        out[gamma] = math.exp(lp - ens.logP_hit)
    return out


# --------------------------------------------------------------------------
# Ratio behind the hitting-probability asymptotics


def giant_shift_index(n: int, c: float, beta: float, a_n: float) -> int:
    T = solve_duality(c).T
    return int(math.floor((1.0 - T / c) * n + beta * a_n * math.sqrt(n)))


def knbeta_ratio(
    n: int,
    c: float,
    beta: float,
    a_n: float,
    theta: float | str = "auto",
    ens: ConditionalEnsemble | None = None,
) -> float:
    """``(1/a_n^2) log[ Z n P(X = k_n(beta)) / P(S = n) ]``."""
    if c <= 1.0:
        raise ValueError("knbeta_ratio needs c > 1")
    if ens is None:
        ens = conditional_ensemble(n, c, theta)
    k = giant_shift_index(n, c, beta, a_n)
    if not (1 <= k <= ens.law.K):
        raise ValueError(f"k_n(beta) = {k} outside the support 1..{ens.law.K}")
    return float(ens.table.log_nu[k - 1] - ens.logP_hit) / a_n**2


def giant_shift_limit(c: float, beta: float) -> float:
    T = solve_duality(c).T
    return -0.5 * beta**2 * (1.0 - T) * (1.0 - c) / (1.0 - T / c)
