"""Finite-n checks of the moderate deviation statements.

Every probability here is exact (Panjer tables and finite sums); the only
approximation is the finite n itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .duality import log_borel, solve_duality
from .ensemble import JumpLaw, auto_theta, ensemble_moments, jump_law
from .panjer import (
    N_CONDITIONAL_CAP,
    conditional_ensemble,
    conditional_count_pmf,
    conditional_max_log_joint,
    compound_pmf,
    jump_count_log_joint,
)
from .rates import QuadraticRate, grand_rates, mdp_rate

STATISTICS = ("max", "count", "N", "grand_sum")
N_CAPS = {"max": 20_000, "count": 20_000, "N": N_CONDITIONAL_CAP, "grand_sum": 20_000}
DEFAULT_DELTA = 0.1


def parse_an_rule(rule: str):
    """``pow:<rho>`` (``a_n = n^rho``, rho in (0, 1/2)) or ``sqrt_log`` (``sqrt(2 log n)``)."""
    if rule == "sqrt_log":
        return lambda n: math.sqrt(2.0 * math.log(n))
    if rule.startswith("pow:"):
        rho = float(rule[4:])
        if not (0.0 < rho < 0.5):
            raise ValueError("power rule needs rho in (0, 0.5)")
        return lambda n: float(n) ** rho
    raise ValueError(f"unknown a_n rule {rule!r}")


@dataclass(frozen=True)
class ScanSpec:
    c: float
    n_grid: tuple[int, ...]
    an_rule: str = "pow:0.25"
    statistic: str = "max"
    k: int = 1  # size for the count statistic
    betas: tuple[float, ...] = (0.5, 1.0)
    delta: float = DEFAULT_DELTA
    theta: float | str = 1.0

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ValueError(f"statistic must be one of {STATISTICS}")
        if list(self.n_grid) != sorted(set(self.n_grid)) or not self.n_grid:
            raise ValueError("n_grid must be strictly increasing")
        if max(self.n_grid) > N_CAPS[self.statistic]:
            raise ValueError(f"{self.statistic} scans are capped at n <= {N_CAPS[self.statistic]}")
        if self.statistic == "max" and self.c <= 1.0:
            raise ValueError("the max statistic needs c > 1")
        if self.c == 1.0:
            raise ValueError("scans are undefined at c = 1")
        n_top = max(self.n_grid)
        if self.a_n(n_top) / math.sqrt(n_top) > 0.25:
            raise ValueError("a_n / sqrt(n) must be <= 0.25 at the largest n")

    def a_n(self, n: int) -> float:
        return parse_an_rule(self.an_rule)(n)

    def rate(self) -> QuadraticRate:
        if self.statistic == "max":
            return mdp_rate("I_max", self.c)
        if self.statistic == "count":
            return mdp_rate("iota_k", self.c, self.k)
        if self.statistic == "N":
            return mdp_rate("j_total", self.c)
        return grand_rates(self.c)[0]

    def center(self, n: int) -> float:
        pair = solve_duality(self.c)
        T, r = pair.T, pair.ratio
        if self.statistic == "max":
            return (1.0 - r) * n
        if self.statistic == "count":
            return math.exp(float(log_borel(self.c, self.k))) * n
        if self.statistic == "N":
            return r * (1.0 - 0.5 * T) * n
        return r * n


@dataclass(frozen=True)
class ScanRow:
    n: int
    beta: float
    a_n: float
    log_prob: float
    scaled: float  # -(1/a_n^2) log P
    rate_at_beta: float
    rate_ball_inf: float

    @property
    def rel_gap(self) -> float:
        """Relative gap to the ball infimum of the rate."""
        return abs(self.scaled - self.rate_ball_inf) / self.rate_ball_inf

    @property
    def rel_gap_point(self) -> float:
        return abs(self.scaled - self.rate_at_beta) / self.rate_at_beta


def _window(center: float, beta: float, delta: float, scale: float) -> tuple[int, int]:
    """Integer range ``[lo, hi)`` covering ``[center + (beta - delta) scale, center + (beta + delta) scale)``."""
    lo = math.ceil(center + (beta - delta) * scale)
    hi = math.ceil(center + (beta + delta) * scale)
    return lo, hi


def _statistic_log_pmf(spec: ScanSpec, n: int, values: range):
    """Log of the statistic's law (conditioned on S = n except for grand_sum) on ``values``."""
    c = spec.c
    theta = auto_theta(c) if spec.theta == "auto" else spec.theta
    if spec.statistic == "grand_sum":
        law = jump_law(n, c, float(theta))
        hi = max(values.stop, 1)
        tab = compound_pmf(law, n_max=hi)
        lp = tab.logpmf
        return np.array([lp[v] if 0 <= v < len(lp) else -math.inf for v in values])
    ens = conditional_ensemble(n, c, theta)
    if spec.statistic == "max":
        joint = conditional_max_log_joint(ens, values)
        return np.array([joint[v] for v in values]) - ens.logP_hit
    if spec.statistic == "count":
        with np.errstate(divide="ignore"):
            lp = np.log(conditional_count_pmf(ens, spec.k))
    else:
        lp = jump_count_log_joint(ens) - ens.logP_hit
    return np.array([lp[v] if 0 <= v < len(lp) else -math.inf for v in values])


def ball_log_prob(spec: ScanSpec, n: int, beta: float) -> float:
    a = spec.a_n(n)
    lo, hi = _window(spec.center(n), beta, spec.delta, a * math.sqrt(n))
    if hi <= lo:
        return -math.inf
    lp = _statistic_log_pmf(spec, n, range(lo, hi))
    return float(logsumexp(lp))


def conditional_mdp_scan(spec: ScanSpec, parallel_map=map) -> list[ScanRow]:
    """Rows ordered by (n, beta); ``parallel_map`` must preserve order."""
    rate = spec.rate()

    def one(n: int) -> list[ScanRow]:
        a = spec.a_n(n)
        out = []
        for beta in spec.betas:
            lp = ball_log_prob(spec, n, beta)
            out.append(
                ScanRow(
                    n,
                    beta,
                    a,
                    lp,
                    -lp / a**2,
                    float(rate.value(beta)),
                    rate.ball_infimum(beta, spec.delta),
                )
            )
        return out

    rows: list[ScanRow] = []
    for block in parallel_map(one, spec.n_grid):
        rows.extend(block)
    return rows


def trend_report(rows: list[ScanRow], target: str = "ball") -> dict[float, dict]:
    """Per beta: gaps along n, whether they shrink monotonically, and the final gap."""
    out = {}
    for beta in sorted({r.beta for r in rows}):
        sel = sorted((r for r in rows if r.beta == beta), key=lambda r: r.n)
        gaps = [r.rel_gap if target == "ball" else r.rel_gap_point for r in sel]
        out[beta] = {
            "n": [r.n for r in sel],
            "scaled": [r.scaled for r in sel],
            "gaps": gaps,
            "monotone": all(g1 <= g0 for g0, g1 in zip(gaps, gaps[1:])),
            "final_gap": gaps[-1],
        }
    return out


# --------------------------------------------------------------------------
# Log-MGF expansion


@dataclass(frozen=True)
class MgfCheck:
    exact: float
    predicted: float

    @property
    def residual(self) -> float:
        return abs(self.exact - self.predicted)


def mgf_expansion_check(
    law: JumpLaw, lam: float, xi: float, a_n: float, n: int, variant: str = "random", u: float = 0.0
) -> MgfCheck:
    """Scaled centred log-MGF of a random-count or fixed-count sum versus its quadratic.

    ``random``: ``N ~ Poisson(lam n)``; predicted ``xi^2 lam (sigma^2 + mu^2) / 2``.
    ``fixed``: ``floor(lam n + u a_n sqrt n)`` terms; predicted ``xi^2 lam sigma^2 / 2``.
    Centring uses the finite-n mean of the jump law.
    """
    m = ensemble_moments(law)
    mu, sigma2 = m.mean, m.variance
    s = xi * a_n / math.sqrt(n)
    k = law.support.astype(float)
    log_mgf = float(logsumexp(law.logp + s * k))
    if variant == "random":
        # log E e^{s S} = lam n (E e^{sY} - 1)
        exact = (lam * n * math.expm1(log_mgf) - s * lam * mu * n) / a_n**2
        predicted = 0.5 * xi * xi * lam * (sigma2 + mu * mu)
    elif variant == "fixed":
        count_f = lam * n + u * a_n * math.sqrt(n)
        count = math.floor(count_f)
        exact = (count * log_mgf - s * count_f * mu) / a_n**2
        predicted = 0.5 * xi * xi * lam * sigma2
    else:
        raise ValueError("variant must be 'random' or 'fixed'")
    return MgfCheck(exact, predicted)


def quadratic_coefficient(law: JumpLaw, lam: float, a_n: float, n: int, variant: str, xis=(-0.5, -0.25, 0.25, 0.5)) -> float:
    """Least-squares ``C`` in ``exact(xi) ~ C xi^2 / 2`` over a small xi grid."""
    xs = np.asarray(xis, dtype=float)
    ys = np.array([mgf_expansion_check(law, lam, x, a_n, n, variant).exact for x in xs])
    return float(2.0 * (xs**2 @ ys) / (xs**4).sum())


# --------------------------------------------------------------------------
# Probability that every jump stays below alpha n


@dataclass(frozen=True)
class AlphanRow:
    n: int
    a_n: float
    scaled_log_prob: float  # (1/a_n^2) log P(all jumps <= alpha n)
    markov_bound: float  # Z E X / (alpha a_n^2)

    @property
    def bound_ok(self) -> bool:
        return abs(self.scaled_log_prob) <= self.markov_bound

    @property
    def tightness(self) -> float:
        return abs(self.scaled_log_prob) / self.markov_bound


def alphan_check(c: float, theta: float, alpha: float, an_rule: str, n_grid) -> list[AlphanRow]:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    a_of = parse_an_rule(an_rule)
    rows = []
    for n in n_grid:
        law = jump_law(n, c, theta)
        a = a_of(n)
        cut = math.floor(alpha * n + 1e-9)
        tail = law.logp[cut:] if cut < law.K else np.array([])
        # log P(no jump above cut) = -lam P(X > cut)
        lam_tail = math.exp(law.log_intensity + float(logsumexp(tail))) if tail.size else 0.0
        mean = ensemble_moments(law).mean
        rows.append(AlphanRow(n, a, -lam_tail / a**2, law.Z * mean / (alpha * a**2)))
    return rows


def subcritical_hit_trend(c: float, n_grid, an_rule: str = "sqrt_log") -> list[tuple[int, float]]:
    """``(1/a_n^2) log P(S = n)`` along the grid (tends to 0 for c < 1)."""
    if c >= 1.0:
        raise ValueError("needs c < 1")
    a_of = parse_an_rule(an_rule)
    return [(n, conditional_ensemble(n, c, 1.0).logP_hit / a_of(n) ** 2) for n in n_grid]
