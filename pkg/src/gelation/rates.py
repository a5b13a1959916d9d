"""Rate functions: moderate deviation quadratics, the largest-component LDP
rate and the empirical-measure rates of the component counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .duality import DEFAULT_K, borel_moments, log_borel, solve_duality

QUADRATIC_NAMES = (
    "I_max",
    "iota_k",
    "j_total",
    "grand_sum",
    "grand_fixed",
    "grand_excl_k",
    "mdplemma_a",
    "mdplemma_b",
)


@dataclass(frozen=True)
class QuadraticRate:
    """``x -> kappa x^2 / 2``."""

    name: str
    kappa: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in QUADRATIC_NAMES:
            raise ValueError(f"unknown rate {self.name!r}")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa!r}")

    def value(self, x):
        return 0.5 * self.kappa * np.asarray(x, dtype=float) ** 2

    def __call__(self, x):
        return self.value(x)

    @property
    def variance(self) -> float:
        """Variance of the Gaussian fluctuation this rate describes (``1/kappa``)."""
        return 1.0 / self.kappa

    def ball_infimum(self, beta: float, delta: float) -> float:
        """``inf`` of the rate over ``[beta - delta, beta + delta]``."""
        d = max(abs(beta) - delta, 0.0)
        return 0.5 * self.kappa * d * d


def _reject_critical(c: float) -> float:
    c = float(c)
    if c == 1.0:
        raise ValueError("rates are undefined at c = 1")
    return c


def _h(c: float, k: int) -> float:
    return float(math.exp(log_borel(c, k)))


def mdp_rate(name: str, c: float, k: int | None = None) -> QuadraticRate:
    """Conditional MDP quadratics: ``I_max``, ``iota_k`` and ``j_total``.

    For ``I_max`` the coefficient is ``(1-T)^2 / ((T/c)(1-T/c))`` (so the
    implied variance is ``(T/c)(1-T/c)/(1-T)^2``); its reciprocal is kept in
    ``params["reciprocal_form"]``.
    """
    c = _reject_critical(c)
    pair = solve_duality(c)
    T, r = pair.T, pair.ratio
    if name == "I_max":
        if c < 1.0:
            raise ValueError("I_max needs c > 1 (no giant component below 1)")
        kappa = (1.0 - T) ** 2 / (r * (1.0 - r))
        return QuadraticRate(name, kappa, {"c": c, "T": T, "reciprocal_form": 1.0 / kappa})
    if name == "iota_k":
        if k is None or k < 1:
            raise ValueError("iota_k needs k >= 1")
        h = _h(c, k)
        return QuadraticRate(name, 1.0 / (h + (c - 1.0) * k * k * h * h), {"c": c, "T": T, "k": k})
    if name == "j_total":
        return QuadraticRate(name, 1.0 / (r * (1.0 + 0.5 * T - r)), {"c": c, "T": T})
    raise ValueError(f"mdp_rate does not provide {name!r}")


def grand_rates(c: float, theta: float = 1.0, k: int = 1) -> tuple[QuadraticRate, QuadraticRate, QuadraticRate]:
    """Unconditioned (grand canonical) MDP quadratics.

    Random-count sum, fixed-count sum and random-count sum with the k-jumps
    removed.  ``theta`` does not enter the limits; it is echoed in params.
    """
    c = _reject_critical(c)
    T = solve_duality(c).T
    r = T / c
    base = {"c": c, "T": T, "theta": theta}
    denom = r / (1.0 - T) - k * k * _h(c, k)
    if denom <= 0:
        raise ValueError(f"degenerate excluded-atom rate at k={k}")
    return (
        QuadraticRate("grand_sum", (1.0 - T) / r, base),
        QuadraticRate("grand_fixed", (1.0 - T) * (2.0 - T) * c / (T * T), base),
        QuadraticRate("grand_excl_k", 1.0 / denom, {**base, "k": k}),
    )


def poisson_sum_rates(lam: float, mu: float, sigma2: float) -> tuple[QuadraticRate, QuadraticRate]:
    """Random-count sum ``1/(lam (sigma^2 + mu^2))`` and fixed-count sum ``1/(lam sigma^2)``."""
    p = {"lambda": lam, "mu": mu, "sigma2": sigma2}
    return (
        QuadraticRate("mdplemma_a", 1.0 / (lam * (sigma2 + mu * mu)), p),
        QuadraticRate("mdplemma_b", 1.0 / (lam * sigma2), p),
    )


# --------------------------------------------------------------------------
# Two-term combinations from the conditional MDP lower/upper bounds


def _giant_shift_coefficient(c: float) -> float:
    """``(1-T)(1-c)/(1-T/c)``; negative for c > 1."""
    T = solve_duality(c).T
    return (1.0 - T) * (1.0 - c) / (1.0 - T / c)


@dataclass(frozen=True)
class CombinationCheck:
    kappa_numeric: float
    kappa_closed: float
    argmin: float
    argmin_closed: float

    @property
    def residual(self) -> float:
        return abs(self.kappa_numeric - self.kappa_closed)


def _minimize(f) -> tuple[float, float]:
    res = minimize_scalar(f, bracket=(-1.0, 1.0), tol=1e-14)
    return float(res.fun), float(res.x)


def iota_combination(c: float, k: int) -> CombinationCheck:
    """Minimise ``a y^2 + b (k - y)^2`` over y and add ``1/h(k)`` (beta = 1).

    The counts of size-k jumps cost ``1/h(k)``, the shift y of the giant
    costs ``a`` and the remaining mass ``b``; the result should equal the
    ``iota_k`` coefficient.
    """
    if c <= 1.0:
        raise ValueError("combination is for the supercritical regime")
    T = solve_duality(c).T
    h = _h(c, k)
    a = _giant_shift_coefficient(c)
    b = (1.0 - T) / (T / c - (1.0 - T) * k * k * h)
    if a + b <= 0:
        raise ValueError("combination is not convex")
    val, y = _minimize(lambda y: a * y * y + b * (k - y) ** 2)
    return CombinationCheck(1.0 / h + val, mdp_rate("iota_k", c, k).kappa, y, k * b / (a + b))


def j_combination(c: float) -> CombinationCheck:
    """Minimise ``a y^2 + b (1 + (1-T/2) y)^2 / (1-T/2)^2`` and add the Poisson term."""
    if c <= 1.0:
        raise ValueError("combination is for the supercritical regime")
    T = solve_duality(c).T
    r = T / c
    half = 1.0 - 0.5 * T
    a = _giant_shift_coefficient(c)
    b = (1.0 - T) * half / (0.5 * T * r)
    if a + b <= 0:
        raise ValueError("combination is not convex")
    val, y = _minimize(lambda y: a * y * y + b * (1.0 + half * y) ** 2 / half**2)
    return CombinationCheck(1.0 / (r * half) + val, mdp_rate("j_total", c).kappa, y, -b / ((a + b) * half))


# --------------------------------------------------------------------------
# LDP for the largest component


def A(y: float, r: float) -> float:
    """``y log(1-e^{-yr}) - yr(1-y) - y log y - (1-y) log(1-y)``, with ``0 log 0 = 0``."""
    if not (0.0 < y <= 1.0):
        raise ValueError("y must lie in (0, 1]")
    out = y * math.log(-math.expm1(-y * r)) - y * r * (1.0 - y) - y * math.log(y)
    if y < 1.0:
        out -= (1.0 - y) * math.log1p(-y)
    return out


def _threshold_gap(x: float, c: float, k: int) -> float:
    return x / (1.0 - k * x) - (-math.expm1(-c * x))


SCAN_POINTS = 10_000


def ldp_threshold(c: float, k: int) -> float | None:
    """Largest root in (0, 1/k) of ``x/(1-kx) = 1 - e^{-cx}``, or None."""
    hi_end = 1.0 / k
    grid = np.linspace(hi_end, 0.0, SCAN_POINTS + 1)[1:-1]  # descending, open interval
    g = grid / (1.0 - k * grid) + np.expm1(-c * grid)
    # near 1/k the left side blows up so g > 0; find the first sign change scanning down
    neg = np.flatnonzero(g <= 0)
    if neg.size == 0:
        return None
    i = int(neg[0])
    lo, hi = float(grid[i]), float(grid[i - 1]) if i > 0 else hi_end
    if _threshold_gap(lo, c, k) == 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _threshold_gap(mid, c, k) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 4e-16 * hi:
            break
    x = 0.5 * (lo + hi)
    # x = 0 is always a root; a scan landing there means no positive root
    return x if x > 1e-8 else None


def ldp_thresholds(c: float, k_max: int) -> list[float]:
    """``[x_0 = 1, x_1, ...]`` stopping at the first k without a positive root."""
    out = [1.0]
    for k in range(1, k_max + 1):
        x = ldp_threshold(c, k)
        if x is None:
            break
        out.append(x)
    return out


@dataclass(frozen=True)
class LdpRate:
    c: float
    thresholds: tuple[float, ...]

    def bracket(self, x: float) -> int:
        """k with ``x_k < x <= x_{k-1}``."""
        if not (0.0 < x <= 1.0):
            raise ValueError("x must lie in (0, 1]")
        xs = self.thresholds
        for k in range(1, len(xs)):
            if x > xs[k]:
                return k
        if len(xs) == 1:
            # no positive threshold: the first bracket covers (0, 1]
            return 1
        raise ValueError(f"x={x} lies below the last threshold; extend k_max")

    def __call__(self, x: float) -> float:
        k = self.bracket(x)
        return -math.fsum((1.0 - j * x) * A(x / (1.0 - j * x), self.c * (1.0 - j * x)) for j in range(k))


def ldp_rate_function(c: float, k_max: int = 50) -> LdpRate:
    c = float(c)
    if c <= 0:
        raise ValueError("c must be positive")
    return LdpRate(c, tuple(ldp_thresholds(c, k_max)))


def ldp_rate(c: float, x: float, k_max: int = 50) -> float:
    return ldp_rate_function(c, k_max)(x)


# --------------------------------------------------------------------------
# Empirical-measure rates


@dataclass(frozen=True)
class EmpiricalRates:
    H: float
    I_Mi: float
    Lambda: float


def _xlogx_over(s: np.ndarray, log_h: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = s[pos] * (np.log(s[pos]) - log_h[pos])
    return out


def empirical_rates(sigma, c: float, K: int = DEFAULT_K) -> EmpiricalRates:
    """``H`` and ``I_Mi`` for a finitely supported ``sigma`` (``sigma[0]`` is sigma_1).

    The ``sum h`` appearing in ``H`` uses its exact total ``(T/c)(1-T/2)``
    (``K`` is the truncation of the certified partial sums behind it).
    """
    c = _reject_critical(c)
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise ValueError("sigma must be nonnegative")
    k = np.arange(1, len(s) + 1, dtype=float)
    lam = math.fsum(k * s)
    if lam > 1.0 + 1e-12:
        raise ValueError(f"sum k sigma_k = {lam} exceeds 1")
    lam = min(lam, 1.0)
    log_h = log_borel(c, k)
    kl = _xlogx_over(s, log_h)
    h_total = borel_moments(c, K).limits[0]
    H = math.fsum(kl) - math.fsum(s) + h_total
    tail = lam * (1.0 - 0.5 * c)
    if lam < 1.0:
        rest = 1.0 - lam
        tail -= rest * (math.log(-math.expm1(-c * rest)) - math.log(rest) - 0.5 * lam * c)
    I_Mi = math.fsum(kl) - math.fsum(s) + tail
    return EmpiricalRates(H, I_Mi, lam)
