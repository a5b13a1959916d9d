"""Duality between the edge intensity ``c`` and its subcritical partner ``T``.

``T`` is the solution in (0, 1] of ``T exp(-T) = c exp(-c)``.  For ``c <= 1``
the solution is ``c`` itself; for ``c > 1`` it is the other branch.  The pair
can be parametrised by ``t = T / c``::

    c = -log(t) / (1 - t),    T = -t log(t) / (1 - t).

This module also provides the Borel weights

    h(k) = k^(k-2) c^(k-1) exp(-k c) / k!

and their first partial moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

DEFAULT_K = 10_000


@dataclass(frozen=True)
class DualityPair:
    c: float
    T: float
    t: float

    @property
    def ratio(self) -> float:
        """``T / c``, the fraction of vertices outside the giant component."""
        return self.T / self.c

    @property
    def giant_fraction(self) -> float:
        return 1.0 - self.T / self.c


def _check_c(c: float) -> float:
    c = float(c)
    if not (c > 0 and math.isfinite(c)):
        raise ValueError(f"c must be a positive finite real, got {c!r}")
    return c


def solve_duality(c: float) -> DualityPair:
    """Return the pair ``(c, T, t)`` with ``T`` in (0, 1].

    For ``c > 1`` the root is bracketed in (0, 1) (``x exp(-x)`` is increasing
    there), located by bisection and polished with Newton steps.
    """
    c = _check_c(c)
    if c <= 1.0:
        return DualityPair(c, c, 1.0)

    # Work with g(x) = log x - x - (log c - c): same root, better conditioned
    # for large c where c exp(-c) underflows.
    target = math.log(c) - c
    g = lambda x: math.log(x) - x - target  # noqa: E731
    lo, hi = math.exp(target) * 0.5, 1.0
    while g(lo) > 0:
        lo *= 0.5
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(10):
        step = g(x) / (1.0 / x - 1.0)
        x_new = x - step
        if not (0.0 < x_new < 1.0):
            break
        x = x_new
        if abs(step) <= 1e-17 * x:
            break
    return DualityPair(c, x, x / c)


def parametrize(t: float) -> DualityPair:
    """Supercritical pair from ``t`` in (0, 1): ``T < 1 < c`` and ``t = T/c``."""
    t = float(t)
    if not (0.0 < t < 1.0):
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    c = -math.log(t) / (1.0 - t)
    return DualityPair(c, t * c, t)


def conjugate(c: float) -> DualityPair:
    """Supercritical partner of a subcritical ``c``.

    For ``c < 1`` returns the pair ``(c', c, c/c')`` with ``c' > 1`` and
    ``c' exp(-c') = c exp(-c)``; for ``c > 1`` this is ``solve_duality(c)``.
    """
    c = _check_c(c)
    if c == 1.0:
        return DualityPair(1.0, 1.0, 1.0)
    if c > 1.0:
        return solve_duality(c)
    # Root of log x - x = log c - c on (1, inf).
    from scipy.optimize import brentq

    target = math.log(c) - c
    hi = 2.0
    while math.log(hi) - hi > target:
        hi *= 2.0
    cp = brentq(lambda x: math.log(x) - x - target, 1.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return DualityPair(cp, c, c / cp)


# --------------------------------------------------------------------------
# Borel weights


@dataclass(frozen=True)
class BorelWeights:
    c: float
    log_h: np.ndarray  # log h(1..K), index 0 <-> k = 1

    @property
    def K(self) -> int:
        return len(self.log_h)

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_h)

    def __getitem__(self, k: int) -> float:
        return float(np.exp(self.log_h[k - 1]))


def log_borel(c: float, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return (k - 2) * np.log(k) + (k - 1) * math.log(c) - k * c - gammaln(k + 1)


def borel_weights(c: float, K: int = DEFAULT_K) -> BorelWeights:
    c = _check_c(c)
    if K < 1:
        raise ValueError("K must be >= 1")
    return BorelWeights(c, log_borel(c, np.arange(1, K + 1)))


@dataclass(frozen=True)
class BorelMoments:
    """Partial sums of ``k^j h(k)`` for j = 0, 1, 2 with certified tail bounds."""

    c: float
    K: int
    sums: tuple[float, float, float]
    tail_bounds: tuple[float, float, float]
    limits: tuple[float, float, float]

    @property
    def log_sums(self) -> tuple[float, float, float]:
        return tuple(math.log(s) for s in self.sums)  # type: ignore[return-value]

    def within_bounds(self, slack: float = 1e-13) -> bool:
        return all(
            -slack * lim <= lim - s <= tb + slack * lim
            for s, tb, lim in zip(self.sums, self.tail_bounds, self.limits)
        )


def borel_ratio_bound(c: float) -> float:
    """Upper bound ``c e^{1-c}`` on ``h(k+1)/h(k)`` for every k."""
    return c * math.exp(1.0 - c)


def power_sum(c: float, gamma: float, K: int) -> tuple[float, float]:
    """``sum_{k<=K} k^gamma h(k)`` and a certified bound on the remainder.

    ``h(k+1)/h(k) = c e^{-c} (1 + 1/k)^(k-2)`` increases to ``r = c e^{1-c}``,
    so from index K+1 on, successive ratios of ``k^gamma h(k)`` are at most
    ``r (1 + 1/(K+1))^gamma``.
    """
    c = _check_c(c)
    if c == 1.0:
        raise ValueError("c = 1 has a power-law Borel tail; moment sums are not geometric")
    k = np.arange(1, K + 2, dtype=float)
    terms = np.exp(gamma * np.log(k) + log_borel(c, k))
    rho = borel_ratio_bound(c) * (1.0 + 1.0 / (K + 1)) ** gamma
    if rho >= 1.0:
        raise ValueError(f"K={K} too small for a geometric tail certificate at c={c}")
    return math.fsum(terms[:-1]), float(terms[-1] / (1.0 - rho))


def borel_moments(c: float, K: int = DEFAULT_K) -> BorelMoments:
    """Partial Borel moment sums against ``(T/c)(1-T/2)``, ``T/c``, ``(T/c)/(1-T)``."""
    c = _check_c(c)
    if c == 1.0:
        raise ValueError("borel_moments is undefined at c = 1 (power-law tail)")
    pair = solve_duality(c)
    r = pair.ratio
    limits = (r * (1.0 - pair.T / 2.0), r, r / (1.0 - pair.T))
    out = [power_sum(c, g, K) for g in (0, 1, 2)]
    return BorelMoments(
        c=c,
        K=K,
        sums=tuple(s for s, _ in out),  # type: ignore[arg-type]
        tail_bounds=tuple(b for _, b in out),  # type: ignore[arg-type]
        limits=limits,
    )
