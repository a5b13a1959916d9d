"""Truncated jump law of the grand canonical ensemble.

For fixed ``n``, ``c`` and ``theta`` in (0, 1] the jumps live on
``{1, ..., floor(theta n)}`` with weights

    w_k = n^(k-1) mu_k(c/n) (1 - c/n)^(k n - k^2/2) / k!

and ``Z`` (the normaliser) is their sum.  The Poisson intensity of the
compound process is ``Z n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .connectivity import MuTable, mu_graph
from .duality import solve_duality


@dataclass(frozen=True)
class JumpLaw:
    n: int
    c: float
    theta: float
    logZ: float
    logp: np.ndarray = field(repr=False)  # log P(X = k), index 0 <-> k = 1

    @property
    def K(self) -> int:
        return len(self.logp)

    @property
    def Z(self) -> float:
        return math.exp(self.logZ)

    @property
    def intensity(self) -> float:
        """Poisson intensity ``Z n``."""
        return self.n * math.exp(self.logZ)

    @property
    def log_intensity(self) -> float:
        return math.log(self.n) + self.logZ

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.K + 1)

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.logp)

    def log_levy(self) -> np.ndarray:
        """``log(Z n P(X = k))``: the jump intensity measure of the compound process."""
        return self.logp + self.log_intensity

    def restrict(self, K: int) -> "JumpLaw":
        """Renormalised law of ``X | X <= K``; equals ``jump_law`` at the smaller theta."""
        if not (1 <= K <= self.K):
            raise ValueError("K out of range")
        lw = self.logp[:K] + self.logZ
        logZ = float(logsumexp(lw))
        return JumpLaw(self.n, self.c, K / self.n, logZ, lw - logZ)


def support_size(n: int, theta: float) -> int:
    # floor(theta n) with a guard against theta = K/n rounding below K
    return int(math.floor(theta * n + 1e-9))


def log_weights(n: int, c: float, K: int | None = None, table: MuTable | None = None) -> np.ndarray:
    """Unnormalised log jump weights ``log w_k`` for k = 1..K.

    Evaluated as ``(k-1) log c + (kn - 3k/2 + 1) log(1-c/n) + log B_k - log k``,
    which is the defining expression after cancelling ``n^(k-1) p^(k-1)`` and
    the tree-enumerator powers of ``1 - c/n``.
    """
    if table is None:
        table = mu_graph(n, c)
    K = n if K is None else K
    k = np.arange(1, K + 1, dtype=float)
    lq = math.log1p(-c / n)
    return (k - 1) * math.log(c) + (k * n - 1.5 * k + 1.0) * lq + table.log_b[:K] - np.log(k)


def log_weights_direct(n: int, c: float, K: int | None = None, table: MuTable | None = None) -> np.ndarray:
    """Same weights, assembled term by term from ``log mu_k``."""
    if table is None:
        table = mu_graph(n, c)
    K = n if K is None else K
    k = np.arange(1, K + 1, dtype=float)
    lq = math.log1p(-c / n)
    return (k - 1) * math.log(n) + table.log_mu[:K] + (k * n - 0.5 * k * k) * lq - gammaln(k + 1)


def jump_law(n: int, c: float, theta: float = 1.0) -> JumpLaw:
    if n < 2:
        raise ValueError("n must be >= 2")
    if not (0.0 < theta <= 1.0):
        raise ValueError("theta must lie in (0, 1]")
    K = support_size(n, theta)
    if K < 1:
        raise ValueError(f"floor(theta n) = {K} leaves an empty support")
    lw = log_weights(n, c, K)
    logZ = float(logsumexp(lw))
    return JumpLaw(n, float(c), float(theta), logZ, lw - logZ)


# --------------------------------------------------------------------------
# Choice of the truncation level


def gamma_fn(theta: float, c: float) -> float:
    """``(e^{c theta/2} - e^{-c theta/2}) / (theta c) * c e^{1-c}``."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    x = 0.5 * c * theta
    return math.sinh(x) / x * c * math.exp(1.0 - c)


@dataclass(frozen=True)
class ThetaChoice:
    c: float
    theta: float
    eps0: float
    gamma_at_theta: float
    eta: float

    def inequalities(self) -> dict[str, bool]:
        pair = solve_duality(self.c)
        c = self.c
        small = c * math.exp(1.0 - c + 0.5 * self.eps0 * c)
        out = {
            "eps0_rate": small < 1.0,
            "eta_small": math.exp(self.eta) * small < 1.0,
            "eta_gamma": math.exp(self.eta) * self.gamma_at_theta < 1.0,
            "gamma": self.gamma_at_theta < 1.0,
        }
        if c > 1.0:
            out["theta_above_giant"] = self.theta > pair.giant_fraction
        return out


def choose_theta(c: float) -> ThetaChoice:
    """Pick ``theta`` with ``gamma(theta) < 1`` and ``theta > 1 - T/c``.

    Takes ``theta = 1`` when ``c e^{1-c/2} < 1`` or when ``gamma < 1`` on the
    whole interval; otherwise the midpoint between ``1 - T/c`` and the root of
    ``gamma = 1`` (``gamma`` is increasing in ``theta``).
    """
    c = float(c)
    if c == 1.0:
        raise ValueError("no admissible truncation at c = 1")
    theta0 = max(0.0, solve_duality(c).giant_fraction)
    if c * math.exp(1.0 - 0.5 * c) < 1.0 or gamma_fn(1.0, c) < 1.0:
        theta = 1.0
    else:
        lo = theta0 if theta0 > 0 else 1e-12
        hi = 1.0
        if gamma_fn(lo, c) >= 1.0:
            raise RuntimeError(f"gamma(theta0) >= 1 at c={c}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if gamma_fn(mid, c) < 1.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15:
                break
        theta = 0.5 * (theta0 + lo)
    g = gamma_fn(theta, c)

    # root of c e^{1 - c + x c/2} = 1 is x = 2 (c - 1 - log c) / c
    eps0 = min(0.5 * 2.0 * (c - 1.0 - math.log(c)) / c, theta)
    small = c * math.exp(1.0 - c + 0.5 * eps0 * c)
    eta = 0.1
    for _ in range(21):
        if math.exp(eta) * small < 1.0 and math.exp(eta) * g < 1.0:
            return ThetaChoice(c, theta, eps0, g, eta)
        eta *= 0.5
    raise RuntimeError(f"no MGF radius found at c={c}")


def auto_theta(c: float) -> float:
    return choose_theta(c).theta


# --------------------------------------------------------------------------
# Moments and their limits


@dataclass(frozen=True)
class EnsembleMoments:
    Z: float
    mean: float
    second: float
    variance: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.Z, self.mean, self.second, self.variance)


def ensemble_moments(law: JumpLaw) -> EnsembleMoments:
    p = law.probs
    k = law.support.astype(float)
    mean = math.fsum(k * p)
    second = math.fsum(k * k * p)
    variance = math.fsum((k - mean) ** 2 * p)
    return EnsembleMoments(law.Z, mean, second, variance)


def moment_limits(c: float) -> EnsembleMoments:
    """Large-n limits of ``Z``, ``E X``, ``E X^2`` and ``Var X``."""
    T = solve_duality(c).T
    half = 1.0 - 0.5 * T
    return EnsembleMoments(
        Z=T / c * half,
        mean=1.0 / half,
        second=1.0 / (half * (1.0 - T)),
        variance=0.5 * T / (half * half * (1.0 - T)),
    )


def mgf_bound_check(law: JumpLaw, eta: float) -> float:
    """``log E exp(eta X)`` under the jump law."""
    return float(logsumexp(law.logp + eta * law.support))


def zero_range_rate(n: int, c: float, k: int, table: MuTable | None = None) -> float:
    """Log of the zero-range jump rate ``g_n(k)`` (``-inf`` at k = 0)."""
    if k < 0 or k > n:
        raise ValueError(f"k must lie in [0, {n}]")
    lq = math.log1p(-c / n)
    if k == 0:
        return -math.inf
    if k == 1:
        return (-n + 0.5) * lq
    if table is None:
        table = mu_graph(n, c)
    return (
        math.log(k) - math.log(n) + float(table.log_mu[k - 2]) - float(table.log_mu[k - 1]) + (-n + k - 0.5) * lq
    )
