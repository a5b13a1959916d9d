"""Exact component-size laws of G(n, c/n) for small n.

Two independent routes:

* ``law_by_partitions``: the closed-form product over component profiles
  ``gamma`` (``sum_k k gamma_k = n``),
  ``n! prod_k (mu_k q^{k(n-k)/2} / k!)^{gamma_k} / gamma_k!``, for n <= 40;
* ``brute_force_law``: every labelled graph on n <= 6 vertices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp
from sympy.utilities.iterables import partitions

from .connectivity import mu_graph

PARTITION_N_MAX = 40
BRUTE_N_MAX = 6

Profile = tuple[int, ...]  # gamma_1..gamma_n


def iter_profiles(n: int, max_part: int | None = None):
    """Profiles ``(gamma_1, ..., gamma_n)`` of n, parts bounded by ``max_part``.

    Deterministic order (sympy yields partitions in reverse lexicographic
    order of their parts).
    """
    kw = {} if max_part is None else {"k": max_part}
    for part in partitions(n, **kw):
        gamma = [0] * n
        for k, mult in part.items():
            gamma[k - 1] = mult
        yield tuple(gamma)


def signature(gamma: Profile) -> str:
    """Human-readable signature, e.g. ``3+1+1`` for gamma = (2, 0, 1)."""
    parts = []
    for k in range(len(gamma), 0, -1):
        parts.extend([str(k)] * gamma[k - 1])
    return "+".join(parts)


def cmax_of(gamma: Profile) -> int:
    return max(k + 1 for k, g in enumerate(gamma) if g)


@dataclass(frozen=True)
class ExactLaw:
    n: int
    c: float
    entries: dict[Profile, float]  # profile -> log probability

    def probs(self) -> dict[Profile, float]:
        return {g: math.exp(lp) for g, lp in self.entries.items()}

    def total_mass(self) -> float:
        return math.fsum(math.exp(lp) for lp in self.entries.values())

    def restrict(self, max_size: int) -> "ExactLaw":
        """Law conditioned on C_max <= max_size (renormalised)."""
        kept = {g: lp for g, lp in self.entries.items() if cmax_of(g) <= max_size}
        if not kept:
            raise ValueError("conditioning event has probability zero")
        log_mass = float(logsumexp(list(kept.values())))
        return ExactLaw(self.n, self.c, {g: lp - log_mass for g, lp in kept.items()})

    def log_prob_cmax_le(self, m: int) -> float:
        vals = [lp for g, lp in self.entries.items() if cmax_of(g) <= m]
        return float(logsumexp(vals)) if vals else -math.inf


def total_variation(a: dict, b: dict) -> float:
    """TV distance between two laws given as ``key -> probability`` mappings."""
    keys = set(a) | set(b)
    return 0.5 * math.fsum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


def law_by_partitions(n: int, c: float) -> ExactLaw:
    if n > PARTITION_N_MAX:
        raise ValueError(f"partition law is capped at n <= {PARTITION_N_MAX}")
    if not (0 < c < n):
        raise ValueError("need 0 < c < n")
    table = mu_graph(n, c)
    k = np.arange(1, n + 1, dtype=float)
    lq = math.log1p(-c / n)
    # log of mu_k q^{k(n-k)/2} / k!
    log_block = table.log_mu + 0.5 * k * (n - k) * lq - gammaln(k + 1)
    log_nfact = math.lgamma(n + 1)
    entries = {}
    for gamma in iter_profiles(n):
        lp = log_nfact
        for kk, g in enumerate(gamma):
            if g:
                lp += g * log_block[kk] - math.lgamma(g + 1)
        entries[gamma] = lp
    return ExactLaw(n, float(c), entries)


def _components(n: int, edges) -> list[int]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    sizes: dict[int, int] = {}
    for v in range(n):
        r = find(v)
        sizes[r] = sizes.get(r, 0) + 1
    return list(sizes.values())


def brute_force_law(n: int, c: float) -> ExactLaw:
    """Enumerate all ``2^C(n,2)`` labelled graphs on n vertices."""
    if n > BRUTE_N_MAX:
        raise ValueError(f"brute force is capped at n <= {BRUTE_N_MAX}")
    if not (0 < c < n) and n > 1:
        raise ValueError("need 0 < c < n")
    pairs = list(itertools.combinations(range(n), 2))
    m = len(pairs)
    p = c / n if n > 1 else 0.5
    acc: dict[Profile, list[float]] = {}
    for mask in range(1 << m):
        chosen = [pairs[i] for i in range(m) if mask >> i & 1]
        e = len(chosen)
        weight = p**e * (1.0 - p) ** (m - e)
        gamma = [0] * n
        for s in _components(n, chosen):
            gamma[s - 1] += 1
        acc.setdefault(tuple(gamma), []).append(weight)
    entries = {g: math.log(math.fsum(w)) for g, w in acc.items()}
    return ExactLaw(n, float(c), entries)


@dataclass(frozen=True)
class DerivedLaws:
    cmax: dict[int, float]
    cn: dict[int, float]
    counts: dict[int, dict[int, float]]  # k -> {j: P(t_n(k) = j)}

    @staticmethod
    def mean(law: dict[int, float]) -> float:
        return math.fsum(j * p for j, p in law.items())


def derived_laws(law: ExactLaw) -> DerivedLaws:
    cmax: dict[int, list[float]] = {}
    cn: dict[int, list[float]] = {}
    counts: dict[int, dict[int, list[float]]] = {k: {} for k in range(1, law.n + 1)}
    for gamma, lp in law.entries.items():
        p = math.exp(lp)
        cmax.setdefault(cmax_of(gamma), []).append(p)
        cn.setdefault(sum(gamma), []).append(p)
        for k, g in enumerate(gamma, start=1):
            counts[k].setdefault(g, []).append(p)
    fold = lambda d: {key: math.fsum(v) for key, v in sorted(d.items())}  # noqa: E731
    return DerivedLaws(fold(cmax), fold(cn), {k: fold(d) for k, d in counts.items()})
