"""Monte Carlo for G(n, c/n): component statistics and their variances."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .duality import log_borel, solve_duality


def default_threads() -> int:
    env = os.environ.get("GELATION_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Counter-based stream for one replica; the key is ``seed + replica``."""
    return np.random.Generator(np.random.Philox(key=(int(seed) + int(replica)) % 2**64))


@dataclass(frozen=True)
class ComponentStats:
    n: int
    cmax: int
    counts: np.ndarray  # counts[k] = t(k), number of components of size k (index 0 unused)
    cn: int

    def t(self, k: int) -> int:
        return int(self.counts[k]) if k < len(self.counts) else 0


def _decode_pairs(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear index ``L = j(j-1)/2 + i`` (``0 <= i < j``) back to ``(i, j)``."""
    j = ((1.0 + np.sqrt(1.0 + 8.0 * idx.astype(float))) / 2.0).astype(np.int64)
    # float sqrt can be off by one either way for large indices
    base = j * (j - 1) // 2
    j = np.where(base > idx, j - 1, j)
    base = j * (j - 1) // 2
    j = np.where(idx - base >= j, j + 1, j)
    base = j * (j - 1) // 2
    return idx - base, j


def sample_edges(n: int, p: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Each of the C(n, 2) pairs independently with probability p, by geometric skips."""
    total = n * (n - 1) // 2
    if total == 0 or p <= 0.0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    expected = total * p
    batch = int(expected + 6.0 * math.sqrt(expected) + 16)
    chunks = []
    pos = -1
    while True:
        gaps = rng.geometric(p, size=batch)
        idx = pos + np.cumsum(gaps, dtype=np.int64)
        if idx[-1] >= total:
            chunks.append(idx[idx < total])
            break
        chunks.append(idx)
        pos = int(idx[-1])
    return _decode_pairs(np.concatenate(chunks))


def component_sizes(n: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    adj = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return np.bincount(labels)


def stats_from_sizes(n: int, sizes: np.ndarray) -> ComponentStats:
    counts = np.bincount(sizes)
    if int(np.arange(len(counts)) @ counts) != n:
        raise AssertionError("component sizes do not add up to n")
    return ComponentStats(n, int(sizes.max()), counts, int(len(sizes)))


def sample_graph_stats(n: int, c: float, seed: int, replica: int = 0) -> ComponentStats:
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 1 and not (0.0 < c < n):
        raise ValueError("need 0 < c < n")
    rng = replica_rng(seed, replica)
    rows, cols = sample_edges(n, c / n, rng) if n > 1 else (np.empty(0, int), np.empty(0, int))
    return stats_from_sizes(n, component_sizes(n, rows, cols))


# --------------------------------------------------------------------------
# Streaming moments


@dataclass
class MomentAccumulator:
    """Welford running mean and centred second moment; ``merge`` is Chan's update."""

    count: int = 0
    mean: float = 0.0
    M2: float = 0.0

    def push(self, x: float) -> None:
        self.count += 1
        d = x - self.mean
        self.mean += d / self.count
        self.M2 += d * (x - self.mean)

    def extend(self, xs) -> None:
        for x in xs:
            self.push(float(x))

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        n = self.count + other.count
        if n == 0:
            return MomentAccumulator()
        d = other.mean - self.mean
        mean = self.mean + d * other.count / n
        M2 = self.M2 + other.M2 + d * d * self.count * other.count / n
        return MomentAccumulator(n, mean, M2)

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        return self.M2 / (self.count - 1) if self.count > 1 else math.nan


def jackknife_variance_se(x) -> float:
    """Jackknife standard error of the unbiased sample variance."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    if m < 3:
        return math.nan
    xc = x - x.mean()
    s1, s2 = xc.sum(), (xc * xc).sum()
    # leave-one-out variances from the centred sums
    loo_s1 = s1 - xc
    loo_s2 = s2 - xc * xc
    loo_var = (loo_s2 - loo_s1**2 / (m - 1)) / (m - 2)
    return float(math.sqrt((m - 1) / m * ((loo_var - loo_var.mean()) ** 2).sum()))


# --------------------------------------------------------------------------
# Replica runs


def parse_track(spec: str) -> list[str]:
    """``cmax,cn,t:1,t:2`` -> validated list of statistic names."""
    out = []
    for item in spec.split(","):
        item = item.strip()
        if item in ("cmax", "cn"):
            out.append(item)
        elif item.startswith("t:") and int(item[2:]) >= 1:
            out.append(f"t:{int(item[2:])}")
        else:
            raise ValueError(f"unknown statistic {item!r}")
    return out


def extract(stats: ComponentStats, name: str) -> int:
    if name == "cmax":
        return stats.cmax
    if name == "cn":
        return stats.cn
    return stats.t(int(name[2:]))


@dataclass(frozen=True)
class ReplicaTable:
    n: int
    c: float
    seed: int
    track: tuple[str, ...]
    values: np.ndarray = field(repr=False)  # replicas x statistics, integer valued

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.track.index(name)]

    def accumulator(self, name: str) -> MomentAccumulator:
        acc = MomentAccumulator()
        acc.extend(self.column(name))
        return acc


def run_replicas(n: int, c: float, replicas: int, seed: int, track, threads: int | None = None) -> ReplicaTable:
    """Rows come back in replica order whatever the thread count."""
    track = tuple(track)
    threads = default_threads() if threads is None else max(1, int(threads))

    def one(r: int) -> list[int]:
        s = sample_graph_stats(n, c, seed, r)
        return [extract(s, name) for name in track]

    if threads == 1:
        rows = [one(r) for r in range(replicas)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one, range(replicas)))
    return ReplicaTable(n, float(c), int(seed), track, np.array(rows, dtype=np.int64).reshape(replicas, len(track)))


# --------------------------------------------------------------------------
# Variance constants


def cmax_variance_candidates(c: float) -> dict[str, float]:
    """Two candidate limits of ``Var(C_max)/n`` for c > 1.

    ``A = (T/c)(1-T/c)^2 / (1-T)^2`` and ``B = (T/c)(1-T/c) / (1-T)^2``; B is
    the one implied by the quadratic rate of the giant component.
    """
    pair = solve_duality(c)
    r, T = pair.ratio, pair.T
    return {"A": r * (1.0 - r) ** 2 / (1.0 - T) ** 2, "B": r * (1.0 - r) / (1.0 - T) ** 2}


def count_variance_limit(c: float, k: int) -> float:
    h = math.exp(float(log_borel(c, k)))
    return h + (c - 1.0) * k * k * h * h


def cn_variance_limit(c: float) -> float:
    r = solve_duality(c).ratio
    return r * (1.0 - r * (1.0 - 0.5 * c))


@dataclass(frozen=True)
class VarianceCheck:
    name: str
    estimate: float  # Var / n
    se: float  # jackknife SE of Var / n
    target: float
    rel_tol: float = 0.10
    n_sigma: float = 3.0

    @property
    def tolerance(self) -> float:
        return max(self.rel_tol * abs(self.target), self.n_sigma * self.se)

    @property
    def ok(self) -> bool:
        return abs(self.estimate - self.target) <= self.tolerance


@dataclass(frozen=True)
class CltReport:
    n: int
    c: float
    replicas: int
    seed: int
    checks: list[VarianceCheck]
    cmax_candidates: list[VarianceCheck]
    mean_cn: float
    mean_cn_se: float

    @property
    def cmax_verdict(self) -> str | None:
        """Name of the unique consistent candidate, else None."""
        hits = [chk.name for chk in self.cmax_candidates if chk.ok]
        return hits[0] if len(hits) == 1 else None


def clt_constants_check(
    n: int, c: float, replicas: int, seed: int, k_max: int = 5, threads: int | None = None
) -> CltReport:
    if replicas < 500:
        raise ValueError("replicas must be >= 500")
    track = ["cmax", "cn"] + [f"t:{k}" for k in range(1, k_max + 1)]
    table = run_replicas(n, c, replicas, seed, track, threads)

    def vcheck(name: str, col: str, target: float) -> VarianceCheck:
        x = table.column(col)
        return VarianceCheck(name, table.accumulator(col).variance / n, jackknife_variance_se(x) / n, target)

    checks = [vcheck(f"t:{k}", f"t:{k}", count_variance_limit(c, k)) for k in range(1, k_max + 1)]
    checks.append(vcheck("cn", "cn", cn_variance_limit(c)))
    cands = []
    if c > 1.0:
        cands = [vcheck(f"cmax:{key}", "cmax", val) for key, val in cmax_variance_candidates(c).items()]
    cn = table.column("cn") / n
    return CltReport(n, float(c), replicas, seed, checks, cands, float(cn.mean()), float(cn.std(ddof=1) / math.sqrt(replicas)))
