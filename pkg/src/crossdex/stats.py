"""Paired Wilcoxon signed-rank test.

Conventions follow R's ``wilcox.test(x, y, paired=TRUE, mu=mu)`` defaults:
differences ``x - y - mu`` that are exactly zero are dropped, absolute
differences get midranks, and the exact null distribution is used while
fewer than 50 differences remain and no ranks are tied. Otherwise the
normal approximation with tie-corrected variance and a 0.5 continuity
correction applies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from .numcore import DimensionError

EXACT_LIMIT = 50
ALTERNATIVES = ("greater", "less", "two_sided")


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # V: sum of ranks of positive differences
    n_effective: int
    p_greater: float
    p_less: float
    p_two_sided: float
    method: str  # "exact" | "normal_cc" | "degenerate"
    mu: float = 0.0
    n_zeros: int = 0
    ties: bool = False
    degenerate: bool = False

    def p(self, alternative: str) -> float:
        return {"greater": self.p_greater, "less": self.p_less, "two_sided": self.p_two_sided}[alternative]


@lru_cache(maxsize=None)
def _signrank_counts(n: int) -> tuple[int, ...]:
    # counts[v] = number of subsets of {1..n} whose sum is v
    counts = [1] + [0] * (n * (n + 1) // 2)
    top = 0
    for k in range(1, n + 1):
        top += k
        for v in range(top, k - 1, -1):
            counts[v] += counts[v - k]
    return tuple(counts)


def signrank_pmf(n: int) -> np.ndarray:
    """Exact null distribution P(V = v) for v = 0 .. n(n+1)/2."""
    counts = _signrank_counts(n)
    return np.array([c / 2 ** n for c in counts])


def _exact_tails(v: int, n: int) -> tuple[float, float]:
    counts = _signrank_counts(n)
    total = 2 ** n
    upper = sum(counts[v:])
    lower = sum(counts[:v + 1])
    return upper / total, lower / total


def _normal_tails(v: float, n: int, ranks: np.ndarray) -> tuple[float, float, float]:
    _, tie_counts = np.unique(ranks, return_counts=True)
    z = v - n * (n + 1) / 4.0
    sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0)
    if sigma == 0.0:
        return 1.0, 1.0, 1.0
    p_greater = float(ndtr(-(z - 0.5) / sigma))
    p_less = float(ndtr((z + 0.5) / sigma))
    zt = (z - math.copysign(0.5, z) if z != 0 else 0.0) / sigma
    p_two = float(2.0 * min(ndtr(zt), ndtr(-zt)))
    return p_greater, p_less, min(1.0, p_two)


def wilcoxon_signed_rank(x, y=None, mu: float = 0.0, exact: bool | None = None) -> WilcoxonResult:
    """Paired signed-rank test of ``x - y`` shifted by ``mu``.

    All three alternatives are returned; "greater" means ``x - y`` tends to
    exceed ``mu``.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if y is None:
        d = x - mu
    else:
        y = np.asarray(y, dtype=np.float64).ravel()
        if x.shape != y.shape:
            raise DimensionError(f"paired samples differ in length: {x.size} vs {y.size}")
        d = x - y - mu
    if d.size == 0:
        raise DimensionError("wilcoxon_signed_rank needs at least one pair")
    nonzero = d != 0
    n_zeros = int(d.size - nonzero.sum())
    d = d[nonzero]
    n = int(d.size)
    if n == 0:
        return WilcoxonResult(0.0, 0, 1.0, 1.0, 1.0, "degenerate", mu, n_zeros, False, True)

    ranks = rankdata(np.abs(d), method="average")
    v = float(ranks[d > 0].sum())
    ties = bool(np.unique(ranks).size < n)
    use_exact = (n < EXACT_LIMIT and not ties) if exact is None else (exact and not ties)
    if use_exact:
        pg, pl = _exact_tails(int(round(v)), n)
        return WilcoxonResult(v, n, pg, pl, min(1.0, 2.0 * min(pg, pl)), "exact", mu, n_zeros, ties)
    pg, pl, p2 = _normal_tails(v, n, ranks)
    return WilcoxonResult(v, n, pg, pl, p2, "normal_cc", mu, n_zeros, ties)
