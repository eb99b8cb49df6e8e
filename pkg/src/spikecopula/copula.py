"""
Rank-based dependence measures and empirical copulas for bivariate samples.

Pseudo-observations use the empirical CDF of each margin,
``F(x) = #{X_i <= x} / n``, so they live on ``{1/n, ..., 1}`` and reach 1.

Kendall's tau here is ``(c - d) / C(n, 2)``: concordant minus discordant
pairs over all index pairs, with tied pairs counted in neither ``c`` nor
``d``. Spearman's rho is the Pearson correlation of mid-ranks.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit
from scipy.stats import rankdata


class EmptyInput(ValueError):
    pass


class DegenerateMargin(ValueError):
    """A margin is constant, so the coefficient is undefined."""


def _as_pairs(pairs, min_n: int = 2) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(pairs, dtype=float)
    if a.size == 0:
        raise EmptyInput("empty sample")
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of pairs, got shape {a.shape}")
    if a.shape[0] < min_n:
        raise EmptyInput(f"need at least {min_n} pairs, got {a.shape[0]}")
    return a[:, 0], a[:, 1]


def _check_margins(x, y):
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateMargin("a margin is constant")


def ecdf(values):
    """
    Empirical CDF of ``values`` as a right-continuous step function.

    >>> F = ecdf([1, 2, 3]); float(F(2))
    0.6666666666666666
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise EmptyInput("ecdf of an empty sample")
    n = v.size

    def F(x):
        return np.searchsorted(v, x, side="right") / n

    return F


@dataclass(frozen=True)
class PseudoObservations:
    u: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return self.u.size

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.u, self.v])


def pseudo_observations(pairs, plus_one: bool = False) -> PseudoObservations:
    """
    Map each margin through its own eCDF.

    ``plus_one=True`` divides ranks by ``n + 1`` instead of ``n``, keeping
    points strictly inside the unit square.
    """
    x, y = _as_pairs(pairs)
    n = x.size
    d = n + 1 if plus_one else n
    return PseudoObservations(rankdata(x, method="max") / d, rankdata(y, method="max") / d)


def empirical_copula(pobs: PseudoObservations, u, v):
    """``C(u, v) = #{i : u_i <= u and v_i <= v} / n``; broadcasts over ``u`` and ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    uu, vv = np.broadcast_arrays(u, v)
    flat_u, flat_v = uu.ravel(), vv.ravel()
    out = np.empty(flat_u.size)
    # chunked to bound memory at n * chunk booleans
    step = max(1, 2_000_000 // max(len(pobs), 1))
    for s in range(0, flat_u.size, step):
        m = (pobs.u[None, :] <= flat_u[s:s + step, None]) & (pobs.v[None, :] <= flat_v[s:s + step, None])
        out[s:s + step] = m.sum(axis=1)
    out /= len(pobs)
    return out.reshape(uu.shape) if uu.ndim else float(out[0])


@njit(cache=True)
def _count_inversions(a):
    """Number of pairs i < j with a[i] > a[j] (strict), via bottom-up merge sort."""
    n = a.size
    src = a.copy()
    dst = np.empty_like(src)
    inv = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[i] <= src[j]:
                    dst[k] = src[i]
                    i += 1
                else:
                    dst[k] = src[j]
                    inv += mid - i
                    j += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
        src, dst = dst, src
        width *= 2
    return inv


def _tied_pairs(a_sorted) -> int:
    _, counts = np.unique(a_sorted, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def concordance_counts(x, y) -> tuple[int, int]:
    """Exact ``(c, d)`` in O(n log n) (Knight's algorithm)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    tx = _tied_pairs(xs)
    ty = _tied_pairs(ys)
    # pairs tied in both coordinates
    both = np.unique(np.column_stack([xs, ys]), axis=0, return_counts=True)[1]
    txy = int((both * (both - 1) // 2).sum())
    # within x-ties y is ascending, so every strict y-inversion is a discordant pair
    d = int(_count_inversions(ys))
    c = n0 - tx - ty + txy - d
    return c, d


def kendall_tau(pairs) -> tuple[float, float]:
    """
    Kendall's tau and its two-sided p-value (normal approximation).

    Returns
    -------
    tau : float
        ``(c - d) / C(n, 2)``.
    p_value : float
        From ``z = 3 tau sqrt(n(n-1)) / sqrt(2(2n+5))``.
    """
    x, y = _as_pairs(pairs)
    _check_margins(x, y)
    n = x.size
    c, d = concordance_counts(x, y)
    tau = (c - d) / (n * (n - 1) // 2)
    z = 3.0 * tau * math.sqrt(n * (n - 1)) / math.sqrt(2.0 * (2 * n + 5))
    return tau, math.erfc(abs(z) / math.sqrt(2.0))


def _pearson(x, y) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    den = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if den == 0.0:
        raise DegenerateMargin("a margin is constant")
    return float(np.clip((xc @ yc) / den, -1.0, 1.0))


def pearson_r(pairs) -> float:
    x, y = _as_pairs(pairs)
    _check_margins(x, y)
    return _pearson(x, y)


def spearman_rho(pairs) -> float:
    x, y = _as_pairs(pairs)
    _check_margins(x, y)
    return _pearson(rankdata(x), rankdata(y))


@dataclass
class DependenceSummary:
    label: str
    n: int
    pearson_r: float
    kendall_tau: float
    spearman_rho: float
    tau_p_value: float

    @property
    def low_confidence(self) -> bool:
        return self.n < 10

    @property
    def significant(self) -> bool:
        return self.tau_p_value <= 0.05


def summarize(pairs, label: str = "") -> DependenceSummary:
    """r, tau (with p-value) and rho for one bivariate sample."""
    a = getattr(pairs, "pairs", pairs)
    if not label:
        label = getattr(pairs, "label", "")
    x, y = _as_pairs(a)
    tau, p = kendall_tau(a)
    return DependenceSummary(label, int(x.size), pearson_r(a), tau, spearman_rho(a), p)


SUMMARY_HEADER = ["label", "n", "pearson_r", "kendall_tau", "spearman_rho", "tau_p_value"]


def write_summaries(summaries, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for s in summaries:
            w.writerow([s.label, s.n, f"{s.pearson_r:.4f}", f"{s.kendall_tau:.4f}",
                        f"{s.spearman_rho:.4f}", f"{s.tau_p_value:.4f}"])
    return path


def read_summaries(path) -> list[DependenceSummary]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [DependenceSummary(r["label"], int(r["n"]), float(r["pearson_r"]), float(r["kendall_tau"]),
                              float(r["spearman_rho"]), float(r["tau_p_value"])) for r in rows]
