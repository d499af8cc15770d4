"""Nonparametric tests and OLS used by the session analysis.

Jonckheere-Terpstra and Wilcoxon rank-sum each come in two flavors: an
exact permutation enumeration for small samples and a tie-corrected,
continuity-corrected normal approximation otherwise.  Both are exposed;
the convenience wrappers pick the exact branch when the pooled sample has
at most EXACT_MAX_N observations.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

EXACT_MAX_N = 12


def _tie_counts(pooled: Sequence[float]) -> list[int]:
    return [c for c in Counter(pooled).values() if c > 1]


# ---------------------------------------------------------------------------
# Jonckheere-Terpstra
# ---------------------------------------------------------------------------

def _jt_statistic(groups: Sequence[Sequence[float]]) -> float:
    """Sum over ordered group pairs of Mann-Whitney counts, ties as 1/2."""
    jt = 0.0
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            for a in groups[i]:
                for b in groups[j]:
                    jt += 1.0 if a < b else 0.5 if a == b else 0.0
    return jt


def _jt_exact_p(groups: Sequence[Sequence[float]], observed: float,
                alternative: str) -> float:
    pooled = [v for g in groups for v in g]
    sizes = [len(g) for g in groups]
    le = ge = total = 0

    def rec(remaining: tuple, gi: int, built: list):
        nonlocal le, ge, total
        if gi == len(sizes) - 1:
            stat = _jt_statistic(built + [list(remaining)])
            total += 1
            if stat <= observed + 1e-12:
                le += 1
            if stat >= observed - 1e-12:
                ge += 1
            return
        idx = range(len(remaining))
        for comb in itertools.combinations(idx, sizes[gi]):
            chosen = [remaining[k] for k in comb]
            rest = tuple(remaining[k] for k in idx if k not in comb)
            rec(rest, gi + 1, built + [chosen])

    rec(tuple(pooled), 0, [])
    count = le if alternative == "decreasing" else ge
    return count / total


def _jt_moments(sizes: Sequence[int], pooled: Sequence[float]) -> tuple[float, float]:
    n = sum(sizes)
    mean = (n * n - sum(s * s for s in sizes)) / 4.0
    ties = _tie_counts(pooled)
    t1 = (n * (n - 1) * (2 * n + 5)
          - sum(s * (s - 1) * (2 * s + 5) for s in sizes)
          - sum(t * (t - 1) * (2 * t + 5) for t in ties)) / 72.0
    if n > 2:
        t2 = (sum(s * (s - 1) * (s - 2) for s in sizes)
              * sum(t * (t - 1) * (t - 2) for t in ties)
              / (36.0 * n * (n - 1) * (n - 2)))
    else:
        t2 = 0.0
    t3 = (sum(s * (s - 1) for s in sizes) * sum(t * (t - 1) for t in ties)
          / (8.0 * n * (n - 1)))
    return mean, t1 + t2 + t3


def jonckheere_terpstra(groups: Sequence[Sequence[float]],
                        alternative: str = "decreasing",
                        method: str = "auto") -> tuple[float, float]:
    """JT test against an ordered trend across the given group order.

    ``alternative='decreasing'`` rejects for small statistics (values tend
    to fall along the group order); ``'increasing'`` for large ones.
    ``method``: 'exact', 'approx', or 'auto' (exact when pooled n <= 12).
    Returns (statistic, one-sided p)."""
    if alternative not in ("decreasing", "increasing"):
        raise ValueError(f"unknown alternative {alternative!r}")
    groups = [list(g) for g in groups]
    if len(groups) < 2 or any(not g for g in groups):
        raise ValueError("need at least 2 non-empty groups")
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    stat = _jt_statistic(groups)
    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        return stat, _jt_exact_p(groups, stat, alternative)
    if method not in ("auto", "approx"):
        raise ValueError(f"unknown method {method!r}")
    mean, var = _jt_moments([len(g) for g in groups], pooled)
    if var <= 0:  # all pooled values identical: no evidence either way
        return stat, 1.0
    sd = math.sqrt(var)
    if alternative == "decreasing":
        z = (stat - mean + 0.5) / sd
        return stat, float(sps.norm.cdf(z))
    z = (stat - mean - 0.5) / sd
    return stat, float(sps.norm.sf(z))


# ---------------------------------------------------------------------------
# Wilcoxon rank-sum
# ---------------------------------------------------------------------------

def _midranks(pooled: Sequence[float]) -> list[float]:
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def wilcoxon_ranksum(a: Sequence[float], b: Sequence[float],
                     method: str = "auto") -> tuple[float, float]:
    """Two-sided rank-sum test; statistic is the rank sum of ``a`` with
    midranks for ties.  Exact permutation p when n_a + n_b <= 12, else a
    tie- and continuity-corrected normal approximation."""
    a, b = list(a), list(b)
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    na, nb = len(a), len(b)
    n = na + nb
    ranks = _midranks(a + b)
    stat = sum(ranks[:na])
    mean = na * (n + 1) / 2.0

    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        dev = abs(stat - mean)
        hits = total = 0
        for comb in itertools.combinations(range(n), na):
            w = sum(ranks[k] for k in comb)
            total += 1
            if abs(w - mean) >= dev - 1e-12:
                hits += 1
        return stat, hits / total
    if method not in ("auto", "approx"):
        raise ValueError(f"unknown method {method!r}")

    ties = _tie_counts(a + b)
    var = na * nb / 12.0 * ((n + 1) - sum(t ** 3 - t for t in ties) / (n * (n - 1.0)))
    if var <= 0:
        return stat, 1.0
    z = (abs(stat - mean) - 0.5) / math.sqrt(var)
    return stat, min(1.0, float(2.0 * sps.norm.sf(z)))


# ---------------------------------------------------------------------------
# OLS
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OlsResult:
    columns: tuple[str, ...]
    coef: tuple[float, ...]
    se: tuple[float, ...]
    tstat: tuple[float, ...]
    pvalue: tuple[float, ...]
    stars: tuple[str, ...]
    r_squared: float
    nobs: int

    def to_json_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "coef": list(self.coef),
            "se": list(self.se),
            "t": list(self.tstat),
            "p": list(self.pvalue),
            "stars": list(self.stars),
            "r_squared": self.r_squared,
            "nobs": self.nobs,
        }


def _stars(p: float) -> str:
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""


def ols_fit(y: Sequence[float], X: Sequence[Sequence[float]],
            columns: Sequence[str] | None = None,
            robust: bool = False) -> OlsResult:
    """Least squares via QR.  Classical standard errors by default; set
    ``robust=True`` for HC1 heteroskedasticity-robust errors.  Raises on
    rank deficiency, naming the offending column."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    n, k = X.shape
    if columns is None:
        columns = [f"x{j}" for j in range(k)]
    if len(columns) != k:
        raise ValueError("column names must match X's width")
    if n < k:
        raise ValueError(f"need at least {k} rows, got {n}")
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    tol = max(n, k) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    bad = np.nonzero(diag <= tol)[0]
    if bad.size:
        raise ValueError(f"design matrix is rank deficient at column {columns[bad[0]]!r}")
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if tss == 0 else 1.0 - rss / tss
    df = n - k
    rinv = np.linalg.inv(r)
    xtx_inv = rinv @ rinv.T
    if robust:
        meat = (X * (resid ** 2)[:, None]).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / df if df > 0 else float("nan"))
    else:
        sigma2 = rss / df if df > 0 else float("nan")
        cov = xtx_inv * sigma2
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se
    p = np.array([2.0 * float(sps.t.sf(abs(tj), df)) if df > 0 and np.isfinite(tj)
                  else float("nan") for tj in t])
    stars = tuple(_stars(pj) if np.isfinite(pj) else "" for pj in p)
    return OlsResult(tuple(columns), tuple(map(float, coef)), tuple(map(float, se)),
                     tuple(map(float, t)), tuple(map(float, p)), stars, r2, n)
