"""Seeded Monte Carlo over markets and strategy profiles.

Two profile kinds:

* ``FixedReport`` — every agent submits a fixed rank list; each replication
  draws only the tie-break order and runs the real engine.  Replications are
  grouped by drawn order, so the engine runs once per distinct order.
* ``Structured`` — the symmetric-environment strategies: each agent picks
  which top good to rank first, lower goods are ranked uniformly at random,
  and losers of the top-goods phase receive a uniform leftover good / list
  slot (Boston: slots 2..n-1 with the other top good last; the all-x1 corner
  ranks x2 second, as does RSD everywhere).

Randomness is consumed in fixed-size blocks, one Philox substream
``(seed, block_index)`` per block, and blocks are merged in index order, so
the report is byte-identical for any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import prng
from .core import MarketInstance, RankList, build_outcome
from .equilibrium import SymmetricInstance
from .mechanisms import MechanismKind, TieBreakOrder, run_mechanism

BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class StrategyProfile:
    """Either fixed reports for all agents or per-agent structured tops."""

    fixed: tuple[RankList, ...] | None = None
    tops: tuple[int, ...] | None = None

    def __post_init__(self):
        if (self.fixed is None) == (self.tops is None):
            raise ValueError("profile must set exactly one of fixed / tops")
        if self.fixed is not None:
            object.__setattr__(self, "fixed", tuple(self.fixed))
        else:
            object.__setattr__(self, "tops", tuple(int(t) for t in self.tops))
            if any(t not in (1, 2) for t in self.tops):
                raise ValueError("structured tops must be 1 (x1) or 2 (x2)")

    @staticmethod
    def fixed_reports(reports: Sequence[RankList]) -> "StrategyProfile":
        return StrategyProfile(fixed=tuple(reports))

    @staticmethod
    def structured(tops: Sequence[int]) -> "StrategyProfile":
        return StrategyProfile(tops=tuple(tops))

    @staticmethod
    def structured_n1(n: int, n1: int) -> "StrategyProfile":
        """First n1 agents rank x1 first, the rest rank x2 first."""
        if not 0 <= n1 <= n:
            raise ValueError(f"n1 must be in 0..{n}, got {n1}")
        return StrategyProfile(tops=tuple(1 if i < n1 else 2 for i in range(n)))


@dataclass(frozen=True)
class SimReport:
    mechanism: MechanismKind
    replications: int
    seed: int
    rank_histogram: tuple[int, ...]
    welfare_mean: float
    welfare_se: float
    rho_mean: float
    rho_se: float
    agent_eu_mean: tuple[float, ...]
    group_eu: dict[str, float] | None  # structured profiles only

    def rank_fractions(self) -> tuple[float, ...]:
        return tuple(c / (self.replications * len(self.rank_histogram))
                     for c in self.rank_histogram)

    def to_json_dict(self) -> dict:
        return {
            "mechanism": self.mechanism.value,
            "replications": self.replications,
            "seed": self.seed,
            "rank_histogram": list(self.rank_histogram),
            "rank_fractions": list(self.rank_fractions()),
            "welfare_mean_cents": self.welfare_mean,
            "welfare_se_cents": self.welfare_se,
            "rho_mean_cents": self.rho_mean,
            "rho_se_cents": self.rho_se,
            "agent_eu_mean_cents": list(self.agent_eu_mean),
            "group_eu_cents": self.group_eu,
        }


def _as_symmetric(market) -> SymmetricInstance:
    if isinstance(market, SymmetricInstance):
        return market
    rows = market.values.rows
    if any(r != rows[0] for r in rows):
        raise ValueError("structured profiles need identical value rows")
    row = rows[0]
    n = market.n
    if n < 3 or any(row[j] != row[2] for j in range(2, n)):
        raise ValueError("structured profiles need goods (x1, x2, common tail)")
    return SymmetricInstance(n, row[0], row[1], row[2], market.rho)


@dataclass
class _Acc:
    """Running sums merged across blocks in index order."""

    n: int
    reps: int = 0
    w_sum: float = 0.0
    w_sumsq: float = 0.0
    r_sum: float = 0.0
    r_sumsq: float = 0.0

    def __post_init__(self):
        self.hist = np.zeros(self.n, dtype=np.int64)
        self.agent_u = np.zeros(self.n, dtype=float)

    def add(self, reps, w_sum, w_sumsq, r_sum, r_sumsq, hist, agent_u):
        self.reps += reps
        self.w_sum += w_sum
        self.w_sumsq += w_sumsq
        self.r_sum += r_sum
        self.r_sumsq += r_sumsq
        self.hist += hist
        self.agent_u += agent_u


def _mean_se(total: float, total_sq: float, count: int) -> tuple[float, float]:
    mean = total / count
    if count < 2:
        return mean, 0.0
    var = max(0.0, (total_sq - count * mean * mean) / (count - 1))
    return mean, math.sqrt(var / count)


def _fixed_block(kind: MechanismKind, market: MarketInstance,
                 reports: tuple[RankList, ...], reps: int, seed: int, block: int,
                 cache: dict):
    n = market.n
    gen = prng.generator(seed, block)
    orders = np.tile(np.arange(n), (reps, 1))
    gen.permuted(orders, axis=1, out=orders)
    uniq, counts = np.unique(orders, axis=0, return_counts=True)
    hist = np.zeros(n, dtype=np.int64)
    agent_u = np.zeros(n, dtype=float)
    w_sum = w_sumsq = r_sum = r_sumsq = 0.0
    for row, cnt in zip(uniq.tolist(), counts.tolist()):
        order = tuple(row)
        entry = cache.get(order)
        if entry is None:
            matching = run_mechanism(kind, reports, TieBreakOrder(order))
            out = build_outcome(matching, reports, market)
            entry = (out.welfare_total, out.rho_total, out.received_rank, out.utility)
            cache[order] = entry
        w, r, ranks, utils = entry
        w_sum += cnt * w
        w_sumsq += cnt * w * w
        r_sum += cnt * r
        r_sumsq += cnt * r * r
        for i in range(n):
            hist[ranks[i] - 1] += cnt
            agent_u[i] += cnt * utils[i]
    return reps, w_sum, w_sumsq, r_sum, r_sumsq, hist, agent_u


def _structured_block(kind: MechanismKind, inst: SymmetricInstance,
                      tops: tuple[int, ...], reps: int, seed: int, block: int):
    n = inst.n
    gen = prng.generator(seed, block)
    rho = np.asarray(inst.rho.values, dtype=np.int64)
    x1_group = np.array([i for i in range(n) if tops[i] == 1])
    x2_group = np.array([i for i in range(n) if tops[i] == 2])
    n1 = len(x1_group)
    rows = np.arange(reps)

    ranks = np.empty((reps, n), dtype=np.int64)
    values = np.empty((reps, n), dtype=np.int64)

    if kind == MechanismKind.RSD:
        # first pick: uniform agent gets own top at rank 1; second pick:
        # uniform among the rest gets the other top good (rank 1 if it is
        # their own top, else rank 2); everyone else draws slots 3..n
        ranks[:] = gen.integers(3, n + 1, size=(reps, n))
        values[:] = inst.vbar
        i0 = gen.integers(0, n, size=reps)
        i1 = gen.integers(0, n - 1, size=reps)
        i1 = np.where(i1 >= i0, i1 + 1, i1)
        tops_arr = np.asarray(tops)
        top0 = tops_arr[i0]
        ranks[rows, i0] = 1
        values[rows, i0] = np.where(top0 == 1, inst.v1, inst.v2)
        other_val = np.where(top0 == 1, inst.v2, inst.v1)
        other_is_own_top = (tops_arr[i1] != top0)
        ranks[rows, i1] = np.where(other_is_own_top, 1, 2)
        values[rows, i1] = other_val
    elif 1 <= n1 <= n - 1:
        # round 1 resolves both top goods; losers draw slots 2..n-1
        ranks[:] = gen.integers(2, n, size=(reps, n))
        values[:] = inst.vbar
        w1 = x1_group[gen.integers(0, n1, size=reps)]
        w2 = x2_group[gen.integers(0, n - n1, size=reps)]
        ranks[rows, w1] = 1
        values[rows, w1] = inst.v1
        ranks[rows, w2] = 1
        values[rows, w2] = inst.v2
    elif n1 == n:
        # corner lists (x1, x2, lowers): x1 in round 1, x2 in round 2
        ranks[:] = gen.integers(3, n + 1, size=(reps, n))
        values[:] = inst.vbar
        w1 = gen.integers(0, n, size=reps)
        w2 = gen.integers(0, n - 1, size=reps)
        w2 = np.where(w2 >= w1, w2 + 1, w2)
        ranks[rows, w1] = 1
        values[rows, w1] = inst.v1
        ranks[rows, w2] = 2
        values[rows, w2] = inst.v2
    else:
        # n1 == 0: lists (x2, lowers, x1); one loser is left holding x1
        # at the bottom of their list after the lower goods run out
        ranks[:] = gen.integers(2, n, size=(reps, n))
        values[:] = inst.vbar
        w2 = gen.integers(0, n, size=reps)
        w1 = gen.integers(0, n - 1, size=reps)
        w1 = np.where(w1 >= w2, w1 + 1, w1)
        ranks[rows, w2] = 1
        values[rows, w2] = inst.v2
        ranks[rows, w1] = n
        values[rows, w1] = inst.v1

    utils = values + rho[ranks - 1]
    welfare = utils.sum(axis=1, dtype=np.int64)
    rho_tot = rho[ranks - 1].sum(axis=1, dtype=np.int64)
    hist = np.bincount((ranks - 1).ravel(), minlength=n)
    agent_u = utils.sum(axis=0, dtype=np.int64).astype(float)
    return (reps, float(welfare.sum()), float((welfare.astype(float) ** 2).sum()),
            float(rho_tot.sum()), float((rho_tot.astype(float) ** 2).sum()),
            hist.astype(np.int64), agent_u)


def simulate(kind: MechanismKind, market, profile: StrategyProfile,
             replications: int, seed: int, threads: int = 1) -> SimReport:
    """Monte Carlo estimate of rank distribution, welfare, and per-agent EU.

    Deterministic for fixed (inputs, seed) regardless of ``threads``.
    ``market`` may be a MarketInstance or, for structured profiles, a
    SymmetricInstance.
    """
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    if profile.tops is not None:
        inst = _as_symmetric(market)
        n = inst.n
        if len(profile.tops) != n:
            raise ValueError("profile size must match market size")
        block_fn: Callable = lambda reps, b: _structured_block(
            kind, inst, profile.tops, reps, seed, b)
    else:
        mkt = market.market() if isinstance(market, SymmetricInstance) else market
        n = mkt.n
        if len(profile.fixed) != n:
            raise ValueError("profile size must match market size")
        cache: dict = {}
        block_fn = lambda reps, b: _fixed_block(
            kind, mkt, profile.fixed, reps, seed, b, cache)

    sizes = [BLOCK_SIZE] * (replications // BLOCK_SIZE)
    if replications % BLOCK_SIZE:
        sizes.append(replications % BLOCK_SIZE)

    acc = _Acc(n)
    if threads > 1 and profile.tops is not None:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda ib: block_fn(ib[1], ib[0]),
                                    enumerate(sizes)))
        for res in results:  # already in block-index order
            acc.add(*res)
    else:
        for b, sz in enumerate(sizes):
            acc.add(*block_fn(sz, b))

    w_mean, w_se = _mean_se(acc.w_sum, acc.w_sumsq, acc.reps)
    r_mean, r_se = _mean_se(acc.r_sum, acc.r_sumsq, acc.reps)
    agent_eu = tuple(float(u / acc.reps) for u in acc.agent_u)

    group_eu = None
    if profile.tops is not None:
        group_eu = {}
        for name, top in (("x1_first", 1), ("x2_first", 2)):
            members = [i for i in range(n) if profile.tops[i] == top]
            if members:
                group_eu[name] = float(np.mean([agent_eu[i] for i in members]))
    return SimReport(kind, replications, seed, tuple(int(c) for c in acc.hist),
                     w_mean, w_se, r_mean, r_se, agent_eu, group_eu)


def rank_distribution(kind: MechanismKind, market, profile: StrategyProfile,
                      replications: int, seed: int,
                      threads: int = 1) -> tuple[float, ...]:
    """Fraction of agent-replications receiving their j-th ranked good."""
    return simulate(kind, market, profile, replications, seed, threads).rank_fractions()


def write_replication_csv(kind: MechanismKind, market, profile: StrategyProfile,
                          replications: int, seed: int, path) -> None:
    """Per-replication records (fixed profiles only, real engine runs)."""
    if profile.fixed is None:
        raise ValueError("per-replication CSV supports fixed-report profiles only")
    mkt = market.market() if isinstance(market, SymmetricInstance) else market
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rep", "agent", "good", "rank", "utility_cents"])
        n = mkt.n
        done = 0
        block = 0
        while done < replications:
            sz = min(BLOCK_SIZE, replications - done)
            gen = prng.generator(seed, block)
            orders = np.tile(np.arange(n), (sz, 1))
            gen.permuted(orders, axis=1, out=orders)
            for r in range(sz):
                matching = run_mechanism(kind, profile.fixed,
                                         TieBreakOrder(tuple(int(x) for x in orders[r])))
                out = build_outcome(matching, profile.fixed, mkt)
                for i in range(n):
                    writer.writerow([done + r, i, out.matching.good_of(i),
                                     out.received_rank[i], out.utility[i]])
            done += sz
            block += 1
