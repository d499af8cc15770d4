"""Deterministic RSD and Boston engines, randomized wrappers, and exact
expectation / efficiency oracles by enumeration.

A single ``TieBreakOrder`` drives both mechanisms: position 0 is the agent
who picks first in RSD and holds tie-break number 1 in Boston.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from . import prng
from .core import (
    MarketInstance,
    Matching,
    Outcome,
    RankList,
    SizeLimitError,
    build_outcome,
    _check_permutation,
)

EXACT_ENUM_MAX_N = 8
PARETO_ENUM_MAX_N = 7


class MechanismKind(str, Enum):
    RSD = "rsd"
    BOSTON = "boston"


@dataclass(frozen=True)
class TieBreakOrder:
    """Agent ids by priority: position 0 picks first / wins every tie."""

    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        _check_permutation(self.order, "tie-break order")

    def __len__(self) -> int:
        return len(self.order)


def _check_inputs(reports: Sequence[RankList], order: TieBreakOrder) -> int:
    n = len(order)
    if len(reports) != n:
        raise ValueError(f"expected {n} reports, got {len(reports)}")
    for r in reports:
        if len(r) != n:
            raise ValueError("each report must rank all n goods")
    return n


def run_rsd(reports: Sequence[RankList], order: TieBreakOrder) -> Matching:
    """Serial dictatorship: agents pick their best remaining good in order."""
    n = _check_inputs(reports, order)
    taken = [False] * n
    assignment = [-1] * n
    for agent in order.order:
        for g in reports[agent].order:
            if not taken[g]:
                assignment[agent] = g
                taken[g] = True
                break
    return Matching(tuple(assignment))


def run_boston(reports: Sequence[RankList], order: TieBreakOrder) -> Matching:
    """Immediate acceptance: round k assigns k-th choices, ties by order.

    Rounds run k = 1..n even when every remaining k-th choice is already
    taken; such agents simply pass to the next round.
    """
    n = _check_inputs(reports, order)
    priority = {agent: pos for pos, agent in enumerate(order.order)}
    taken = [False] * n
    assignment = [-1] * n
    unassigned = list(range(n))
    for k in range(n):
        bids: dict[int, list[int]] = {}
        for agent in unassigned:
            g = reports[agent].order[k]
            if not taken[g]:
                bids.setdefault(g, []).append(agent)
        for g, bidders in bids.items():
            winner = min(bidders, key=priority.__getitem__)
            assignment[winner] = g
            taken[g] = True
        unassigned = [a for a in unassigned if assignment[a] < 0]
        if not unassigned:
            break
    return Matching(tuple(assignment))


def run_mechanism(kind: MechanismKind, reports: Sequence[RankList],
                  order: TieBreakOrder) -> Matching:
    engine = run_rsd if kind == MechanismKind.RSD else run_boston
    return engine(reports, order)


def run_random(kind: MechanismKind, reports: Sequence[RankList],
               market: MarketInstance, seed: int,
               stream: int = 0) -> tuple[Outcome, TieBreakOrder]:
    """Draw a uniform tie-break order from (seed, stream), run the engine,
    and annotate the outcome.  Same inputs always give the same output."""
    order = TieBreakOrder(prng.draw_order(market.n, seed, stream))
    matching = run_mechanism(kind, reports, order)
    return build_outcome(matching, reports, market), order


def exact_expected_utilities(kind: MechanismKind, reports: Sequence[RankList],
                             market: MarketInstance) -> tuple[Fraction, ...]:
    """Per-agent expected utility in cents, averaged over all n! tie-break
    orders with exact rational arithmetic."""
    n = market.n
    if n > EXACT_ENUM_MAX_N:
        raise SizeLimitError(
            f"exact enumeration limited to n <= {EXACT_ENUM_MAX_N} (got {n}); "
            "use the simulation module for larger markets")
    totals = [0] * n
    for perm in itertools.permutations(range(n)):
        matching = run_mechanism(kind, reports, TieBreakOrder(perm))
        outcome = build_outcome(matching, reports, market)
        for i in range(n):
            totals[i] += outcome.utility[i]
    denom = math.factorial(n)
    return tuple(Fraction(t, denom) for t in totals)


def is_pareto_efficient(matching: Matching, reports: Sequence[RankList]) -> bool:
    """True iff no other matching makes some agent strictly better off (by
    their own rank list) while making none worse.  Enumerates all n! matchings."""
    n = len(reports)
    if n > PARETO_ENUM_MAX_N:
        raise SizeLimitError(
            f"Pareto check enumerates n! matchings; limited to n <= {PARETO_ENUM_MAX_N}")
    ranks = [reports[i].rank_of(matching.good_of(i)) for i in range(n)]
    for alt in itertools.permutations(range(n)):
        better = False
        worse = False
        for i in range(n):
            r = reports[i].rank_of(alt[i])
            if r < ranks[i]:
                better = True
            elif r > ranks[i]:
                worse = True
                break
        if better and not worse:
            return False
    return True
