"""Symmetric-environment equilibrium analysis.

The environment: every agent shares the same fundamental values, with two
goods (x1, x2) strictly above a common tail value.  Agents choose which of
the two top goods to rank first; the remaining goods are ranked uniformly
at random.  In RSD the other top good is ranked second; in Boston it is
ranked last (except in the all-rank-x1-first corner, where everyone ranks
x2 second and the two mechanisms coincide).

After the top goods resolve, the leftover goods are modeled as a uniform
lottery over the remaining list slots; ``delta`` / ``delta_prime`` are the
expected continuation utilities of that lottery in Boston / RSD.

The closed-form solver reduces the two no-deviation conditions to an
interval of length exactly 1; ``brute_force_equilibria`` re-derives the
same conditions from first principles (full tie-break-order enumeration)
so the interval algebra is independently checked.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .core import DataFormatError, MarketInstance, RankList, RhoSchedule, SizeLimitError
from .mechanisms import MechanismKind

BRUTE_FORCE_MAX_N = 6
TRUTHTELLING_MAX_N = 6


@dataclass(frozen=True)
class SymmetricInstance:
    """Common-value market: v1 > v2 > vbar, all amounts in cents."""

    n: int
    v1: int
    v2: int
    vbar: int
    rho: RhoSchedule

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"symmetric analysis needs n >= 3, got {self.n}")
        if not self.v1 > self.v2 > self.vbar >= 0:
            raise ValueError(
                f"need v1 > v2 > vbar >= 0, got ({self.v1}, {self.v2}, {self.vbar})")
        if len(self.rho) != self.n:
            raise ValueError("rho schedule length must equal n")

    def good_value(self, good: int) -> int:
        return self.v1 if good == 0 else self.v2 if good == 1 else self.vbar

    def market(self) -> MarketInstance:
        row = tuple(self.good_value(g) for g in range(self.n))
        return MarketInstance.from_cents([row] * self.n, self.rho.values)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "v1": self.v1, "v2": self.v2, "vbar": self.vbar,
                "rho": list(self.rho.values)}

    @staticmethod
    def from_json_dict(doc: dict) -> "SymmetricInstance":
        try:
            return SymmetricInstance(int(doc["n"]), int(doc["v1"]), int(doc["v2"]),
                                     int(doc["vbar"]),
                                     RhoSchedule(tuple(int(r) for r in doc["rho"])))
        except KeyError as exc:
            raise DataFormatError(f"symmetric instance JSON missing field {exc}") from exc

    @staticmethod
    def load(path) -> "SymmetricInstance":
        with open(path) as fh:
            return SymmetricInstance.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class SymmetricParams:
    """Derived quantities, cents (alpha dimensionless; None when rho(1)==rho(2))."""

    delta: Fraction
    delta_prime: Fraction
    rho_bar: Fraction
    alpha: Fraction | None


@dataclass(frozen=True)
class EquilibriumSolution:
    mechanism: MechanismKind
    n1_candidates: tuple[int, ...]
    range_lo: Fraction | None
    range_hi: Fraction | None
    corner_all_top: bool
    # per-candidate expected utilities (cents) of the two strategies;
    # None where the strategy has no followers at that n1
    eu_rank_x1_first: dict[int, Fraction | None]
    eu_rank_x2_first: dict[int, Fraction | None]

    @property
    def canonical_n1(self) -> int:
        return self.n1_candidates[0]


def symmetric_params(inst: SymmetricInstance) -> SymmetricParams:
    n, rho = inst.n, inst.rho
    delta = inst.vbar + rho.mean(2, n - 1)
    rho_bar = rho.mean(3, n)
    delta_prime = inst.vbar + rho_bar
    alpha = None
    if rho.at(1) > rho.at(2):
        alpha = Fraction(n, 2) + Fraction(n - 1, 2) * Fraction(inst.v1 - inst.v2,
                                                               rho.at(1) - rho.at(2))
    return SymmetricParams(delta, delta_prime, rho_bar, alpha)


def _u_boston(inst: SymmetricInstance, top: int, n1: int) -> Fraction:
    """EU of an agent ranking x{top} first when n1 agents in total rank x1
    first.  Valid for the formal extension 0 <= n1 <= n used by the
    deviation comparisons."""
    delta = symmetric_params(inst).delta
    group = n1 if top == 1 else inst.n - n1
    if group < 1:
        raise ValueError(f"no agent ranks x{top} first at n1={n1}")
    v_top = inst.v1 if top == 1 else inst.v2
    return Fraction(1, group) * (v_top + inst.rho.at(1)) + Fraction(group - 1, group) * delta


def _u_sd(inst: SymmetricInstance, top: int, n1: int) -> Fraction:
    n, rho = inst.n, inst.rho
    dp = symmetric_params(inst).delta_prime
    if top == 1:
        if n1 < 1:
            raise ValueError(f"no agent ranks x1 first at n1={n1}")
        second = (Fraction(n1 - 1, n - 1) * (inst.v2 + rho.at(2))
                  + Fraction(n - n1, n - 1) * (inst.v1 + rho.at(1)))
        first = inst.v1 + rho.at(1)
    else:
        if n1 > n - 1:
            raise ValueError(f"no agent ranks x2 first at n1={n1}")
        second = (Fraction(n1, n - 1) * (inst.v2 + rho.at(1))
                  + Fraction(n - n1 - 1, n - 1) * (inst.v1 + rho.at(2)))
        first = inst.v2 + rho.at(1)
    return Fraction(1, n) * first + Fraction(1, n) * second + Fraction(n - 2, n) * dp


def boston_group_eu(inst: SymmetricInstance, n1: int) -> tuple[Fraction, Fraction]:
    """(EU of an x1-first agent, EU of an x2-first agent) at interior n1."""
    if not 1 <= n1 <= inst.n - 1:
        raise ValueError(f"n1 must be in 1..{inst.n - 1}, got {n1}")
    return _u_boston(inst, 1, n1), _u_boston(inst, 2, n1)


def sd_group_eu(inst: SymmetricInstance, n1: int) -> tuple[Fraction | None, Fraction | None]:
    """The two RSD group EUs; a side is None when no agent plays it at n1."""
    if not 0 <= n1 <= inst.n:
        raise ValueError(f"n1 must be in 0..{inst.n}, got {n1}")
    u1 = _u_sd(inst, 1, n1) if n1 >= 1 else None
    u2 = _u_sd(inst, 2, n1) if n1 <= inst.n - 1 else None
    return u1, u2


def corner_holds(kind: MechanismKind, inst: SymmetricInstance) -> bool:
    """All-rank-x1-first (with x2 second) is an equilibrium.

    In Boston a deviator ranking x2 first wins it outright, so the corner
    payoff must beat v2 + rho(1).  In RSD the deviator only gets x2 when
    ordered first or second, a strictly weaker hurdle, so the Boston corner
    implies the RSD corner but not conversely."""
    n = inst.n
    if kind == MechanismKind.BOSTON:
        return corner_eu(inst) >= inst.v2 + inst.rho.at(1)
    return _u_sd(inst, 1, n) >= _u_sd(inst, 2, n - 1)


def corner_eu(inst: SymmetricInstance) -> Fraction:
    """EU of every agent at the all-rank-x1-first corner (both mechanisms)."""
    n, rho = inst.n, inst.rho
    rb = symmetric_params(inst).rho_bar
    return (Fraction(1, n) * (inst.v1 + rho.at(1))
            + Fraction(1, n) * (inst.v2 + rho.at(2))
            + Fraction(n - 2, n) * (inst.vbar + rb))


def solve_equilibrium(kind: MechanismKind, inst: SymmetricInstance) -> EquilibriumSolution:
    """Closed-form equilibrium n1 set: the length-1 interval intersected with
    the integers in [1, n-1], with the corner n1 = n tested separately."""
    n = inst.n
    params = symmetric_params(inst)
    corner = corner_holds(kind, inst)

    range_lo: Fraction | None = None
    range_hi: Fraction | None = None
    if kind == MechanismKind.BOSTON:
        a = inst.v1 + inst.rho.at(1) - params.delta
        b = inst.v2 + inst.rho.at(1) - params.delta
        d = inst.v1 + inst.v2 + 2 * (inst.rho.at(1) - params.delta)
        range_lo = (n * a - b) / d
        range_hi = (n * a + a) / d
    elif params.alpha is not None:
        range_lo = params.alpha - Fraction(1, 2)
        range_hi = params.alpha + Fraction(1, 2)
    # with rho(1) == rho(2) (alpha undefined) both RSD deviation gaps are
    # constant in n1 with signs that always select the corner, so the
    # missing interval never matters

    if corner:
        candidates = (n,)
    else:
        # an empty set is possible (and matches brute force): the interval
        # can sit above n-1 while the corner deviation is still profitable,
        # leaving no stable profile in the structured strategy class
        candidates = tuple(k for k in range(1, n)
                           if range_lo <= k <= range_hi)

    eu1: dict[int, Fraction | None] = {}
    eu2: dict[int, Fraction | None] = {}
    for k in candidates:
        if k == n:
            eu1[k] = corner_eu(inst)
            eu2[k] = None
        elif kind == MechanismKind.BOSTON:
            eu1[k], eu2[k] = boston_group_eu(inst, k)
        else:
            eu1[k], eu2[k] = sd_group_eu(inst, k)

    return EquilibriumSolution(kind, candidates, range_lo, range_hi, corner, eu1, eu2)


# ---------------------------------------------------------------------------
# brute-force oracle: full tie-break-order enumeration
# ---------------------------------------------------------------------------

def _lottery_value(inst: SymmetricInstance, first_slot: int, last_slot: int) -> Fraction:
    # Remaining agents rank the leftover goods uniformly at random, so the
    # received good sits at a uniform slot of the window; its value is vbar.
    return inst.vbar + inst.rho.mean(first_slot, last_slot)


def _enum_u(kind: MechanismKind, inst: SymmetricInstance, top: int, n1: int) -> Fraction:
    """EU of a representative x{top}-first agent, averaging the top-goods
    phase over all n! tie-break orders; leftover goods via the slot lottery."""
    n = inst.n
    rep = 0 if top == 1 else n - 1  # agents 0..n1-1 rank x1 first
    in_x1 = lambda a: a < n1
    total = Fraction(0)

    if kind == MechanismKind.BOSTON:
        cont = _lottery_value(inst, 2, n - 1)
        win = Fraction(0)
        count = 0
        for order in itertools.permutations(range(n)):
            pos = {a: p for p, a in enumerate(order)}
            group = [a for a in range(n) if in_x1(a) == in_x1(rep)]
            if min(group, key=pos.__getitem__) == rep:
                count += 1
        v_top = inst.v1 if top == 1 else inst.v2
        fact = math.factorial(n)
        p_win = Fraction(count, fact)
        return p_win * (v_top + inst.rho.at(1)) + (1 - p_win) * cont

    # RSD: walk each order; both top goods are taken within the first two
    # picks, later agents enter the slot lottery over positions 3..n.
    cont = _lottery_value(inst, 3, n)
    for order in itertools.permutations(range(n)):
        x1_free, x2_free = True, True
        u = None
        for agent in order:
            wants = (1, 2) if in_x1(agent) else (2, 1)
            got = None
            for choice in wants:
                if choice == 1 and x1_free:
                    x1_free, got = False, 1
                    break
                if choice == 2 and x2_free:
                    x2_free, got = False, 2
                    break
            if agent == rep:
                if got is None:
                    u = cont
                else:
                    rank = 1 if got == wants[0] else 2
                    v = inst.v1 if got == 1 else inst.v2
                    u = v + inst.rho.at(rank)
                break
            if not x1_free and not x2_free:
                u = cont
                break
        total += u
    return total / math.factorial(n)


def brute_force_equilibria(kind: MechanismKind, inst: SymmetricInstance) -> set[int]:
    """Equilibrium n1 set derived directly from the no-deviation inequalities,
    with the top-goods phase enumerated over all tie-break orders."""
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise SizeLimitError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    if kind == MechanismKind.BOSTON:
        # a corner deviator is the lone round-1 bidder on x2 and wins it
        corner = corner_eu(inst) >= inst.v2 + inst.rho.at(1)
    else:
        corner = _enum_u(kind, inst, 1, n) >= _enum_u(kind, inst, 2, n - 1)
    if corner:
        return {n}
    eq: set[int] = set()
    u = lambda top, k: _enum_u(kind, inst, top, k)
    for n1 in range(1, n):
        d_x1_to_x2 = u(1, n1) - u(2, n1 - 1)
        d_x2_to_x1 = u(2, n1) - u(1, n1 + 1)
        if d_x1_to_x2 >= 0 and d_x2_to_x1 >= 0:
            eq.add(n1)
    return eq


def sd_delta_x2_to_x1(inst: SymmetricInstance, n1: int) -> Fraction:
    """Utility change for an x2-first agent deviating to x1-first in RSD."""
    return _u_sd(inst, 2, n1) - _u_sd(inst, 1, n1 + 1)


# ---------------------------------------------------------------------------
# truth-telling equilibrium check (exact, real engines)
# ---------------------------------------------------------------------------

def _deviation_eu_vs_common(kind: MechanismKind, common: RankList, dev: RankList,
                            inst: SymmetricInstance) -> Fraction:
    """Exact EU of one deviator when all n-1 opponents submit ``common``.

    Identical opponents make every tie-break order with the deviator at a
    given priority position equivalent, so only n cases need simulating."""
    n = inst.n
    rho = inst.rho
    total = Fraction(0)
    if kind == MechanismKind.RSD:
        for pos in range(n):
            # opponents picking before the deviator take the first `pos`
            # goods of the common list
            taken = set(common.order[:pos])
            for g in dev.order:
                if g not in taken:
                    total += inst.good_value(g) + rho.at(dev.rank_of(g))
                    break
        return total / n

    for pos in range(n):
        taken = [False] * n
        opp_left = n - 1
        dev_good = None
        # priorities: deviator at `pos`; opponents fill the other slots in
        # some order -- they are interchangeable, so only their count and
        # the best remaining opponent priority matter
        opp_priorities = [p for p in range(n) if p != pos]
        for k in range(n):
            dev_bid = dev.order[k] if dev_good is None else None
            if dev_bid is not None and taken[dev_bid]:
                dev_bid = None
            opp_bid = None
            if opp_left > 0:
                g = common.order[k]
                if not taken[g]:
                    opp_bid = g
            if dev_bid is not None and dev_bid == opp_bid:
                if pos < opp_priorities[0]:
                    dev_good = dev_bid
                    taken[dev_bid] = True
                else:
                    taken[opp_bid] = True
                    opp_priorities.pop(0)
                    opp_left -= 1
            else:
                if dev_bid is not None:
                    dev_good = dev_bid
                    taken[dev_bid] = True
                if opp_bid is not None:
                    taken[opp_bid] = True
                    opp_priorities.pop(0)
                    opp_left -= 1
            if dev_good is not None and opp_left == 0:
                break
        total += inst.good_value(dev_good) + rho.at(dev.rank_of(dev_good))
    return total / n


def check_truthtelling_equilibrium(kind: MechanismKind, inst: SymmetricInstance) -> bool:
    """True iff no unilateral deviation from the all-truthful profile raises
    exact expected utility.  Enumerates all n! deviation reports."""
    n = inst.n
    if n > TRUTHTELLING_MAX_N:
        raise SizeLimitError(f"truth-telling check limited to n <= {TRUTHTELLING_MAX_N}")
    truthful = RankList(tuple(range(n)))
    baseline = _deviation_eu_vs_common(kind, truthful, truthful, inst)
    for perm in itertools.permutations(range(n)):
        if perm == truthful.order:
            continue
        if _deviation_eu_vs_common(kind, truthful, RankList(perm), inst) > baseline:
            return False
    return True


# ---------------------------------------------------------------------------
# equilibrium welfare
# ---------------------------------------------------------------------------

def equilibrium_welfare(kind: MechanismKind, inst: SymmetricInstance,
                        n1: int) -> tuple[Fraction, Fraction]:
    """(rho component, total) of expected equilibrium welfare at n1 (cents).

    Total fundamental value is constant across matchings in this
    environment, so the comparison between mechanisms lives entirely in the
    rho component."""
    n, rho = inst.n, inst.rho
    if not 1 <= n1 <= n:
        raise ValueError(f"n1 must be in 1..{n}, got {n1}")
    if n1 == n:
        rho_comp = Fraction(rho.at(1) + rho.at(2) + sum(rho.at(j) for j in range(3, n + 1)))
    elif kind == MechanismKind.BOSTON:
        rho_comp = Fraction(2 * rho.at(1) + sum(rho.at(j) for j in range(2, n)))
    else:
        r11 = Fraction(n1 * (n1 - 1), n * (n - 1))
        r12 = Fraction(n1 * (n - n1), n * (n - 1))
        r22 = Fraction((n - n1) * (n - n1 - 1), n * (n - 1))
        rho_comp = (r11 * (rho.at(1) + rho.at(2))
                    + 2 * r12 * (rho.at(1) + rho.at(1))
                    + r22 * (rho.at(1) + rho.at(2))
                    + sum(rho.at(j) for j in range(3, n + 1)))
    v_total = inst.v1 + inst.v2 + (n - 2) * inst.vbar
    return rho_comp, rho_comp + v_total
