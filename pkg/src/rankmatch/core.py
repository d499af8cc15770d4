"""Shared domain types for matching markets with rankings-dependent utility.

Conventions used across the package:

* Money is integer cents everywhere.  Expected values that require division
  are computed as exact ``fractions.Fraction`` of cents.
* Ranks are 1-based: ``rho(1)`` is the utility bonus for receiving a good the
  agent listed first.  Agent ids and good ids are 0-based.
* All types here are immutable value objects; they can be shared freely
  across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Sequence


class SizeLimitError(ValueError):
    """Exact enumeration was requested for a market too large to enumerate."""


class DataFormatError(ValueError):
    """An input file violates its documented schema."""


def cents(amount) -> int:
    """Parse a dollar amount (``"16.56"``, ``16.56``, ``Decimal``) into cents."""
    try:
        d = Decimal(str(amount)).scaleb(2)
    except InvalidOperation as exc:
        raise ValueError(f"not a money amount: {amount!r}") from exc
    if d != d.to_integral_value():
        raise ValueError(f"sub-cent money amount: {amount!r}")
    return int(d)


def dollars(amount_cents) -> float:
    """Cents to a float dollar amount.  For display and JSON output only."""
    return float(amount_cents) / 100.0


def _check_permutation(seq: Sequence[int], what: str) -> None:
    n = len(seq)
    if sorted(seq) != list(range(n)):
        raise ValueError(f"{what} must be a permutation of 0..{n - 1}, got {seq!r}")


@dataclass(frozen=True)
class Good:
    """One indivisible object, identified by a 0-based id."""

    id: int
    label: str

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"good id must be non-negative, got {self.id}")


@dataclass(frozen=True)
class RankList:
    """An agent's submitted ordinal report: good ids, most-preferred first."""

    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        _check_permutation(self.order, "rank list")

    def __len__(self) -> int:
        return len(self.order)

    def rank_of(self, good_id: int) -> int:
        """1-based position of ``good_id`` in this list."""
        return self.order.index(good_id) + 1


@dataclass(frozen=True)
class RhoSchedule:
    """Rankings-dependent utility per received rank, in cents, non-increasing."""

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if not self.values:
            raise ValueError("rho schedule must be non-empty")
        for a, b in zip(self.values, self.values[1:]):
            if b > a:
                raise ValueError(f"rho schedule must be non-increasing, got {self.values}")

    def __len__(self) -> int:
        return len(self.values)

    def at(self, rank: int) -> int:
        """rho(rank) for a 1-based rank."""
        if not 1 <= rank <= len(self.values):
            raise ValueError(f"rank {rank} out of range 1..{len(self.values)}")
        return self.values[rank - 1]

    def mean(self, rank_from: int, rank_to: int) -> Fraction:
        """Exact average of rho over the inclusive 1-based rank window."""
        if not 1 <= rank_from <= rank_to <= len(self.values):
            raise ValueError(f"bad rank window {rank_from}..{rank_to}")
        window = self.values[rank_from - 1 : rank_to]
        return Fraction(sum(window), len(window))


@dataclass(frozen=True)
class ValueMatrix:
    """Fundamental values in cents: ``rows[agent][good]``, n x n, non-negative."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(int(v) for v in r) for r in self.rows))
        n = len(self.rows)
        for r in self.rows:
            if len(r) != n:
                raise ValueError("value matrix must be square")
            if any(v < 0 for v in r):
                raise ValueError("fundamental values must be non-negative")

    def __len__(self) -> int:
        return len(self.rows)

    def value(self, agent: int, good: int) -> int:
        return self.rows[agent][good]


@dataclass(frozen=True)
class MarketInstance:
    """Agents, goods, fundamental values, and the rho schedule of one market."""

    n: int
    goods: tuple[Good, ...]
    values: ValueMatrix
    rho: RhoSchedule

    def __post_init__(self):
        object.__setattr__(self, "goods", tuple(self.goods))
        if self.n < 1:
            raise ValueError(f"market size must be >= 1, got {self.n}")
        if [g.id for g in self.goods] != list(range(self.n)):
            raise ValueError("good ids must be exactly 0..n-1, in order")
        if len(self.values) != self.n or len(self.rho) != self.n:
            raise ValueError("values and rho dimensions must match n")

    @staticmethod
    def from_cents(values: Sequence[Sequence[int]], rho: Sequence[int],
                   labels: Sequence[str] | None = None) -> "MarketInstance":
        n = len(values)
        if labels is None:
            labels = [f"good{j}" for j in range(n)]
        goods = tuple(Good(j, str(labels[j])) for j in range(n))
        return MarketInstance(n, goods, ValueMatrix(tuple(tuple(r) for r in values)),
                              RhoSchedule(tuple(rho)))

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "goods": [g.label for g in self.goods],
            "values": [list(r) for r in self.values.rows],
            "rho": list(self.rho.values),
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "MarketInstance":
        try:
            return MarketInstance.from_cents(doc["values"], doc["rho"], doc["goods"])
        except KeyError as exc:
            raise DataFormatError(f"market JSON missing field {exc}") from exc

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "MarketInstance":
        with open(path) as fh:
            return MarketInstance.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class Matching:
    """A bijection agent id -> good id, stored as a tuple indexed by agent."""

    assignment: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))
        _check_permutation(self.assignment, "matching")

    def good_of(self, agent: int) -> int:
        return self.assignment[agent]


@dataclass(frozen=True)
class Outcome:
    """A matching annotated with received ranks and realized utilities (cents)."""

    matching: Matching
    received_rank: tuple[int, ...]
    utility: tuple[int, ...]
    welfare_total: int
    rho_total: int


def utility(v_cents: int, rank: int, rho: RhoSchedule) -> int:
    """Realized utility of receiving a good: fundamental value + rho(rank)."""
    return v_cents + rho.at(rank)


def received_rank(matching: Matching, reports: Sequence[RankList], agent: int) -> int:
    """1-based position of the agent's assigned good in their own report."""
    return reports[agent].rank_of(matching.good_of(agent))


def build_outcome(matching: Matching, reports: Sequence[RankList],
                  market: MarketInstance) -> Outcome:
    """Annotate a matching with ranks, utilities and welfare for a market."""
    ranks = tuple(received_rank(matching, reports, i) for i in range(market.n))
    utils = tuple(utility(market.values.value(i, matching.good_of(i)), ranks[i], market.rho)
                  for i in range(market.n))
    rho_total = sum(market.rho.at(r) for r in ranks)
    return Outcome(matching, ranks, utils, sum(utils), rho_total)


def outcome_welfare(outcome: Outcome) -> tuple[int, int]:
    """(total welfare, rho-only component), both in cents."""
    return outcome.welfare_total, outcome.rho_total


def reports_from_json_dict(doc: dict) -> list[RankList]:
    """Parse the ``{"reports": [[good ids]]}`` wire format."""
    try:
        raw = doc["reports"]
    except KeyError as exc:
        raise DataFormatError("reports JSON missing 'reports' field") from exc
    reports = [RankList(tuple(int(g) for g in row)) for row in raw]
    if len({len(r) for r in reports}) > 1:
        raise DataFormatError("all reports must rank the same number of goods")
    return reports


def reports_to_json_dict(reports: Iterable[RankList]) -> dict:
    return {"reports": [list(r.order) for r in reports]}
