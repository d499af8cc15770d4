import json
from fractions import Fraction

import pytest

from rankmatch.core import (
    DataFormatError,
    MarketInstance,
    Matching,
    RankList,
    RhoSchedule,
    build_outcome,
    cents,
    dollars,
    received_rank,
    reports_from_json_dict,
    reports_to_json_dict,
    utility,
)


def test_cents_parsing():
    assert cents("16.56") == 1656
    assert cents(2) == 200
    assert cents("0.02") == 2
    assert dollars(1656) == 16.56
    with pytest.raises(ValueError):
        cents("1.005")
    with pytest.raises(ValueError):
        cents("abc")


def test_rank_list():
    r = RankList((2, 0, 1))
    assert r.rank_of(2) == 1
    assert r.rank_of(0) == 2
    assert r.rank_of(1) == 3
    with pytest.raises(ValueError):
        RankList((0, 0, 1))


def test_rho_schedule():
    rho = RhoSchedule((10, 0, -5))
    assert rho.at(1) == 10 and rho.at(3) == -5
    assert rho.mean(2, 3) == Fraction(-5, 2)
    with pytest.raises(ValueError):
        RhoSchedule((0, 10))
    with pytest.raises(ValueError):
        rho.at(4)


def test_market_round_trip(tmp_path):
    m = MarketInstance.from_cents([[100, 70, 0]] * 3, [10, 0, 0], ["x", "y", "z"])
    path = tmp_path / "m.json"
    m.dump(path)
    m2 = MarketInstance.load(path)
    assert m2 == m
    with pytest.raises(DataFormatError):
        MarketInstance.from_json_dict({"values": [[1]]})


def test_single_good_market():
    m = MarketInstance.from_cents([[50]], [5])
    assert m.n == 1


def test_outcome():
    m = MarketInstance.from_cents([[100, 70, 0]] * 3, [10, 0, 0])
    reports = [RankList((0, 1, 2)), RankList((1, 0, 2)), RankList((2, 1, 0))]
    matching = Matching((0, 1, 2))
    out = build_outcome(matching, reports, m)
    assert out.received_rank == (1, 1, 1)
    assert out.utility == (110, 80, 10)
    assert out.welfare_total == 200 and out.rho_total == 30
    assert received_rank(matching, reports, 1) == 1
    assert utility(70, 2, m.rho) == 70


def test_reports_json():
    doc = {"reports": [[0, 1], [1, 0]]}
    reports = reports_from_json_dict(doc)
    assert reports_to_json_dict(reports) == doc
    with pytest.raises(DataFormatError):
        reports_from_json_dict({})
