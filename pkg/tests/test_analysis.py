import math

import pytest

from rankmatch.analysis import (
    GOOD_NAMES,
    PLANTED_PHASE1,
    SubjectRecord,
    analyze_session,
    classify_truthful,
    generate_session,
    load_session,
    net_value_design,
    net_values,
    nv_rank_summary,
    save_session,
    truth_rate_table,
    welfare_total,
)
from rankmatch.core import DataFormatError, RankList, cents
from rankmatch.mechanisms import MechanismKind
from rankmatch.stats import ols_fit

RHO = (287, 100, 50, 0, -69)


def make_record(report=(0, 1, 2, 3, 4), good=0, phase2=3111, **kw):
    base = dict(subject_id="s1", treatment=MechanismKind.RSD, group_id="g1",
                phase1_values=PLANTED_PHASE1, report=RankList(tuple(report)),
                good_received=good, phase2_value=phase2, phase1_order=1,
                risk_row=25, loss_row=25, crt=2, female=0, practice=1)
    base.update(kw)
    return SubjectRecord(**base)


def test_net_value_identity():
    rec = make_record(good=0, phase2=3111)
    assert rec.net_value == 3111 - 2824
    assert rec.rank_received == 1
    nv = net_values([rec])[0]
    assert nv.net_value == rec.net_value and nv.rank_received == 1


def test_record_validation():
    with pytest.raises(ValueError):
        make_record(phase2=-5)
    with pytest.raises(ValueError):
        make_record(phase1_order=0)
    with pytest.raises(ValueError):
        make_record(crt=4)


def test_classify_truthful_scopes():
    truthful = make_record()
    for scope in ("all", "top2", "top1"):
        assert classify_truthful(truthful, 0, scope)
    # bottle (good 1) above backpack (good 0): gap 568 > 200
    swapped = make_record(report=(1, 0, 2, 3, 4), good=1, phase2=2256)
    assert not classify_truthful(swapped, 200, "all")
    assert not classify_truthful(swapped, 200, "top1")
    assert classify_truthful(swapped, 568, "all")
    # mug (3) and pens (4) swapped: gap 120 <= 200
    tail_swap = make_record(report=(0, 1, 2, 4, 3))
    assert classify_truthful(tail_swap, 200, "all")
    assert not classify_truthful(tail_swap, 0, "all")
    assert classify_truthful(tail_swap, 0, "top2")


def test_truth_rates_monotone_in_tolerance_and_scope():
    recs = generate_session(30, RHO, 150.0, seed=4, misreport_rate=0.4)
    table = truth_rate_table(recs, [0, 100, 200, 600])["rsd"]["rates"]
    for scope in ("all", "top2", "top1"):
        rates = [table[f"tol_{t}_{scope}"] for t in (0, 100, 200, 600)]
        assert rates == sorted(rates)
    for t in (0, 100, 200, 600):
        assert table[f"tol_{t}_all"] <= table[f"tol_{t}_top2"] <= table[f"tol_{t}_top1"]


def test_misreport_rate_recovery():
    recs = generate_session(100, RHO, 0.0, seed=6, misreport_rate=0.25)
    observed = 1.0 - truth_rate_table(recs, [0])["rsd"]["rates"]["tol_0_all"]
    se = math.sqrt(0.25 * 0.75 / len(recs))
    assert abs(observed - 0.25) < 4 * se


def test_welfare_total_and_incomplete_group():
    recs = generate_session(4, RHO, 0.0, seed=2)
    expected = sum(PLANTED_PHASE1) + sum(RHO)
    assert welfare_total(recs) == {"rsd": float(expected)}
    with pytest.warns(UserWarning, match="excluded"):
        out = welfare_total(recs[:-1])  # last group now has 4 subjects
    assert out == {"rsd": float(expected)}


def test_zero_noise_recovers_planted_rho():
    recs = generate_session(20, RHO, 0.0, seed=101)
    summary = nv_rank_summary(recs)
    for j in range(5):
        count, mean, sd = summary[j + 1]
        assert count == 20
        assert float(mean) == RHO[j]
        assert sd == 0.0


def test_session_round_trip(tmp_path):
    recs = generate_session(10, RHO, 120.0, seed=9, misreport_rate=0.2)
    path = tmp_path / "session.csv"
    save_session(recs, path)
    assert load_session(path) == recs


def test_load_session_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("not,the,header\n")
    with pytest.raises(DataFormatError, match="header"):
        load_session(path)
    recs = generate_session(1, RHO, 0.0, seed=1)
    good = tmp_path / "good.csv"
    save_session(recs, good)
    lines = good.read_text().splitlines()
    lines[1] = lines[1].replace(",0,1,2,3,4,", ",0,0,2,3,4,", 1)
    bad = tmp_path / "badrow.csv"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataFormatError, match=":2:"):
        load_session(bad)


def test_analyze_session_shape():
    recs = generate_session(10, RHO, 50.0, seed=3, misreport_rate=0.1)
    doc = analyze_session(recs, [0, 200])
    assert doc["n_subjects"] == 50
    assert set(doc["net_value_by_rank"]) == {"1", "2", "3", "4", "5"}
    assert "rsd" in doc["truth_rates"] and "rsd" in doc["welfare_mean_cents"]


def test_design_recovers_planted_rank_effects():
    recs = generate_session(80, RHO, 100.0, seed=12, misreport_rate=0.3)
    y, X, cols = net_value_design(recs)
    res = ols_fit(y, X, cols)
    by = dict(zip(res.columns, res.coef))
    se = dict(zip(res.columns, res.se))
    for name, j in (("rank2", 1), ("rank3", 2), ("rank4", 3), ("rank5", 4)):
        planted = (RHO[j] - RHO[0]) / 100.0
        assert abs(by[name] - planted) < 3 * se[name]
