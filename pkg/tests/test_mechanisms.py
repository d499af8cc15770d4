import itertools
import random
from fractions import Fraction

import pytest

from rankmatch.core import MarketInstance, RankList, SizeLimitError
from rankmatch.mechanisms import (
    MechanismKind,
    TieBreakOrder,
    exact_expected_utilities,
    is_pareto_efficient,
    run_boston,
    run_mechanism,
    run_random,
    run_rsd,
)

# goods 0..3 = pizza, chips, soda, pretzels; agents 0..3 = Ann..Dave
RSD_REPORTS = [RankList((1, 0, 2, 3)), RankList((0, 1, 2, 3)),
               RankList((0, 3, 1, 2)), RankList((3, 2, 1, 0))]
BOSTON_REPORTS = [RankList((0, 3, 1, 2)), RankList((0, 1, 2, 3)),
                  RankList((0, 1, 3, 2)), RankList((3, 2, 1, 0))]


def test_rsd_worked_example():
    m = run_rsd(RSD_REPORTS, TieBreakOrder((1, 2, 3, 0)))
    assert m.assignment == (1, 0, 3, 2)


def test_boston_worked_example():
    m = run_boston(BOSTON_REPORTS, TieBreakOrder((1, 0, 2, 3)))
    assert m.assignment == (2, 0, 1, 3)


def test_boston_pass_rounds():
    # an agent whose early choices are taken must wait for a later round
    reports = [RankList((0, 1, 2)), RankList((0, 1, 2)), RankList((1, 0, 2))]
    m = run_boston(reports, TieBreakOrder((0, 1, 2)))
    # agent 1 loses round 1 on good 0 and round 2 on good 1, lands on good 2
    assert m.assignment == (0, 2, 1)


def test_rsd_boston_differ():
    reports = BOSTON_REPORTS
    order = TieBreakOrder((1, 0, 2, 3))
    assert run_rsd(reports, order).assignment != run_boston(reports, order).assignment


def test_input_validation():
    with pytest.raises(ValueError):
        run_rsd(RSD_REPORTS[:3], TieBreakOrder((0, 1, 2, 3)))
    with pytest.raises(ValueError):
        TieBreakOrder((0, 0, 1))


def test_run_random_deterministic():
    market = MarketInstance.from_cents([[100, 70, 0, 0]] * 4, [10, 5, 0, 0])
    out1, ord1 = run_random(MechanismKind.BOSTON, BOSTON_REPORTS, market, seed=3)
    out2, ord2 = run_random(MechanismKind.BOSTON, BOSTON_REPORTS, market, seed=3)
    assert out1 == out2 and ord1 == ord2
    out3, _ = run_random(MechanismKind.BOSTON, BOSTON_REPORTS, market, seed=3, stream=1)
    assert isinstance(out3.welfare_total, int)


def test_exact_expected_utilities_symmetry():
    market = MarketInstance.from_cents([[100, 80, 0]] * 3, [10, 0, 0])
    reports = [RankList((0, 1, 2))] * 3
    eus = exact_expected_utilities(MechanismKind.RSD, reports, market)
    assert eus == (Fraction(190, 3),) * 3
    assert sum(eus) == 190


def test_exact_expected_utilities_size_limit():
    n = 9
    market = MarketInstance.from_cents([[0] * n] * n, [0] * n)
    reports = [RankList(tuple(range(n)))] * n
    with pytest.raises(SizeLimitError):
        exact_expected_utilities(MechanismKind.RSD, reports, market)


def test_rsd_always_pareto_efficient():
    rng = random.Random(0)
    for _ in range(100):
        reports = [RankList(tuple(rng.sample(range(4), 4))) for _ in range(4)]
        order = TieBreakOrder(tuple(rng.sample(range(4), 4)))
        assert is_pareto_efficient(run_rsd(reports, order), reports)


def test_boston_inefficient_for_true_preferences():
    reports = [RankList((1, 0, 2)), RankList((0, 1, 2)), RankList((2, 0, 1))]
    truth = [RankList((0, 1, 2)), RankList((1, 0, 2)), RankList((2, 1, 0))]
    m = run_boston(reports, TieBreakOrder((0, 1, 2)))
    assert is_pareto_efficient(m, reports)
    assert not is_pareto_efficient(m, truth)


def test_pareto_detects_improvement():
    reports = [RankList((0, 1)), RankList((0, 1))]
    from rankmatch.core import Matching
    assert not is_pareto_efficient(Matching((1, 0)), [RankList((0, 1)), RankList((1, 0))])
    assert is_pareto_efficient(Matching((0, 1)), reports)


def test_exact_matches_brute_average():
    market = MarketInstance.from_cents([[90, 40, 10]] * 3, [7, 2, 0])
    reports = [RankList((0, 1, 2)), RankList((1, 0, 2)), RankList((0, 2, 1))]
    for kind in MechanismKind:
        eus = exact_expected_utilities(kind, reports, market)
        totals = [0] * 3
        for perm in itertools.permutations(range(3)):
            from rankmatch.core import build_outcome
            out = build_outcome(run_mechanism(kind, reports, TieBreakOrder(perm)),
                                reports, market)
            for i in range(3):
                totals[i] += Fraction(out.utility[i], 6)
        assert tuple(totals) == eus
