import random
from fractions import Fraction

import pytest

from rankmatch.core import RhoSchedule, SizeLimitError
from rankmatch.equilibrium import (
    SymmetricInstance,
    boston_group_eu,
    brute_force_equilibria,
    check_truthtelling_equilibrium,
    corner_holds,
    equilibrium_welfare,
    sd_group_eu,
    solve_equilibrium,
    symmetric_params,
)
from rankmatch.mechanisms import MechanismKind

E1 = SymmetricInstance(5, 2824, 2256, 700, RhoSchedule((800, 200, 0, 0, 0)))


def rand_instance(rng, n=None, nonneg=False, strict_top=False):
    n = n or rng.choice([4, 5, 6])
    vbar = rng.randint(0, 500)
    v2 = vbar + rng.randint(1, 2000)
    v1 = v2 + rng.randint(1, 2000)
    lo = 0 if nonneg else -300
    tail = sorted((rng.randint(lo, 700) for _ in range(n - 1)), reverse=True)
    top = tail[0] + rng.randint(1, 300) if strict_top else rng.randint(tail[0], tail[0] + 300)
    return SymmetricInstance(n, v1, v2, vbar, RhoSchedule(tuple([top] + tail)))


def test_instance_validation():
    with pytest.raises(ValueError):
        SymmetricInstance(2, 3, 2, 1, RhoSchedule((1, 0)))
    with pytest.raises(ValueError):
        SymmetricInstance(3, 3, 3, 1, RhoSchedule((1, 0, 0)))
    with pytest.raises(ValueError):
        SymmetricInstance(3, 3, 2, 1, RhoSchedule((1, 0)))


def test_instance_json_round_trip():
    doc = E1.to_json_dict()
    assert SymmetricInstance.from_json_dict(doc) == E1


def test_derived_params():
    p = symmetric_params(E1)
    assert p.delta == Fraction(2300, 3)
    assert p.delta_prime == 700
    assert p.rho_bar == 0
    assert p.alpha == Fraction(5, 2) + 2 * Fraction(2824 - 2256, 600)


def test_group_eu_formulas():
    u1, u2 = boston_group_eu(E1, 3)
    assert u1 == Fraction(1, 3) * 3624 + Fraction(2, 3) * Fraction(2300, 3)
    assert u2 == Fraction(1, 2) * 3056 + Fraction(1, 2) * Fraction(2300, 3)
    s1, s2 = sd_group_eu(E1, 4)
    assert s1 == (Fraction(3624, 5) + Fraction(1, 5) * (Fraction(3, 4) * 2456
                  + Fraction(1, 4) * 3624) + Fraction(3, 5) * 700)
    assert s2 is not None


def test_e1_solutions():
    sb = solve_equilibrium(MechanismKind.BOSTON, E1)
    ss = solve_equilibrium(MechanismKind.RSD, E1)
    assert sb.n1_candidates == (3,)
    assert ss.n1_candidates == (4,)
    assert sb.range_hi - sb.range_lo == 1
    assert ss.range_hi - ss.range_lo == 1
    assert not sb.corner_all_top and not ss.corner_all_top


def test_e1_welfare():
    wb, tb = equilibrium_welfare(MechanismKind.BOSTON, E1, 3)
    ws, ts = equilibrium_welfare(MechanismKind.RSD, E1, 4)
    assert wb == 1800
    assert ws == Fraction(1240)
    assert tb - wb == ts - ws == 2824 + 2256 + 3 * 700


def test_corner_instance():
    # huge v1 gap: everyone chases x1 in both mechanisms
    inst = SymmetricInstance(4, 100000, 300, 200, RhoSchedule((50, 40, 30, 20)))
    for kind in MechanismKind:
        assert corner_holds(kind, inst)
        sol = solve_equilibrium(kind, inst)
        assert sol.n1_candidates == (4,)
        assert brute_force_equilibria(kind, inst) == {4}
    # corner welfare identical across mechanisms
    assert equilibrium_welfare(MechanismKind.BOSTON, inst, 4) == \
        equilibrium_welfare(MechanismKind.RSD, inst, 4)


def test_rsd_corner_without_boston_corner():
    # deviating to x2 is sure money in Boston but not in RSD, so the RSD
    # corner can survive when the Boston one fails
    inst = SymmetricInstance(5, 1603, 794, 485, RhoSchedule((797, 448, -108, -152, -202)))
    assert not corner_holds(MechanismKind.BOSTON, inst)
    assert corner_holds(MechanismKind.RSD, inst)
    assert solve_equilibrium(MechanismKind.RSD, inst).n1_candidates == (5,)
    assert brute_force_equilibria(MechanismKind.RSD, inst) == {5}


def test_degenerate_schedule_selects_corner():
    inst = SymmetricInstance(4, 900, 500, 100, RhoSchedule((60, 60, 10, 0)))
    sol = solve_equilibrium(MechanismKind.RSD, inst)
    assert sol.n1_candidates == (4,)
    assert brute_force_equilibria(MechanismKind.RSD, inst) == {4}


def test_closed_form_matches_brute_force():
    rng = random.Random(7)
    for _ in range(120):
        inst = rand_instance(rng)
        for kind in MechanismKind:
            assert set(solve_equilibrium(kind, inst).n1_candidates) == \
                brute_force_equilibria(kind, inst), (kind, inst)


def test_brute_force_size_limit():
    inst = SymmetricInstance(7, 30, 20, 10, RhoSchedule((5, 4, 3, 2, 1, 0, 0)))
    with pytest.raises(SizeLimitError):
        brute_force_equilibria(MechanismKind.RSD, inst)


def test_truthtelling_section_2_2():
    inst = SymmetricInstance(3, 100, 80, 0, RhoSchedule((10, 0, 0)))
    assert check_truthtelling_equilibrium(MechanismKind.RSD, inst)
    assert not check_truthtelling_equilibrium(MechanismKind.BOSTON, inst)


def test_truthtelling_boston_implies_rsd():
    rng = random.Random(13)
    seen_boston = 0
    for _ in range(30):
        inst = rand_instance(rng, n=rng.choice([3, 4]), nonneg=True)
        if check_truthtelling_equilibrium(MechanismKind.BOSTON, inst):
            seen_boston += 1
            assert check_truthtelling_equilibrium(MechanismKind.RSD, inst)
    assert seen_boston >= 1
