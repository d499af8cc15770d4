"""Matching mechanisms with rankings-dependent utility.

Subpackages by concern: ``core`` (domain types), ``mechanisms`` (RSD /
Boston engines and exact oracles), ``equilibrium`` (symmetric-environment
solver), ``simulation`` (seeded Monte Carlo), ``elicitation`` (price-list
payments), ``stats`` (nonparametric tests, OLS), ``analysis`` (session
pipeline), ``cli`` (command line).
"""
from .core import (
    DataFormatError,
    Good,
    MarketInstance,
    Matching,
    Outcome,
    RankList,
    RhoSchedule,
    SizeLimitError,
    ValueMatrix,
    cents,
    dollars,
)
from .mechanisms import (
    MechanismKind,
    TieBreakOrder,
    exact_expected_utilities,
    is_pareto_efficient,
    run_boston,
    run_mechanism,
    run_random,
    run_rsd,
)
from .equilibrium import (
    EquilibriumSolution,
    SymmetricInstance,
    brute_force_equilibria,
    check_truthtelling_equilibrium,
    equilibrium_welfare,
    solve_equilibrium,
    symmetric_params,
)
from .simulation import SimReport, StrategyProfile, rank_distribution, simulate

__version__ = "0.1.0"
