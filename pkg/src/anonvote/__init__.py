"""Exact welfare optimization for anonymous incentive-compatible binary voting.

Core pieces: exact-rational environments (:mod:`anonvote.environments`),
voting-rule representations and audits (:mod:`anonvote.mechanisms`), an
exact simplex with an independent enumeration oracle (:mod:`anonvote.ratlp`),
the welfare-maximization program (:mod:`anonvote.welfare_opt`), scripted
reproductions (:mod:`anonvote.experiments`) and a command line front end
(:mod:`anonvote.cli`).
"""

from .rationals import Rational, RationalParseError, format_rational, parse_rational
from .environments import (
    AgentDistribution,
    AgentStats,
    Environment,
    InvalidEnvironment,
    ValidationReport,
    ValueSet,
    agent_stats,
    environment_from_json,
    environment_to_json,
    profile_probability,
    validate_environment,
)
from .mechanisms import (
    AnonymousSCF,
    BicReport,
    NotBicError,
    OrderedTableSCF,
    OrdinalSCF,
    QualifiedMajorityRule,
    WeightedMajorityRule,
    ZeroProbabilityCoalition,
    check_bic,
    coalition,
    evaluate,
    interim_allocation,
    mechanism_from_json,
    mechanism_to_json,
    ordinal_projection,
    qmr_best,
    symmetric_threshold,
    welfare,
    welfare_via_interims,
    wmr_build,
)
from .ratlp import GuardExceeded, LinearProgram, LpSolution, SimplexError, solve, vertex_enumerate
from .welfare_opt import (
    AuxCorners,
    AuxPoint,
    Lemma3Report,
    OptimalMechanismReport,
    aux_corners,
    build_opt_lp,
    lemma3_bounds,
    solve_opt,
)
from .experiments import (
    CampaignReport,
    Theorem2Report,
    cardinal_ordinal_ratio_sweep,
    example1_fixture,
    make_fstar,
    make_theorem2_env,
    run_theorem2_demo,
    verify_theorem1,
)

__version__ = "0.1.0"
