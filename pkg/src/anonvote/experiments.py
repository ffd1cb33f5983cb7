"""Scripted reproductions and randomized verification campaigns.

The centerpiece is a two-type family of environments indexed by a small
epsilon: two "high-stakes" agents whose values concentrate on {-M^2, M} and
n-2 "low-stakes" agents concentrated on {-1, 1}. At epsilon = 0 the family
degenerates (zero-probability support points, accepted in limit mode), and
an anonymous cardinal rule, unanimity plus three targeted overrides, is
incentive compatible and beats every qualified majority rule. The campaigns
here rebuild those numbers exactly and stress the two-agent optimality
characterization on seeded random environments.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .environments import (
    AgentDistribution,
    Environment,
    ValueSet,
    environment_to_json,
)
from .mechanisms import (
    AnonymousSCF,
    OrderedTableSCF,
    QualifiedMajorityRule,
    all_multisets,
    qmr_best,
    welfare,
    wmr_build,
)
from .rationals import format_rational, parse_rational
from .welfare_opt import aux_corners, build_opt_lp, mechanism_from_vertex, solve_opt
from .ratlp import solve

__all__ = [
    "family_conditions",
    "make_theorem2_env",
    "make_fstar",
    "Theorem2Report",
    "run_theorem2_demo",
    "SweepRow",
    "cardinal_ordinal_ratio_sweep",
    "CampaignReport",
    "verify_theorem1",
    "example1_fixture",
    "random_environment",
    "random_symmetric_environment",
    "random_feasible_mechanism",
]


def family_conditions(n: int, M: Fraction) -> tuple[Fraction, Fraction]:
    """The two exact quantities gating the (n, M) family.

    First: expected total value of reform given n-1 supporters (must be
    negative, so unanimity beats every lower threshold at the limit point).
    Second: total value of the {M, M, -1, ..., -1} profile (must be positive,
    so overriding unanimity there gains welfare).
    """
    M = parse_rational(M)
    near_unanimity = Fraction(2, n) * (-M * M + M + n - 2) + Fraction(n - 2, n) * (
        2 * M + n - 4
    )
    override_gain = 2 * M - (n - 2)
    return near_unanimity, override_gain


def make_theorem2_env(n: int, M, eps) -> Environment:
    """Two-type environment over {-M^2, -1, 1, M} indexed by eps in [0, 1/2).

    High-stakes agents 1 and 2 put probability 1/2 - eps on -M^2 and M;
    low-stakes agents put 1/2 - eps on -1 and 1. eps = 0 is the limit case
    with zero-probability support points.
    """
    if n < 3:
        raise ValueError("the family needs at least 3 agents")
    M = parse_rational(M)
    eps = parse_rational(eps)
    if M <= 0:
        raise ValueError("M must be positive")
    if not 0 <= eps < Fraction(1, 2):
        raise ValueError(f"eps must lie in [0, 1/2), got {eps}")
    near_unanimity, override_gain = family_conditions(n, M)
    if override_gain <= 0:
        raise ValueError(
            "family condition violated: the {M, M, -1, ...} profile must have "
            f"positive total value, got 2M - (n-2) = {override_gain}"
        )
    if near_unanimity >= 0:
        raise ValueError(
            "family condition violated: expected reform value with n-1 supporters "
            f"must be negative, got {near_unanimity}"
        )
    values = ValueSet([-M * M, Fraction(-1), Fraction(1), M])
    main = Fraction(1, 2) - eps
    high = AgentDistribution(
        {-M * M: main, Fraction(-1): eps, Fraction(1): eps, M: main}, name="high"
    )
    low = AgentDistribution(
        {-M * M: eps, Fraction(-1): main, Fraction(1): main, M: eps}, name="low"
    )
    return Environment(values, [high, high] + [low] * (n - 2))


def make_fstar(n: int, M) -> AnonymousSCF:
    """Unanimity with three targeted overrides set to 1.

    The overridden multisets are {M, M, -1, ..., -1}, {-M^2, 1, ..., 1} and
    {-M^2, -M^2, -M^2, 1, ..., 1}. At the eps = 0 limit point only the first
    carries probability; the other two exist to keep interim allocations flat
    across the zero-probability reports, which is what makes the rule
    incentive compatible there.
    """
    if n < 3:
        raise ValueError("the construction needs at least 3 agents")
    M = parse_rational(M)
    values = (-M * M, Fraction(-1), Fraction(1), M)
    overrides = {
        tuple(sorted((M, M) + (Fraction(-1),) * (n - 2))),
        tuple(sorted((-M * M,) + (Fraction(1),) * (n - 1))),
        tuple(sorted((-M * M,) * 3 + (Fraction(1),) * (n - 3))),
    }
    allocation = {}
    for m in all_multisets(values, n):
        if all(v > 0 for v in m) or m in overrides:
            allocation[m] = Fraction(1)
        else:
            allocation[m] = Fraction(0)
    return AnonymousSCF(values, n, allocation)


class Theorem2Report:
    """All welfare figures for one (n, M, eps) family member."""

    __slots__ = (
        "n",
        "M",
        "eps",
        "qmr",
        "opt",
        "fstar_welfare",
        "wmr_rule",
        "wmr_welfare",
    )

    def __init__(self, n, M, eps, qmr, opt, fstar_welfare, wmr_rule, wmr_welfare):
        self.n = n
        self.M = M
        self.eps = eps
        self.qmr = qmr
        self.opt = opt
        self.fstar_welfare = fstar_welfare
        self.wmr_rule = wmr_rule
        self.wmr_welfare = wmr_welfare

    @property
    def strict_gap(self) -> bool:
        return self.opt.welfare > self.qmr.best_welfare

    @property
    def ratio(self):
        if self.qmr.best_welfare == 0:
            return None
        return self.opt.welfare / self.qmr.best_welfare

    def __repr__(self):
        return (
            f"Theorem2Report(n={self.n}, M={self.M}, eps={self.eps}, "
            f"qmr={self.qmr.best_welfare}, opt={self.opt.welfare})"
        )


def run_theorem2_demo(n: int, M, eps) -> Theorem2Report:
    """Solve one family member and collect every benchmark welfare figure."""
    M = parse_rational(M)
    eps = parse_rational(eps)
    env = make_theorem2_env(n, M, eps)
    qmr = qmr_best(env)
    opt = solve_opt(env)
    wmr_rule = wmr_build(env)
    wmr_welfare = welfare(env, wmr_rule)
    fstar_welfare = welfare(env, make_fstar(n, M)) if eps == 0 else None
    return Theorem2Report(n, M, eps, qmr, opt, fstar_welfare, wmr_rule, wmr_welfare)


class SweepRow:
    __slots__ = ("M", "opt_welfare", "qmr_welfare", "ratio")

    def __init__(self, M, opt_welfare, qmr_welfare, ratio):
        self.M = M
        self.opt_welfare = opt_welfare
        self.qmr_welfare = qmr_welfare
        self.ratio = ratio

    def __repr__(self):
        return f"SweepRow(M={self.M}, ratio={self.ratio})"


def cardinal_ordinal_ratio_sweep(m_values, n: int = 3, eps=Fraction(0)) -> list[SweepRow]:
    """Optimal-cardinal over best-ordinal welfare ratio across magnitudes M.

    At eps = 0 with three agents the ratio is 4M/(2M+1): strictly increasing
    in M and approaching, never reaching, 2.
    """
    rows = []
    for M in m_values:
        M = parse_rational(M)
        env = make_theorem2_env(n, M, eps)
        opt = solve_opt(env).welfare
        best_qmr = qmr_best(env).best_welfare
        ratio = None if best_qmr == 0 else opt / best_qmr
        rows.append(SweepRow(M, opt, best_qmr, ratio))
    return rows


def random_environment(
    rng: random.Random,
    n_agents: int = 2,
    max_values: int = 6,
    max_weight: int = 64,
    value_magnitude: int = 20,
) -> Environment:
    """Random full-support environment with bounded-denominator probabilities.

    Values are distinct nonzero integers with both signs present; each
    agent's probabilities are integer weights renormalized exactly, so every
    support point has positive probability.
    """
    size = rng.randint(2, max_values)
    pool = [v for v in range(-value_magnitude, value_magnitude + 1) if v != 0]
    while True:
        values = rng.sample(pool, size)
        if any(v < 0 for v in values) and any(v > 0 for v in values):
            break
    values = sorted(Fraction(v) for v in values)
    agents = []
    for _ in range(n_agents):
        weights = [rng.randint(1, max_weight) for _ in values]
        total = sum(weights)
        agents.append(
            AgentDistribution({v: Fraction(w, total) for v, w in zip(values, weights)})
        )
    return Environment(ValueSet(values), agents)


def random_symmetric_environment(rng: random.Random, n_agents: int) -> Environment:
    """Random environment whose agents all share one full-support distribution."""
    max_values = 6 if n_agents <= 3 else 4
    template = random_environment(rng, n_agents=1, max_values=max_values)
    return Environment(template.values, [template.agents[0]] * n_agents)


def random_feasible_mechanism(env: Environment, rng: random.Random) -> AnonymousSCF:
    """A random vertex of the anonymous-BIC feasible region.

    Maximizes a random integer objective over the same constraint set as the
    welfare program, so the returned rule is anonymous and incentive
    compatible but typically far from welfare-optimal.
    """
    lp, index = build_opt_lp(env)
    lp.objective = [Fraction(rng.randint(-10, 10)) for _ in range(lp.num_vars)]
    solution = solve(lp)
    if solution.status != "optimal":
        raise RuntimeError("feasible-region sampling LP must be solvable")
    return mechanism_from_vertex(env, index, solution.x)


class CampaignReport:
    """Outcome of a randomized verification campaign."""

    __slots__ = ("trials", "seed", "failures")

    def __init__(self, trials, seed, failures):
        self.trials = trials
        self.seed = seed
        self.failures = failures

    @property
    def passed(self) -> bool:
        return not self.failures

    def __repr__(self):
        return f"CampaignReport(trials={self.trials}, failures={len(self.failures)})"


def verify_theorem1(trials: int, seed: int) -> CampaignReport:
    """Check two-agent optimality of the best majority rule on random draws.

    For each seeded random two-agent environment the exact optimum of the
    anonymous-BIC program must equal max(W(f1), W(f2)) and the best corner
    value of the interim relaxation. Failures (none are expected) are
    reported with the offending environment.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = random.Random(seed)
    failures = []
    for trial in range(trials):
        env = random_environment(rng, n_agents=2)
        opt = solve_opt(env).welfare
        w1 = welfare(env, QualifiedMajorityRule(1))
        w2 = welfare(env, QualifiedMajorityRule(2))
        corner_best = aux_corners(env).best_value()
        if not (opt == max(w1, w2) == corner_best):
            failures.append(
                {
                    "trial": trial,
                    "environment": environment_to_json(env),
                    "opt": format_rational(opt),
                    "qmr1": format_rational(w1),
                    "qmr2": format_rational(w2),
                    "corner_best": format_rational(corner_best),
                }
            )
    return CampaignReport(trials, seed, failures)


def example1_fixture():
    """The worked two-agent example: environment, rule, expected projection.

    The rule is anonymous and incentive compatible, yet its coalition
    projection assigns 1/3 to "only agent 1 positive" and 1/4 to "only
    agent 2 positive": the projection preserves welfare and incentives but
    not anonymity, which is exactly what makes the two-agent analysis
    delicate.
    """
    values = ValueSet([-2, -1, 1, 2])
    agent1 = AgentDistribution(
        {
            Fraction(2): Fraction(1, 6),
            Fraction(1): Fraction(1, 6),
            Fraction(-1): Fraction(1, 6),
            Fraction(-2): Fraction(1, 2),
        }
    )
    agent2 = AgentDistribution(
        {
            Fraction(-2): Fraction(1, 2),
            Fraction(-1): Fraction(1, 4),
            Fraction(1): Fraction(1, 8),
            Fraction(2): Fraction(1, 8),
        }
    )
    env = Environment(values, [agent1, agent2])

    one, zero = Fraction(1), Fraction(0)
    rows = {
        Fraction(2): (zero, one, one, one),
        Fraction(1): (zero, one, one, one),
        Fraction(-1): (zero, one, one, one),
        Fraction(-2): (one, zero, zero, zero),
    }
    columns = (Fraction(-2), Fraction(-1), Fraction(1), Fraction(2))
    table = {
        (v1, v2): rows[v1][j] for v1 in rows for j, v2 in enumerate(columns)
    }
    rule = OrderedTableSCF(values.values, 2, table)

    blocks = {
        (True, True): Fraction(1),
        (True, False): Fraction(1, 3),
        (False, True): Fraction(1, 4),
        (False, False): Fraction(7, 12),
    }
    hat_table = {
        (v1, v2): blocks[(v1 > 0, v2 > 0)]
        for v1 in values
        for v2 in values
    }
    hat_expected = OrderedTableSCF(values.values, 2, hat_table)
    return env, rule, hat_expected
