"""Welfare maximization over anonymous incentive-compatible rules.

The decision variable is one allocation probability per report multiset
(anonymity is therefore structural, not a constraint row). Incentive
compatibility enters as exact linear rows on interim allocations: equality
between consecutive same-sign reports and a single monotonicity inequality
placing the worst negative report below the best positive one. Agents with
identical distributions produce identical rows, so constraints are emitted
once per distinct type.

Also here: the four-variable interim relaxation for two agents, whose two
corner candidates correspond to the k=1 and k=2 majority rules, and the
two-agent influence bounds used to audit anonymous incentive-compatible
rules.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .environments import (
    Environment,
    agent_stats,
    validate_environment,
)
from .mechanisms import (
    AnonymousSCF,
    NotBicError,
    all_multisets,
    check_bic,
    is_anonymous_rule,
    welfare,
    welfare_via_interims,
)
from .ratlp import LinearProgram, SimplexError, solve

__all__ = [
    "OptLpIndex",
    "build_opt_lp",
    "OptimalMechanismReport",
    "solve_opt",
    "mechanism_from_vertex",
    "AuxPoint",
    "AuxCorners",
    "aux_corners",
    "Lemma3Report",
    "lemma3_bounds",
]


class OptLpIndex:
    """Bijection between report multisets (lexicographic) and LP columns."""

    __slots__ = ("multisets", "position")

    def __init__(self, values, n: int):
        self.multisets = all_multisets(values, n)
        self.position = {m: i for i, m in enumerate(self.multisets)}

    def __len__(self):
        return len(self.multisets)


def _interim_coefficients(env: Environment, i: int, index: OptLpIndex) -> dict:
    """Per report v: LP row c with c[m] = P(others' profile sorts with v into m)."""
    others = [env.agents[j] for j in range(env.n) if j != i]
    rows = {v: [Fraction(0)] * len(index) for v in env.values}
    for rest in itertools.product(env.values.values, repeat=env.n - 1):
        prob = Fraction(1)
        for agent, value in zip(others, rest):
            prob *= agent.prob(value)
            if prob == 0:
                break
        if prob == 0:
            continue
        for v in env.values:
            m = tuple(sorted(rest + (v,)))
            rows[v][index.position[m]] += prob
    return rows


def build_opt_lp(env: Environment, deduplicate: bool = True):
    """Emit the exact LP whose optimum is the best anonymous BIC rule.

    Returns ``(LinearProgram, OptLpIndex)``. With ``deduplicate`` (the
    default), constraint blocks are generated once per distinct agent
    distribution; disabling it emits one block per agent, which has the same
    solution set.
    """
    index = OptLpIndex(env.values.values, env.n)
    objective = [Fraction(0)] * len(index)
    for profile in itertools.product(env.values.values, repeat=env.n):
        prob = Fraction(1)
        for agent, value in zip(env.agents, profile):
            prob *= agent.prob(value)
            if prob == 0:
                break
        if prob == 0:
            continue
        objective[index.position[tuple(sorted(profile))]] += prob * sum(
            profile, Fraction(0)
        )

    if deduplicate:
        representatives = []
        seen = []
        for i, agent in enumerate(env.agents):
            if agent not in seen:
                seen.append(agent)
                representatives.append(i)
    else:
        representatives = list(range(env.n))

    negatives = env.values.negatives
    positives = env.values.positives
    eq_rows = []
    ineq_rows = []
    for i in representatives:
        interim = _interim_coefficients(env, i, index)
        for group in (negatives, positives):
            for a, b in zip(group, group[1:]):
                eq_rows.append(
                    (
                        [x - y for x, y in zip(interim[a], interim[b])],
                        Fraction(0),
                    )
                )
        ineq_rows.append(
            (
                [
                    x - y
                    for x, y in zip(interim[negatives[-1]], interim[positives[0]])
                ],
                Fraction(0),
            )
        )

    lp = LinearProgram(
        num_vars=len(index),
        objective=objective,
        eq_rows=eq_rows,
        ineq_rows=ineq_rows,
        lower=[Fraction(0)] * len(index),
        upper=[Fraction(1)] * len(index),
    )
    return lp, index


def mechanism_from_vertex(env: Environment, index: OptLpIndex, x) -> AnonymousSCF:
    """Reconstruct the anonymous rule encoded by an LP point."""
    return AnonymousSCF(env.values.values, env.n, dict(zip(index.multisets, x)))


class OptimalMechanismReport:
    """Solved program: optimal rule, its welfare, and per-agent interims."""

    __slots__ = ("mechanism", "welfare", "c_minus", "c_plus", "interims", "lp_stats")

    def __init__(self, mechanism, welfare, c_minus, c_plus, interims, lp_stats):
        self.mechanism = mechanism
        self.welfare = welfare
        self.c_minus = c_minus
        self.c_plus = c_plus
        self.interims = interims
        self.lp_stats = lp_stats

    def __repr__(self):
        return f"OptimalMechanismReport(welfare={self.welfare})"


def solve_opt(env: Environment) -> OptimalMechanismReport:
    """Solve the program and audit the returned vertex before reporting it.

    The zero rule is always feasible, so an infeasible status indicates an
    internal error. The reconstructed mechanism is re-checked for incentive
    compatibility and its welfare is recomputed two independent ways; any
    disagreement raises :class:`SimplexError`.
    """
    validate_environment(env).raise_on_errors()
    lp, index = build_opt_lp(env)
    solution = solve(lp)
    if solution.status != "optimal":
        raise SimplexError(
            f"welfare program reported {solution.status}, but the zero rule is feasible"
        )
    mechanism = mechanism_from_vertex(env, index, solution.x)
    audit = check_bic(env, mechanism)
    if not audit.satisfied:
        raise SimplexError(f"optimal vertex fails the incentive audit: {audit.witness}")
    direct = welfare(env, mechanism)
    decomposed = welfare_via_interims(env, mechanism)
    if not (direct == decomposed == solution.objective_value):
        raise SimplexError(
            f"welfare mismatch: direct {direct}, interim {decomposed}, "
            f"lp {solution.objective_value}"
        )
    lp_stats = {
        "variables": lp.num_vars,
        "eq_rows": len(lp.eq_rows),
        "ineq_rows": len(lp.ineq_rows),
        "pivots": solution.pivots,
    }
    return OptimalMechanismReport(
        mechanism, direct, audit.c_minus, audit.c_plus, audit.interims, lp_stats
    )


class AuxPoint:
    """Interim constants (c1+, c1-, c2+, c2-) of a candidate two-agent rule."""

    __slots__ = ("c1_plus", "c1_minus", "c2_plus", "c2_minus")

    def __init__(self, c1_plus, c1_minus, c2_plus, c2_minus):
        self.c1_plus = c1_plus
        self.c1_minus = c1_minus
        self.c2_plus = c2_plus
        self.c2_minus = c2_minus

    def as_tuple(self):
        return (self.c1_plus, self.c1_minus, self.c2_plus, self.c2_minus)

    def __eq__(self, other):
        return isinstance(other, AuxPoint) and self.as_tuple() == other.as_tuple()

    def __repr__(self):
        return f"AuxPoint{self.as_tuple()}"


class AuxCorners:
    """The two corner candidates of the interim relaxation and their values."""

    __slots__ = ("first", "second", "value_first", "value_second", "winner")

    def __init__(self, first, second, value_first, value_second):
        self.first = first
        self.second = second
        self.value_first = value_first
        self.value_second = value_second
        if value_first > value_second:
            self.winner = "first"
        elif value_second > value_first:
            self.winner = "second"
        else:
            self.winner = "both"

    def best_value(self):
        return max(self.value_first, self.value_second)

    def __repr__(self):
        return (
            f"AuxCorners(first={self.value_first}, second={self.value_second}, "
            f"winner={self.winner})"
        )


def aux_corners(env: Environment) -> AuxCorners:
    """Corner candidates of the two-agent interim relaxation.

    The first corner has both positive-side constants at 1 (it matches the
    k=1 majority rule); the second has both negative-side constants at 0
    (matching the k=2 rule). One of the two always attains the relaxation's
    optimum.
    """
    if env.n != 2:
        raise ValueError("the interim relaxation is defined for exactly 2 agents")
    s1 = agent_stats(env, 0)
    s2 = agent_stats(env, 1)
    if not (0 < s1.p < 1 and 0 < s2.p < 1):
        raise ValueError("corner formulas need p1, p2 strictly inside (0, 1)")
    p1, p2 = s1.p, s2.p
    first = AuxPoint(Fraction(1), p2, Fraction(1), p1)
    second = AuxPoint(p2, Fraction(0), p1, Fraction(0))

    def objective(point: AuxPoint) -> Fraction:
        return (
            s1.pos_mass * point.c1_plus
            - s1.neg_mass * point.c1_minus
            + s2.pos_mass * point.c2_plus
            - s2.neg_mass * point.c2_minus
        )

    return AuxCorners(first, second, objective(first), objective(second))


class Lemma3Report:
    """Both two-agent influence bounds evaluated exactly."""

    __slots__ = ("lhs1", "bound1", "lhs2", "bound2")

    def __init__(self, lhs1, bound1, lhs2, bound2):
        self.lhs1 = lhs1
        self.bound1 = bound1
        self.lhs2 = lhs2
        self.bound2 = bound2

    @property
    def ok1(self):
        return self.lhs1 <= self.bound1

    @property
    def ok2(self):
        return self.lhs2 <= self.bound2

    @property
    def satisfied(self):
        return self.ok1 and self.ok2

    def __repr__(self):
        return (
            f"Lemma3Report({self.lhs1} <= {self.bound1}: {self.ok1}, "
            f"{self.lhs2} <= {self.bound2}: {self.ok2})"
        )


def lemma3_bounds(env: Environment, rule) -> Lemma3Report:
    """Evaluate the two-agent influence bounds for an anonymous BIC rule.

    For any such rule, each agent's signed interim mass is capped by the
    square of the other agent's positive-sign probability. A violation
    indicates an implementation bug rather than a legitimate input, so both
    sides are reported exactly for inspection.
    """
    if env.n != 2:
        raise ValueError("influence bounds are defined for exactly 2 agents")
    if not is_anonymous_rule(rule):
        raise ValueError("rule must be anonymous")
    audit = check_bic(env, rule)
    if not audit.satisfied:
        raise NotBicError(f"rule is not incentive compatible: {audit.witness}")
    p1 = agent_stats(env, 0).p
    p2 = agent_stats(env, 1).p
    lhs1 = p1 * audit.c_plus[1] - (1 - p1) * audit.c_minus[1]
    lhs2 = p2 * audit.c_plus[0] - (1 - p2) * audit.c_minus[0]
    return Lemma3Report(lhs1, p1 * p1, lhs2, p2 * p2)
