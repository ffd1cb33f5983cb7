import random
from fractions import Fraction

import pytest

from anonvote.environments import AgentDistribution, Environment, ValueSet, agent_stats
from anonvote.experiments import (
    example1_fixture,
    make_fstar,
    make_theorem2_env,
    random_environment,
    random_feasible_mechanism,
    random_symmetric_environment,
)
from anonvote.mechanisms import (
    AnonymousSCF,
    NotBicError,
    QualifiedMajorityRule,
    all_multisets,
    check_bic,
    qmr_best,
    symmetric_threshold,
    welfare,
)
from anonvote.ratlp import solve, vertex_enumerate
from anonvote.welfare_opt import (
    AuxPoint,
    aux_corners,
    build_opt_lp,
    lemma3_bounds,
    solve_opt,
)


def F(x):
    return Fraction(x)


def uniform_env(n=2):
    values = ValueSet([-1, 1])
    dist = AgentDistribution({F(-1): Fraction(1, 2), F(1): Fraction(1, 2)})
    return Environment(values, [dist] * n)


# ------------------------------------------------------------- LP building


def test_limit_program_shape_after_type_deduplication():
    lp, index = build_opt_lp(make_theorem2_env(3, 10, 0))
    assert lp.num_vars == 20 and len(index) == 20
    assert len(lp.eq_rows) == 4  # two types x (negative + positive flatness)
    assert len(lp.ineq_rows) == 2  # one monotonicity row per type


def test_two_point_program_has_no_flatness_rows():
    lp, index = build_opt_lp(uniform_env())
    assert lp.num_vars == 3
    assert len(lp.eq_rows) == 0
    assert len(lp.ineq_rows) == 1  # identical agents deduplicated


def test_fstar_is_feasible_for_the_limit_program():
    env = make_theorem2_env(3, 10, 0)
    lp, index = build_opt_lp(env)
    fstar = make_fstar(3, 10)
    x = [fstar.allocation[m] for m in index.multisets]
    for coeffs, rhs in lp.eq_rows:
        assert sum((c * v for c, v in zip(coeffs, x)), F(0)) == rhs
    for coeffs, rhs in lp.ineq_rows:
        assert sum((c * v for c, v in zip(coeffs, x)), F(0)) <= rhs
    objective = sum((c * v for c, v in zip(lp.objective, x)), F(0))
    assert objective == 5


def test_deduplication_does_not_change_the_optimum():
    rng = random.Random(19)
    for n in (2, 3):
        env = random_symmetric_environment(rng, n)
        merged, _ = build_opt_lp(env, deduplicate=True)
        expanded, _ = build_opt_lp(env, deduplicate=False)
        assert len(expanded.ineq_rows) == n * len(merged.ineq_rows)
        assert solve(merged).objective_value == solve(expanded).objective_value


# ------------------------------------------------------------- the optimum


def test_limit_point_optimum_cross_checked_by_the_oracle():
    env = make_theorem2_env(3, 10, 0)
    report = solve_opt(env)
    assert report.welfare == 5
    lp, _ = build_opt_lp(env)
    assert vertex_enumerate(lp, max_vars=20).objective_value == 5


def test_returned_mechanism_is_audited_and_consistent():
    env = make_theorem2_env(3, 10, Fraction(1, 1000))
    report = solve_opt(env)
    assert check_bic(env, report.mechanism).satisfied
    assert welfare(env, report.mechanism) == report.welfare
    assert report.lp_stats["variables"] == 20


def test_optimum_dominates_every_threshold_rule():
    rng = random.Random(29)
    for _ in range(6):
        env = random_environment(rng, n_agents=2)
        assert solve_opt(env).welfare >= qmr_best(env).best_welfare


def test_symmetric_optimum_is_the_threshold_rule():
    rng = random.Random(53)
    for _ in range(4):
        env = random_symmetric_environment(rng, rng.randint(2, 4))
        threshold = symmetric_threshold(env)
        best = qmr_best(env)
        opt = solve_opt(env)
        assert opt.welfare == best.best_welfare
        assert opt.welfare == welfare(env, QualifiedMajorityRule(threshold.k_bar))


def test_two_agent_optimum_is_a_majority_rule():
    rng = random.Random(59)
    for _ in range(10):
        env = random_environment(rng, n_agents=2)
        opt = solve_opt(env).welfare
        w1 = welfare(env, QualifiedMajorityRule(1))
        w2 = welfare(env, QualifiedMajorityRule(2))
        assert opt == max(w1, w2)


def test_worked_example_environment_optimum_is_a_majority_rule():
    env, rule, _ = example1_fixture()
    opt = solve_opt(env).welfare
    w1 = welfare(env, QualifiedMajorityRule(1))
    w2 = welfare(env, QualifiedMajorityRule(2))
    assert opt == max(w1, w2)
    assert welfare(env, rule) <= opt


# ----------------------------------------------------------- corner points


def test_corners_match_majority_rule_interims():
    rng = random.Random(61)
    for _ in range(8):
        env = random_environment(rng, n_agents=2)
        corners = aux_corners(env)
        p1 = agent_stats(env, 0).p
        p2 = agent_stats(env, 1).p
        assert corners.first == AuxPoint(F(1), p2, F(1), p1)
        assert corners.second == AuxPoint(p2, F(0), p1, F(0))
        for k, point in ((1, corners.first), (2, corners.second)):
            audit = check_bic(env, QualifiedMajorityRule(k))
            assert (audit.c_plus[0], audit.c_minus[0]) == (point.c1_plus, point.c1_minus)
            assert (audit.c_plus[1], audit.c_minus[1]) == (point.c2_plus, point.c2_minus)
        # the corner objective reproduces the rules' welfare
        assert corners.value_first == welfare(env, QualifiedMajorityRule(1))
        assert corners.value_second == welfare(env, QualifiedMajorityRule(2))


def test_corner_constraints_hold_with_equality():
    rng = random.Random(67)
    env = random_environment(rng, n_agents=2)
    corners = aux_corners(env)
    p1 = agent_stats(env, 0).p
    p2 = agent_stats(env, 1).p
    for point in (corners.first, corners.second):
        assert p1 * point.c2_plus - (1 - p1) * point.c2_minus == p1 * p1
        assert p2 * point.c1_plus - (1 - p2) * point.c1_minus == p2 * p2
        lhs = p1 * point.c1_plus + (1 - p1) * point.c1_minus
        rhs = p2 * point.c2_plus + (1 - p2) * point.c2_minus
        assert lhs == rhs
        assert all(0 <= c <= 1 for c in point.as_tuple())


def test_uniform_corners_tie():
    # full symmetry: both corners evaluate to W(f^(1)) = W(f^(2)) = 1/2
    env = uniform_env()
    corners = aux_corners(env)
    assert corners.value_first == corners.value_second == Fraction(1, 2)
    assert corners.value_first == welfare(env, QualifiedMajorityRule(1))
    assert corners.winner == "both"


def test_aux_corners_need_two_agents():
    with pytest.raises(ValueError):
        aux_corners(uniform_env(n=3))


# --------------------------------------------------------- influence bounds


def test_unanimity_bound_is_tight_in_the_uniform_pair():
    env = uniform_env()
    report = lemma3_bounds(env, QualifiedMajorityRule(2))
    assert report.lhs1 == report.bound1 == Fraction(1, 4)
    assert report.satisfied


def test_zero_rule_and_example_rule_bounds():
    env = uniform_env()
    zero = AnonymousSCF(
        env.values.values, 2, {m: F(0) for m in all_multisets(env.values.values, 2)}
    )
    report = lemma3_bounds(env, zero)
    assert report.lhs1 == 0 and report.satisfied

    env1, rule, hat = example1_fixture()
    report = lemma3_bounds(env1, rule)
    assert report.lhs1 == Fraction(-1, 6)
    assert report.bound1 == Fraction(1, 9)
    assert report.satisfied

    with pytest.raises(ValueError):
        lemma3_bounds(env1, hat)  # projection is not anonymous


def test_bounds_reject_non_bic_rules():
    env = uniform_env()
    allocation = {m: F(0) for m in all_multisets(env.values.values, 2)}
    allocation[(F(-1), F(-1))] = F(1)
    backwards = AnonymousSCF(env.values.values, 2, allocation)
    with pytest.raises(NotBicError):
        lemma3_bounds(env, backwards)


def test_bounds_hold_on_random_vertices():
    rng = random.Random(71)
    for _ in range(10):
        env = random_environment(rng, n_agents=2, max_values=4)
        assert lemma3_bounds(env, random_feasible_mechanism(env, rng)).satisfied
