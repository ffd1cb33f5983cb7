import itertools
import random
from fractions import Fraction

import pytest

from anonvote.environments import AgentDistribution, Environment, ValueSet
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
    NotSymmetric,
    OrderedTableSCF,
    QualifiedMajorityRule,
    WeightedMajorityRule,
    ZeroProbabilityCoalition,
    all_multisets,
    check_bic,
    coalition,
    evaluate,
    interim_allocation,
    is_anonymous_rule,
    mechanism_from_json,
    mechanism_to_json,
    ordinal_projection,
    qmr_best,
    symmetric_threshold,
    welfare,
    welfare_via_interims,
    wmr_build,
)


def F(x):
    return Fraction(x)


def uniform_env(n=2, values=(-1, 1)):
    vs = ValueSet(values)
    dist = AgentDistribution({v: Fraction(1, len(vs)) for v in vs})
    return Environment(vs, [dist] * n)


# ------------------------------------------------------------- rule algebra


def test_coalition_reads_signs():
    assert coalition((F(-2), F(1))) == frozenset({1})
    assert coalition((F(10), F(10), F(-1))) == frozenset({0, 1})
    assert coalition((F(-1), F(-2), F(-3))) == frozenset()


def test_evaluate_dispatch_on_the_limit_profiles():
    fstar = make_fstar(3, 10)
    profile = (F(10), F(10), F(-1))
    assert evaluate(QualifiedMajorityRule(3), profile) == 0
    assert evaluate(fstar, profile) == 1
    wmr = WeightedMajorityRule([110, 110, 2], 201)
    assert evaluate(wmr, (F(10), F(-100), F(1))) == 0  # supporter weight 112 < 201
    assert evaluate(wmr, profile) == 1  # 220 > 201
    wmr_tie = WeightedMajorityRule([1, 1], 1, tie_value="1/3")
    assert evaluate(wmr_tie, (F(1), F(-1))) == Fraction(1, 3)


def test_anonymous_scf_is_permutation_invariant():
    rng = random.Random(5)
    env = random_environment(rng, n_agents=3, max_values=3)
    mech = random_feasible_mechanism(env, rng)
    for profile in itertools.product(env.values.values, repeat=3):
        base = mech.evaluate(profile)
        for perm in itertools.permutations(profile):
            assert mech.evaluate(perm) == base


def test_anonymous_scf_requires_total_table_in_range():
    values = (F(-1), F(1))
    good = {m: F(0) for m in all_multisets(values, 2)}
    AnonymousSCF(values, 2, good)
    with pytest.raises(ValueError):
        AnonymousSCF(values, 2, {(F(-1), F(-1)): F(0)})
    bad = dict(good)
    bad[(F(-1), F(1))] = F(2)
    with pytest.raises(ValueError):
        AnonymousSCF(values, 2, bad)


def test_ordered_table_anonymity_check():
    _, rule, hat = example1_fixture()
    assert rule.is_anonymous()
    assert not hat.is_anonymous()
    assert is_anonymous_rule(rule) and not is_anonymous_rule(hat)
    assert rule.as_anonymous().evaluate((F(2), F(-2))) == rule.evaluate((F(-2), F(2)))


# ---------------------------------------------------------------- interims


def test_example1_interims_are_flat_at_one_half():
    env, rule, _ = example1_fixture()
    for v in env.values:
        assert interim_allocation(env, rule, 0, v) == Fraction(1, 2)
        assert interim_allocation(env, rule, 1, v) == Fraction(1, 2)


def test_fstar_interims_at_the_limit_point():
    env = make_theorem2_env(3, 10, 0)
    fstar = make_fstar(3, 10)
    for v in env.values:
        assert interim_allocation(env, fstar, 2, v) == Fraction(1, 4)
    for v in (F(10), F(1)):
        assert interim_allocation(env, fstar, 0, v) == Fraction(1, 2)
    for v in (F(-100), F(-1)):
        assert interim_allocation(env, fstar, 0, v) == 0


def test_unanimity_interims_closed_form():
    rng = random.Random(11)
    for _ in range(10):
        env = random_environment(rng, n_agents=2)
        rule = QualifiedMajorityRule(env.n)
        audit = check_bic(env, rule)
        assert audit.satisfied
        from anonvote.environments import agent_stats

        for i in range(env.n):
            others = Fraction(1)
            for j in range(env.n):
                if j != i:
                    others *= agent_stats(env, j).p
            assert audit.c_plus[i] == others
            assert audit.c_minus[i] == 0


# -------------------------------------------------------------------- audit


def test_example1_and_fstar_pass_the_audit():
    env, rule, _ = example1_fixture()
    audit = check_bic(env, rule)
    assert audit.satisfied
    assert audit.c_minus == [Fraction(1, 2), Fraction(1, 2)]
    assert audit.c_plus == [Fraction(1, 2), Fraction(1, 2)]

    env0 = make_theorem2_env(3, 10, 0)
    assert check_bic(env0, make_fstar(3, 10)).satisfied


def test_audit_witness_on_a_backwards_rule():
    # pays only when both agents report -1: positive side 0, negative side 1/2
    env = uniform_env()
    values = env.values.values
    allocation = {m: F(0) for m in all_multisets(values, 2)}
    allocation[(F(-1), F(-1))] = F(1)
    rule = AnonymousSCF(values, 2, allocation)
    audit = check_bic(env, rule)
    assert not audit.satisfied
    witness = audit.witness
    assert witness.kind == "monotonicity"
    assert witness.agent == 0
    assert (witness.interim, witness.other_interim) == (Fraction(1, 2), Fraction(0))


# ------------------------------------------------------------------ welfare


def test_limit_point_welfare_figures():
    env = make_theorem2_env(3, 10, 0)
    assert welfare(env, QualifiedMajorityRule(3)) == Fraction(21, 8)
    assert welfare(env, make_fstar(3, 10)) == 5
    assert welfare(env, QualifiedMajorityRule(4)) == 0  # constant-0 rule


def test_example1_welfare_both_ways():
    # frozen from two independent exact computations: the 16-profile
    # enumeration and the interim decomposition agree on -37/48
    env, rule, _ = example1_fixture()
    assert welfare(env, rule) == Fraction(-37, 48)
    assert welfare_via_interims(env, rule) == Fraction(-37, 48)


def test_interim_decomposition_matches_enumeration_on_random_rules():
    rng = random.Random(23)
    for _ in range(8):
        env = random_environment(rng, n_agents=2, max_values=4)
        mech = random_feasible_mechanism(env, rng)
        assert welfare(env, mech) == welfare_via_interims(env, mech)


def test_interim_decomposition_rejects_non_bic():
    env = uniform_env()
    values = env.values.values
    allocation = {m: F(0) for m in all_multisets(values, 2)}
    allocation[(F(-1), F(-1))] = F(1)
    with pytest.raises(NotBicError):
        welfare_via_interims(env, AnonymousSCF(values, 2, allocation))


# --------------------------------------------------------------- projection


def test_example1_projection_blocks():
    env, rule, hat_expected = example1_fixture()
    projection = ordinal_projection(env, rule)
    assert not projection.anonymous
    assert projection.phi[frozenset({0, 1})] == 1
    assert projection.phi[frozenset({0})] == Fraction(1, 3)
    assert projection.phi[frozenset({1})] == Fraction(1, 4)
    assert projection.phi[frozenset()] == Fraction(7, 12)
    for profile, expected in hat_expected.table.items():
        assert projection.hat.evaluate(profile) == expected


def test_projection_fixes_ordinal_rules():
    rng = random.Random(31)
    env = random_environment(rng, n_agents=3, max_values=3)
    rule = QualifiedMajorityRule(2)
    projection = ordinal_projection(env, rule)
    for profile in itertools.product(env.values.values, repeat=3):
        assert projection.hat.evaluate(profile) == rule.evaluate(profile)


def test_projection_preserves_bic_interims_and_welfare():
    rng = random.Random(37)
    for _ in range(5):
        env = random_environment(rng, n_agents=2, max_values=4)
        mech = random_feasible_mechanism(env, rng)
        audit = check_bic(env, mech)
        projection = ordinal_projection(env, mech)
        hat_audit = check_bic(env, projection.hat)
        assert hat_audit.satisfied
        assert hat_audit.c_minus == audit.c_minus
        assert hat_audit.c_plus == audit.c_plus
        assert welfare(env, projection.hat) == welfare(env, mech)


def test_projection_of_anonymous_rule_in_symmetric_environment_is_anonymous():
    rng = random.Random(41)
    for _ in range(3):
        env = random_symmetric_environment(rng, 3)
        mech = random_feasible_mechanism(env, rng)
        assert ordinal_projection(env, mech).anonymous


def test_projection_rejects_zero_probability_coalitions():
    values = ValueSet([-1, 1])
    stuck = AgentDistribution({F(-1): F(0), F(1): F(1)})
    free = AgentDistribution({F(-1): Fraction(1, 2), F(1): Fraction(1, 2)})
    env = Environment(values, [stuck, free])
    with pytest.raises(ZeroProbabilityCoalition):
        ordinal_projection(env, QualifiedMajorityRule(1))


# ------------------------------------------------------------- benchmarks


def test_qmr_best_thresholds():
    assert qmr_best(make_theorem2_env(3, 10, Fraction(1, 1000))).k_star == 3
    assert qmr_best(uniform_env(n=3)).k_star == 2
    table = qmr_best(make_theorem2_env(3, 10, 0)).table
    assert table[3] == Fraction(21, 8)
    assert set(table) == {0, 1, 2, 3, 4}


def test_symmetric_threshold_cases():
    result = symmetric_threshold(uniform_env(n=3))
    assert (result.k_bar, result.tie) == (2, False)

    result = symmetric_threshold(uniform_env(n=2))
    assert (result.k_bar, result.tie) == (2, True)  # boundary exactly 1

    values = ValueSet([-1, 3])
    dist = AgentDistribution({F(-1): Fraction(1, 2), F(3): Fraction(1, 2)})
    env4 = Environment(values, [dist] * 4)
    result = symmetric_threshold(env4)
    assert result.k_bar == 2
    assert result.boundary == 1 and result.tie
    table = qmr_best(env4)
    assert table.table[2] == table.best_welfare  # cross-check maximality

    with pytest.raises(NotSymmetric):
        symmetric_threshold(example1_fixture()[0])


def test_symmetric_threshold_matches_qmr_best_on_random_draws():
    rng = random.Random(43)
    for _ in range(8):
        env = random_symmetric_environment(rng, rng.randint(2, 4))
        result = symmetric_threshold(env)
        table = qmr_best(env)
        assert table.table[result.k_bar] == table.best_welfare


def test_wmr_on_the_limit_environment():
    env = make_theorem2_env(3, 10, 0)
    rule = wmr_build(env)
    assert rule.weights == (F(110), F(110), F(2))
    assert rule.quorum == 201
    assert welfare(env, rule) == 5
    assert rule.notes == ()


def test_wmr_reduces_to_qmr_when_symmetric():
    env = uniform_env(n=3)
    rule = wmr_build(env)
    assert len(set(rule.weights)) == 1
    qmr = QualifiedMajorityRule(symmetric_threshold(env).k_bar)
    for profile in itertools.product(env.values.values, repeat=3):
        assert rule.evaluate(profile) == qmr.evaluate(profile)


def test_wmr_limit_convention_is_flagged():
    values = ValueSet([-1, 1])
    stuck = AgentDistribution({F(-1): F(0), F(1): F(1)})
    free = AgentDistribution({F(-1): Fraction(1, 2), F(1): Fraction(1, 2)})
    env = Environment(values, [stuck, free])
    rule = wmr_build(env)
    assert rule.notes and "U- undefined" in rule.notes[0]
    assert rule.weights[0] == 1  # defined part only


def test_two_agent_balance_identity():
    # both sides of the identity equal the ex-ante reform probability
    rng = random.Random(47)
    from anonvote.environments import agent_stats

    for _ in range(6):
        env = random_environment(rng, n_agents=2, max_values=4)
        mech = random_feasible_mechanism(env, rng)
        audit = check_bic(env, mech)
        p1 = agent_stats(env, 0).p
        p2 = agent_stats(env, 1).p
        lhs = p1 * audit.c_plus[0] + (1 - p1) * audit.c_minus[0]
        rhs = p2 * audit.c_plus[1] + (1 - p2) * audit.c_minus[1]
        assert lhs == rhs


# --------------------------------------------------------------------- JSON


def test_mechanism_json_round_trips_every_kind():
    fstar = make_fstar(3, 10)
    assert mechanism_from_json(mechanism_to_json(fstar)) == fstar

    qmr = QualifiedMajorityRule(3)
    assert mechanism_from_json(mechanism_to_json(qmr)) == qmr

    wmr = WeightedMajorityRule([110, 110, 2], 201, Fraction(1, 2))
    assert mechanism_from_json(mechanism_to_json(wmr)) == wmr

    _, rule, _ = example1_fixture()
    again = mechanism_from_json(mechanism_to_json(rule))
    assert again.table == rule.table

    with pytest.raises(ValueError):
        mechanism_from_json({"kind": "mystery"})
