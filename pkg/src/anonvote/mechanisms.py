"""Social choice functions over a finite value support, and their exact audit.

Four rule kinds are supported:

* :class:`AnonymousSCF`: a total map from sorted report multisets to
  allocation probabilities; anonymity holds structurally because ordered
  profiles are canonicalized before lookup.
* :class:`QualifiedMajorityRule`: reform iff at least k agents report a
  positive value.
* :class:`WeightedMajorityRule`: reform iff the summed weight of positive
  reporters clears a quorum, with a fixed tie allocation.
* :class:`OrderedTableSCF`: an explicit table keyed by ordered profiles,
  used for rules that need not be anonymous (anonymity is then checked,
  not assumed).

On top of these: interim allocations, the incentive-compatibility audit
(flat interims within each sign, negative side below positive side),
exact welfare two ways, the ordinal conditional-expectation projection,
and the qualified/weighted majority benchmarks.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .environments import (
    Environment,
    agent_stats,
    profile_probability,
)
from .rationals import format_rational, parse_rational

__all__ = [
    "canonical_multiset",
    "all_multisets",
    "coalition",
    "AnonymousSCF",
    "QualifiedMajorityRule",
    "WeightedMajorityRule",
    "OrderedTableSCF",
    "OrdinalSCF",
    "evaluate",
    "is_anonymous_rule",
    "interim_allocation",
    "interim_table",
    "BicViolation",
    "BicReport",
    "NotBicError",
    "check_bic",
    "welfare",
    "welfare_via_interims",
    "ProjectionResult",
    "ZeroProbabilityCoalition",
    "ordinal_projection",
    "QmrTable",
    "qmr_best",
    "NotSymmetric",
    "SymmetricThreshold",
    "symmetric_threshold",
    "wmr_build",
    "mechanism_from_json",
    "mechanism_to_json",
]


def canonical_multiset(profile: Sequence[Fraction]) -> tuple:
    """Sort an ordered profile into its canonical multiset form."""
    return tuple(sorted(profile))


def all_multisets(values: Iterable[Fraction], n: int) -> list[tuple]:
    """All size-n multisets over the support, ascending lexicographic order."""
    return list(itertools.combinations_with_replacement(sorted(values), n))


def coalition(profile: Sequence[Fraction]) -> frozenset[int]:
    """Indices of agents reporting a strictly positive value."""
    return frozenset(i for i, v in enumerate(profile) if v > 0)


class AnonymousSCF:
    """Total map from every report multiset to an allocation in [0, 1]."""

    kind = "anonymous"
    __slots__ = ("values", "n", "allocation")

    def __init__(self, values, n: int, allocation: Mapping):
        self.values = tuple(sorted(parse_rational(v) for v in values))
        self.n = n
        table = {}
        for key, prob in allocation.items():
            table[canonical_multiset(tuple(parse_rational(v) for v in key))] = (
                parse_rational(prob)
            )
        expected = all_multisets(self.values, n)
        missing = [m for m in expected if m not in table]
        if missing:
            raise ValueError(f"allocation table incomplete, e.g. missing {missing[0]}")
        if len(table) != len(expected):
            extra = set(table) - set(expected)
            raise ValueError(f"allocation table has foreign multisets, e.g. {sorted(extra)[0]}")
        for m, p in table.items():
            if not 0 <= p <= 1:
                raise ValueError(f"allocation at {m} is {p}, outside [0, 1]")
        self.allocation = table

    def evaluate(self, profile: Sequence[Fraction]) -> Fraction:
        key = canonical_multiset(profile)
        try:
            return self.allocation[key]
        except KeyError:
            raise ValueError(f"profile {profile} not in this rule's domain") from None

    def __eq__(self, other):
        return (
            isinstance(other, AnonymousSCF)
            and self.values == other.values
            and self.n == other.n
            and self.allocation == other.allocation
        )

    def __repr__(self):
        nonzero = sum(1 for p in self.allocation.values() if p != 0)
        return f"AnonymousSCF(n={self.n}, |V|={len(self.values)}, nonzero={nonzero})"


class QualifiedMajorityRule:
    """Reform iff at least k agents report positive values.

    k = 0 is the constant-1 rule and any k > n the constant-0 rule; both ends
    are kept so benchmark tables cover the constant rules.
    """

    kind = "qmr"
    __slots__ = ("k",)

    def __init__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError(f"threshold must be a nonnegative integer, got {k!r}")
        self.k = k

    def evaluate(self, profile: Sequence[Fraction]) -> Fraction:
        return Fraction(1) if len(coalition(profile)) >= self.k else Fraction(0)

    def __eq__(self, other):
        return isinstance(other, QualifiedMajorityRule) and self.k == other.k

    def __repr__(self):
        return f"QualifiedMajorityRule(k={self.k})"


class WeightedMajorityRule:
    """Reform iff the summed weight of positive reporters exceeds the quorum.

    Exactly at the quorum the rule allocates ``tie_value``. ``notes`` records
    limit-mode conventions applied while building the rule.
    """

    kind = "wmr"
    __slots__ = ("weights", "quorum", "tie_value", "notes")

    def __init__(self, weights, quorum, tie_value=Fraction(1, 2), notes=()):
        self.weights = tuple(parse_rational(w) for w in weights)
        self.quorum = parse_rational(quorum)
        self.tie_value = parse_rational(tie_value)
        if not 0 <= self.tie_value <= 1:
            raise ValueError(f"tie value {self.tie_value} outside [0, 1]")
        self.notes = tuple(notes)

    def evaluate(self, profile: Sequence[Fraction]) -> Fraction:
        if len(profile) != len(self.weights):
            raise ValueError(
                f"profile has {len(profile)} entries, rule has {len(self.weights)} weights"
            )
        support = sum(
            (w for w, v in zip(self.weights, profile) if v > 0), Fraction(0)
        )
        if support > self.quorum:
            return Fraction(1)
        if support < self.quorum:
            return Fraction(0)
        return self.tie_value

    def __eq__(self, other):
        return (
            isinstance(other, WeightedMajorityRule)
            and self.weights == other.weights
            and self.quorum == other.quorum
            and self.tie_value == other.tie_value
        )

    def __repr__(self):
        return (
            f"WeightedMajorityRule(weights={[str(w) for w in self.weights]}, "
            f"quorum={self.quorum}, tie={self.tie_value})"
        )


class OrderedTableSCF:
    """Explicit SCF keyed by ordered profiles; anonymity checked, not assumed."""

    kind = "ordered_table"
    __slots__ = ("values", "n", "table")

    def __init__(self, values, n: int, table: Mapping):
        self.values = tuple(sorted(parse_rational(v) for v in values))
        self.n = n
        parsed = {}
        for key, prob in table.items():
            parsed[tuple(parse_rational(v) for v in key)] = parse_rational(prob)
        expected = set(itertools.product(self.values, repeat=n))
        if set(parsed) != expected:
            raise ValueError("ordered table must cover every ordered profile exactly once")
        for key, p in parsed.items():
            if not 0 <= p <= 1:
                raise ValueError(f"allocation at {key} is {p}, outside [0, 1]")
        self.table = parsed

    def evaluate(self, profile: Sequence[Fraction]) -> Fraction:
        try:
            return self.table[tuple(profile)]
        except KeyError:
            raise ValueError(f"profile {profile} not in this rule's domain") from None

    def is_anonymous(self) -> bool:
        groups: dict[tuple, Fraction] = {}
        for profile, p in self.table.items():
            key = canonical_multiset(profile)
            if groups.setdefault(key, p) != p:
                return False
        return True

    def as_anonymous(self) -> AnonymousSCF:
        if not self.is_anonymous():
            raise ValueError("table is not permutation invariant")
        allocation = {
            m: self.table[m] for m in all_multisets(self.values, self.n)
        }
        return AnonymousSCF(self.values, self.n, allocation)

    def __repr__(self):
        return f"OrderedTableSCF(n={self.n}, |V|={len(self.values)})"


class OrdinalSCF:
    """Rule that depends only on the coalition of positive reporters."""

    kind = "ordinal"
    __slots__ = ("n", "by_coalition")

    def __init__(self, n: int, by_coalition: Mapping[frozenset, Fraction]):
        self.n = n
        table = {frozenset(t): parse_rational(p) for t, p in by_coalition.items()}
        agents = frozenset(range(n))
        expected = 1 << n
        if len(table) != expected or any(not t <= agents for t in table):
            raise ValueError("ordinal rule must assign every coalition exactly once")
        for t, p in table.items():
            if not 0 <= p <= 1:
                raise ValueError(f"allocation at coalition {sorted(t)} is {p}")
        self.by_coalition = table

    def evaluate(self, profile: Sequence[Fraction]) -> Fraction:
        return self.by_coalition[coalition(profile)]

    def depends_only_on_size(self) -> bool:
        by_size: dict[int, Fraction] = {}
        for t, p in self.by_coalition.items():
            if by_size.setdefault(len(t), p) != p:
                return False
        return True

    def __repr__(self):
        return f"OrdinalSCF(n={self.n})"


def evaluate(rule, profile: Sequence[Fraction]) -> Fraction:
    """Allocation probability of any rule kind at an ordered profile."""
    return rule.evaluate(profile)


def is_anonymous_rule(rule) -> bool:
    """Whether the rule is invariant under permutations of the profile.

    Multiset-keyed and threshold rules are anonymous by construction; a
    weighted rule only when all weights coincide; explicit tables and
    coalition rules are checked entry by entry.
    """
    if isinstance(rule, (AnonymousSCF, QualifiedMajorityRule)):
        return True
    if isinstance(rule, WeightedMajorityRule):
        return len(set(rule.weights)) <= 1
    if isinstance(rule, OrderedTableSCF):
        return rule.is_anonymous()
    if isinstance(rule, OrdinalSCF):
        return rule.depends_only_on_size()
    return False


def interim_allocation(env: Environment, rule, i: int, v: Fraction) -> Fraction:
    """Expected allocation when agent ``i`` reports ``v`` and others are truthful.

    Well-defined for any report in the support, including reports the agent
    makes with probability zero.
    """
    if v not in env.values:
        raise ValueError(f"report {v} not in the support")
    others = [env.agents[j] for j in range(env.n) if j != i]
    total = Fraction(0)
    for rest in itertools.product(env.values.values, repeat=env.n - 1):
        prob = Fraction(1)
        for agent, value in zip(others, rest):
            prob *= agent.prob(value)
            if prob == 0:
                break
        if prob == 0:
            continue
        profile = rest[:i] + (v,) + rest[i:]
        total += prob * rule.evaluate(profile)
    return total


def interim_table(env: Environment, rule, i: int) -> dict:
    """Interim allocation of agent ``i`` at every report in the support."""
    return {v: interim_allocation(env, rule, i, v) for v in env.values}


class BicViolation:
    """Witness of a failed incentive constraint."""

    __slots__ = ("agent", "report", "other_report", "interim", "other_interim", "kind")

    def __init__(self, agent, report, other_report, interim, other_interim, kind):
        self.agent = agent
        self.report = report
        self.other_report = other_report
        self.interim = interim
        self.other_interim = other_interim
        self.kind = kind

    def __repr__(self):
        return (
            f"BicViolation(agent={self.agent}, {self.kind}: "
            f"interim({self.report})={self.interim} vs "
            f"interim({self.other_report})={self.other_interim})"
        )


class BicReport:
    """Result of the incentive audit: either satisfied with the per-agent
    interim constants, or violated with the first witness in canonical
    (agent, report) order."""

    __slots__ = ("satisfied", "c_minus", "c_plus", "interims", "witness")

    def __init__(self, satisfied, c_minus, c_plus, interims, witness):
        self.satisfied = satisfied
        self.c_minus = c_minus
        self.c_plus = c_plus
        self.interims = interims
        self.witness = witness

    def __bool__(self):
        return self.satisfied

    def __repr__(self):
        if self.satisfied:
            return f"BicReport(satisfied, c_minus={self.c_minus}, c_plus={self.c_plus})"
        return f"BicReport(violated, witness={self.witness})"


class NotBicError(ValueError):
    """Operation requires an incentive-compatible rule but got a witness."""


def check_bic(env: Environment, rule) -> BicReport:
    """Audit incentive compatibility exactly.

    A rule passes iff for every agent the interim allocation is constant
    across negative reports, constant across positive reports, and the
    negative-side constant is at most the positive-side constant. The
    constraints are enforced at every support value, including reports of
    probability zero.
    """
    negatives = env.values.negatives
    positives = env.values.positives
    c_minus: list = []
    c_plus: list = []
    interims: list[dict] = []
    for i in range(env.n):
        table = interim_table(env, rule, i)
        interims.append(table)
        for group in (negatives, positives):
            for a, b in zip(group, group[1:]):
                if table[a] != table[b]:
                    witness = BicViolation(i, a, b, table[a], table[b], "flatness")
                    return BicReport(False, None, None, interims, witness)
        lo = table[negatives[-1]]
        hi = table[positives[0]]
        if lo > hi:
            witness = BicViolation(
                i, negatives[-1], positives[0], lo, hi, "monotonicity"
            )
            return BicReport(False, None, None, interims, witness)
        c_minus.append(lo)
        c_plus.append(hi)
    return BicReport(True, c_minus, c_plus, interims, None)


def welfare(env: Environment, rule) -> Fraction:
    """Expected total value on the reform event, by full profile enumeration."""
    total = Fraction(0)
    for profile in itertools.product(env.values.values, repeat=env.n):
        prob = profile_probability(env, profile)
        if prob == 0:
            continue
        value_sum = sum(profile, Fraction(0))
        if value_sum == 0:
            continue
        alloc = rule.evaluate(profile)
        if alloc != 0:
            total += prob * value_sum * alloc
    return total


def welfare_via_interims(env: Environment, rule) -> Fraction:
    """Welfare through the interim decomposition.

    Equals :func:`welfare` exactly for incentive-compatible rules; raises
    :class:`NotBicError` otherwise (the decomposition needs flat interims).
    """
    report = check_bic(env, rule)
    if not report.satisfied:
        raise NotBicError(f"rule is not incentive compatible: {report.witness}")
    total = Fraction(0)
    for i in range(env.n):
        stats = agent_stats(env, i)
        total += report.c_plus[i] * stats.pos_mass - report.c_minus[i] * stats.neg_mass
    return total


class ZeroProbabilityCoalition(ValueError):
    """A coalition event has probability zero, so conditioning is undefined."""


class ProjectionResult:
    """Ordinal projection of a rule: the coalition-conditional expectations."""

    __slots__ = ("hat", "phi", "anonymous")

    def __init__(self, hat: OrdinalSCF, phi: dict, anonymous: bool):
        self.hat = hat
        self.phi = phi
        self.anonymous = anonymous

    def __repr__(self):
        return f"ProjectionResult(anonymous={self.anonymous})"


_PROJECTION_MAX_AGENTS = 12


def ordinal_projection(env: Environment, rule) -> ProjectionResult:
    """Project a rule onto coalitions by conditional expectation.

    For each coalition T, the projected value is the expected allocation
    conditional on exactly the members of T reporting positive values. The
    result preserves incentive compatibility and welfare; the verdict says
    whether it is anonymous (depends only on coalition size), which can fail
    in asymmetric environments even when the input rule is anonymous.

    Requires every coalition event to have positive probability, i.e. no
    agent with a deterministic value sign.
    """
    if env.n > _PROJECTION_MAX_AGENTS:
        raise ValueError(
            f"ordinal projection enumerates 2^n coalitions; n={env.n} exceeds "
            f"{_PROJECTION_MAX_AGENTS}"
        )
    mass: dict[frozenset, Fraction] = {}
    weighted: dict[frozenset, Fraction] = {}
    for profile in itertools.product(env.values.values, repeat=env.n):
        prob = profile_probability(env, profile)
        if prob == 0:
            continue
        t = coalition(profile)
        mass[t] = mass.get(t, Fraction(0)) + prob
        weighted[t] = weighted.get(t, Fraction(0)) + prob * rule.evaluate(profile)
    phi: dict[frozenset, Fraction] = {}
    for bits in itertools.product((False, True), repeat=env.n):
        t = frozenset(i for i, b in enumerate(bits) if b)
        if mass.get(t, Fraction(0)) == 0:
            raise ZeroProbabilityCoalition(
                f"coalition {sorted(t)} has probability zero (limit-mode environment)"
            )
        phi[t] = weighted[t] / mass[t]
    hat = OrdinalSCF(env.n, phi)
    return ProjectionResult(hat, phi, hat.depends_only_on_size())


class QmrTable:
    """Welfare of every qualified majority threshold, plus the best one."""

    __slots__ = ("k_star", "best_welfare", "table")

    def __init__(self, k_star: int, best_welfare: Fraction, table: dict):
        self.k_star = k_star
        self.best_welfare = best_welfare
        self.table = table

    def __repr__(self):
        return f"QmrTable(k_star={self.k_star}, best={self.best_welfare})"


def qmr_best(env: Environment) -> QmrTable:
    """Exact welfare of f^(k) for k = 0..n+1; smallest maximizer wins ties."""
    buckets = [Fraction(0)] * (env.n + 1)
    for profile in itertools.product(env.values.values, repeat=env.n):
        prob = profile_probability(env, profile)
        if prob == 0:
            continue
        buckets[len(coalition(profile))] += prob * sum(profile, Fraction(0))
    table: dict[int, Fraction] = {}
    running = Fraction(0)
    for k in range(env.n + 1, -1, -1):
        if k <= env.n:
            running += buckets[k]
        table[k] = running
    k_star = min(range(env.n + 2), key=lambda k: (-table[k], k))
    return QmrTable(k_star, table[k_star], dict(sorted(table.items())))


class NotSymmetric(ValueError):
    """Operation requires all agents to share one distribution."""


class SymmetricThreshold:
    """Closed-form optimal threshold for ex-ante identical agents."""

    __slots__ = ("k_bar", "boundary", "tie")

    def __init__(self, k_bar: int, boundary: Fraction, tie: bool):
        self.k_bar = k_bar
        self.boundary = boundary
        self.tie = tie

    def __repr__(self):
        return f"SymmetricThreshold(k_bar={self.k_bar}, tie={self.tie})"


def symmetric_threshold(env: Environment) -> SymmetricThreshold:
    """Optimal qualified-majority threshold in a symmetric environment.

    The threshold is the least k with k > n*U-/(U+ + U-). When that boundary
    is an integer, allocating either way at exactly-boundary coalitions does
    not change welfare; the ``tie`` flag reports this.
    """
    first = env.agents[0]
    if any(agent != first for agent in env.agents[1:]):
        raise NotSymmetric("agents do not share one distribution")
    stats = agent_stats(env, 0)
    if stats.u_plus is None or stats.u_minus is None:
        raise NotSymmetric(
            "threshold formula needs both conditional means (p in (0,1))"
        )
    boundary = env.n * stats.u_minus / (stats.u_plus + stats.u_minus)
    k_bar = next(k for k in range(1, env.n + 1) if k > boundary)
    return SymmetricThreshold(k_bar, boundary, boundary.denominator == 1)


def wmr_build(env: Environment, tie_value=Fraction(1, 2)) -> WeightedMajorityRule:
    """Utilitarian weighted majority rule: weight U+ + U-, quorum sum of U-.

    In limit mode an undefined conditional mean is replaced by 0 and the
    substitution is recorded in the rule's ``notes``.
    """
    weights = []
    quorum = Fraction(0)
    notes = []
    for i in range(env.n):
        stats = agent_stats(env, i)
        u_plus = stats.u_plus
        u_minus = stats.u_minus
        if u_plus is None:
            u_plus = Fraction(0)
            notes.append(f"agent {i}: U+ undefined (p=0), using 0")
        if u_minus is None:
            u_minus = Fraction(0)
            notes.append(f"agent {i}: U- undefined (p=1), using 0")
        weights.append(u_plus + u_minus)
        quorum += u_minus
    return WeightedMajorityRule(weights, quorum, tie_value, notes)


def _multiset_key(multiset: tuple) -> str:
    return ",".join(format_rational(v) for v in multiset)


def _parse_key(key: str) -> tuple:
    return tuple(parse_rational(part) for part in key.split(","))


def mechanism_to_json(rule) -> dict:
    """Serialize any rule kind to its JSON object form."""
    if isinstance(rule, AnonymousSCF):
        return {
            "kind": "anonymous",
            "n": rule.n,
            "values": [format_rational(v) for v in rule.values],
            "allocation": {
                _multiset_key(m): format_rational(p)
                for m, p in sorted(rule.allocation.items())
            },
        }
    if isinstance(rule, QualifiedMajorityRule):
        return {"kind": "qmr", "k": rule.k}
    if isinstance(rule, WeightedMajorityRule):
        return {
            "kind": "wmr",
            "weights": [format_rational(w) for w in rule.weights],
            "quorum": format_rational(rule.quorum),
            "tie": format_rational(rule.tie_value),
        }
    if isinstance(rule, OrderedTableSCF):
        return {
            "kind": "ordered_table",
            "n": rule.n,
            "values": [format_rational(v) for v in rule.values],
            "table": {
                _multiset_key(p): format_rational(v)
                for p, v in sorted(rule.table.items())
            },
        }
    raise TypeError(f"cannot serialize rule of type {type(rule).__name__}")


def mechanism_from_json(obj):
    """Parse the JSON object form back into a rule instance."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("mechanism JSON must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "anonymous":
        allocation = {_parse_key(k): v for k, v in obj["allocation"].items()}
        return AnonymousSCF(obj["values"], int(obj["n"]), allocation)
    if kind == "qmr":
        return QualifiedMajorityRule(int(obj["k"]))
    if kind == "wmr":
        return WeightedMajorityRule(
            obj["weights"], obj["quorum"], obj.get("tie", Fraction(1, 2))
        )
    if kind == "ordered_table":
        table = {_parse_key(k): v for k, v in obj["table"].items()}
        return OrderedTableSCF(obj["values"], int(obj["n"]), table)
    raise ValueError(f"unknown mechanism kind {kind!r}")
