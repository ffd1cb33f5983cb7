"""Voting environments: common value support and per-agent value distributions.

An environment is a finite value set V (the shared support, 0 excluded) and
one discrete distribution over V per agent. Agents draw values independently.
Everything downstream (interim allocations, welfare, the optimization) is
computed from these objects with exact rationals.

Environments with zero-probability support points (or an agent whose value
sign is deterministic) are accepted in "limit mode": they violate the usual
full-support assumption but are needed as boundary cases of the two-type
family studied in :mod:`anonvote.experiments`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .rationals import format_rational, parse_rational

__all__ = [
    "InvalidEnvironment",
    "ValueSet",
    "AgentDistribution",
    "Environment",
    "AgentStats",
    "ValidationReport",
    "validate_environment",
    "agent_stats",
    "profile_probability",
    "environment_from_json",
    "environment_to_json",
]


class InvalidEnvironment(ValueError):
    """Environment data is structurally unusable (not merely a limit case)."""


class ValueSet:
    """Strictly increasing tuple of rational values, the common support V."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable):
        vals = tuple(parse_rational(v) for v in values)
        if not vals:
            raise InvalidEnvironment("value set is empty")
        if len(set(vals)) != len(vals):
            raise InvalidEnvironment("value set contains duplicates")
        self.values = tuple(sorted(vals))

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __contains__(self, v):
        return v in self.values

    def __eq__(self, other):
        return isinstance(other, ValueSet) and self.values == other.values

    def __hash__(self):
        return hash(self.values)

    def __repr__(self):
        return f"ValueSet({[str(v) for v in self.values]})"

    @property
    def negatives(self) -> tuple:
        return tuple(v for v in self.values if v < 0)

    @property
    def positives(self) -> tuple:
        return tuple(v for v in self.values if v > 0)


class AgentDistribution:
    """One agent's probability mass over the value set.

    ``items`` is the canonical (value, probability) tuple, ascending by value;
    it defines equality so that agents of the same ex-ante type compare equal
    regardless of their display name.
    """

    __slots__ = ("items", "probs", "name")

    def __init__(self, probs: Mapping, name: str | None = None):
        parsed = {parse_rational(v): parse_rational(p) for v, p in probs.items()}
        self.items = tuple(sorted(parsed.items()))
        self.probs = parsed
        self.name = name

    def prob(self, v: Fraction) -> Fraction:
        try:
            return self.probs[v]
        except KeyError:
            raise ValueError(f"value {v} not in this agent's support") from None

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def __eq__(self, other):
        return isinstance(other, AgentDistribution) and self.items == other.items

    def __hash__(self):
        return hash(self.items)

    def __repr__(self):
        body = ", ".join(f"{v}: {p}" for v, p in self.items)
        return f"AgentDistribution({{{body}}})"


class Environment:
    """A value set plus n agent distributions over it (treated as immutable)."""

    __slots__ = ("values", "agents")

    def __init__(self, values: ValueSet, agents: Sequence[AgentDistribution]):
        if not isinstance(values, ValueSet):
            values = ValueSet(values)
        self.values = values
        self.agents = tuple(agents)
        value_set = set(values.values)
        for i, agent in enumerate(self.agents):
            if set(agent.probs.keys()) != value_set:
                raise InvalidEnvironment(
                    f"agent {i} support does not match the value set"
                )

    @property
    def n(self) -> int:
        return len(self.agents)

    def __eq__(self, other):
        return (
            isinstance(other, Environment)
            and self.values == other.values
            and self.agents == other.agents
        )

    def __hash__(self):
        return hash((self.values, self.agents))

    def __repr__(self):
        return f"Environment(n={self.n}, V={[str(v) for v in self.values]})"


class AgentStats:
    """Sign statistics of one agent: p = P(v > 0) and the conditional means.

    ``u_plus`` is E[v | v > 0] and ``u_minus`` is E[|v| | v < 0]; either is
    None when its conditioning event has probability zero (limit mode), and
    callers must check before using it. ``pos_mass``/``neg_mass`` are the
    unconditional sign expectations p*u_plus and (1-p)*u_minus, which are
    always defined.
    """

    __slots__ = ("p", "u_plus", "u_minus", "pos_mass", "neg_mass")

    def __init__(self, p, u_plus, u_minus, pos_mass, neg_mass):
        self.p = p
        self.u_plus = u_plus
        self.u_minus = u_minus
        self.pos_mass = pos_mass
        self.neg_mass = neg_mass

    def __repr__(self):
        return (
            f"AgentStats(p={self.p}, u_plus={self.u_plus}, u_minus={self.u_minus})"
        )


class ValidationReport:
    """Outcome of :func:`validate_environment`.

    ``errors`` are hard violations (the environment is unusable); ``flags``
    mark accepted boundary cases. ``limit_mode`` is True when any flag is set.
    """

    __slots__ = ("errors", "flags")

    def __init__(self, errors: list[str], flags: list[str]):
        self.errors = list(errors)
        self.flags = list(flags)

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def limit_mode(self) -> bool:
        return bool(self.flags)

    def raise_on_errors(self):
        if self.errors:
            raise InvalidEnvironment("; ".join(self.errors))

    def __repr__(self):
        return f"ValidationReport(errors={self.errors}, flags={self.flags})"


def validate_environment(env: Environment) -> ValidationReport:
    """Check the modeling assumptions and classify boundary cases.

    Hard errors: fewer than two agents, 0 in the support, missing value sign,
    probabilities that do not sum exactly to 1, or negative probabilities.
    Zero-probability support points and deterministic-sign agents are only
    flagged: such environments are accepted in limit mode.
    """
    errors: list[str] = []
    flags: list[str] = []

    if env.n < 2:
        errors.append("environment needs at least 2 agents")
    if any(v == 0 for v in env.values):
        errors.append("value 0 is not allowed in the support")
    if not env.values.negatives or not env.values.positives:
        errors.append("support must contain at least one negative and one positive value")

    for i, agent in enumerate(env.agents):
        label = agent.name or f"agent {i}"
        negative = [v for v, p in agent.items if p < 0]
        if negative:
            errors.append(f"{label}: negative probability at {negative[0]}")
            continue
        if agent.total() != 1:
            errors.append(
                f"{label}: probabilities must sum to 1 (got {agent.total()})"
            )
            continue
        zeros = [v for v, p in agent.items if p == 0]
        if zeros:
            flags.append(
                f"{label}: zero probability on {{{', '.join(map(str, zeros))}}}"
            )
        p = sum((p for v, p in agent.items if v > 0), Fraction(0))
        if p == 0 or p == 1:
            flags.append(f"{label}: deterministic value sign (p={p})")

    return ValidationReport(errors, flags)


def agent_stats(env: Environment, i: int) -> AgentStats:
    """Exact sign statistics of agent ``i``."""
    agent = env.agents[i]
    p = Fraction(0)
    pos_mass = Fraction(0)
    neg_mass = Fraction(0)
    for v, prob in agent.items:
        if v > 0:
            p += prob
            pos_mass += v * prob
        else:
            neg_mass += (-v) * prob
    u_plus = pos_mass / p if p > 0 else None
    u_minus = neg_mass / (1 - p) if p < 1 else None
    return AgentStats(p, u_plus, u_minus, pos_mass, neg_mass)


def profile_probability(env: Environment, profile: Sequence[Fraction]) -> Fraction:
    """Probability of an ordered value profile (agents are independent)."""
    if len(profile) != env.n:
        raise ValueError(f"profile has {len(profile)} entries, expected {env.n}")
    result = Fraction(1)
    for agent, v in zip(env.agents, profile):
        result *= agent.prob(v)
        if result == 0:
            return Fraction(0)
    return result


def environment_from_json(obj) -> Environment:
    """Build an Environment from the JSON object format.

    Expected shape::

        {"values": ["-100", "-1", "1", "10"],
         "agents": [{"name": "high", "probs": {"-100": "499/1000", ...}}, ...]}

    Numbers are integers or ``"p/q"`` strings. Each agent's ``probs`` keys
    must match ``values`` exactly (as strings).
    """
    if not isinstance(obj, dict):
        raise InvalidEnvironment("environment JSON must be an object")
    try:
        raw_values = obj["values"]
        raw_agents = obj["agents"]
    except KeyError as exc:
        raise InvalidEnvironment(f"environment JSON missing key {exc}") from None
    values = ValueSet(raw_values)
    expected_keys = {format_rational(v) for v in values}
    agents = []
    for i, raw in enumerate(raw_agents):
        if not isinstance(raw, dict) or "probs" not in raw:
            raise InvalidEnvironment(f"agent {i}: expected an object with 'probs'")
        probs = raw["probs"]
        keys = {format_rational(parse_rational(k)) for k in probs.keys()}
        if keys != expected_keys:
            raise InvalidEnvironment(
                f"agent {i}: probs keys must match the value set exactly"
            )
        agents.append(AgentDistribution(probs, name=raw.get("name")))
    env = Environment(values, agents)
    validate_environment(env).raise_on_errors()
    return env


def environment_to_json(env: Environment) -> dict:
    """Inverse of :func:`environment_from_json` (exact round trip)."""
    agents = []
    for agent in env.agents:
        entry = {
            "probs": {format_rational(v): format_rational(p) for v, p in agent.items}
        }
        if agent.name:
            entry["name"] = agent.name
        agents.append(entry)
    return {
        "values": [format_rational(v) for v in env.values],
        "agents": agents,
    }
