"""Constraints and posterior semantics.

A program's constraints act as observations: the posterior is the prior
outcome distribution conditioned on every constraint holding. Exact
conditioning filters and renormalizes an enumerated prior; the Monte
Carlo path rejection-samples seeded chase runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .chase import BUDGET_EXHAUSTED, ChaseEngine
from .distributions import RngStream
from .enumeration import EnumerationPolicy, OutcomeDistribution, enumerate_outcomes
from .model import Fact, GdlogError, Program, Variable, constant_key
from .translate import to_existential

__all__ = [
    "IllegalInput",
    "UndeterminedLegality",
    "ConstraintReport",
    "PosteriorEstimate",
    "check_constraints",
    "exact_posterior",
    "estimate_posterior",
    "LEGALITY_THRESHOLD",
]

#: Retained mass at or below this is treated as measure zero, not float dust.
LEGALITY_THRESHOLD = 1e-12


class IllegalInput(GdlogError):
    """The constraint-satisfying outcome set has measure zero."""


class UndeterminedLegality(IllegalInput):
    """No explored outcome satisfies the constraints, but unexplored mass
    remains, so legality cannot be decided at this exploration depth."""


def _match_atom(atom, row, binding: dict) -> dict | None:
    out = binding
    copied = False
    for t, val in zip(atom.args, row):
        if isinstance(t, Variable):
            cur = out.get(t.name)
            if cur is None and t.name not in out:
                if not copied:
                    out = dict(out)
                    copied = True
                out[t.name] = val
            elif cur != val:
                return None
        elif t != val:
            return None
    return out if copied else dict(out)


def _body_bindings(body, rows_by_rel: dict):
    def rec(k: int, binding: dict):
        if k == len(body):
            yield binding
            return
        atom = body[k]
        for row in rows_by_rel.get(atom.relation, ()):
            if len(row) != len(atom.args):
                continue  # foreign fact set may hold junk arities
            nxt = _match_atom(atom, row, binding)
            if nxt is not None:
                yield from rec(k + 1, nxt)

    yield from rec(0, {})


def _head_holds(constraint, binding: dict, rows_by_rel: dict) -> bool:
    if constraint.head is None:
        return False  # falsum: any body match is a violation
    row = tuple(
        binding[t.name] if isinstance(t, Variable) else t
        for t in constraint.head.args
    )
    return row in rows_by_rel.get(constraint.head.relation, ())


def _rows_by_rel(facts) -> dict:
    if isinstance(facts, dict):
        return facts
    out: dict = {}
    for f in facts:
        out.setdefault(f.relation, set()).add(f.args)
    return out


def _satisfies_all(constraints, rows_by_rel: dict) -> bool:
    for c in constraints:
        for binding in _body_bindings(c.body, rows_by_rel):
            if not _head_holds(c, binding, rows_by_rel):
                return False
    return True


@dataclass(frozen=True)
class ConstraintReport:
    satisfied: bool
    violations: tuple  # of (constraint index, binding dict)


def check_constraints(outcome_facts, constraints) -> ConstraintReport:
    """Check every constraint on a fact set; violations list the failing
    (constraint index, body binding) pairs."""
    rows = _rows_by_rel(outcome_facts)
    violations = []
    for i, c in enumerate(constraints):
        bad = [
            b
            for b in _body_bindings(c.body, rows)
            if not _head_holds(c, b, rows)
        ]
        bad.sort(key=lambda b: sorted((k, constant_key(v)) for k, v in b.items()))
        violations.extend((i, b) for b in bad)
    return ConstraintReport(not violations, tuple(violations))


def exact_posterior(
    p: Program, input_facts, policy: EnumerationPolicy | None = None
) -> OutcomeDistribution:
    """Enumerate the prior, keep constraint-satisfying outcomes, and
    renormalize by the retained mass.

    If nothing is retained the input is illegal (raises IllegalInput),
    unless unexplored mass remains, which raises UndeterminedLegality
    instead. When no outcome is filtered away the prior is returned
    unchanged. Conditioning is exact only when the prior was fully
    explored; with positive residual the result is conditioned on the
    explored region and the prior residual is not redistributed.
    """
    prior = enumerate_outcomes(p, input_facts, policy)
    retained = [
        (outcome, prob)
        for outcome, prob in prior.entries
        if _satisfies_all(p.constraints, _rows_by_rel(outcome.facts))
    ]
    retained_mass = math.fsum(prob for _, prob in retained)
    if retained_mass <= LEGALITY_THRESHOLD:
        if prior.residual_mass < LEGALITY_THRESHOLD:
            raise IllegalInput(
                "no possible outcome satisfies the constraints: "
                "the condition set has measure zero"
            )
        raise UndeterminedLegality(
            "no explored outcome satisfies the constraints, but "
            f"{prior.residual_mass:.6g} mass is unexplored: legality undetermined"
        )
    if len(retained) == len(prior.entries):
        return prior
    entries = tuple((o, prob / retained_mass) for o, prob in retained)
    explored = math.fsum(prob for _, prob in entries)
    return OutcomeDistribution(entries, explored, 0.0)


@dataclass(frozen=True)
class PosteriorEstimate:
    """Rejection-sampling estimate of a posterior fact probability.

    Budget-exhausted runs are excluded from both the numerator and the
    denominator; their count bounds the bias by the unexplored mass.
    """

    query: Fact
    point: float | None
    std_error: float | None
    samples_total: int
    samples_accepted: int
    samples_budget_exhausted: int
    seed: int

    @property
    def defined(self) -> bool:
        return self.point is not None


def estimate_posterior(
    p: Program,
    input_facts,
    query: Fact,
    n: int,
    seed: int,
    step_budget: int = 1_000_000,
) -> PosteriorEstimate:
    """Estimate P(query | constraints) from ``n`` independent seeded runs.

    Deterministic given ``seed``: run i draws from the (seed, i) stream.
    With zero accepted samples the estimate is flagged undefined (point
    and std_error are None); that is a sampling statement, distinct from
    the exact path's IllegalInput.
    """
    if n < 1:
        raise GdlogError("sample count must be >= 1")
    engine = ChaseEngine(to_existential(p))
    template = engine.initial_state(input_facts)
    accepted = 0
    exhausted = 0
    hits = 0
    for i in range(n):
        state = template.copy()
        status = engine.run(state, RngStream(seed, i), step_budget)
        if status == BUDGET_EXHAUSTED:
            exhausted += 1
            continue
        if not _satisfies_all(p.constraints, state.facts):
            continue
        accepted += 1
        if query.args in state.facts.get(query.relation, ()):
            hits += 1
    if accepted:
        point = hits / accepted
        std_error = math.sqrt(point * (1.0 - point) / accepted)
    else:
        point = None
        std_error = None
    return PosteriorEstimate(query, point, std_error, n, accepted, exhausted, seed)
