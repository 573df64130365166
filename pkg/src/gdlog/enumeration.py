"""Exhaustive bounded exploration of the chase tree.

Expansion is best-first on path mass so that truncation leaves a tight
residual bound. Within a path the firing order is the engine's fair
scheduler, so the tree explored here is a genuine chase tree. Every
number reported is derived canonically from fact sets (sorted products,
order-invariant float sums), which makes the output reproducible
bit-for-bit across scheduling policies and logically equivalent rule
sets.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .chase import LEAF, ChaseEngine, Outcome, Rejection
from .distributions import DomainError
from .model import Fact, GdlogError, Program, fact_key
from .parser import render_fact
from .translate import to_existential

__all__ = [
    "EnumerationPolicy",
    "OutcomeDistribution",
    "enumerate_outcomes",
    "cylinder_mass",
    "marginal",
    "marginal_bounds",
]


@dataclass(frozen=True)
class EnumerationPolicy:
    """Knobs bounding the exploration.

    mass_epsilon prunes each branch set down to cumulative mass
    1 - epsilon; support_mass_target additionally caps per-node coverage
    for infinite-support distributions. node_budget caps the total
    number of chase steps taken across the whole tree (branch sets are
    expanded atomically, so the cap can overshoot by one branch width).
    """

    mass_epsilon: float = 0.0
    node_budget: int = 1_000_000
    support_mass_target: float = 1.0 - 1e-6
    order: str = "fifo"
    order_seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.mass_epsilon < 1.0):
            raise GdlogError("mass_epsilon must be in [0, 1)")
        if self.node_budget < 1:
            raise GdlogError("node_budget must be >= 1")
        if not (0.0 < self.support_mass_target <= 1.0):
            raise GdlogError("support_mass_target must be in (0, 1]")


@dataclass(frozen=True)
class OutcomeDistribution:
    """Leaf outcomes with probabilities, plus unexplored mass."""

    entries: tuple  # of (Outcome, probability), pairwise distinct fact sets
    explored_mass: float
    residual_mass: float

    def probability_of(self, facts: frozenset) -> float | None:
        for outcome, p in self.entries:
            if outcome.facts == facts:
                return p
        return None


def enumerate_outcomes(
    g: Program, input_facts, policy: EnumerationPolicy | None = None
) -> OutcomeDistribution:
    """Expand the chase tree under ``policy`` and collect leaf outcomes.

    Residual mass accounts for pruned support tails, budget cuts, and
    paths still open when the budget ran out; explored and residual mass
    always total one up to float rounding.
    """
    if policy is None:
        policy = EnumerationPolicy()
    engine = ChaseEngine(
        to_existential(g), order=policy.order, order_seed=policy.order_seed
    )
    root = engine.initial_state(input_facts)

    leaves: dict = {}  # frozenset of facts -> (Outcome, probability)
    residual_parts: list = []
    steps = 0
    counter = 0
    heap = [(-1.0, counter, root)]  # (-path mass, insertion order, state)

    while heap:
        neg_mass, _, state = heapq.heappop(heap)
        if steps >= policy.node_budget:
            residual_parts.append(-neg_mass)
            continue
        # drive the deterministic prefix of this subtree
        while True:
            nxt = engine.pop_applicable(state)
            if nxt is None:
                facts = state.instance()
                assert facts not in leaves, "chase tree produced a duplicate leaf"
                prob = engine.canonical_mass(state)
                leaves[facts] = (
                    Outcome(facts, engine.canonical_log_mass(state), LEAF),
                    prob,
                )
                break
            rule, slots = nxt
            if steps >= policy.node_budget:
                residual_parts.append(engine.canonical_mass(state))
                break
            if rule.distrel is None:
                engine.apply(state, rule, slots)
                steps += 1
                continue

            # distributional firing: branch over the support
            dr = rule.distrel
            key = engine._ground(rule.obl_args, slots)
            params = key[len(key) - dr.pardim :] if dr.pardim else ()
            target = 1.0 - policy.mass_epsilon
            if not rule.spec.finite_support:
                target = min(target, policy.support_mass_target)
            try:
                support = rule.spec.enumerate_support(params, target)
            except DomainError as e:
                raise DomainError(
                    f"{engine._firing_context(rule, slots)}: {e}"
                ) from e
            parent_mass = engine.canonical_mass(state)
            tail = 1.0 - math.fsum(p for _, p in support)
            if tail > 0.0:
                residual_parts.append(parent_mass * tail)
            for value, _ in support:
                child = state.copy()
                engine.apply(child, rule, slots, choice=value)
                steps += 1
                counter += 1
                heapq.heappush(
                    heap, (-engine.canonical_mass(child), counter, child)
                )
            break

    explored = math.fsum(p for _, p in leaves.values())
    residual = math.fsum(residual_parts)
    entries = sorted(
        leaves.values(),
        key=lambda op: (-op[1], tuple(sorted(fact_key(f) for f in op[0].facts))),
    )
    return OutcomeDistribution(tuple(entries), explored, residual)


def cylinder_mass(g: Program, input_facts, derivation_set):
    """Probability mass of all outcomes extending ``derivation_set``.

    Verifies the derivation-set property by greedily building a chase
    prefix that realizes exactly input plus the given facts; rejects if
    no prefix does. The mass is the product of the draw weights.
    """
    engine = ChaseEngine(to_existential(g))
    fset = frozenset(derivation_set)
    input_facts = frozenset(input_facts)

    target_rows: dict = {}
    for f in input_facts | fset:
        target_rows.setdefault(f.relation, set()).add(f.args)
    target_size = sum(len(v) for v in target_rows.values())

    target_obls: dict = {}
    for dr in engine.ghat.dist_relations:
        keyed: dict = {}
        for f in fset:
            if f.relation != dr.name:
                continue
            if f.arity != dr.arity:
                return Rejection(
                    f"fact of {dr.name} has arity {f.arity}, expected {dr.arity}"
                )
            key = f.args[: dr.position - 1] + f.args[dr.position :]
            value = f.args[dr.position - 1]
            if key in keyed and keyed[key] != value:
                return Rejection(f"functional dependency violation on {dr.name}")
            keyed[key] = value
        target_obls[dr.name] = keyed

    state = engine.initial_state(input_facts)
    progress = True
    while state.fact_count() < target_size and progress:
        progress = False
        for rule, slots in engine.applicable_raw(state):
            if engine.head_satisfied(state, rule, slots):
                continue  # an earlier firing in this pass satisfied it
            if rule.distrel is None:
                row = engine._ground(rule.head_args, slots)
                if row in target_rows.get(rule.head_rel, ()) and row not in state.facts.get(
                    rule.head_rel, ()
                ):
                    engine.apply(state, rule, slots)
                    progress = True
            else:
                key = engine._ground(rule.obl_args, slots)
                keyed = target_obls.get(rule.head_rel, {})
                if key not in keyed:
                    continue
                value = keyed[key]
                dr = rule.distrel
                params = key[len(key) - dr.pardim :] if dr.pardim else ()
                if rule.spec.pmf(value, params) <= 0.0:
                    return Rejection(
                        f"zero-weight choice {value} on {rule.head_rel} at {key}"
                    )
                engine.apply(state, rule, slots, choice=value)
                progress = True

    if state.fact_count() != target_size:
        missing = sorted(
            (input_facts | fset) - state.instance(), key=fact_key
        )
        return Rejection(
            f"not a derivation set: no chase prefix produces "
            f"{render_fact(missing[0])}"
        )
    return engine.canonical_mass(state)


def marginal(dist: OutcomeDistribution, query_fact: Fact) -> float:
    """Total probability of enumerated outcomes containing the fact.

    This is a lower bound whenever residual mass is positive; see
    marginal_bounds for the matching upper bound.
    """
    return math.fsum(p for outcome, p in dist.entries if query_fact in outcome.facts)


def marginal_bounds(dist: OutcomeDistribution, query_fact: Fact) -> tuple:
    lo = marginal(dist, query_fact)
    return lo, min(1.0, lo + dist.residual_mass)
