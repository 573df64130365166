"""Probabilistic chase over a translated existential program.

The engine keeps a FIFO frontier of pending rule firings, re-checking
applicability when a firing is popped; every enqueued firing is
eventually processed or found satisfied, which makes every run fair.
Runs are reproducible: the frontier is seeded and extended in
(rule index, lexicographic binding) order and all random choices come
from an explicit seeded stream.

Draw weights are accumulated in log space while a run is in flight; the
probability attached to a finished outcome is recomputed as a canonical
product over the sorted distributional facts, so it does not depend on
the order in which the chase happened to fire rules.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .distributions import DomainError, RngStream
from .model import (
    DeltaTerm,
    Fact,
    GdlogError,
    Program,
    Variable,
    constant_key,
    fact_key,
)
from .parser import render_fact
from .translate import EXISTENTIAL, ExistentialProgram, to_existential

__all__ = [
    "LEAF",
    "BUDGET_EXHAUSTED",
    "Firing",
    "Outcome",
    "Rejection",
    "ChaseState",
    "ChaseEngine",
    "applicable_firings",
    "chase_step",
    "sample_outcome",
    "replay_weight",
]

LEAF = "leaf"
BUDGET_EXHAUSTED = "budget-exhausted"

FIFO = "fifo"
REVERSED_RULES = "reversed-rules"
RANDOM_FAIR = "random"

_M64 = (1 << 64) - 1


def _mix(a: int, b: int) -> int:
    # splitmix64 finalizer; deterministic scheduler randomness
    z = (a * 0x9E3779B97F4A7C15 + b) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Firing:
    """A rule index plus a body binding, in a hashable public form."""

    rule_index: int
    binding_items: tuple  # sorted (variable name, constant) pairs

    @property
    def binding(self) -> dict:
        return dict(self.binding_items)


@dataclass(frozen=True)
class Rejection:
    """Why a candidate fact set was not accepted."""

    reason: str

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class Outcome:
    facts: frozenset  # of Fact
    log_probability: float
    terminated: str  # LEAF or BUDGET_EXHAUSTED

    @property
    def probability(self) -> float:
        return math.exp(self.log_probability)


class ChaseState:
    """Mutable run state: growing instance, frontier, weight ledger."""

    __slots__ = ("facts", "obls", "pending", "enqueued", "log_weight", "steps", "pops")

    def __init__(self):
        self.facts: dict = {}  # relation -> set of arg tuples
        self.obls: dict = {}  # distrel name -> {key tuple: drawn value}
        self.pending = deque()  # of (rule index, slot tuple)
        self.enqueued: set = set()
        self.log_weight = 0.0
        self.steps = 0
        self.pops = 0

    def copy(self) -> "ChaseState":
        s = ChaseState.__new__(ChaseState)
        s.facts = {r: set(v) for r, v in self.facts.items()}
        s.obls = {r: dict(v) for r, v in self.obls.items()}
        s.pending = deque(self.pending)
        s.enqueued = set(self.enqueued)
        s.log_weight = self.log_weight
        s.steps = self.steps
        s.pops = self.pops
        return s

    def fact_count(self) -> int:
        return sum(len(v) for v in self.facts.values())

    def instance(self) -> frozenset:
        return frozenset(
            Fact(rel, row) for rel, rows in self.facts.items() for row in rows
        )


class _CompiledRule:
    __slots__ = (
        "index",
        "kind",
        "body",
        "nvars",
        "var_names",
        "head_rel",
        "head_args",
        "distrel",
        "spec",
        "obl_args",
        "insert_at",
        "source",
    )


def _compile_atom_args(args, slot_of: dict):
    out = []
    for t in args:
        if isinstance(t, Variable):
            out.append((True, slot_of.setdefault(t.name, len(slot_of))))
        elif isinstance(t, DeltaTerm):
            raise GdlogError("draw term in a translated rule body")
        else:
            out.append((False, t))
    return tuple(out)


def _binding_sort_key(slots) -> tuple:
    return tuple(constant_key(v) for v in slots)


class ChaseEngine:
    """Compiled rules plus scheduling policy for one existential program.

    ``order`` picks the fair scheduling flavor: "fifo" (default),
    "reversed-rules" (FIFO with rule priority reversed), or "random"
    (seeded random pops from the frontier). With ``check_invariants``
    the functional dependencies and strict instance growth are
    re-verified from scratch after every step.
    """

    def __init__(
        self,
        ghat: ExistentialProgram,
        order: str = FIFO,
        order_seed: int = 0,
        check_invariants: bool = False,
    ):
        if order not in (FIFO, REVERSED_RULES, RANDOM_FAIR):
            raise GdlogError(f"unknown scheduling order '{order}'")
        self.ghat = ghat
        self.order = order
        self.order_seed = order_seed
        self.check_invariants = check_invariants
        self.distrel_by_name = {d.name: d for d in ghat.dist_relations}
        self.rules: list = []
        self._delta: dict = {}  # relation -> [(rule, body atom index)]
        for idx, rule in enumerate(ghat.rules):
            self.rules.append(self._compile(idx, rule))
        for rule in self.rules:
            for j, (rel, _) in enumerate(rule.body):
                self._delta.setdefault(rel, []).append((rule, j))

    def _compile(self, idx: int, rule) -> _CompiledRule:
        c = _CompiledRule()
        c.index = idx
        c.kind = rule.kind
        c.source = rule
        slot_of: dict = {}
        c.body = tuple(
            (a.relation, _compile_atom_args(a.args, slot_of)) for a in rule.body
        )
        if rule.kind == EXISTENTIAL:
            dr = rule.distrel
            spec = self.ghat.dists.get(dr.dist)
            if spec is None:
                raise GdlogError(f"unknown distribution '{dr.dist}'")
            c.distrel = dr
            c.spec = spec
            c.head_rel = dr.name
            c.insert_at = dr.position - 1
            args = list(rule.head.args)
            del args[c.insert_at]  # drop the existential variable
            c.obl_args = _compile_atom_args(tuple(args), slot_of)
            c.head_args = None
        else:
            c.distrel = None
            c.spec = None
            c.head_rel = rule.head.relation
            c.head_args = _compile_atom_args(rule.head.args, slot_of)
            c.obl_args = None
            c.insert_at = None
        c.nvars = len(slot_of)
        names = [None] * len(slot_of)
        for name, slot in slot_of.items():
            names[slot] = name
        c.var_names = tuple(names)
        return c

    # -- joins ------------------------------------------------------------

    @staticmethod
    def _match(args, row, slots):
        out = slots
        copied = False
        for (is_var, payload), val in zip(args, row):
            if is_var:
                cur = out[payload]
                if cur is None:
                    if not copied:
                        out = list(out)
                        copied = True
                    out[payload] = val
                elif cur != val:
                    return None
            elif payload != val:
                return None
        return out if copied else list(out)

    def _extend(self, state: ChaseState, rule: _CompiledRule, slots, skip_idx: int):
        """All full-body bindings extending ``slots``; atom skip_idx is
        already matched."""
        order = [i for i in range(len(rule.body)) if i != skip_idx]
        results = []

        def rec(k, cur):
            if k == len(order):
                results.append(tuple(cur))
                return
            rel, args = rule.body[order[k]]
            rows = state.facts.get(rel)
            if not rows:
                return
            for row in rows:
                nxt = self._match(args, row, cur)
                if nxt is not None:
                    rec(k + 1, nxt)

        rec(0, list(slots))
        return results

    @staticmethod
    def _ground(args, slots) -> tuple:
        return tuple(slots[p] if is_var else p for is_var, p in args)

    # -- frontier ---------------------------------------------------------

    def _rule_order(self, idx: int) -> int:
        return -idx if self.order == REVERSED_RULES else idx

    def _pend_key(self, item) -> tuple:
        idx, slots = item
        return (self._rule_order(idx), _binding_sort_key(slots))

    def _enqueue_batch(self, state: ChaseState, batch: list) -> None:
        batch.sort(key=self._pend_key)
        state.pending.extend(batch)

    def _seed_frontier(self, state: ChaseState) -> None:
        batch = []
        for rule in self.rules:
            for slots in self._extend(state, rule, [None] * rule.nvars, -1):
                key = (rule.index, slots)
                if key not in state.enqueued:
                    state.enqueued.add(key)
                    batch.append(key)
        self._enqueue_batch(state, batch)

    def _discover(self, state: ChaseState, rel: str, row: tuple) -> None:
        batch = []
        for rule, atom_idx in self._delta.get(rel, ()):
            start = self._match(rule.body[atom_idx][1], row, [None] * rule.nvars)
            if start is None:
                continue
            for slots in self._extend(state, rule, start, atom_idx):
                key = (rule.index, slots)
                if key not in state.enqueued:
                    state.enqueued.add(key)
                    batch.append(key)
        if batch:
            self._enqueue_batch(state, batch)

    def _pop_pending(self, state: ChaseState):
        if self.order == RANDOM_FAIR:
            i = _mix(self.order_seed, state.pops) % len(state.pending)
            state.pops += 1
            state.pending.rotate(-i)
            item = state.pending.popleft()
            state.pending.rotate(i)
            return item
        state.pops += 1
        return state.pending.popleft()

    def head_satisfied(self, state: ChaseState, rule: _CompiledRule, slots) -> bool:
        if rule.distrel is None:
            row = self._ground(rule.head_args, slots)
            return row in state.facts.get(rule.head_rel, ())
        key = self._ground(rule.obl_args, slots)
        return key in state.obls.get(rule.head_rel, {})

    def pop_applicable(self, state: ChaseState):
        """Next pending firing whose head is still unsatisfied, or None."""
        while state.pending:
            idx, slots = self._pop_pending(state)
            rule = self.rules[idx]
            if not self.head_satisfied(state, rule, slots):
                return rule, slots
        return None

    # -- steps ------------------------------------------------------------

    def initial_state(self, input_facts) -> ChaseState:
        state = ChaseState()
        for f in input_facts:
            arity = self.ghat.edb.get(f.relation)
            if arity is None:
                raise GdlogError(
                    f"input fact {render_fact(f)}: '{f.relation}' is not EDB"
                )
            if arity != f.arity:
                raise GdlogError(
                    f"input fact {render_fact(f)}: arity {f.arity}, "
                    f"declared {arity}"
                )
            state.facts.setdefault(f.relation, set()).add(f.args)
        self._seed_frontier(state)
        return state

    def _firing_context(self, rule: _CompiledRule, slots) -> str:
        pairs = ", ".join(
            f"{n}={v!r}" for n, v in zip(rule.var_names, slots) if v is not None
        )
        return f"rule {rule.index} [{pairs}]"

    def apply(
        self,
        state: ChaseState,
        rule: _CompiledRule,
        slots,
        choice: float | None = None,
        rng: RngStream | None = None,
    ) -> tuple:
        """Fire a rule instance; returns the added (relation, row)."""
        if rule.distrel is None:
            rel = rule.head_rel
            row = self._ground(rule.head_args, slots)
        else:
            rel = rule.head_rel
            key = self._ground(rule.obl_args, slots)
            dr = rule.distrel
            params = key[len(key) - dr.pardim :] if dr.pardim else ()
            try:
                rule.spec.check_params(params)
            except DomainError as e:
                raise DomainError(f"{self._firing_context(rule, slots)}: {e}") from e
            if choice is not None:
                value = float(choice)
                weight = rule.spec.pmf(value, params)
                if weight <= 0.0:
                    raise DomainError(
                        f"{self._firing_context(rule, slots)}: value {value} "
                        f"outside support of {dr.dist}"
                    )
            else:
                if rng is None:
                    raise GdlogError("distributional firing needs a choice or an rng")
                value = rule.spec.sample(params, rng)
                weight = rule.spec.pmf(value, params)
            obls = state.obls.setdefault(rel, {})
            assert key not in obls, "functional dependency would be violated"
            obls[key] = value
            row = key[: rule.insert_at] + (value,) + key[rule.insert_at :]
            state.log_weight += math.log(weight)
        rows = state.facts.setdefault(rel, set())
        assert row not in rows, "chase step would not grow the instance"
        rows.add(row)
        state.steps += 1
        self._discover(state, rel, row)
        if self.check_invariants:
            self._verify_invariants(state)
        return rel, row

    def _verify_invariants(self, state: ChaseState) -> None:
        # recompute the FD groups from the raw fact sets
        for name, dr in self.distrel_by_name.items():
            groups: dict = {}
            for row in state.facts.get(name, ()):
                key = row[: dr.position - 1] + row[dr.position :]
                if key in groups and groups[key] != row[dr.position - 1]:
                    raise AssertionError(
                        f"functional dependency violated on {name} at {key}"
                    )
                groups[key] = row[dr.position - 1]
            if groups != state.obls.get(name, {}):
                raise AssertionError(f"obligation index out of sync for {name}")

    def run(self, state: ChaseState, rng: RngStream | None, step_budget: int) -> str:
        """Drive the chase; returns LEAF or BUDGET_EXHAUSTED."""
        if step_budget < 1:
            raise GdlogError("step_budget must be positive")
        while True:
            nxt = self.pop_applicable(state)
            if nxt is None:
                return LEAF
            if state.steps >= step_budget:
                return BUDGET_EXHAUSTED
            rule, slots = nxt
            self.apply(state, rule, slots, rng=rng)

    # -- outcome bookkeeping ----------------------------------------------

    def dist_facts_sorted(self, state: ChaseState):
        """(spec, value, params) triples in canonical order."""
        out = []
        for name in sorted(state.obls):
            dr = self.distrel_by_name[name]
            spec = self.ghat.dists.get(dr.dist)
            entries = sorted(
                state.obls[name].items(),
                key=lambda kv: tuple(constant_key(c) for c in kv[0]),
            )
            for key, value in entries:
                params = key[len(key) - dr.pardim :] if dr.pardim else ()
                out.append((spec, value, params))
        return out

    def canonical_mass(self, state: ChaseState) -> float:
        m = 1.0
        for spec, value, params in self.dist_facts_sorted(state):
            m *= spec.pmf(value, params)
        return m

    def canonical_log_mass(self, state: ChaseState) -> float:
        s = 0.0
        for spec, value, params in self.dist_facts_sorted(state):
            s += math.log(spec.pmf(value, params))
        return s

    def outcome(self, state: ChaseState, terminated: str) -> Outcome:
        return Outcome(state.instance(), self.canonical_log_mass(state), terminated)

    def sample(self, input_facts, rng: RngStream, step_budget: int) -> Outcome:
        state = self.initial_state(input_facts)
        return self.outcome(state, self.run(state, rng, step_budget))

    # -- public firing interface -------------------------------------------

    def applicable_raw(self, state: ChaseState):
        out = []
        for rule in self.rules:
            for slots in self._extend(state, rule, [None] * rule.nvars, -1):
                if not self.head_satisfied(state, rule, slots):
                    out.append((rule, slots))
        out.sort(key=lambda rs: (rs[0].index, _binding_sort_key(rs[1])))
        return out

    def to_firing(self, rule: _CompiledRule, slots) -> Firing:
        items = tuple(sorted(zip(rule.var_names, slots)))
        return Firing(rule.index, items)

    def from_firing(self, firing: Firing):
        if not 0 <= firing.rule_index < len(self.rules):
            raise GdlogError(f"no rule with index {firing.rule_index}")
        rule = self.rules[firing.rule_index]
        binding = firing.binding
        slots = []
        for name in rule.var_names:
            if name not in binding:
                raise GdlogError(f"binding misses variable '{name}'")
            slots.append(binding[name])
        return rule, tuple(slots)

    def body_satisfied(self, state: ChaseState, rule: _CompiledRule, slots) -> bool:
        for rel, args in rule.body:
            if self._ground(args, slots) not in state.facts.get(rel, ()):
                return False
        return True


# ---------------------------------------------------------------------------
# Specified operations


def applicable_firings(state: ChaseState, ghat) -> list:
    """All currently applicable firings in (rule index, binding) order."""
    engine = ghat if isinstance(ghat, ChaseEngine) else ChaseEngine(ghat)
    return [engine.to_firing(rule, slots) for rule, slots in engine.applicable_raw(state)]


def chase_step(
    state: ChaseState,
    firing: Firing,
    ghat,
    choice: float | None = None,
    rng: RngStream | None = None,
) -> ChaseState:
    """Apply one firing to ``state`` (mutating it) and return it."""
    engine = ghat if isinstance(ghat, ChaseEngine) else ChaseEngine(ghat)
    rule, slots = engine.from_firing(firing)
    if not engine.body_satisfied(state, rule, slots):
        raise GdlogError("firing is not applicable: body unsatisfied")
    if engine.head_satisfied(state, rule, slots):
        raise GdlogError("firing is not applicable: head already satisfied")
    engine.apply(state, rule, slots, choice=choice, rng=rng)
    return state


def sample_outcome(
    g: Program, input_facts, seed: int, step_budget: int = 1_000_000
) -> Outcome:
    """One seeded random walk down a chase tree of ``g`` on ``input_facts``."""
    engine = ChaseEngine(to_existential(g))
    return engine.sample(input_facts, RngStream(seed, 0), step_budget)


def replay_weight(g: Program, input_facts, candidate):
    """Deterministically re-chase ``candidate`` and return its probability.

    At every distributional firing the functional dependency forces a
    unique value inside the candidate. Accepts (returning the product of
    draw weights) only if the chase reaches a leaf equal to the
    candidate; otherwise returns a Rejection naming the first problem.
    """
    engine = ChaseEngine(to_existential(g))
    candidate = frozenset(candidate)
    input_facts = frozenset(input_facts)
    if not input_facts <= candidate:
        return Rejection("candidate does not contain the input instance")

    cand_rows: dict = {}
    for f in candidate:
        cand_rows.setdefault(f.relation, set()).add(f.args)
    cand_obls: dict = {}
    for dr in engine.ghat.dist_relations:
        keyed: dict = {}
        for row in cand_rows.get(dr.name, ()):
            if len(row) != dr.arity:
                return Rejection(
                    f"fact of {dr.name} has arity {len(row)}, expected {dr.arity}"
                )
            key = row[: dr.position - 1] + row[dr.position :]
            value = row[dr.position - 1]
            if key in keyed and keyed[key] != value:
                return Rejection(f"functional dependency violation on {dr.name}")
            keyed[key] = value
        cand_obls[dr.name] = keyed

    state = engine.initial_state(input_facts)
    while True:
        nxt = engine.pop_applicable(state)
        if nxt is None:
            break
        rule, slots = nxt
        if rule.distrel is None:
            row = engine._ground(rule.head_args, slots)
            if row not in cand_rows.get(rule.head_rel, ()):
                return Rejection(
                    f"missing forced fact {render_fact(Fact(rule.head_rel, row))}"
                )
            engine.apply(state, rule, slots)
        else:
            key = engine._ground(rule.obl_args, slots)
            keyed = cand_obls.get(rule.head_rel, {})
            if key not in keyed:
                return Rejection(
                    f"missing forced fact: unresolved obligation on {rule.head_rel} "
                    f"at {key}"
                )
            value = keyed[key]
            dr = rule.distrel
            params = key[len(key) - dr.pardim :] if dr.pardim else ()
            if rule.spec.pmf(value, params) <= 0.0:
                return Rejection(
                    f"zero-weight choice {value} on {rule.head_rel} at {key}"
                )
            engine.apply(state, rule, slots, choice=value)

    extraneous = sorted(candidate - state.instance(), key=fact_key)
    if extraneous:
        return Rejection(f"extraneous fact {render_fact(extraneous[0])}")
    return engine.canonical_mass(state)
