"""The distributed chase: node-creating steps, node merging, value identification."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping

from .core.instance import DistributedInstance, Fact, Valuation
from .core.semantics import normalize_heads
from .core.store import Plan, Store, matches
from .core.syntax import ConstraintSet, Egd, NodeVar, Tgd, Var, is_data_full
from .errors import NotApplicable, NotDataFull, StepBudgetExceeded


class Mode(enum.Enum):
    STRICT = "strict"
    IDENTIFY = "identify"


class NodeSemantics(enum.Enum):
    MERGE = "merge"
    FAIL = "fail"


@dataclass(frozen=True)
class ChaseStep:
    index: int
    source: int
    valuation: Valuation
    produced: tuple = ()
    merge: tuple | None = None
    value_merge: tuple | None = None
    failure: bool = False


@dataclass(frozen=True)
class ChaseState:
    instance: DistributedInstance
    next_fresh: int
    parent: Mapping[int, int] = field(default_factory=dict)
    values: Mapping = field(default_factory=dict)
    steps: int = 0
    failed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "parent", MappingProxyType(dict(self.parent)))
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))

    @classmethod
    def initial(cls, d: DistributedInstance) -> "ChaseState":
        return cls(d, fresh_id(d.nodes))

    def find(self, n: int) -> int:
        while n in self.parent:
            n = self.parent[n]
        return n

    def value(self, v):
        while v in self.values:
            v = self.values[v]
        return v


def fresh_id(nodes: Iterable[int]) -> int:
    nodes = list(nodes)
    return max(nodes) + 1 if nodes else 0


def fresh_node(state: ChaseState) -> int:
    return state.next_fresh


@dataclass(frozen=True)
class ChaseTrace:
    initial: DistributedInstance
    steps: tuple
    outcome: str
    final: DistributedInstance
    rules: tuple
    node_map: Mapping[int, int]
    value_map: Mapping

    @property
    def success(self) -> bool:
        return self.outcome == "success"

    @property
    def failed(self) -> bool:
        return self.outcome == "failed"

    def node(self, n: int) -> int:
        while n in self.node_map and self.node_map[n] != n:
            n = self.node_map[n]
        return n

    def value(self, v):
        while v in self.value_map:
            v = self.value_map[v]
        return v


# -- instance surgery shared by the engine and the pure step API ---------------

def merge_nodes(d: DistributedInstance, keep: int, drop: int) -> DistributedInstance:
    loc = {k: set(v) for k, v in d.local.items() if k != drop}
    loc.setdefault(keep, set()).update(d.at(drop))
    return DistributedInstance(d.global_facts, loc)


def substitute_value(d: DistributedInstance, old, new) -> DistributedInstance:
    def sub(f: Fact) -> Fact:
        if old in f.args:
            return Fact(f.rel, tuple(new if v == old else v for v in f.args))
        return f
    return DistributedInstance({sub(f) for f in d.global_facts},
                               {k: {sub(f) for f in fs} for k, fs in d.local.items()})


def _ground(atom, w: Mapping) -> tuple:
    return tuple(w[t] if isinstance(t, Var) else t.value for t in atom.args)


# -- rules -----------------------------------------------------------------------

class _Rule:
    """A head-normalised constraint compiled for the engine."""

    def __init__(self, c, index: int, source: int):
        self.c = c
        self.index = index
        self.source = source
        self.body = Plan(c.body, c.comparisons)
        self.known = None
        self.pending: list = []
        if isinstance(c, Egd):
            self.kind = "egd_node" if c.on_nodes else "egd_value"
            self.li = self.body.slot[c.left]
            self.ri = self.body.slot[c.right]
            return
        self.exist_nodes = c.existential_node_vars()
        self.exist_data = c.existential_data_vars()
        body_nodes = set(c.body_node_vars())
        if self.exist_data or len({a.node for a in c.head}) > 1:
            self.kind = "general"
            self.head = Plan(c.head, (), extra_vars=self.body.vars)
            self.carry = [self.head.slot[v] for v in self.body.vars]
            return
        node = c.head[0].node
        if node is None:
            self.kind = "global"
        elif node in body_nodes:
            self.kind = "collect"
            self.ni = self.body.slot[node]
        else:
            self.kind = "create"
        # ground templates: per head atom, per position (is_slot, slot or value)
        self.templ = [(a.rel, tuple((True, self.body.slot[t]) if isinstance(t, Var) else (False, t.value)
                                    for t in a.args)) for a in c.head]

    def facts(self, row) -> list:
        return [(rel, tuple(row[x] if isv else x for isv, x in spec)) for rel, spec in self.templ]

    def applicable(self, store: Store, row) -> bool:
        k = self.kind
        if k == "egd_value" or k == "egd_node":
            return row[self.li] != row[self.ri]
        if k == "global":
            return any(not store.has_global(r, a) for r, a in self.facts(row))
        if k == "collect":
            n = row[self.ni]
            return any(not store.has_local(r, a, n) for r, a in self.facts(row))
        if k == "create":
            common = None
            for r, a in self.facts(row):
                nodes = store.nodes_with(r, a)
                common = set(nodes) if common is None else common & nodes
                if not common:
                    return True
            return False
        b = self.head.empty_binding()
        for i, v in zip(self.carry, row):
            b[i] = v
        for _ in matches(self.head, store, b):
            return False
        return True

    def reset(self):
        self.known = None
        self.pending = []


def compile_rules(sigma: Iterable, allow_general: bool = False) -> list[_Rule]:
    rules = []
    for i, c in enumerate(sigma):
        if isinstance(c, Tgd) and not is_data_full(c):
            if not allow_general:
                v = c.existential_data_vars()[0]
                raise NotDataFull(f"constraint {i}: head variable {v.name} does not occur in the body")
            pieces = [c]
        else:
            pieces = normalize_heads(c)
        for p in pieces:
            rules.append(_Rule(p, len(rules), i))
    return rules


def step_budget(sigma_rules: list[_Rule], d: DistributedInstance, schema: Mapping[str, int],
                constants: Iterable) -> int:
    """An upper bound on chase length, from the absence of new values."""
    env = os.environ.get("DISTCHECK_STEP_BUDGET")
    if env:
        return int(env)
    vals = len(d.adom() | set(constants)) or 1
    n_nodes = len(d.nodes)
    for r in sigma_rules:
        if r.kind == "create" or r.kind == "general":
            n_nodes += vals ** len({v for a in r.c.head for v in a.data_vars()})
    arities = dict(schema)
    for f in d.global_facts:
        arities.setdefault(f.rel, len(f.args))
    facts = sum(vals ** k for k in arities.values()) * (n_nodes + 1)
    return facts + n_nodes + vals + 1


# -- the engine ----------------------------------------------------------------

class Engine:
    """Mutable chase state plus rule caches. One per chase run."""

    def __init__(self, d: DistributedInstance, rules: list[_Rule], mode: Mode = Mode.STRICT,
                 node_semantics: NodeSemantics = NodeSemantics.MERGE, protected: Iterable = (),
                 budget: int | None = None):
        self.rules = rules
        self.mode = mode
        self.node_semantics = node_semantics
        self.protected = frozenset(protected)
        self.initial = d
        self.store = Store.from_instance(d)
        self.stamp = 0
        self.next_fresh = fresh_id(d.nodes)
        self.parent: dict[int, int] = {}
        self.values: dict = {}
        self.steps: list[ChaseStep] = []
        self.failed = False
        self.budget = budget

    def instance(self) -> DistributedInstance:
        return self.store.to_instance()

    def fork(self) -> "Engine":
        """An independent copy of the current state with fresh rule caches."""
        rules = [_Rule(r.c, r.index, r.source) for r in self.rules]
        e = Engine(self.instance(), rules, self.mode, self.node_semantics, self.protected, self.budget)
        e.initial = self.initial
        e.next_fresh = self.next_fresh
        e.parent = dict(self.parent)
        e.values = dict(self.values)
        e.steps = list(self.steps)
        e.failed = self.failed
        return e

    def _rebuild(self, d: DistributedInstance):
        self.stamp += 1
        self.store = Store.from_instance(d, self.stamp)
        for r in self.rules:
            r.reset()

    def find(self, n: int) -> int:
        while n in self.parent:
            n = self.parent[n]
        return n

    def first_applicable(self, rule: _Rule):
        if rule.known is None:
            rows = set(matches(rule.body, self.store))
        else:
            rows = set(rule.pending)
            rows.update(matches(rule.body, self.store, delta=rule.known))
        ordered = sorted(rows)
        rule.known = self.stamp
        for i, row in enumerate(ordered):
            if rule.applicable(self.store, row):
                rule.pending = ordered[i + 1:]
                return row
        rule.pending = []
        return None

    def next_trigger(self):
        for r in self.rules:
            row = self.first_applicable(r)
            if row is not None:
                return r, row
        return None

    def apply(self, rule: _Rule, row: tuple, ext: Mapping | None = None) -> ChaseStep:
        """Apply rule under the body binding row. ext fixes existential data vars."""
        w = dict(zip(rule.body.vars, row))
        self.stamp += 1
        k = rule.kind
        if k == "egd_value" or k == "egd_node":
            return self._apply_egd(rule, row, w)
        for v in getattr(rule, "exist_nodes", ()):
            w[v] = self.next_fresh
            self.next_fresh += 1
        if ext:
            w.update(ext)
        produced = []
        for a in rule.c.head:
            args = _ground(a, w)
            if a.node is None:
                if self.store.add_global(a.rel, args, self.stamp):
                    produced.append((Fact(a.rel, args), None))
            else:
                n = w[a.node]
                if self.store.add_local(a.rel, args, n, self.stamp):
                    produced.append((Fact(a.rel, args), n))
        step = ChaseStep(rule.index, rule.source, Valuation(w), tuple(produced))
        self.steps.append(step)
        return step

    def _apply_egd(self, rule: _Rule, row, w) -> ChaseStep:
        a, b = row[rule.li], row[rule.ri]
        val = Valuation(w)
        if rule.kind == "egd_node":
            if self.node_semantics is NodeSemantics.FAIL:
                return self._fail(rule, val)
            keep, drop = min(a, b), max(a, b)
            self.parent[drop] = keep
            self._rebuild(merge_nodes(self.store.to_instance(), keep, drop))
            step = ChaseStep(rule.index, rule.source, val, merge=(keep, drop))
        else:
            if self.mode is Mode.STRICT:
                return self._fail(rule, val)
            pa, pb = a in self.protected, b in self.protected
            if pa and pb:
                return self._fail(rule, val)
            if pa or pb:
                keep, drop = (a, b) if pa else (b, a)
            else:
                keep, drop = min(a, b), max(a, b)
            self.values[drop] = keep
            self._rebuild(substitute_value(self.store.to_instance(), drop, keep))
            step = ChaseStep(rule.index, rule.source, val, value_merge=(keep, drop))
        self.steps.append(step)
        return step

    def _fail(self, rule, val) -> ChaseStep:
        step = ChaseStep(rule.index, rule.source, val, failure=True)
        self.steps.append(step)
        self.failed = True
        return step

    def run(self):
        while not self.failed:
            trig = self.next_trigger()
            if trig is None:
                return
            if self.budget is not None and len(self.steps) >= self.budget:
                raise StepBudgetExceeded(f"chase exceeded its step budget of {self.budget}")
            rule, row = trig
            if rule.kind == "general":
                raise NotDataFull(f"rule {rule.source} is not data-full")
            self.apply(rule, row)

    def trace(self) -> ChaseTrace:
        nodes = set(self.initial.nodes) | set(self.parent) | set(range(self.next_fresh))
        node_map = {}
        for n in sorted(nodes):
            node_map[n] = self.find(n)
        return ChaseTrace(self.initial, tuple(self.steps), "failed" if self.failed else "success",
                          self.instance(), tuple(r.c for r in self.rules),
                          MappingProxyType(node_map), MappingProxyType(dict(self.values)))


def _schema_of(sigma) -> dict:
    if isinstance(sigma, ConstraintSet):
        return dict(sigma.schema)
    out = {}
    for c in sigma:
        for a in c.atoms():
            out.setdefault(a.rel, a.arity)
    return out


def run_chase(d: DistributedInstance, sigma: ConstraintSet | Iterable, mode: Mode = Mode.STRICT, *,
              node_semantics: NodeSemantics = NodeSemantics.MERGE, protected: Iterable | None = None,
              budget: int | None = None) -> ChaseTrace:
    """Run the chase to completion under the deterministic policy.

    Constraints are scanned in declaration order and valuations in
    lexicographic order; the first applicable step is taken and the scan
    restarts. In identify mode the protected constants default to every
    constant of sigma.
    """
    sigma = list(sigma)
    rules = compile_rules(sigma)
    consts = set()
    for c in sigma:
        consts |= c.constants()
    if protected is None:
        protected = consts
    if budget is None:
        budget = step_budget(rules, d, _schema_of(sigma), consts)
    eng = Engine(d, rules, mode, node_semantics, protected, budget)
    eng.run()
    return eng.trace()


# -- pure single-step API ------------------------------------------------------

def _body_holds(c, w: Mapping, store: Store) -> bool:
    plan = Plan(c.body, c.comparisons)
    try:
        b = plan.bind({v: w[v] for v in plan.vars})
    except KeyError:
        return False
    for _ in matches(plan, store, b):
        return True
    return False


def _existential_nodes(c) -> list[NodeVar]:
    return sorted(c.existential_node_vars(), key=lambda v: v.name) if isinstance(c, Tgd) else []


def applicable(c, w: Mapping, state: ChaseState) -> bool:
    """Whether (c, w) is a chase step on state.

    w must cover the body variables; existential head node variables must be
    mapped to consecutive fresh ids starting at the state's fresh id.
    """
    if state.failed:
        return False
    store = Store.from_instance(state.instance)
    if not _body_holds(c, w, store):
        return False
    if isinstance(c, Egd):
        return w[c.left] != w[c.right]
    ex = _existential_nodes(c)
    for i, v in enumerate(ex):
        if w.get(v) != state.next_fresh + i:
            return False
    head = Plan(c.head, (), extra_vars=Plan(c.body, c.comparisons).vars)
    fixed = {v: w[v] for v in head.vars if v in w and v not in ex}
    for _ in matches(head, store, head.bind(fixed)):
        return False
    return True


def apply_step(c, w: Mapping, state: ChaseState, mode: Mode = Mode.STRICT, *,
               node_semantics: NodeSemantics = NodeSemantics.MERGE, protected: Iterable = ()) -> ChaseState:
    if not applicable(c, w, state):
        raise NotApplicable(f"{c!r} is not applicable under {dict(w)!r}")
    d = state.instance
    if isinstance(c, Egd):
        a, b = w[c.left], w[c.right]
        if c.on_nodes:
            if node_semantics is NodeSemantics.FAIL:
                return replace(state, steps=state.steps + 1, failed=True)
            keep, drop = min(a, b), max(a, b)
            parent = dict(state.parent)
            parent[drop] = keep
            return replace(state, instance=merge_nodes(d, keep, drop), parent=parent, steps=state.steps + 1)
        prot = frozenset(protected)
        if mode is Mode.STRICT or (a in prot and b in prot):
            return replace(state, steps=state.steps + 1, failed=True)
        if a in prot or b in prot:
            keep, drop = (a, b) if a in prot else (b, a)
        else:
            keep, drop = min(a, b), max(a, b)
        values = dict(state.values)
        values[drop] = keep
        return replace(state, instance=substitute_value(d, drop, keep), values=values, steps=state.steps + 1)
    if not is_data_full(c):
        raise NotDataFull("only data-full dtgds can be applied")
    g = set(d.global_facts)
    loc = {k: set(v) for k, v in d.local.items()}
    for a in c.head:
        f = Fact(a.rel, _ground(a, w))
        g.add(f)
        if a.node is not None:
            loc.setdefault(w[a.node], set()).add(f)
    ex = _existential_nodes(c)
    return replace(state, instance=DistributedInstance(g, loc),
                   next_fresh=state.next_fresh + len(ex), steps=state.steps + 1)


def replay(trace: ChaseTrace, mode: Mode = Mode.STRICT, *,
           node_semantics: NodeSemantics = NodeSemantics.MERGE, protected: Iterable = ()) -> ChaseState:
    """Re-execute a trace step by step through the pure API."""
    state = ChaseState.initial(trace.initial)
    for s in trace.steps:
        c = trace.rules[s.index]
        state = apply_step(c, s.valuation, state, mode, node_semantics=node_semantics, protected=protected)
    return state
