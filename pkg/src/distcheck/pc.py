"""Query evaluation, parallel-correctness and certain answers."""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable

from .chase import Engine, Mode, compile_rules
from .core.instance import DistributedInstance, Fact
from .core.store import Plan, Store, matches
from .core.syntax import Atom, ConstraintSet, Domain, NodeVar, Query, Tgd, Var
from .errors import ConsistencyError
from .implication import Verdict, decide_implication


def _head_facts(q: Query, plan: Plan, rows) -> frozenset:
    out = set()
    for row in rows:
        w = dict(zip(plan.vars, row))
        out.add(Fact(q.head.rel, tuple(w[t] if isinstance(t, Var) else t.value for t in q.head.args)))
    return frozenset(out)


@lru_cache(maxsize=1024)
def _plans(q: Query) -> tuple[Plan, Plan]:
    """The global plan of body(Q) and the plan with every atom at one fresh node."""
    kappa = _fresh_node(q)
    return Plan(q.body), Plan([Atom(a.rel, a.args, kappa) for a in q.body])


def eval_cq(q: Query, facts: Iterable[Fact]) -> frozenset:
    """Q(I) on a plain fact set."""
    store = Store()
    for f in facts:
        store.add_global(f.rel, f.args)
    plan = _plans(q)[0]
    return _head_facts(q, plan, matches(plan, store))


def _fresh_node(q: Query, base: str = "k") -> NodeVar:
    taken = {v.name for v in q.variables()}
    name = base
    while name in taken:
        name += "'"
    return NodeVar(name)


def naive_eval(q: Query, d: DistributedInstance | Store) -> frozenset:
    """Union of Q over the local instances."""
    plan = _plans(q)[1]
    store = d if isinstance(d, Store) else Store.from_instance(d)
    return _head_facts(q, plan, matches(plan, store))


def pc_on_instance(q: Query, d: DistributedInstance) -> tuple[bool, frozenset]:
    """Whether naive evaluation is complete on d, and the facts it misses."""
    store = Store.from_instance(d)
    plan = _plans(q)[0]
    full = _head_facts(q, plan, matches(plan, store))
    missing = full - naive_eval(q, store)
    return not missing, missing


def encode_pc(q: Query) -> Tgd:
    """body(Q) -> body(Q) with non-head variables renamed, all at a fresh node."""
    head_vars = set(q.head.data_vars())
    taken = {v.name for v in q.variables()}
    ren = {}
    for v in q.variables():
        if v in head_vars:
            continue
        name = v.name + "'"
        while name in taken:
            name += "'"
        taken.add(name)
        ren[v] = Var(name)
    kappa = NodeVar(_fresh_name(taken, "k"))
    head = [Atom(a.rel, tuple(ren.get(t, t) for t in a.args), kappa) for a in q.body]
    return Tgd(q.body, (), head)


def encode_strong_pc(q: Query) -> Tgd:
    """body(Q) -> body(Q)@k: all facts of a valuation meet at one node."""
    kappa = NodeVar(_fresh_name({v.name for v in q.variables()}, "k"))
    return Tgd(q.body, (), [Atom(a.rel, a.args, kappa) for a in q.body])


def _fresh_name(taken: set, base: str) -> str:
    name = base
    while name in taken:
        name += "'"
    return name


def pc_wrt_constraints(q: Query, sigma: ConstraintSet, domain: Domain = Domain.RAT, strong: bool = False,
                       **kw) -> Verdict:
    tau = encode_strong_pc(q) if strong else encode_pc(q)
    return decide_implication(sigma, tau, domain, **kw)


class _Inconsistent:
    """No distribution of I satisfies the constraints."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Inconsistent"

    def __bool__(self):
        return False


Inconsistent = _Inconsistent()


def certain_answers(q: Query, facts: Iterable[Fact], sigma: ConstraintSet | Iterable,
                    domain: Domain = Domain.RAT, max_leaves: int = 100_000):
    """Facts returned by naive evaluation on every distribution of I satisfying sigma.

    The global instance is fixed to I, so a dtgd with a bare head atom is
    rejected. Existential data variables in heads range over values of I;
    the chase branches over those choices and the answer is the intersection
    over the successful branches. Returns Inconsistent when every branch fails.
    """
    facts = frozenset(facts)
    for f in facts:
        for v in f.args:
            domain.check(v)
    sigma = list(sigma)
    for i, c in enumerate(sigma):
        if isinstance(c, Tgd) and any(a.node is None for a in c.head):
            raise ConsistencyError(f"constraint {i + 1} derives global facts; the global instance is fixed")
    rules = compile_rules(sigma, allow_general=True)
    eng = Engine(DistributedInstance(facts), rules, Mode.STRICT)
    values = sorted({v for f in facts for v in f.args})
    result = None
    leaves = 0
    stack = [eng]
    while stack:
        e = stack.pop()
        outcome = _advance(e, facts, values)
        if outcome is None:
            continue
        if isinstance(outcome, list):
            stack.extend(reversed(outcome))
            continue
        leaves += 1
        if leaves > max_leaves:
            raise ConsistencyError("too many chase branches")
        ans = naive_eval(q, e.store)
        result = ans if result is None else result & ans
    return Inconsistent if result is None else result


def _advance(e: Engine, facts: frozenset, values: list):
    """Run e until it finishes (returns e), dies (None) or branches (list)."""
    while True:
        trig = e.next_trigger()
        if trig is None:
            return e
        rule, row = trig
        if rule.kind == "general" and rule.exist_data:
            w = dict(zip(rule.body.vars, row))
            kids = []
            for choice in itertools.product(values, repeat=len(rule.exist_data)):
                ext = dict(zip(rule.exist_data, choice))
                full = {**w, **ext}
                if all(Fact(a.rel, tuple(full[t] if isinstance(t, Var) else t.value for t in a.args)) in facts
                       for a in rule.c.head):
                    k = e.fork()
                    k.apply(rule, row, ext)
                    if not k.failed:
                        kids.append(k)
            return kids
        if rule.kind == "general":
            w = dict(zip(rule.body.vars, row))
            if any(Fact(a.rel, tuple(w[t] if isinstance(t, Var) else t.value for t in a.args)) not in facts
                   for a in rule.c.head):
                return None
        elif any(Fact(r, a) not in facts for r, a in rule.facts(row)):
            return None
        e.apply(rule, row)
        if e.failed:
            return None
