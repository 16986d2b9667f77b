"""Satisfaction, model checking, head normalisation and alpha-equivalence."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

from ..errors import NotDataFull, UnknownSymbol, ArityMismatch
from .instance import DistributedInstance, Valuation
from .store import Plan, Store, matches
from .syntax import (
    Atom,
    Comparison,
    Const,
    ConstraintSet,
    Egd,
    NodeVar,
    Tgd,
    Var,
    is_data_full,
)


def _split(body: Iterable) -> tuple[list[Atom], list[Comparison]]:
    atoms, comps = [], []
    for x in body:
        (comps if isinstance(x, Comparison) else atoms).append(x)
    return atoms, comps


def _as_store(d) -> Store:
    return d if isinstance(d, Store) else Store.from_instance(d)


def _check(schema, atoms):
    if schema is None:
        return
    for a in atoms:
        if a.rel not in schema:
            raise UnknownSymbol(f"relation {a.rel} is not declared")
        if schema[a.rel] != a.arity:
            raise ArityMismatch(f"{a.rel} has arity {schema[a.rel]}, used with {a.arity}")


def find_valuations(body: Iterable, d: DistributedInstance | Store,
                    schema: Mapping[str, int] | None = None) -> Iterator[Valuation]:
    """All valuations of body on d, in lexicographic order of variable names."""
    atoms, comps = _split(body)
    _check(schema, atoms)
    plan = Plan(atoms, comps)
    rows = sorted(set(matches(plan, _as_store(d))))
    for row in rows:
        yield Valuation(zip(plan.vars, row))


class _Compiled:
    """A constraint compiled for repeated checks against stores."""

    def __init__(self, c: Tgd | Egd):
        self.c = c
        self.body = Plan(c.body, c.comparisons)
        if isinstance(c, Tgd):
            self.head = Plan(c.head, (), extra_vars=self.body.vars)
            self.carry = [self.head.slot[v] for v in self.body.vars]
        else:
            self.li = self.body.slot[c.left]
            self.ri = self.body.slot[c.right]

    def head_binding(self, row: tuple) -> list:
        b = self.head.empty_binding()
        for i, v in zip(self.carry, row):
            b[i] = v
        return b

    def violated_by(self, store: Store, row: tuple) -> bool:
        if isinstance(self.c, Egd):
            return row[self.li] != row[self.ri]
        for _ in matches(self.head, store, self.head_binding(row)):
            return False
        return True

    def violations(self, store: Store) -> Iterator[tuple]:
        for row in sorted(set(matches(self.body, store))):
            if self.violated_by(store, row):
                yield row


@lru_cache(maxsize=4096)
def _compiled(c: Tgd | Egd) -> _Compiled:
    # plans are read-only once built, so one per constraint is enough
    return _Compiled(c)


def satisfies(d: DistributedInstance | Store, c: Tgd | Egd) -> bool:
    store = _as_store(d)
    comp = _compiled(c)
    for row in matches(comp.body, store):
        if comp.violated_by(store, row):
            return False
    return True


@dataclass(frozen=True)
class Violation:
    index: int
    constraint: Tgd | Egd
    valuation: Valuation

    def __repr__(self):
        return f"#{self.index}: {self.constraint!r} under {self.valuation!r}"


class ViolationReport(tuple):
    """Tuple of Violation records; empty means the instance is a model."""

    def __bool__(self):
        return len(self) > 0

    @property
    def ok(self) -> bool:
        return len(self) == 0


def model_check(d: DistributedInstance | Store, sigma: ConstraintSet | Iterable) -> ViolationReport:
    store = _as_store(d)
    out = []
    for i, c in enumerate(sigma):
        comp = _compiled(c)
        for row in comp.violations(store):
            out.append(Violation(i, c, Valuation(zip(comp.body.vars, row))))
            break
    return ViolationReport(out)


def normalize_heads(c: Tgd | Egd) -> list:
    """Split a data-full dtgd into pieces with one bare atom or one head node variable."""
    if isinstance(c, Egd):
        return [c]
    if not is_data_full(c):
        bad = c.existential_data_vars()[0]
        raise NotDataFull(f"head variable {bad.name} does not occur in the body")
    groups: dict = {}
    order = []
    for a in c.head:
        key = ("bare", len(order)) if a.node is None else ("node", a.node)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(a)
    if len(order) == 1:
        return [c]
    return [Tgd(c.body, c.comparisons, tuple(groups[k])) for k in order]


def _term_key(t):
    return ("c", t.value) if isinstance(t, Const) else ("v",)


def alpha_equivalent(c1: Tgd | Egd, c2: Tgd | Egd) -> bool:
    """Equal up to a bijective renaming of data and node variables.

    Bodies, comparisons and heads are compared as sets.
    """
    if type(c1) is not type(c2):
        return False
    if isinstance(c1, Egd) and _alpha(c1, Egd(c2.body, c2.comparisons, c2.right, c2.left)):
        return True
    return _alpha(c1, c2)


def _alpha(c1, c2) -> bool:
    items1 = _items(c1)
    items2 = _items(c2)
    if len(items1) != len(items2):
        return False
    if sorted(_shape(x) for x in items1) != sorted(_shape(x) for x in items2):
        return False
    used = [False] * len(items2)
    fwd: dict = {}
    back: dict = {}

    def bind(pairs):
        added = []
        for a, b in pairs:
            if isinstance(a, Const) or isinstance(b, Const):
                if a != b:
                    break
                continue
            if type(a) is not type(b):
                break
            if a in fwd:
                if fwd[a] != b:
                    break
                continue
            if b in back:
                break
            fwd[a] = b
            back[b] = a
            added.append(a)
        else:
            return added
        for a in added:
            del back[fwd.pop(a)]
        return None

    def go(i):
        if i == len(items1):
            return True
        x = items1[i]
        for j, y in enumerate(items2):
            if used[j] or _shape(x) != _shape(y):
                continue
            added = bind(_pairs(x, y))
            if added is None:
                continue
            used[j] = True
            if go(i + 1):
                return True
            used[j] = False
            for a in added:
                del back[fwd.pop(a)]
        return False

    return go(0)


def _items(c):
    out = [("b", a) for a in dict.fromkeys(c.body)]
    out += [("c", x) for x in dict.fromkeys(c.comparisons)]
    if isinstance(c, Tgd):
        out += [("h", a) for a in dict.fromkeys(c.head)]
    else:
        out.append(("e", (c.left, c.right)))
    return out


def _shape(item):
    tag, x = item
    if tag in ("b", "h"):
        return (tag, x.rel, x.arity, x.node is None, tuple(_term_key(t) for t in x.args))
    if tag == "c":
        return (tag, x.op.value, _term_key(x.left), _term_key(x.right))
    return (tag, isinstance(x[0], NodeVar))


def _pairs(x, y):
    tag, a = x
    _, b = y
    if tag in ("b", "h"):
        pairs = list(zip(a.args, b.args))
        if a.node is not None:
            pairs.append((a.node, b.node))
        return pairs
    if tag == "c":
        return [(a.left, b.left), (a.right, b.right)]
    return list(zip(a, b))


def alpha_equivalent_sets(s1: Iterable, s2: Iterable, ordered: bool = True) -> bool:
    l1, l2 = list(s1), list(s2)
    if len(l1) != len(l2):
        return False
    if ordered:
        return all(alpha_equivalent(a, b) for a, b in zip(l1, l2))
    pool = list(l2)
    for a in l1:
        for i, b in enumerate(pool):
            if alpha_equivalent(a, b):
                del pool[i]
                break
        else:
            return False
    return True


def constraint_vars(c: Tgd | Egd) -> tuple[list[Var], list[NodeVar]]:
    data, nodes = [], []
    for a in c.atoms():
        for v in a.data_vars():
            if v not in data:
                data.append(v)
        if isinstance(a.node, NodeVar) and a.node not in nodes:
            nodes.append(a.node)
    return data, nodes
