"""Indexed fact store and the backtracking join used by every evaluator."""

from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, Iterator, Sequence

from .instance import DistributedInstance, Fact
from .syntax import Atom, Comparison, Const, NodeId, NodeVar, Op, Var

_EMPTY: frozenset = frozenset()


class Store:
    """Mutable fact store with per-position indexes and an insertion log.

    Every insertion gets a stamp. Semi-naive callers ask for the facts
    inserted after a given stamp.
    """

    def __init__(self):
        self.glob: dict[str, dict[tuple, int]] = {}
        self.gidx: dict[tuple, set] = {}
        self.loc: dict[str, dict[tuple, int]] = {}
        self.lidx: dict[tuple, set] = {}
        self.at: dict[tuple, set] = {}
        self.where: dict[tuple, set] = {}
        self.nodes: set[int] = set()
        self.glog: dict[str, list] = {}
        self.llog: dict[str, list] = {}

    @classmethod
    def from_instance(cls, d: DistributedInstance, stamp: int = 0) -> "Store":
        s = cls()
        for f in d.global_facts:
            s.add_global(f.rel, f.args, stamp)
        for k, facts in d.local.items():
            s.add_node(k)
            for f in facts:
                s.add_local(f.rel, f.args, k, stamp)
        return s

    def add_node(self, k: int):
        self.nodes.add(k)

    def has_global(self, rel: str, args: tuple) -> bool:
        return args in self.glob.get(rel, _EMPTY)

    def has_local(self, rel: str, args: tuple, node: int) -> bool:
        return args in self.at.get((rel, node), _EMPTY)

    def nodes_with(self, rel: str, args: tuple) -> set:
        return self.where.get((rel, args), _EMPTY)

    def add_global(self, rel: str, args: tuple, stamp: int = 0) -> bool:
        table = self.glob.setdefault(rel, {})
        if args in table:
            return False
        table[args] = stamp
        for i, v in enumerate(args):
            self.gidx.setdefault((rel, i, v), set()).add(args)
        self.glog.setdefault(rel, []).append((stamp, args))
        return True

    def add_local(self, rel: str, args: tuple, node: int, stamp: int = 0) -> bool:
        """Insert args at node; also inserts globally. True if anything changed."""
        changed = self.add_global(rel, args, stamp)
        self.nodes.add(node)
        bucket = self.at.setdefault((rel, node), set())
        if args in bucket:
            return changed
        bucket.add(args)
        self.loc.setdefault(rel, {})[(args, node)] = stamp
        self.where.setdefault((rel, args), set()).add(node)
        for i, v in enumerate(args):
            self.lidx.setdefault((rel, i, v), set()).add((args, node))
        self.llog.setdefault(rel, []).append((stamp, (args, node)))
        return True

    def global_since(self, rel: str, since: int) -> list:
        log = self.glog.get(rel, [])
        i = bisect_right(log, since, key=lambda e: e[0]) if log else 0
        return [a for _, a in log[i:]]

    def local_since(self, rel: str, since: int) -> list:
        log = self.llog.get(rel, [])
        i = bisect_right(log, since, key=lambda e: e[0]) if log else 0
        return [a for _, a in log[i:]]

    def touched_since(self, rel: str, local: bool, since: int) -> bool:
        log = (self.llog if local else self.glog).get(rel)
        return bool(log) and log[-1][0] > since

    def adom(self) -> set:
        return {v for table in self.glob.values() for args in table for v in args}

    def to_instance(self) -> DistributedInstance:
        g = [Fact(rel, args) for rel, table in self.glob.items() for args in table]
        loc = {k: [] for k in self.nodes}
        for (rel, node), bucket in self.at.items():
            loc[node].extend(Fact(rel, a) for a in bucket)
        return DistributedInstance(g, loc)


class Plan:
    """An atom/comparison conjunction compiled against variable slots.

    Slots are numbered by sorted variable name, so the tuple of slot values
    of a full binding is also its lexicographic sort key.
    """

    def __init__(self, atoms: Sequence[Atom], comps: Sequence[Comparison] = (),
                 extra_vars: Iterable = ()):
        vs = set(extra_vars)
        for a in atoms:
            vs.update(a.data_vars())
            if isinstance(a.node, NodeVar):
                vs.add(a.node)
        for c in comps:
            vs.update(c.vars())
        self.vars = sorted(vs, key=lambda v: v.name)
        self.slot = {v: i for i, v in enumerate(self.vars)}
        self.atoms = [self._atom(a) for a in atoms]
        self.comps = []
        for c in comps:
            lhs, rhs = self._term(c.left), self._term(c.right)
            need = frozenset(x for isv, x in (lhs, rhs) if isv)
            self.comps.append((c.op is Op.LT, lhs, rhs, need))
        self.atom_slots = []
        for rel, args, node in self.atoms:
            s = {x for isv, x in args if isv}
            if node is not None and node[0]:
                s.add(node[1])
            self.atom_slots.append(frozenset(s))

    def _term(self, t):
        if isinstance(t, Var):
            return (True, self.slot[t])
        if isinstance(t, Const):
            return (False, t.value)
        raise TypeError(f"not a data term: {t!r}")

    def _atom(self, a: Atom):
        args = tuple(self._term(t) for t in a.args)
        if a.node is None:
            node = None
        elif isinstance(a.node, NodeVar):
            node = (True, self.slot[a.node])
        elif isinstance(a.node, NodeId):
            node = (False, a.node.id)
        else:
            node = (False, a.node)
        return (a.rel, args, node)

    def empty_binding(self) -> list:
        return [None] * len(self.vars)

    def bind(self, values: dict) -> list:
        b = self.empty_binding()
        for v, x in values.items():
            i = self.slot.get(v)
            if i is not None:
                b[i] = x
        return b


def _val(spec, b):
    isv, x = spec
    return b[x] if isv else x


def _comps_ok(plan: Plan, b: list, newly: Iterable[int] | None) -> bool:
    for lt, lhs, rhs, need in plan.comps:
        if newly is not None and not (need & newly):
            continue
        l, r = _val(lhs, b), _val(rhs, b)
        if l is None or r is None:
            continue
        if lt:
            if not l < r:
                return False
        elif not l <= r:
            return False
    return True


def _estimate(store: Store, atom, b) -> tuple[int, object]:
    """Cheapest candidate source for an atom under binding b."""
    rel, args, node = atom
    if node is None:
        best = store.glob.get(rel, _EMPTY)
        for i, spec in enumerate(args):
            v = _val(spec, b)
            if v is not None:
                bucket = store.gidx.get((rel, i, v), _EMPTY)
                if len(bucket) < len(best):
                    best = bucket
        return len(best), best
    n = _val(node, b)
    if n is not None:
        best = store.at.get((rel, n), _EMPTY)
        src = best
        for i, spec in enumerate(args):
            v = _val(spec, b)
            if v is not None:
                bucket = store.lidx.get((rel, i, v), _EMPTY)
                if len(bucket) < len(best):
                    best, src = bucket, bucket
        return len(best), src
    best = store.loc.get(rel, _EMPTY)
    for i, spec in enumerate(args):
        v = _val(spec, b)
        if v is not None:
            bucket = store.lidx.get((rel, i, v), _EMPTY)
            if len(bucket) < len(best):
                best = bucket
    return len(best), best


def _candidates(store: Store, atom, b, delta: int | None, src=None):
    """Entries for atom: plain arg tuples for global atoms and node-bound
    local atoms, (args, node) pairs otherwise."""
    rel, args, node = atom
    if delta is not None:
        if node is None:
            return False, store.global_since(rel, delta)
        return True, store.local_since(rel, delta)
    if src is None:
        src = _estimate(store, atom, b)[1]
    if node is None:
        return False, src
    n = _val(node, b)
    if n is not None and src is store.at.get((rel, n), _EMPTY):
        return False, src
    return True, src


def _search(plan: Plan, store: Store, b: list, remaining: list, delta_atom, delta):
    if not remaining:
        yield tuple(b)
        return
    if delta_atom is not None:
        pick = delta_atom
    else:
        pick, best, src = remaining[0], None, None
        for i in remaining:
            size, cand = _estimate(store, plan.atoms[i], b)
            if best is None or size < best:
                pick, best, src = i, size, cand
                if size == 0:
                    return
                if size == 1:
                    break
    rest = [i for i in remaining if i != pick]
    atom = plan.atoms[pick]
    if delta_atom is not None:
        paired, entries = _candidates(store, atom, b, delta)
    else:
        paired, entries = _candidates(store, atom, b, None, src)
    rel, args, node = atom
    for entry in list(entries):
        newly: list = []
        ok = True
        if paired:
            tup, n = entry
            if node is None:
                ok = False
            else:
                isv, x = node
                if isv:
                    cur = b[x]
                    if cur is None:
                        b[x] = n
                        newly.append(x)
                    elif cur != n:
                        ok = False
                elif x != n:
                    ok = False
        else:
            tup = entry
        if ok:
            for spec, v in zip(args, tup):
                isv, x = spec
                if isv:
                    cur = b[x]
                    if cur is None:
                        b[x] = v
                        newly.append(x)
                    elif cur != v:
                        ok = False
                        break
                elif x != v:
                    ok = False
                    break
        if ok and _comps_ok(plan, b, set(newly)):
            yield from _search(plan, store, b, rest, None, None)
        for x in newly:
            b[x] = None


def matches(plan: Plan, store: Store, binding: list | None = None,
            delta: int | None = None) -> Iterator[tuple]:
    """Yield full slot tuples satisfying the plan.

    With delta set, only bindings that use at least one fact stamped after
    delta are produced (possibly more than once).
    """
    b = list(binding) if binding is not None else plan.empty_binding()
    if not _comps_ok(plan, b, None):
        return
    # comparisons whose slots are all prebound were just checked; the rest
    # are checked as their slots fill up
    if delta is None:
        yield from _search(plan, store, b, list(range(len(plan.atoms))), None, None)
        return
    for i, (rel, _, node) in enumerate(plan.atoms):
        if not store.touched_since(rel, node is not None, delta):
            continue
        yield from _search(plan, store, b, list(range(len(plan.atoms))), i, delta)


def exists(plan: Plan, store: Store, binding: list) -> tuple | None:
    for m in matches(plan, store, binding):
        return m
    return None
