"""Bounded-model oracles: exhaustive search over small distributed instances.

Independent of the chase. Every global instance over a finite fact universe
is tried, in order of size, together with every multiset of non-empty local
sets (node ids are interchangeable, so a sorted tuple of local masks stands
for all its renamings).
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from ..core.instance import DistributedInstance, Fact
from ..core.syntax import Egd, Query, Tgd, Var, make_value
from ..errors import BudgetExceeded
from . import _kernels
from ._kernels import Pack

MAX_FACTS = 62
MAX_SLOTS = 16


def fact_universe(schema: dict, values: Sequence) -> list[Fact]:
    out = []
    for rel in sorted(schema):
        for args in itertools.product(values, repeat=schema[rel]):
            out.append(Fact(rel, tuple(args)))
    return out


def _term(t, w):
    return w[t] if isinstance(t, Var) else t.value


def pack_constraints(constraints: Iterable, universe: Sequence[Fact], values: Sequence) -> Pack:
    """Ground every constraint over values against a fact universe.

    Requirements on facts outside the universe can never hold: such body
    groundings are dropped, and so are such head alternatives.
    """
    index = {f: i for i, f in enumerate(universe)}
    c_ptr, c_nb, c_nh, c_eqa, c_eqb = [0], [], [], [], []
    g_bptr, bfact, bslot = [0], [], []
    g_aptr, a_hptr, hfact, hslot = [0], [0], [], []

    def req(atom, w, slots):
        f = index.get(Fact(atom.rel, tuple(_term(t, w) for t in atom.args)))
        if f is None:
            return None
        return f, (-1 if atom.node is None else slots[atom.node])

    for c in constraints:
        bnodes = sorted(c.body_node_vars(), key=lambda v: v.name)
        hnodes = sorted(c.existential_node_vars(), key=lambda v: v.name) if isinstance(c, Tgd) else []
        if len(bnodes) + len(hnodes) > MAX_SLOTS:
            raise ValueError("too many node variables for the oracle")
        slots = {v: i for i, v in enumerate(bnodes + hnodes)}
        data = sorted(c.body_data_vars(), key=lambda v: v.name)
        ex = sorted(c.existential_data_vars(), key=lambda v: v.name) if isinstance(c, Tgd) else []
        node_egd = isinstance(c, Egd) and c.on_nodes
        for vals in itertools.product(values, repeat=len(data)):
            w = dict(zip(data, vals))
            if not all(cmp.op.holds(_term(cmp.left, w), _term(cmp.right, w)) for cmp in c.comparisons):
                continue
            if isinstance(c, Egd) and not c.on_nodes and _term(c.left, w) == _term(c.right, w):
                continue
            body = [req(a, w, slots) for a in c.body]
            if any(r is None for r in body):
                continue
            for f, s in body:
                bfact.append(f)
                bslot.append(s)
            g_bptr.append(len(bfact))
            if isinstance(c, Tgd):
                for evals in itertools.product(values, repeat=len(ex)):
                    we = {**w, **dict(zip(ex, evals))}
                    head = [req(a, we, slots) for a in c.head]
                    if any(r is None for r in head):
                        continue
                    for f, s in head:
                        hfact.append(f)
                        hslot.append(s)
                    a_hptr.append(len(hfact))
            g_aptr.append(len(a_hptr) - 1)
        c_ptr.append(len(g_bptr) - 1)
        c_nb.append(len(bnodes))
        c_nh.append(len(hnodes))
        c_eqa.append(slots[c.left] if node_egd else -1)
        c_eqb.append(slots[c.right] if node_egd else -1)
    a = lambda xs: np.asarray(xs, dtype=np.int64)  # noqa: E731
    return Pack(a(c_ptr), a(c_nb), a(c_nh), a(c_eqa), a(c_eqb), a(g_bptr), a(bfact), a(bslot),
                a(g_aptr), a(a_hptr), a(hfact), a(hslot))


def submasks(g: int) -> list[int]:
    """Non-empty submasks of g in increasing order."""
    out = []
    s = g
    while s:
        out.append(s)
        s = (s - 1) & g
    return out[::-1]


def local_batches(g: int, max_nodes: int, batch: int = 65536):
    """All sorted tuples of up to max_nodes non-empty local masks, padded with 0."""
    subs = submasks(g)
    width = max(max_nodes, 1)
    yield np.zeros((1, width), dtype=np.int64)
    for k in range(1, max_nodes + 1):
        it = itertools.combinations_with_replacement(subs, k)
        while True:
            chunk = list(itertools.islice(it, batch))
            if not chunk:
                break
            arr = np.zeros((len(chunk), width), dtype=np.int64)
            arr[:, :k] = np.array(chunk, dtype=np.int64)
            yield arr


def _decode(universe, g: int, row) -> DistributedInstance:
    facts = lambda m: {universe[i] for i in range(len(universe)) if (m >> i) & 1}  # noqa: E731
    return DistributedInstance(facts(g), {n: facts(int(m)) for n, m in enumerate(row) if m})


def _schema(constraints) -> dict:
    out = {}
    for c in constraints:
        for a in c.atoms():
            out.setdefault(a.rel, a.arity)
    return out


def satisfies_all(constraints, d: DistributedInstance, backend: str | None = None) -> bool:
    """Kernel-side model check of one instance, independent of core.semantics."""
    constraints = list(constraints)
    universe = sorted(d.global_facts, key=lambda f: (f.rel, f.args))
    if len(universe) > MAX_FACTS:
        raise BudgetExceeded(f"instance has {len(universe)} facts, the oracle handles {MAX_FACTS}")
    index = {f: i for i, f in enumerate(universe)}
    pool = sorted(d.adom() | {v for c in constraints for v in c.constants()})
    p = pack_constraints(constraints, universe, pool)
    row = np.zeros((1, max(len(d.nodes), 1)), dtype=np.int64)
    for j, n in enumerate(d.nodes):
        for f in d.at(n):
            row[0, j] |= 1 << index[f]
    return bool(_kernels.satisfied((1 << len(universe)) - 1, row, p, backend)[0])


def brute_force_refute(sigma, tau, values: Sequence, max_nodes: int, *, max_global_facts: int | None = None,
                       cap: int = 5_000_000, backend: str | None = None) -> DistributedInstance | None:
    """First instance (by global size, then local layout) satisfying sigma but not tau.

    Sound for refutation only: None means no countermodel within the bounds.
    Constants of sigma and tau are added to the value pool.
    """
    sigma = list(sigma)
    taus = list(tau) if not isinstance(tau, (Tgd, Egd)) else [tau]
    pool = set(make_value(v) for v in values)
    for c in sigma + taus:
        pool |= c.constants()
    pool = sorted(pool)
    universe = fact_universe(_schema(sigma + taus), pool)
    if len(universe) > MAX_FACTS:
        raise BudgetExceeded(f"fact universe has {len(universe)} facts, the oracle handles {MAX_FACTS}")
    ps = pack_constraints(sigma, universe, pool)
    pt = pack_constraints(taus, universe, pool)
    n = len(universe)
    top = n if max_global_facts is None else min(n, max_global_facts)
    seen = 0
    for size in range(top + 1):
        for combo in itertools.combinations(range(n), size):
            g = 0
            for i in combo:
                g |= 1 << i
            for locs in local_batches(g, max_nodes):
                seen += len(locs)
                if seen > cap:
                    raise BudgetExceeded(f"oracle examined more than {cap} instances")
                hit = _kernels.satisfied(g, locs, ps, backend) & ~_kernels.satisfied(g, locs, pt, backend)
                if hit.any():
                    return _decode(universe, g, locs[int(np.argmax(hit))])
    return None


def models_of(sigma, facts: Iterable[Fact], max_nodes: int, *, cap: int = 5_000_000,
              backend: str | None = None):
    """Yield (universe, batch of local layouts) over the fixed global instance that satisfy sigma."""
    universe = sorted(set(facts), key=lambda f: (f.rel, f.args))
    if len(universe) > MAX_FACTS:
        raise BudgetExceeded(f"instance has {len(universe)} facts, the oracle handles {MAX_FACTS}")
    pool = sorted({v for f in universe for v in f.args} | {v for c in sigma for v in c.constants()})
    ps = pack_constraints(list(sigma), universe, pool)
    g = (1 << len(universe)) - 1
    seen = 0
    for locs in local_batches(g, max_nodes):
        seen += len(locs)
        if seen > cap:
            raise BudgetExceeded(f"oracle examined more than {cap} instances")
        ok = _kernels.satisfied(g, locs, ps, backend)
        if ok.any():
            yield universe, locs[ok]


def certain_oracle(q: Query, facts: Iterable[Fact], sigma, max_nodes: int, **kw):
    """Intersection of naive answers over all sigma-models of the fixed global instance.

    Returns None when no layout within the node bound satisfies sigma.
    """
    from ..core.semantics import find_valuations  # local: keeps the oracle import-light

    facts = frozenset(facts)
    sigma = list(sigma)
    universe = sorted(facts, key=lambda f: (f.rel, f.args))
    index = {f: i for i, f in enumerate(universe)}
    # answer fact -> masks of the body facts of the valuations producing it
    needs: dict = {}
    for w in find_valuations(q.body, DistributedInstance(facts)):
        m = 0
        for a in q.body:
            m |= 1 << index[Fact(a.rel, tuple(_term(t, w) for t in a.args))]
        ans = Fact(q.head.rel, tuple(_term(t, w) for t in q.head.args))
        needs.setdefault(ans, set()).add(m)
    alive = set(needs)
    any_model = False
    for _, locs in models_of(sigma, facts, max_nodes, **kw):
        any_model = True
        for ans in list(alive):
            got = np.zeros(len(locs), dtype=bool)
            for m in needs[ans]:
                got |= ((locs & m) == m).any(axis=1)
            if not got.all():
                alive.discard(ans)
    return frozenset(alive) if any_model else None
