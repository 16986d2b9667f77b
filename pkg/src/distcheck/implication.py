"""Deciding implication of distribution constraints by chasing canonical databases."""

from __future__ import annotations

import itertools
from bisect import bisect_left
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping

from .chase import ChaseTrace, Mode, NodeSemantics, run_chase
from .core.instance import DistributedInstance, Fact, Valuation
from .core.semantics import model_check, satisfies
from .core.store import Plan, Store, matches
from .core.syntax import (
    Atom,
    Const,
    ConstraintSet,
    Domain,
    Egd,
    NodeVar,
    Tgd,
    Var,
    is_data_full,
    make_value,
)
from .errors import ArityMismatch, DistcheckError, FragmentError


@dataclass(frozen=True)
class CanonicalDb:
    valuation: Valuation
    instance: DistributedInstance


@dataclass
class Stats:
    mode: str = "enumerate"
    domain_size: int = 0
    canonical_dbs: int = 0
    failed_chases: int = 0
    chase_steps: int = 0

    def as_dict(self) -> dict:
        return {"mode": self.mode, "domain_size": self.domain_size, "canonical_dbs": self.canonical_dbs,
                "failed_chases": self.failed_chases, "chase_steps": self.chase_steps}


@dataclass(frozen=True)
class Verdict:
    holds: bool
    countermodel: DistributedInstance | None = None
    witness: Valuation | None = None
    stats: Stats = field(default_factory=Stats)
    trace: ChaseTrace | None = field(default=None, compare=False, repr=False)

    def __bool__(self):
        return self.holds

    @property
    def label(self) -> str:
        return "HOLDS" if self.holds else "REFUTED"


def as_constraint(tau):
    if isinstance(tau, ConstraintSet):
        if len(tau) != 1:
            raise ValueError(f"expected exactly one constraint, got {len(tau)}")
        return tau[0]
    return tau


def _all_constants(sigma, tau) -> set:
    out = set(tau.constants())
    for c in sigma:
        out |= c.constants()
    return out


def _tau_data_vars(tau) -> list[Var]:
    return sorted(tau.body_data_vars(), key=lambda v: v.name)


def build_domain(sigma, tau, domain: Domain = Domain.RAT) -> list:
    """The finite value set of the decision procedure, ascending."""
    tau = as_constraint(tau)
    consts = sorted(_all_constants(sigma, tau))
    for c in consts:
        domain.check(c)
    m = len(_tau_data_vars(tau))
    if not consts:
        return list(range(m))
    out = set(consts)
    lo, hi = consts[0], consts[-1]
    for j in range(1, m + 1):
        if domain is not Domain.NAT or lo - j >= 0:
            out.add(make_value(lo - j))
        out.add(make_value(hi + j))
    for a, b in zip(consts, consts[1:]):
        for j in range(1, m + 1):
            if domain is Domain.RAT:
                out.add(make_value(a + Fraction(j, m + 1) * (b - a)))
            elif a + j < b:
                out.add(make_value(a + j))
    return sorted(out)


def _instance_of(atoms, w: Mapping) -> DistributedInstance:
    g, loc = set(), {}
    for a in atoms:
        f = Fact(a.rel, tuple(w[t] if isinstance(t, Var) else t.value for t in a.args))
        g.add(f)
        if a.node is not None:
            loc.setdefault(w[a.node], set()).add(f)
    return DistributedInstance(g, loc)


def _node_assignment(tau) -> dict:
    nodes = sorted(tau.body_node_vars(), key=lambda v: v.name)
    return {v: i for i, v in enumerate(nodes)}


def canonical_instances(sigma, tau, domain: Domain = Domain.RAT) -> Iterator[CanonicalDb]:
    """V(rbody(tau)) for every order-consistent V into the decision domain."""
    tau = as_constraint(tau)
    dom = build_domain(sigma, tau, domain)
    xs = _tau_data_vars(tau)
    nodes = _node_assignment(tau)
    comps = []
    for c in tau.comparisons:
        idx = [xs.index(t) if isinstance(t, Var) else None for t in (c.left, c.right)]
        comps.append((c, max((i for i in idx if i is not None), default=-1)))
    checks = [[c for c, last in comps if last == i] for i in range(len(xs))]
    if any(not c.op.holds(c.left.value, c.right.value) for c, last in comps if last == -1):
        return
    assign: dict = {}

    def term(t):
        return assign[t] if isinstance(t, Var) else t.value

    def go(i):
        if i == len(xs):
            w = dict(assign)
            w.update(nodes)
            yield CanonicalDb(Valuation(w), _instance_of(tau.body, w))
            return
        for v in dom:
            assign[xs[i]] = v
            if all(c.op.holds(term(c.left), term(c.right)) for c in checks[i]):
                yield from go(i + 1)
        del assign[xs[i]]

    yield from go(0)


def order_type(v: Mapping, xs: list, consts: list) -> tuple:
    """Position of each value relative to the constants, plus its rank among
    the non-constant values of the same gap.

    Two valuations with equal order type differ by an order isomorphism
    fixing every constant, so their chases are isomorphic.
    """
    cset = set(consts)
    gaps: dict = {}
    for x in xs:
        val = v[x]
        if val not in cset:
            gaps.setdefault(bisect_left(consts, val), set()).add(val)
    ranks = {g: sorted(vals) for g, vals in gaps.items()}
    out = []
    for x in xs:
        val = v[x]
        if val in cset:
            out.append(("c", val))
        else:
            g = bisect_left(consts, val)
            out.append((g, ranks[g].index(val)))
    return tuple(out)


def reduced_instances(sigma, tau, domain: Domain = Domain.RAT) -> Iterator[CanonicalDb]:
    """canonical_instances with one representative per order type."""
    tau = as_constraint(tau)
    consts = sorted(_all_constants(sigma, tau))
    xs = _tau_data_vars(tau)
    seen = set()
    for db in canonical_instances(sigma, tau, domain):
        key = order_type(db.valuation, xs, consts)
        if key not in seen:
            seen.add(key)
            yield db


def single_canonical(sigma, tau) -> CanonicalDb:
    """One canonical database with pairwise distinct fresh values."""
    tau = as_constraint(tau)
    consts = _all_constants(sigma, tau)
    base = max((int(c) for c in consts), default=-1) + 1
    base = max(base, 0)
    w: dict = {x: base + i for i, x in enumerate(_tau_data_vars(tau))}
    w.update(_node_assignment(tau))
    return CanonicalDb(Valuation(w), _instance_of(tau.body, w))


def _resolve(v: Valuation, trace: ChaseTrace | None) -> Valuation:
    if trace is None:
        return v
    return Valuation({k: trace.node(x) if isinstance(k, NodeVar) else trace.value(x) for k, x in v.items()})


def head_extension_exists(v: Mapping, tau, d: DistributedInstance | Store,
                          trace: ChaseTrace | None = None) -> Valuation | None:
    """First extension of v satisfying head(tau) on d, or None.

    For an egd tau the answer is v itself when both sides coincide.
    """
    tau = as_constraint(tau)
    v = _resolve(Valuation(v), trace)
    if isinstance(tau, Egd):
        return v if v[tau.left] == v[tau.right] else None
    store = d if isinstance(d, Store) else Store.from_instance(d)
    plan = Plan(tau.head, ())
    rows = sorted(set(matches(plan, store, plan.bind(dict(v)))))
    if not rows:
        return None
    return v.extend(dict(zip(plan.vars, rows[0])))


def _check_inputs(sigma, tau, domain: Domain):
    for i, c in enumerate(sigma):
        if isinstance(c, Tgd) and not is_data_full(c):
            v = c.existential_data_vars()[0]
            raise FragmentError(f"constraint {i + 1} is not data-full: head variable {v.name} "
                                f"does not occur in the body")
    for c in _all_constants(sigma, tau):
        domain.check(c)
    schema = dict(sigma.schema) if isinstance(sigma, ConstraintSet) else {}
    for a in tau.atoms():
        if schema.setdefault(a.rel, a.arity) != a.arity:
            raise ArityMismatch(f"{a.rel} has arity {schema[a.rel]}, used with {a.arity}")


def _verify_refutation(sigma, tau, d: DistributedInstance, w: Valuation):
    bad = model_check(d, sigma)
    if bad:
        raise DistcheckError(f"internal error: countermodel violates {bad[0]!r}")
    body = Plan(tau.body, tau.comparisons)
    if not any(True for _ in matches(body, Store.from_instance(d), body.bind(dict(w)))):
        raise DistcheckError("internal error: witness does not satisfy the body of tau")
    if head_extension_exists(w, tau, d) is not None:
        raise DistcheckError("internal error: countermodel satisfies tau under the witness")


def _check_db(sigma, tau, db: CanonicalDb, mode: Mode, node_sem: NodeSemantics, protected):
    """Chase one canonical db. Returns (steps, failed, refutation or None)."""
    trace = run_chase(db.instance, sigma, mode, node_semantics=node_sem, protected=protected)
    steps = len(trace.steps)
    if trace.failed:
        return steps, True, None
    if head_extension_exists(db.valuation, tau, trace.final, trace) is not None:
        return steps, False, None
    return steps, False, (trace.final, _resolve(db.valuation, trace), trace)


def _batch_worker(args):
    sigma, tau, dbs, mode, node_sem, protected = args
    out = []
    for db in dbs:
        steps, failed, ref = _check_db(sigma, tau, db, mode, node_sem, protected)
        if ref is not None:
            ref = (ref[0], ref[1], None)
        out.append((steps, failed, ref))
        if ref is not None:
            break
    return out


def _batches(it, size):
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


def decide_implication(sigma, tau, domain: Domain = Domain.RAT, *, mode: str = "auto", jobs: int = 1,
                       node_semantics: NodeSemantics = NodeSemantics.MERGE, batch: int = 32,
                       symmetry: bool = True) -> Verdict:
    """Decide whether sigma implies tau over the given domain.

    mode is "enumerate" (all canonical databases, strict chase), "single"
    (one canonical database, identify chase; only sound without
    comparisons) or "auto", which picks single when no comparison occurs.
    With symmetry set, canonical databases of equal order type are chased once.
    """
    tau = as_constraint(tau)
    sigma_list = list(sigma)
    _check_inputs(sigma_list, tau, domain)
    has_comps = bool(tau.comparisons) or any(c.comparisons for c in sigma_list)
    if mode == "auto":
        mode = "enumerate" if has_comps else "single"
    if mode == "single" and has_comps:
        raise ValueError("single-database mode requires comparison-free input")
    protected = _all_constants(sigma_list, tau)
    stats = Stats(mode=mode)
    if mode == "single":
        db = single_canonical(sigma_list, tau)
        stats.domain_size = len(db.instance.adom())
        stats.canonical_dbs = 1
        steps, failed, ref = _check_db(sigma_list, tau, db, Mode.IDENTIFY, node_semantics, protected)
        stats.chase_steps, stats.failed_chases = steps, int(failed)
        return _finish(sigma_list, tau, ref, stats)
    if mode != "enumerate":
        raise ValueError(f"unknown mode {mode!r}")
    stats.domain_size = len(build_domain(sigma_list, tau, domain))
    dbs = reduced_instances(sigma_list, tau, domain) if symmetry else canonical_instances(sigma_list, tau, domain)
    if jobs <= 1:
        for db in dbs:
            steps, failed, ref = _check_db(sigma_list, tau, db, Mode.STRICT, node_semantics, protected)
            stats.canonical_dbs += 1
            stats.chase_steps += steps
            stats.failed_chases += failed
            if ref is not None:
                return _finish(sigma_list, tau, ref, stats)
        return _finish(sigma_list, tau, None, stats)
    pool = ProcessPoolExecutor(max_workers=jobs)
    try:
        chunks = _batches(dbs, batch)
        window: list = []

        def submit():
            chunk = next(chunks, None)
            if chunk is not None:
                window.append(pool.submit(_batch_worker, (sigma_list, tau, chunk, Mode.STRICT,
                                                          node_semantics, protected)))

        for _ in range(2 * jobs):
            submit()
        while window:
            results = window.pop(0).result()
            submit()
            for steps, failed, ref in results:
                stats.canonical_dbs += 1
                stats.chase_steps += steps
                stats.failed_chases += failed
                if ref is not None:
                    return _finish(sigma_list, tau, ref, stats)
    finally:
        pool.shutdown(wait=True, cancel_futures=True)
    return _finish(sigma_list, tau, None, stats)


def _finish(sigma, tau, ref, stats: Stats) -> Verdict:
    if ref is None:
        return Verdict(True, stats=stats)
    d, w, trace = ref
    _verify_refutation(sigma, tau, d, w)
    return Verdict(False, d, w, stats, trace)
