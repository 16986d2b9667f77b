"""Contexts, constraint kinds, bounded-context type tags and fragment verdicts."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .core.semantics import normalize_heads
from .core.syntax import ConstraintSet, Egd, NodeVar, Tgd, Var, is_data_full
from .errors import NotDataFull


class Kind(enum.Enum):
    NODE_CREATING = "node-creating"
    DATA_COLLECTING = "data-collecting"
    GLOBAL = "global-dtgd"
    NODE_IDENTIFYING = "node-identifying"
    VALUE_IDENTIFYING = "value-identifying"


@dataclass(frozen=True)
class KindTag:
    kind: Kind
    forms: frozenset = frozenset()
    head_var: NodeVar | None = None


@dataclass(frozen=True)
class TypeTag:
    tags: frozenset
    b: int
    # node-identifying degds: the variables that can serve as E2 head variable
    e2_heads: tuple = ()

    def __contains__(self, tag: str) -> bool:
        return tag in self.tags


class Verdict(enum.Enum):
    PI2 = "Pi2"
    PSPACE = "PSPACE"
    EXPTIME = "EXPTIME"
    UNDECIDABLE = "Undecidable"


INF = float("inf")


def context(kappa: NodeVar, atoms: Iterable) -> set[Var]:
    """Data variables occurring in atoms located at kappa."""
    out = set()
    for a in atoms:
        if a.node == kappa:
            out.update(a.data_vars())
    return out


def ctx(c, kappa: NodeVar) -> set[Var]:
    """Context of kappa in a constraint: body and head for dtgds, body for degds."""
    return context(kappa, c.atoms())


def body_ctx(c, kappa: NodeVar) -> set[Var]:
    return context(kappa, c.body)


def forms(c) -> frozenset:
    out = set()
    atoms = list(c.atoms())
    if all(a.node is None for a in atoms):
        out.add("global")
    nodes = {a.node for a in atoms}
    if atoms and len(nodes) == 1 and None not in nodes:
        out.add("local")
    if isinstance(c, Tgd):
        hnodes = {a.node for a in c.head}
        bnodes = {a.node for a in c.body}
        if all(a.node is None for a in c.body) and len(hnodes) == 1 and None not in hnodes:
            out.add("global-local")
        if c.body and len(bnodes) == 1 and None not in bnodes and hnodes == {None}:
            out.add("local-global")
    return frozenset(out)


def classify_kind(c) -> KindTag:
    if isinstance(c, Egd):
        k = Kind.NODE_IDENTIFYING if c.on_nodes else Kind.VALUE_IDENTIFYING
        return KindTag(k, forms(c))
    if not is_data_full(c):
        v = c.existential_data_vars()[0]
        raise NotDataFull(f"head variable {v.name} does not occur in the body")
    hnodes = {a.node for a in c.head}
    if len(hnodes) != 1:
        raise ValueError("classify_kind expects a head-normalised dtgd")
    (node,) = hnodes
    if node is None:
        return KindTag(Kind.GLOBAL, forms(c))
    if node in c.body_node_vars():
        return KindTag(Kind.DATA_COLLECTING, forms(c), node)
    return KindTag(Kind.NODE_CREATING, forms(c), node)


def type_tags(c, b: int) -> TypeTag:
    kt = classify_kind(c)
    tags = set()
    bounded = lambda s: len(s) <= b  # noqa: E731
    e2 = []
    if kt.kind is Kind.NODE_CREATING:
        kappa = kt.head_var
        body = c.body_node_vars()
        unb = [v for v in body if not bounded(body_ctx(c, v))]
        if bounded(ctx(c, kappa)):
            tags.add("G1")
        if all(bounded(ctx(c, v)) for v in body):
            tags.add("G2")
        if len(unb) == 1:
            tags.add("G3")
        if len(unb) >= 2 and not bounded(ctx(c, kappa)):
            tags.add("G4")
    elif kt.kind is Kind.DATA_COLLECTING:
        kappa = kt.head_var
        others = [v for v in c.body_node_vars() if v != kappa]
        c1 = bounded(body_ctx(c, kappa))
        c2 = all(bounded(ctx(c, v)) for v in others)
        if c1:
            tags.add("C1")
        if c2:
            tags.add("C2")
        if not c1 and not c2:
            tags.add("C3")
    elif kt.kind is Kind.NODE_IDENTIFYING:
        k, m = c.left, c.right
        others = [v for v in c.body_node_vars() if v not in (k, m)]
        kb, mb = bounded(ctx(c, k)), bounded(ctx(c, m))
        ob = all(bounded(ctx(c, v)) for v in others)
        if kb and mb:
            tags.add("E1")
        for head, other, other_b in ((k, m, mb), (m, k, kb)):
            if other_b and ob and head not in e2:
                e2.append(head)
        if e2:
            tags.add("E2")
        if not kb and not mb:
            tags.add("E3" if ob else "E4")
    return TypeTag(frozenset(tags), b, tuple(e2))


@dataclass(frozen=True)
class ConstraintReport:
    index: int
    constraint: object
    pieces: tuple  # (piece, KindTag, TypeTag | None)
    data_full: bool


@dataclass(frozen=True)
class FragmentReport:
    constraints: tuple
    data_full: bool
    b: int | None
    alpha: int
    min_b: dict = field(default_factory=dict)
    verdict: Verdict = Verdict.UNDECIDABLE
    np: bool = False
    comparisons: bool = False
    alpha_limit: int | None = None

    @property
    def verdict_label(self) -> str:
        if self.verdict is Verdict.PI2:
            return "Pi2/NP" if self.np else "Pi2"
        return self.verdict.value

    def kv(self) -> list[tuple[str, str]]:
        out = [("data_full", str(self.data_full).lower()), ("alpha", str(self.alpha)),
               ("b", "none" if self.b is None else str(self.b))]
        for frag in ("Tbg", "Tbd", "Twbd", "Ebd"):
            v = self.min_b.get(frag, INF)
            out.append((f"min_b.{frag}", "inf" if v == INF else str(v)))
        out.append(("comparisons", str(self.comparisons).lower()))
        out.append(("verdict", self.verdict_label))
        for r in self.constraints:
            for j, (piece, kt, tt) in enumerate(r.pieces):
                key = f"constraint.{r.index + 1}" + (f".{j + 1}" if len(r.pieces) > 1 else "")
                tags = ",".join(sorted(tt.tags)) if tt is not None else ""
                form = ",".join(sorted(kt.forms)) if kt is not None else ""
                kind = kt.kind.value if kt is not None else "not-data-full"
                out.append((key, f"{kind};tags={tags};forms={form}"))
        return out


def _member(frag: str, piece, kt: KindTag, b: int) -> bool:
    k = kt.kind
    if k is Kind.GLOBAL or k is Kind.VALUE_IDENTIFYING:
        return True
    if frag == "Ebd":
        if k is not Kind.NODE_IDENTIFYING:
            return True
        t = type_tags(piece, b).tags
        return bool(t & {"E1", "E2"})
    if k is Kind.NODE_IDENTIFYING:
        return True  # degds are not constrained by the dtgd fragments
    t = type_tags(piece, b).tags
    if frag == "Tbg":
        return k is Kind.DATA_COLLECTING or "G1" in t
    if frag == "Tbd":
        return bool(t & {"G1", "G2", "C1", "C2"})
    if frag == "Twbd":
        return bool(t & {"G1", "G2", "G3", "C1", "C2"})
    raise ValueError(frag)


def _max_ctx(pieces) -> int:
    best = 0
    for p in pieces:
        for v in p.body_node_vars() + (p.head_node_vars() if isinstance(p, Tgd) else []):
            best = max(best, len(ctx(p, v)))
    return best


def _all_in(frag: str, pieces, b: int) -> bool:
    return all(_member(frag, p, kt, b) for p, kt in pieces)


def fragment_report(sigma: ConstraintSet | Iterable, b: int | None = None, alpha: int | None = None) -> FragmentReport:
    """Tag every constraint and place the set in the best fragment.

    With b given, the verdict is taken at that bound. Without it, at the
    least bound for which some fragment applies.
    """
    sigma = list(sigma)
    reports = []
    pieces = []
    data_full = True
    for i, c in enumerate(sigma):
        if isinstance(c, Tgd) and not is_data_full(c):
            data_full = False
            reports.append(ConstraintReport(i, c, ((c, None, None),), False))
            continue
        ps = []
        for p in normalize_heads(c):
            kt = classify_kind(p)
            ps.append((p, kt))
        pieces.extend(ps)
        reports.append((i, c, ps))
    arity = max((a.arity for c in sigma for a in c.atoms()), default=0)
    comps = any(c.comparisons for c in sigma)
    top = _max_ctx([p for p, _ in pieces])
    min_b = {}
    for frag in ("Tbg", "Tbd", "Twbd", "Ebd"):
        min_b[frag] = next((k for k in range(top + 1) if _all_in(frag, pieces, k)), INF)

    def pi2_at(k):
        tbg = _all_in("Tbg", pieces, k)
        return tbg or (_all_in("Tbd", pieces, k) and _all_in("Ebd", pieces, k))

    def pspace_at(k):
        return _all_in("Twbd", pieces, k) and _all_in("Ebd", pieces, k)

    used_b = b
    if not data_full:
        verdict = Verdict.UNDECIDABLE
    else:
        if used_b is None:
            used_b = next(k for k in range(top + 1) if pi2_at(k))
        if pi2_at(used_b):
            verdict = Verdict.PI2
        elif pspace_at(used_b):
            verdict = Verdict.PSPACE
        else:
            verdict = Verdict.EXPTIME
    tb = used_b if used_b is not None else top
    final = []
    for r in reports:
        if isinstance(r, ConstraintReport):
            final.append(r)
            continue
        i, c, ps = r
        final.append(ConstraintReport(i, c, tuple((p, kt, type_tags(p, tb)) for p, kt in ps), True))
    return FragmentReport(tuple(final), data_full, used_b, arity, min_b, verdict,
                          np=verdict is Verdict.PI2 and not comps, comparisons=comps, alpha_limit=alpha)
