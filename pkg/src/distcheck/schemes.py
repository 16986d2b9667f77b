"""Constraint generators for common partitioning schemes.

Data variables are named x1..xn (then y1.., z1..), node variables k and l,
so that generated files diff cleanly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core.syntax import Atom, Comparison, ConstraintSet, NodeVar, Op, Query, Tgd, Var
from .errors import DistcheckError, UnsupportedDimension

K = NodeVar("k")
L = NodeVar("l")


def _vars(prefix: str, n: int) -> tuple[Var, ...]:
    return tuple(Var(f"{prefix}{i}") for i in range(1, n + 1))


def _existence(rel: str, arity: int) -> Tgd:
    xs = _vars("x", arity)
    return Tgd([Atom(rel, xs)], (), [Atom(rel, xs, K)])


def _check_positions(rel: str, arity: int, positions: Iterable[int]) -> list[int]:
    out = []
    for p in positions:
        if not 1 <= p <= arity:
            raise ValueError(f"position {p} is out of range for {rel}/{arity}")
        out.append(p)
    return out


def gen_non_skipping(schema: Mapping[str, int]) -> ConstraintSet:
    """One rule per relation placing every global fact on some node."""
    return ConstraintSet(dict(schema), [_existence(r, k) for r, k in schema.items()])


def gen_hash_partition(rel: str, arity: int, keys: Sequence[int]) -> ConstraintSet:
    """Facts agreeing on the key positions share a node."""
    keys = set(_check_positions(rel, arity, keys))
    xs = _vars("x", arity)
    ys = tuple(x if i + 1 in keys else Var(f"y{i + 1}") for i, x in enumerate(xs))
    colocate = Tgd([Atom(rel, xs, K), Atom(rel, ys)], (), [Atom(rel, ys, K)])
    return ConstraintSet({rel: arity}, [_existence(rel, arity), colocate])


def gen_range_partition(rel: str, arity: int, key: int, range_rel: str = "Range") -> ConstraintSet:
    """Derived horizontal fragmentation of rel by a binary range relation."""
    (key,) = _check_positions(rel, arity, [key])
    if range_rel == rel:
        raise ValueError("the range relation must differ from the partitioned one")
    lo, hi = Var("x1"), Var("x2")
    ys = _vars("y", arity)
    s = ys[key - 1]
    follow = Tgd([Atom(rel, ys, K), Atom(range_rel, (lo, hi), L)],
                 [Comparison(lo, Op.LE, s), Comparison(s, Op.LE, hi)],
                 [Atom(rel, ys, L)])
    ranges = Tgd([Atom(range_rel, (lo, hi))], (), [Atom(range_rel, (lo, hi), K)])
    msgs = Tgd([Atom(rel, ys)], (), [Atom(rel, ys, K)])
    return ConstraintSet({range_rel: 2, rel: arity}, [ranges, msgs, follow])


@dataclass(frozen=True)
class ChainLink:
    rel: str
    arity: int
    # (parent position, own position) pairs that must be equal
    joins: tuple = ()


@dataclass(frozen=True)
class CoPartitionSpec:
    """A hash-partitioned root followed by relations placed with their predecessor."""

    links: tuple
    root_keys: tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "root_keys", tuple(self.root_keys))
        if not self.links:
            raise ValueError("a co-partitioning chain needs at least one relation")
        root = self.links[0]
        _check_positions(root.rel, root.arity, self.root_keys)
        for parent, child in zip(self.links, self.links[1:]):
            if not child.joins:
                raise ValueError(f"{child.rel} has no join positions with {parent.rel}")
            for pp, cp in child.joins:
                _check_positions(parent.rel, parent.arity, [pp])
                _check_positions(child.rel, child.arity, [cp])
        names = [link.rel for link in self.links]
        if len(set(names)) != len(names):
            raise ValueError("relations in a co-partitioning chain must be distinct")

    @classmethod
    def parse(cls, text: str) -> "CoPartitionSpec":
        """`Lineitem/2:1 > Orders/2:2=1 > Customer/2:2=1`.

        The root lists its hash positions after the colon; every later entry
        lists parent=own position pairs joined by `+`.
        """
        parts = [p.strip() for p in text.split(">")]
        links, root_keys = [], ()
        for i, part in enumerate(parts):
            m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_']*)/(\d+)(?::(.*))?", part)
            if not m:
                raise DistcheckError(f"bad chain entry {part!r}")
            rel, ar, rest = m.group(1), int(m.group(2)), (m.group(3) or "").strip()
            if i == 0:
                root_keys = tuple(int(x) for x in rest.split("+")) if rest else (1,)
                links.append(ChainLink(rel, ar))
                continue
            joins = []
            for pair in filter(None, rest.split("+")):
                a, _, b = pair.partition("=")
                if not b:
                    raise DistcheckError(f"bad join {pair!r} in {part!r}")
                joins.append((int(a), int(b)))
            links.append(ChainLink(rel, ar, tuple(joins)))
        return cls(tuple(links), root_keys)


def gen_copartition(spec: CoPartitionSpec) -> ConstraintSet:
    """Existence rules for every relation, a hash rule for the root, and one
    reference rule per later relation co-locating it with its predecessor."""
    schema = {link.rel: link.arity for link in spec.links}
    out = [_existence(link.rel, link.arity) for link in spec.links]
    out.extend(gen_hash_partition(spec.links[0].rel, spec.links[0].arity, spec.root_keys).constraints[1:])
    for parent, child in zip(spec.links, spec.links[1:]):
        xs = _vars("x", parent.arity)
        ys = list(_vars("y", child.arity))
        for pp, cp in child.joins:
            ys[cp - 1] = xs[pp - 1]
        ys = tuple(ys)
        out.append(Tgd([Atom(parent.rel, xs, K), Atom(child.rel, ys)], (), [Atom(child.rel, ys, K)]))
    return ConstraintSet(schema, out)


@dataclass(frozen=True)
class HypercubeSpec:
    """A query plus, per body atom, which argument positions feed which dimension."""

    query: Query
    d: int = 2
    mapping: tuple = field(default=())  # per atom: ((position, dimension), ...)
    dom: str = "Dom"
    cell: str = "H"

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(tuple(m) for m in self.mapping))
        if len(self.mapping) != len(self.query.body):
            raise ValueError("one position mapping per body atom is required")
        used = set()
        for a, m in zip(self.query.body, self.mapping):
            dims = [dim for _, dim in m]
            if len(set(dims)) != len(dims):
                raise ValueError(f"{a!r} maps two positions to one dimension")
            for pos, dim in m:
                _check_positions(a.rel, a.arity, [pos])
                if not 0 <= dim < self.d:
                    raise ValueError(f"dimension {dim} is out of range")
                used.add(dim)
        if used != set(range(self.d)):
            raise ValueError("every dimension must be used by some atom")
        rels = {a.rel for a in self.query.body}
        if self.dom in rels or self.cell in rels or self.dom == self.cell:
            raise ValueError("auxiliary relation names clash with the query")

    @classmethod
    def from_variables(cls, q: Query, dims: Sequence[str], **kw) -> "HypercubeSpec":
        """Hash on the given query variables, one dimension each."""
        index = {name: i for i, name in enumerate(dims)}
        mapping = []
        for a in q.body:
            m, seen = [], set()
            for pos, t in enumerate(a.args, 1):
                if isinstance(t, Var) and t.name in index and index[t.name] not in seen:
                    m.append((pos, index[t.name]))
                    seen.add(index[t.name])
            mapping.append(tuple(m))
        return cls(q, len(dims), tuple(mapping), **kw)


def gen_hypercube(spec: HypercubeSpec) -> ConstraintSet:
    """Dom population, one generating rule for the grid cells, and one
    collecting rule per body atom padded with Dom-bound variables."""
    if spec.d != 2:
        raise UnsupportedDimension(f"only 2-dimensional hypercubes are supported, got {spec.d}")
    q = spec.query
    schema: dict[str, int] = {}
    for a in q.body:
        schema.setdefault(a.rel, a.arity)
    out = []
    for rel, ar in schema.items():
        xs = _vars("x", ar)
        for x in xs:
            out.append(Tgd([Atom(rel, xs)], (), [Atom(spec.dom, (x,))]))
    x, y = Var("x"), Var("y")
    out.append(Tgd([Atom(spec.dom, (x,)), Atom(spec.dom, (y,))], (), [Atom(spec.cell, (x, y), K)]))
    for a, m in zip(q.body, spec.mapping):
        taken = {v.name for v in q.variables()}
        coords: list = [None] * spec.d
        for pos, dim in m:
            coords[dim] = a.args[pos - 1]
        body = [Atom(a.rel, a.args)]
        for dim, t in enumerate(coords):
            if t is None:
                name = "z"
                while name in taken:
                    name += "'"
                pad = Var(name)
                taken.add(name)
                coords[dim] = pad
                body.append(Atom(spec.dom, (pad,)))
        body.append(Atom(spec.cell, tuple(coords), K))
        out.append(Tgd(body, (), [Atom(a.rel, a.args, K)]))
    schema[spec.dom] = 1
    schema[spec.cell] = spec.d
    return ConstraintSet(schema, out)
