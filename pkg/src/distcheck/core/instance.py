"""Facts, distributed instances and valuations."""

from __future__ import annotations

from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

from ..errors import SubsetViolation
from .syntax import Const, NodeVar, Var, format_value, make_value


class Fact(NamedTuple):
    rel: str
    args: tuple

    @classmethod
    def of(cls, rel: str, *args) -> "Fact":
        return cls(rel, tuple(make_value(a) for a in args))

    def __repr__(self):
        return f"{self.rel}({', '.join(format_value(v) for v in self.args)})"


def fact_key(f: Fact):
    return (f.rel, len(f.args), f.args)


class DistributedInstance:
    """Global fact set plus node-indexed local sets, each contained in global.

    Nodes with empty local sets are kept: they are nodes nonetheless.
    """

    __slots__ = ("_global", "_local", "_hash")

    def __init__(self, global_facts: Iterable[Fact] = (), local: Mapping[int, Iterable[Fact]] | None = None,
                 *, complete: bool = False):
        g = set(global_facts)
        loc = {}
        for k, facts in (local or {}).items():
            if not isinstance(k, int) or k < 0:
                raise ValueError(f"bad node id {k!r}")
            fs = frozenset(facts)
            missing = fs - g
            if missing:
                if not complete:
                    f = min(missing, key=fact_key)
                    raise SubsetViolation(f"local fact {f!r} at node {k} is not global")
                g |= missing
            loc[k] = fs
        self._global = frozenset(g)
        self._local = MappingProxyType(dict(sorted(loc.items())))
        self._hash = None

    def __reduce__(self):
        return (DistributedInstance, (self._global, dict(self._local)))

    @property
    def global_facts(self) -> frozenset:
        return self._global

    @property
    def local(self) -> Mapping[int, frozenset]:
        return self._local

    @property
    def nodes(self) -> list[int]:
        return list(self._local)

    def at(self, node: int) -> frozenset:
        return self._local.get(node, frozenset())

    def skipped(self) -> frozenset:
        placed = set()
        for fs in self._local.values():
            placed |= fs
        return self._global - placed

    def adom(self) -> set:
        return {v for f in self._global for v in f.args}

    def relations(self) -> set:
        return {f.rel for f in self._global}

    def __eq__(self, other):
        if not isinstance(other, DistributedInstance):
            return NotImplemented
        return self._global == other._global and dict(self._local) == dict(other._local)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._global, frozenset(self._local.items())))
        return self._hash

    def __repr__(self):
        g = sorted(self._global, key=fact_key)
        loc = {k: sorted(v, key=fact_key) for k, v in self._local.items()}
        return f"DistributedInstance(global={g}, local={loc})"


class Valuation(Mapping):
    """Finite map from Var to values and from NodeVar to node ids."""

    __slots__ = ("_m", "_hash")

    def __init__(self, items: Mapping | Iterable = ()):
        m = dict(items)
        for k, v in m.items():
            if not isinstance(k, (Var, NodeVar)):
                raise TypeError(f"valuation keys are variables, got {k!r}")
            if isinstance(k, Var):
                m[k] = make_value(v)
        self._m = m
        self._hash = None

    def __reduce__(self):
        return (Valuation, (self._m,))

    def __getitem__(self, k):
        return self._m[k]

    def __iter__(self):
        return iter(self._m)

    def __len__(self):
        return len(self._m)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._m.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Valuation):
            return self._m == other._m
        if isinstance(other, Mapping):
            return self._m == dict(other)
        return NotImplemented

    def term(self, t):
        if isinstance(t, Const):
            return t.value
        return self._m[t]

    def extend(self, more: Mapping) -> "Valuation":
        m = dict(self._m)
        m.update(more)
        return Valuation(m)

    def restrict(self, keys: Iterable) -> "Valuation":
        return Valuation({k: self._m[k] for k in keys if k in self._m})

    def sort_key(self):
        return tuple((k.name, 1 if isinstance(k, NodeVar) else 0, v)
                     for k, v in sorted(self._m.items(), key=lambda kv: kv[0].name))

    def __repr__(self):
        parts = []
        for k in sorted(self._m, key=lambda k: k.name):
            v = self._m[k]
            parts.append(f"{k.name}->{'#' + str(v) if isinstance(k, NodeVar) else format_value(v)}")
        return "{" + ", ".join(parts) + "}"
