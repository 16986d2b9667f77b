"""Terms, atoms, constraints and queries."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Union

from ..errors import (
    ArityMismatch,
    DomainMismatch,
    MixedEqualityError,
    SafetyError,
    UnknownSymbol,
)

# Values are exact rationals. Integral ones are stored as int so that hashing
# and printing stay cheap; int and Fraction compare and hash consistently.
Value = Union[int, Fraction]


def make_value(x) -> Value:
    if isinstance(x, bool):
        raise TypeError("booleans are not values")
    if isinstance(x, int):
        return x
    q = Fraction(x)
    return q.numerator if q.denominator == 1 else q


def format_value(v: Value) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return str(v)


class Domain(enum.Enum):
    NAT = "nat"
    INT = "int"
    RAT = "rat"

    @classmethod
    def parse(cls, text: str) -> "Domain":
        aliases = {"n": cls.NAT, "z": cls.INT, "q": cls.RAT}
        key = text.strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)

    def admits(self, v: Value) -> bool:
        if self is Domain.RAT:
            return True
        if isinstance(v, Fraction) and v.denominator != 1:
            return False
        return self is Domain.INT or v >= 0

    def check(self, v: Value, span=None) -> Value:
        if not self.admits(v):
            raise DomainMismatch(f"value {format_value(v)} is outside domain {self.value}", span)
        return v


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("empty variable name")

    def __repr__(self):
        return self.name


@dataclass(frozen=True, order=True)
class NodeVar:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("empty node variable name")

    def __repr__(self):
        return f"@{self.name}"


@dataclass(frozen=True)
class Const:
    value: Value

    def __post_init__(self):
        object.__setattr__(self, "value", make_value(self.value))

    def __repr__(self):
        return format_value(self.value)


@dataclass(frozen=True, order=True)
class NodeId:
    id: int

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("node ids are natural numbers")

    def __repr__(self):
        return f"#{self.id}"


Term = Union[Var, Const]
NodeTerm = Union[NodeVar, NodeId]


@dataclass(frozen=True)
class Atom:
    """R(t1..tn), optionally located at a node term (a distributed atom)."""

    rel: str
    args: tuple
    node: NodeTerm | None = None

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def data_vars(self) -> list[Var]:
        return [t for t in self.args if isinstance(t, Var)]

    def __repr__(self):
        inner = ", ".join(map(repr, self.args))
        loc = f"@{self.node.name}" if isinstance(self.node, NodeVar) else (
            f"@#{self.node.id}" if self.node is not None else "")
        return f"{self.rel}({inner}){loc}"


class Op(enum.Enum):
    LT = "<"
    LE = "<="

    def holds(self, a, b) -> bool:
        return a < b if self is Op.LT else a <= b


@dataclass(frozen=True)
class Comparison:
    left: Term
    op: Op
    right: Term

    def __post_init__(self):
        for t in (self.left, self.right):
            if not isinstance(t, (Var, Const)):
                raise TypeError("comparisons only take data terms")

    def vars(self) -> list[Var]:
        return [t for t in (self.left, self.right) if isinstance(t, Var)]

    def __repr__(self):
        return f"{self.left!r} {self.op.value} {self.right!r}"


def _collect(atoms: Iterable[Atom]):
    data, nodes = [], []
    for a in atoms:
        for v in a.data_vars():
            if v not in data:
                data.append(v)
        if isinstance(a.node, NodeVar) and a.node not in nodes:
            nodes.append(a.node)
    return data, nodes


class _Constraint:
    body: tuple
    comparisons: tuple

    def body_data_vars(self) -> list[Var]:
        return _collect(self.body)[0]

    def body_node_vars(self) -> list[NodeVar]:
        return _collect(self.body)[1]

    def constants(self) -> set:
        out = set()
        for a in self.atoms():
            out.update(t.value for t in a.args if isinstance(t, Const))
        for c in self.comparisons:
            out.update(t.value for t in (c.left, c.right) if isinstance(t, Const))
        return out

    def _check_body(self):
        data, nodes = _collect(self.body)
        for c in self.comparisons:
            for v in c.vars():
                if v not in data:
                    raise SafetyError(f"comparison variable {v.name} does not occur in a body atom")
        clash = {v.name for v in data} & {n.name for n in nodes}
        if clash:
            raise MixedEqualityError(
                f"name {sorted(clash)[0]} is used both as data and as node variable")
        for a in self.body:
            if isinstance(a.node, NodeId):
                raise TypeError("node ids cannot occur in constraints")


@dataclass(frozen=True)
class Tgd(_Constraint):
    """body, comparisons -> head, with existential head-only variables."""

    body: tuple
    comparisons: tuple
    head: tuple

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "comparisons", tuple(self.comparisons))
        object.__setattr__(self, "head", tuple(self.head))
        if not self.head:
            raise ValueError("a dtgd needs at least one head atom")
        self._check_body()
        data, nodes = _collect(self.body + self.head)
        clash = {v.name for v in data} & {n.name for n in nodes}
        if clash:
            raise MixedEqualityError(
                f"name {sorted(clash)[0]} is used both as data and as node variable")

    def atoms(self):
        return self.body + self.head

    def head_data_vars(self) -> list[Var]:
        return _collect(self.head)[0]

    def head_node_vars(self) -> list[NodeVar]:
        return _collect(self.head)[1]

    def existential_data_vars(self) -> list[Var]:
        body = set(self.body_data_vars())
        return [v for v in self.head_data_vars() if v not in body]

    def existential_node_vars(self) -> list[NodeVar]:
        body = set(self.body_node_vars())
        return [v for v in self.head_node_vars() if v not in body]

    def __repr__(self):
        lhs = ", ".join([repr(a) for a in self.body] + [repr(c) for c in self.comparisons])
        return f"{lhs} -> {', '.join(map(repr, self.head))}"


@dataclass(frozen=True)
class Egd(_Constraint):
    """body, comparisons -> left = right, over data or over node variables."""

    body: tuple
    comparisons: tuple
    left: Var | NodeVar
    right: Var | NodeVar

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "comparisons", tuple(self.comparisons))
        self._check_body()
        if type(self.left) is not type(self.right):
            raise MixedEqualityError("a node variable cannot be equated with a data variable")
        data, nodes = _collect(self.body)
        pool = data if isinstance(self.left, Var) else nodes
        for v in (self.left, self.right):
            if v not in pool:
                raise SafetyError(f"head variable {v.name} does not occur in the body")

    @property
    def on_nodes(self) -> bool:
        return isinstance(self.left, NodeVar)

    def atoms(self):
        return self.body

    def __repr__(self):
        lhs = ", ".join([repr(a) for a in self.body] + [repr(c) for c in self.comparisons])
        return f"{lhs} -> {self.left.name} = {self.right.name}"


Constraint = Union[Tgd, Egd]


def is_data_full(c: Constraint) -> bool:
    if isinstance(c, Egd):
        return True
    return not c.existential_data_vars()


def _check_schema(schema: Mapping[str, int], atoms: Iterable[Atom]):
    for a in atoms:
        if a.rel not in schema:
            raise UnknownSymbol(f"relation {a.rel} is not declared")
        if schema[a.rel] != a.arity:
            raise ArityMismatch(f"{a.rel} has arity {schema[a.rel]}, used with {a.arity}")


def infer_schema(atoms: Iterable[Atom], schema: dict | None = None) -> dict:
    out = dict(schema or {})
    for a in atoms:
        if a.rel in out and out[a.rel] != a.arity:
            raise ArityMismatch(f"{a.rel} has arity {out[a.rel]}, used with {a.arity}")
        out.setdefault(a.rel, a.arity)
    return out


@dataclass(frozen=True)
class ConstraintSet:
    schema: Mapping[str, int]
    constraints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "schema", MappingProxyType(dict(self.schema)))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            _check_schema(self.schema, c.atoms())

    @classmethod
    def of(cls, constraints: Iterable[Constraint], schema: Mapping[str, int] | None = None):
        cs = list(constraints)
        return cls(infer_schema((a for c in cs for a in c.atoms()), schema), cs)

    def __reduce__(self):
        return (ConstraintSet, (dict(self.schema), self.constraints))

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self):
        return len(self.constraints)

    def __getitem__(self, i):
        return self.constraints[i]

    def __eq__(self, other):
        if not isinstance(other, ConstraintSet):
            return NotImplemented
        return dict(self.schema) == dict(other.schema) and self.constraints == other.constraints

    def __hash__(self):
        return hash((frozenset(self.schema.items()), self.constraints))

    def constants(self) -> set:
        out = set()
        for c in self.constraints:
            out |= c.constants()
        return out

    def has_comparisons(self) -> bool:
        return any(c.comparisons for c in self.constraints)

    def union(self, other: "ConstraintSet | Iterable[Constraint]") -> "ConstraintSet":
        extra = list(other)
        schema = dict(self.schema)
        if isinstance(other, ConstraintSet):
            for r, k in other.schema.items():
                if schema.setdefault(r, k) != k:
                    raise ArityMismatch(f"{r} has arity {schema[r]} and {k}")
        return ConstraintSet.of(list(self.constraints) + extra, schema)


@dataclass(frozen=True)
class Query:
    """Conjunctive query head <- body over relation atoms without nodes."""

    head: Atom
    body: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if self.head.node is not None or any(a.node is not None for a in self.body):
            raise TypeError("query atoms carry no node terms")
        body_vars = {v for a in self.body for v in a.data_vars()}
        for v in self.head.data_vars():
            if v not in body_vars:
                raise SafetyError(f"head variable {v.name} does not occur in the body")
        if any(a.rel == self.head.rel for a in self.body):
            raise ValueError("the head symbol must not occur in the body")

    def variables(self) -> list[Var]:
        return _collect(self.body)[0]

    def schema(self) -> dict:
        return infer_schema(self.body)

    def __repr__(self):
        return f"{self.head!r} <- {', '.join(map(repr, self.body))}"
