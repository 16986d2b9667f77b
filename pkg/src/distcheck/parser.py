"""Text formats for constraint sets (.dc), instances (.dinst) and queries (.cq).

Constraint files::

    schema Msg/2, Range/2.              # optional; otherwise arities are inferred
    Msg(s, r) -> Msg(s, r)@k.
    Msg(s,r)@n, Range(l,u)@m, l <= s, s <= u -> Msg(s,r)@m.
    R(x)@k, R(x)@m -> k = m.

Instance files::

    global { R(1, 2) S(2) } local { 0 { R(1, 2) } 1 { } }

Query files::

    H(n, s) <- Emp(n, t), Sal(t, s).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .core.instance import DistributedInstance, Fact, fact_key
from .core.syntax import (
    Atom,
    Comparison,
    Const,
    ConstraintSet,
    Domain,
    Egd,
    NodeVar,
    Op,
    Query,
    Tgd,
    Var,
    format_value,
    make_value,
)
from .errors import (
    ArityMismatch,
    DistcheckError,
    DistcheckSyntaxError,
    MixedEqualityError,
    SafetyError,
    SourceSpan,
    SubsetViolation,
    UnknownSymbol,
)

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>-?\d+(?:/\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>->|<-|<=|[(),.@=<{}/])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


def tokenize(text: str, file: str = "<string>") -> list[Token]:
    out = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DistcheckSyntaxError(f"unexpected character {text[pos]!r}", SourceSpan(file, line, col))
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            out.append(Token(kind if kind != "op" else chunk, chunk, SourceSpan(file, line, col)))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    out.append(Token("eof", "", SourceSpan(file, line, col)))
    return out


def _value(tok: Token, domain: Domain | None):
    p, _, q = tok.text.partition("/")
    if q and int(q) == 0:
        raise DistcheckSyntaxError("zero denominator", tok.span)
    v = make_value(Fraction(int(p), int(q)) if q else int(p))
    if domain is not None:
        domain.check(v, tok.span)
    return v


class _Parser:
    def __init__(self, text: str, file: str, domain: Domain | None):
        self.toks = tokenize(text, file)
        self.i = 0
        self.domain = domain

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self, kind: str | None = None) -> Token:
        t = self.tok
        if kind is not None and t.kind != kind:
            want = {"name": "identifier", "num": "number", "eof": "end of input"}.get(kind, repr(kind))
            got = "end of input" if t.kind == "eof" else repr(t.text)
            raise DistcheckSyntaxError(f"expected {want}, found {got}", t.span)
        self.i += 1
        return t

    def accept(self, kind: str) -> Token | None:
        if self.tok.kind == kind:
            return self.take()
        return None

    # -- shared pieces ---------------------------------------------------

    def term(self):
        t = self.tok
        if t.kind == "num":
            self.take()
            return Const(_value(t, self.domain)), t
        if t.kind == "name":
            self.take()
            return Var(t.text), t
        raise DistcheckSyntaxError(f"expected a term, found {t.text or 'end of input'!r}", t.span)

    def args(self):
        self.take("(")
        out = []
        if self.tok.kind != ")":
            out.append(self.term())
            while self.accept(","):
                out.append(self.term())
        self.take(")")
        return out

    # -- constraints -----------------------------------------------------

    def item(self):
        """An atom or comparison as (obj, first token, [(term, token)], node info)."""
        t = self.tok
        if t.kind == "name" and self.peek().kind == "(":
            name = self.take()
            terms = self.args()
            node = None
            if self.accept("@"):
                n = self.take("name")
                node = (NodeVar(n.text), n)
            atom = Atom(name.text, tuple(x for x, _ in terms), node[0] if node else None)
            return atom, name, terms, node
        left, ltok = self.term()
        op = self.tok
        if op.kind not in ("<", "<="):
            raise DistcheckSyntaxError(f"expected '(' or a comparison operator, found {op.text!r}", op.span)
        self.take()
        right, rtok = self.term()
        return Comparison(left, Op.LT if op.kind == "<" else Op.LE, right), ltok, [(left, ltok), (right, rtok)], None

    def items(self, stop: tuple):
        out = []
        if self.tok.kind in stop:
            return out
        out.append(self.item())
        while self.accept(","):
            out.append(self.item())
        return out

    def schema_decl(self, schema: dict):
        self.take("name")
        while True:
            n = self.take("name")
            self.take("/")
            k = self.take("num")
            if not k.text.isdigit():
                raise DistcheckSyntaxError("arity must be a natural number", k.span)
            if n.text in schema and schema[n.text] != int(k.text):
                raise ArityMismatch(f"{n.text} declared twice with different arities", n.span)
            schema[n.text] = int(k.text)
            if not self.accept(","):
                break
        self.take(".")

    def statement(self):
        start = self.tok
        body = self.items(("->",))
        self.take("->")
        if self.tok.kind == "name" and self.peek().kind == "=":
            lt = self.take()
            self.take("=")
            rt = self.take("name")
            self.take(".")
            return self._egd(body, lt, rt), body, start
        head = self.items((".",))
        if not head:
            raise DistcheckSyntaxError("empty head", self.tok.span)
        for h in head:
            if isinstance(h[0], Comparison):
                raise DistcheckSyntaxError("comparisons are not allowed in heads", h[1].span)
        self.take(".")
        atoms = [x for x, *_ in body if isinstance(x, Atom)]
        comps = [x for x, *_ in body if isinstance(x, Comparison)]
        self._check_names(body + head)
        self._check_comparisons(body)
        try:
            return Tgd(atoms, comps, [h[0] for h in head]), body + head, start
        except DistcheckError as e:
            raise type(e)(e.message, e.span or start.span) from None

    def _check_names(self, items):
        data, nodes = {}, {}
        for _, first, terms, node in items:
            for t, tok in terms:
                if isinstance(t, Var):
                    data.setdefault(t.name, tok)
            if node is not None:
                nodes.setdefault(node[0].name, node[1])
        for name, tok in nodes.items():
            if name in data:
                raise MixedEqualityError(f"name {name} is used both as data and as node variable", tok.span)

    def _check_comparisons(self, body):
        bound = {t.name for x, _, terms, _ in body if isinstance(x, Atom) for t, _ in terms if isinstance(t, Var)}
        for x, _, terms, _ in body:
            if isinstance(x, Comparison):
                for t, tok in terms:
                    if isinstance(t, Var) and t.name not in bound:
                        raise SafetyError(f"comparison variable {t.name} does not occur in a body atom", tok.span)

    def _egd(self, body, lt: Token, rt: Token):
        self._check_names(body)
        self._check_comparisons(body)
        data = {t.name for x, _, terms, _ in body if isinstance(x, Atom) for t, _ in terms if isinstance(t, Var)}
        nodes = {node[0].name for *_, node in body if node is not None}
        kinds = []
        for tok in (lt, rt):
            if tok.text in nodes:
                kinds.append(NodeVar(tok.text))
            elif tok.text in data:
                kinds.append(Var(tok.text))
            else:
                raise SafetyError(f"head variable {tok.text} does not occur in the body", tok.span)
        if type(kinds[0]) is not type(kinds[1]):
            raise MixedEqualityError("a node variable cannot be equated with a data variable", rt.span)
        atoms = [x for x, *_ in body if isinstance(x, Atom)]
        comps = [x for x, *_ in body if isinstance(x, Comparison)]
        return Egd(atoms, comps, kinds[0], kinds[1])

    def constraints(self) -> ConstraintSet:
        schema: dict = {}
        declared = False
        out = []
        while self.tok.kind != "eof":
            if self.tok.kind == "name" and self.tok.text == "schema" and self.peek().kind == "name":
                self.schema_decl(schema)
                declared = True
                continue
            c, items, start = self.statement()
            for x, first, terms, _ in items:
                if not isinstance(x, Atom):
                    continue
                if x.rel not in schema:
                    if declared:
                        raise UnknownSymbol(f"relation {x.rel} is not declared", first.span)
                    schema[x.rel] = x.arity
                elif schema[x.rel] != x.arity:
                    raise ArityMismatch(f"{x.rel} has arity {schema[x.rel]}, used with {x.arity}", first.span)
            out.append(c)
        return ConstraintSet(schema, out)

    # -- instances -------------------------------------------------------

    def fact(self) -> tuple[Fact, Token]:
        name = self.take("name")
        self.take("(")
        vals = []
        if self.tok.kind != ")":
            vals.append(_value(self.take("num"), self.domain))
            while self.accept(","):
                vals.append(_value(self.take("num"), self.domain))
        self.take(")")
        return Fact(name.text, tuple(vals)), name

    def facts(self) -> list:
        self.take("{")
        out = []
        while self.tok.kind != "}":
            out.append(self.fact())
            self.accept(",")
        self.take("}")
        return out

    def node_id(self) -> int:
        t = self.take("num")
        if not t.text.isdigit():
            raise DistcheckSyntaxError("node ids are natural numbers", t.span)
        return int(t.text)

    def instance(self, strict: bool) -> DistributedInstance:
        kw = self.take("name")
        if kw.text != "global":
            raise DistcheckSyntaxError("expected 'global'", kw.span)
        g = self.facts()
        local: dict = {}
        while self.tok.kind == "name" and self.tok.text == "local":
            self.take()
            if self.tok.kind == "{":
                self.take("{")
                while self.tok.kind != "}":
                    k = self.node_id()
                    local.setdefault(k, []).extend(self.facts())
                self.take("}")
            else:
                k = self.node_id()
                local.setdefault(k, []).extend(self.facts())
        self.take("eof")
        arity: dict = {}
        for f, tok in g + [x for fs in local.values() for x in fs]:
            if arity.setdefault(f.rel, len(f.args)) != len(f.args):
                raise ArityMismatch(f"{f.rel} has arity {arity[f.rel]}, used with {len(f.args)}", tok.span)
        gset = {f for f, _ in g}
        if strict:
            for k, fs in local.items():
                for f, tok in fs:
                    if f not in gset:
                        raise SubsetViolation(f"local fact {f!r} at node {k} is not global", tok.span)
        return DistributedInstance(gset, {k: [f for f, _ in fs] for k, fs in local.items()}, complete=True)

    # -- queries ---------------------------------------------------------

    def query(self) -> Query:
        name = self.take("name")
        head_terms = self.args()
        for t, tok in head_terms:
            if not isinstance(t, Var):
                raise DistcheckSyntaxError("query heads list variables", tok.span)
        self.take("<-")
        body = []
        while True:
            n = self.take("name")
            terms = self.args()
            if self.tok.kind == "@":
                raise DistcheckSyntaxError("query atoms carry no node terms", self.tok.span)
            body.append((Atom(n.text, tuple(x for x, _ in terms)), n))
            if not self.accept(","):
                break
        self.take(".")
        self.take("eof")
        bound = {v.name for a, _ in body for v in a.data_vars()}
        for t, tok in head_terms:
            if t.name not in bound:
                raise SafetyError(f"head variable {t.name} does not occur in the body", tok.span)
        arity: dict = {}
        for a, tok in body:
            if a.rel == name.text:
                raise DistcheckSyntaxError("the head symbol must not occur in the body", tok.span)
            if arity.setdefault(a.rel, a.arity) != a.arity:
                raise ArityMismatch(f"{a.rel} has arity {arity[a.rel]}, used with {a.arity}", tok.span)
        return Query(Atom(name.text, tuple(t for t, _ in head_terms)), tuple(a for a, _ in body))


def parse_constraints(text: str, domain: Domain | None = None, file: str = "<string>") -> ConstraintSet:
    return _Parser(text, file, domain).constraints()


def parse_instance(text: str, domain: Domain | None = None, file: str = "<string>",
                   strict: bool = False) -> DistributedInstance:
    """Parse an instance. Local facts missing from global are added to it,
    unless strict is set, in which case SubsetViolation is raised."""
    return _Parser(text, file, domain).instance(strict)


def parse_query(text: str, domain: Domain | None = None, file: str = "<string>") -> Query:
    return _Parser(text, file, domain).query()


def parse_facts(text: str, domain: Domain | None = None, file: str = "<string>") -> set:
    """A bare whitespace- or comma-separated list of facts."""
    p = _Parser(text, file, domain)
    out = set()
    while p.tok.kind != "eof":
        out.add(p.fact()[0])
        p.accept(",")
    return out


# -- rendering ---------------------------------------------------------------

def _term(t) -> str:
    return t.name if isinstance(t, Var) else format_value(t.value)


def render_atom(a: Atom) -> str:
    s = f"{a.rel}({', '.join(_term(t) for t in a.args)})"
    if a.node is not None:
        s += f"@{a.node.name}"
    return s


def render_constraint(c) -> str:
    lhs = [render_atom(a) for a in c.body]
    lhs += [f"{_term(x.left)} {x.op.value} {_term(x.right)}" for x in c.comparisons]
    if isinstance(c, Tgd):
        rhs = ", ".join(render_atom(a) for a in c.head)
    else:
        rhs = f"{c.left.name} = {c.right.name}"
    return f"{', '.join(lhs)} -> {rhs}." if lhs else f"-> {rhs}."


def render_fact(f: Fact) -> str:
    return f"{f.rel}({', '.join(format_value(v) for v in f.args)})"


def render_facts(facts) -> str:
    return " ".join(render_fact(f) for f in sorted(facts, key=fact_key))


def render(x) -> str:
    if isinstance(x, ConstraintSet):
        lines = []
        if x.schema:
            lines.append("schema " + ", ".join(f"{r}/{k}" for r, k in x.schema.items()) + ".")
        lines += [render_constraint(c) for c in x.constraints]
        return "\n".join(lines)
    if isinstance(x, (Tgd, Egd)):
        return render_constraint(x)
    if isinstance(x, DistributedInstance):
        def block(fs):
            body = render_facts(fs)
            return "{ " + body + " }" if body else "{}"
        parts = [f"global {block(x.global_facts)}"]
        if x.local:
            inner = "\n".join(f"  {k} {block(fs)}" for k, fs in x.local.items())
            parts.append("local {\n" + inner + "\n}")
        else:
            parts.append("local {}")
        return " ".join(parts) if not x.local else parts[0] + "\n" + parts[1]
    if isinstance(x, Query):
        head = f"{x.head.rel}({', '.join(_term(t) for t in x.head.args)})"
        return f"{head} <- {', '.join(render_atom(a) for a in x.body)}."
    raise TypeError(f"cannot render {type(x).__name__}")
