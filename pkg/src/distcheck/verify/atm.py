"""Alternating Turing machines on a marked tape, a direct simulator, and the
implication instance whose chase mimics the machine.

The tape has n+2 cells; cells 0 and n+1 carry the end markers (the first and
last alphabet symbols), which transitions must rewrite unchanged while moving
inwards.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..core.syntax import Atom, ConstraintSet, NodeVar, Tgd, Var
from ..errors import DistcheckError, StateSpaceCap, WordAlphabetMismatch

LEFT, RIGHT = "L", "R"


@dataclass(frozen=True)
class Atm:
    states: tuple
    alphabet: tuple
    # (j, state, symbol) -> (state, symbol, move) for j in {1, 2}
    delta: dict = field(hash=False, compare=True)
    initial: str = "q0"
    accepting: frozenset = frozenset()
    universal: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "universal", frozenset(self.universal))
        if len(set(self.states)) != len(self.states) or not self.states:
            raise DistcheckError("states must be distinct and non-empty")
        if len(set(self.alphabet)) != len(self.alphabet) or len(self.alphabet) < 2:
            raise DistcheckError("the alphabet needs two distinct end markers")
        if self.initial not in self.states:
            raise DistcheckError(f"initial state {self.initial} is not a state")
        if self.initial in self.accepting:
            raise DistcheckError("the initial state must not be accepting")
        for q in self.accepting | self.universal:
            if q not in self.states:
                raise DistcheckError(f"unknown state {q}")
        lm, rm = self.alphabet[0], self.alphabet[-1]
        for j in (1, 2):
            for q in self.states:
                for a in self.alphabet:
                    key = (j, q, a)
                    if key not in self.delta:
                        raise DistcheckError(f"delta{j}({q}, {a}) is missing")
                    q2, b, mv = self.delta[key]
                    if q2 not in self.states or b not in self.alphabet or mv not in (LEFT, RIGHT):
                        raise DistcheckError(f"delta{j}({q}, {a}) is malformed")
                    if a == lm and (b != lm or mv != RIGHT):
                        raise DistcheckError(f"delta{j}({q}, {a}) must keep the left marker and move right")
                    if a == rm and (b != rm or mv != LEFT):
                        raise DistcheckError(f"delta{j}({q}, {a}) must keep the right marker and move left")
                    if a not in (lm, rm) and b in (lm, rm):
                        raise DistcheckError(f"delta{j}({q}, {a}) writes an end marker")
        if len(self.delta) != 2 * len(self.states) * len(self.alphabet):
            raise DistcheckError("delta has entries outside states x alphabet")

    @property
    def t(self) -> int:
        return len(self.alphabet)

    def step(self, j: int, config: tuple) -> tuple:
        q, p, tape = config
        q2, b, mv = self.delta[(j, q, tape[p])]
        tape = tape[:p] + (b,) + tape[p + 1:]
        return q2, p + (1 if mv == RIGHT else -1), tape


def _check_word(m: Atm, w) -> tuple:
    w = tuple(w)
    inner = set(m.alphabet[1:-1])
    for a in w:
        if a not in inner:
            raise WordAlphabetMismatch(f"symbol {a!r} is not an input symbol of the machine")
    return w


def simulate_atm(m: Atm, w, cap: int = 1_000_000) -> bool:
    """Least fixpoint of acceptance over all configurations with |w| inner cells."""
    w = _check_word(m, w)
    n = len(w)
    lm, rm = m.alphabet[0], m.alphabet[-1]
    size = len(m.states) * (n + 2) * m.t ** n
    if size > cap:
        raise StateSpaceCap(f"{size} configurations exceed the cap of {cap}")
    configs = [(q, p, (lm,) + u + (rm,)) for q in m.states for p in range(n + 2)
               for u in itertools.product(m.alphabet, repeat=n)]
    acc = {c for c in configs if c[0] in m.accepting}
    changed = True
    while changed:
        changed = False
        for c in configs:
            if c in acc:
                continue
            s1, s2 = m.step(1, c), m.step(2, c)
            if (c[0] in m.universal and s1 in acc and s2 in acc) or \
                    (c[0] not in m.universal and (s1 in acc or s2 in acc)):
                acc.add(c)
                changed = True
    return (m.initial, 0, (lm,) + w + (rm,)) in acc


# -- the implication instance -------------------------------------------------

KAPPA, MU = NodeVar("k"), NodeVar("m")


def _rel_state(q: str) -> str:
    return f"State_{q}"


def _config_atoms(m: Atm, q: str, p: int, n: int, xs, ys, zs, node: NodeVar, sym_at: dict | None = None):
    """State, head and tape atoms of a configuration; sym_at overrides cell variables."""
    cells = {0: ys[0], n + 1: ys[-1]}
    for i in range(1, n + 1):
        cells[i] = zs[i - 1]
    cells.update(sym_at or {})
    out = [Atom(_rel_state(q), (), node), Atom("Head", (xs[p],), node)]
    for i in sorted(cells):
        out.append(Atom("Sym", (xs[i], cells[i]), node))
    return out


def gen_atm_instance(m: Atm, w) -> tuple[ConstraintSet, Tgd]:
    """Sigma and tau with Sigma |= tau exactly when m accepts w."""
    w = _check_word(m, w)
    n, t = len(w), m.t
    xs = [Var(f"x{i}") for i in range(n + 2)]
    ys = [Var(f"y{r}") for r in range(1, t + 1)]
    zs = [Var(f"z{i}") for i in range(1, n + 1)]
    u = Var("u")
    succ = [Atom("Succ", (xs[i], xs[i + 1])) for i in range(n + 1)]
    sym_index = {a: r for r, a in enumerate(m.alphabet, 1)}

    out = []
    # node generators, one per state and head position
    gen_body = succ + [Atom("Alph_1", (ys[0],)), Atom(f"Alph_{t}", (ys[-1],))] + [Atom("Alph", (z,)) for z in zs]
    for q in m.states:
        for p in range(n + 2):
            head = _config_atoms(m, q, p, n, xs, ys, zs, KAPPA)
            if q in m.accepting:
                head.append(Atom("Acc", (), KAPPA))
            out.append(Tgd(gen_body, (), head))
    # successor collectors
    for q in m.states:
        for a in m.alphabet:
            r = sym_index[a]
            for j in (1, 2):
                q2, b, mv = m.delta[(j, q, a)]
                s = sym_index[b]
                for p in range(n + 2):
                    p2 = p + (1 if mv == RIGHT else -1)
                    if not 0 <= p2 <= n + 1:
                        continue
                    if p in (0, n + 1):
                        # marker cell: only the marker itself is read, and written back
                        if (p == 0 and r != 1) or (p == n + 1 and r != t):
                            continue
                        body = succ + _config_atoms(m, q, p, n, xs, ys, zs, KAPPA) \
                            + _config_atoms(m, q2, p2, n, xs, ys, zs, MU) + [Atom("Acc", (), MU)]
                    else:
                        body = succ + [Atom(f"Alph_{r}", (zs[p - 1],)), Atom(f"Alph_{s}", (u,))] \
                            + _config_atoms(m, q, p, n, xs, ys, zs, KAPPA) \
                            + _config_atoms(m, q2, p2, n, xs, ys, zs, MU, {p: u}) + [Atom("Acc", (), MU)]
                    out.append(Tgd(body, (), [Atom(f"Acc_{j}", (), KAPPA)]))
    # acceptance
    for q in m.states:
        st = Atom(_rel_state(q), (), KAPPA)
        acc = Atom("Acc", (), KAPPA)
        if q in m.universal:
            out.append(Tgd([st, Atom("Acc_1", (), KAPPA), Atom("Acc_2", (), KAPPA)], (), [acc]))
        else:
            out.append(Tgd([st, Atom("Acc_1", (), KAPPA)], (), [acc]))
            out.append(Tgd([st, Atom("Acc_2", (), KAPPA)], (), [acc]))

    alph = []
    for r, y in enumerate(ys, 1):
        alph += [Atom(f"Alph_{r}", (y,)), Atom("Alph", (y,))]
    init = {i: ys[sym_index[a] - 1] for i, a in enumerate(w, 1)}
    c0 = _config_atoms(m, m.initial, 0, n, xs, ys, zs, KAPPA, init)
    c0 = [a for a in c0 if all(v not in zs for v in a.args)]
    tau = Tgd(succ + alph + c0, (), [Atom("Acc", (), KAPPA)])

    schema = {"Succ": 2, "Alph": 1, "Sym": 2, "Head": 1, "Acc": 0, "Acc_1": 0, "Acc_2": 0}
    for r in range(1, t + 1):
        schema[f"Alph_{r}"] = 1
    for q in m.states:
        schema[_rel_state(q)] = 0
    return ConstraintSet(schema, out), tau


# -- .atm files -------------------------------------------------------------------

def parse_atm(text: str) -> Atm:
    """Line format:

        states q0 q1 h
        universal q1
        accepting h
        initial q0
        alphabet < a >
        delta 1 q0 a -> h a R

    `#` starts a comment. The first and last alphabet symbols are the markers.
    """
    fields: dict = {"universal": [], "accepting": []}
    delta = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        key, rest = line[0], line[1:]
        if key == "delta":
            if len(rest) != 7 or rest[3] != "->" or rest[0] not in ("1", "2"):
                raise DistcheckError(f"line {lineno}: expected `delta <1|2> q a -> q' b <L|R>`")
            j, q, a, _, q2, b, mv = rest
            if (int(j), q, a) in delta:
                raise DistcheckError(f"line {lineno}: duplicate transition")
            delta[(int(j), q, a)] = (q2, b, mv)
        elif key in ("states", "alphabet", "universal", "accepting"):
            fields[key] = rest
        elif key == "initial" and len(rest) == 1:
            fields[key] = rest[0]
        else:
            raise DistcheckError(f"line {lineno}: unknown declaration {key!r}")
    for key in ("states", "alphabet", "initial"):
        if key not in fields:
            raise DistcheckError(f"missing `{key}` declaration")
    return Atm(fields["states"], fields["alphabet"], delta, fields["initial"],
               frozenset(fields["accepting"]), frozenset(fields["universal"]))


def render_atm(m: Atm) -> str:
    lines = [f"states {' '.join(m.states)}"]
    if m.universal:
        lines.append(f"universal {' '.join(q for q in m.states if q in m.universal)}")
    if m.accepting:
        lines.append(f"accepting {' '.join(q for q in m.states if q in m.accepting)}")
    lines.append(f"initial {m.initial}")
    lines.append(f"alphabet {' '.join(m.alphabet)}")
    for j in (1, 2):
        for q in m.states:
            for a in m.alphabet:
                q2, b, mv = m.delta[(j, q, a)]
                lines.append(f"delta {j} {q} {a} -> {q2} {b} {mv}")
    return "\n".join(lines)
