"""Command-line front end.

Exit codes: 0 positive verdict or success, 1 negative verdict, 2 usage or
input error, 3 fragment or consistency error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import classifier, pc, schemes
from .chase import Mode, NodeSemantics, run_chase
from .core.instance import fact_key
from .core.syntax import Domain
from .errors import ConsistencyError, DistcheckError, FragmentError, NotDataFull
from .implication import decide_implication
from .parser import (
    parse_constraints,
    parse_facts,
    parse_instance,
    parse_query,
    render,
    render_constraint,
    render_fact,
    render_facts,
    tokenize,
)

OK, NEGATIVE, INPUT_ERROR, FRAGMENT_ERROR = 0, 1, 2, 3


def _read(path: str) -> tuple[str, str]:
    if path == "-":
        return sys.stdin.read(), "<stdin>"
    try:
        return Path(path).read_text(), path
    except OSError as e:
        raise DistcheckError(f"cannot read {path}: {e.strerror}") from None


def _constraints(path: str, domain: Domain):
    text, name = _read(path)
    return parse_constraints(text, domain, name)


def _instance(path: str, domain: Domain):
    text, name = _read(path)
    toks = tokenize(text, name)
    if toks[0].kind == "eof" or toks[0].text in ("global", "local"):
        return parse_instance(text, domain, name)
    from .core.instance import DistributedInstance
    return DistributedInstance(parse_facts(text, domain, name))


def _query(path: str, domain: Domain):
    text, name = _read(path)
    return parse_query(text, domain, name)


def _kv(out, pairs):
    for k, v in pairs:
        out.write(f"{k}={v}\n")


def _step_line(n: int, s) -> str:
    head = f"step {n}: rule {s.source + 1}"
    if s.index != s.source:
        head += f" (piece {s.index + 1})"
    head += f" {s.valuation!r}"
    if s.failure:
        return head + " => FAIL"
    if s.merge is not None:
        return head + f" => merge node {s.merge[1]} into {s.merge[0]}"
    if s.value_merge is not None:
        return head + f" => replace value {s.value_merge[1]} by {s.value_merge[0]}"
    facts = ", ".join(render_fact(f) + ("" if node is None else f"@{node}") for f, node in s.produced)
    return head + f" => {facts}"


# -- subcommands ------------------------------------------------------------------

def cmd_classify(a, out) -> int:
    sigma = _constraints(a.sigma, a.domain)
    rep = classifier.fragment_report(sigma, a.b)
    if a.format == "kv":
        _kv(out, rep.kv())
        return OK
    out.write(f"data-full: {'yes' if rep.data_full else 'no'}\n")
    out.write(f"max arity: {rep.alpha}\n")
    out.write(f"context bound: {'n/a' if rep.b is None else rep.b}\n")
    for frag in ("Tbg", "Tbd", "Twbd", "Ebd"):
        v = rep.min_b.get(frag, classifier.INF)
        out.write(f"least bound for {frag}: {'none' if v == classifier.INF else v}\n")
    out.write(f"comparisons: {'yes' if rep.comparisons else 'no'}\n")
    for r in rep.constraints:
        out.write(f"constraint {r.index + 1}: {render_constraint(r.constraint)}\n")
        if not r.data_full:
            out.write("  not data-full\n")
            continue
        for piece, kt, tt in r.pieces:
            tags = ",".join(sorted(tt.tags)) or "-"
            forms = ",".join(sorted(kt.forms)) or "-"
            line = f"  {kt.kind.value}; tags {tags}; forms {forms}"
            if len(r.pieces) > 1:
                line = f"  piece {render_constraint(piece)}\n  " + line.lstrip()
            out.write(line + "\n")
    out.write(f"verdict: {rep.verdict_label}\n")
    return OK


def cmd_chase(a, out) -> int:
    sigma = _constraints(a.sigma, a.domain)
    d = _instance(a.instance, a.domain)
    trace = run_chase(d, sigma, Mode(a.mode), node_semantics=NodeSemantics(a.degd_node_semantics))
    for i, s in enumerate(trace.steps, 1):
        out.write(_step_line(i, s) + "\n")
    out.write(f"outcome: {trace.outcome}\n")
    out.write(render(trace.final) + "\n")
    return OK if trace.success else NEGATIVE


def _verdict_out(a, out, v, positive: str, negative: str) -> int:
    if a.format == "kv":
        pairs = [("verdict", positive if v.holds else negative)]
        if not v.holds:
            pairs.append(("witness", repr(v.witness)))
            pairs.append(("countermodel", render(v.countermodel).replace("\n", " ")))
        if a.stats:
            pairs += [(f"stats.{k}", str(x)) for k, x in v.stats.as_dict().items()]
        _kv(out, pairs)
    else:
        out.write((positive if v.holds else negative) + "\n")
        if not v.holds:
            out.write(f"witness: {v.witness!r}\n")
            out.write(render(v.countermodel) + "\n")
        if a.stats:
            out.write("stats: " + " ".join(f"{k}={x}" for k, x in v.stats.as_dict().items()) + "\n")
    if a.trace and v.trace is not None:
        for i, s in enumerate(v.trace.steps, 1):
            out.write(_step_line(i, s) + "\n")
    return OK if v.holds else NEGATIVE


def _decide_kw(a) -> dict:
    # traces are only kept by the sequential path
    return dict(mode=a.mode, jobs=1 if a.trace else a.jobs,
                node_semantics=NodeSemantics(a.degd_node_semantics))


def cmd_implies(a, out) -> int:
    sigma = _constraints(a.sigma, a.domain)
    tau = _constraints(a.tau, a.domain)
    if len(tau) != 1:
        raise DistcheckError(f"{a.tau}: expected exactly one constraint, found {len(tau)}")
    v = decide_implication(sigma, tau[0], a.domain, **_decide_kw(a))
    return _verdict_out(a, out, v, "HOLDS", "REFUTED")


def cmd_pc(a, out) -> int:
    q = _query(a.query, a.domain)
    sigma = _constraints(a.sigma, a.domain)
    v = pc.pc_wrt_constraints(q, sigma, a.domain, a.strong, **_decide_kw(a))
    word = "STRONGLY PARALLEL-CORRECT" if a.strong else "PARALLEL-CORRECT"
    return _verdict_out(a, out, v, word, "NOT " + word)


def cmd_certain(a, out) -> int:
    q = _query(a.query, a.domain)
    d = _instance(a.instance, a.domain)
    sigma = _constraints(a.sigma, a.domain)
    res = pc.certain_answers(q, d.global_facts, sigma, a.domain)
    if res is pc.Inconsistent:
        out.write("INCONSISTENT\n")
        return NEGATIVE
    for f in sorted(res, key=fact_key):
        out.write(render_fact(f) + "\n")
    return OK


def cmd_eval(a, out) -> int:
    q = _query(a.query, a.domain)
    d = _instance(a.instance, a.domain)
    full = pc.eval_cq(q, d.global_facts)
    naive = pc.naive_eval(q, d)
    out.write(f"global: {render_facts(full)}\n")
    out.write(f"naive: {render_facts(naive)}\n")
    missing = full - naive
    out.write(f"parallel-correct: {'yes' if not missing else 'no'}\n")
    if missing:
        out.write(f"missing: {render_facts(missing)}\n")
    return OK if not missing else NEGATIVE


def _relspec(text: str) -> tuple[str, int]:
    rel, _, ar = text.partition("/")
    if not rel or not ar.isdigit():
        raise DistcheckError(f"expected REL/ARITY, got {text!r}")
    return rel, int(ar)


def _positions(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace("+", ",").split(",") if x.strip()]
    except ValueError:
        raise DistcheckError(f"expected comma-separated positions, got {text!r}") from None


def cmd_scheme(a, out) -> int:
    k = a.kind
    if k == "nonskip":
        schema = dict(_relspec(x.strip()) for x in a.schema.split(",") if x.strip())
        cs = schemes.gen_non_skipping(schema)
    elif k == "hash":
        rel, ar = _relspec(a.rel)
        cs = schemes.gen_hash_partition(rel, ar, _positions(a.keys))
    elif k == "range":
        rel, ar = _relspec(a.rel)
        cs = schemes.gen_range_partition(rel, ar, a.key, a.range)
    elif k == "copart":
        cs = schemes.gen_copartition(schemes.CoPartitionSpec.parse(a.chain))
    else:
        text = a.query
        if Path(text).is_file():
            text = Path(text).read_text()
        q = parse_query(text, a.domain)
        dims = [x.strip() for x in a.dims.split(",") if x.strip()]
        cs = schemes.gen_hypercube(schemes.HypercubeSpec.from_variables(q, dims, dom=a.dom, cell=a.cell))
    out.write(render(cs) + "\n")
    return OK


def _word(text: str, alphabet) -> list[str]:
    if text in ("", "-", "eps"):
        return []
    if "," in text or " " in text:
        return [x for x in text.replace(",", " ").split() if x]
    if text in alphabet:
        return [text]
    return list(text)


def cmd_hardgen(a, out) -> int:
    from .verify.atm import gen_atm_instance, parse_atm
    text, _ = _read(a.machine)
    m = parse_atm(text)
    sigma, tau = gen_atm_instance(m, _word(a.word, m.alphabet))
    s_text, t_text = render(sigma) + "\n", render(tau) + "\n"
    if a.output:
        Path(f"{a.output}_sigma.dc").write_text(s_text)
        Path(f"{a.output}_tau.dc").write_text(t_text)
        return OK
    out.write("# sigma\n" + s_text + "# tau\n" + t_text)
    return OK


# -- parser -------------------------------------------------------------------------

def _domain(text: str) -> Domain:
    try:
        return Domain.parse(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown domain {text!r} (nat, int or rat)") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="distcheck", description="Reason about distribution constraints.")
    p.add_argument("--version", action="version", version="%(prog)s 0.1.0")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, decide=False):
        sp.add_argument("--domain", type=_domain, default=Domain.RAT, help="nat, int or rat (default rat)")
        sp.add_argument("--format", choices=("text", "kv"), default="text")
        if decide:
            sp.add_argument("--mode", choices=("auto", "enumerate", "single"), default="auto")
            sp.add_argument("--jobs", type=int, default=1)
            sp.add_argument("--stats", action="store_true")
            sp.add_argument("--trace", action="store_true", help="print the chase of the countermodel")
            sp.add_argument("--degd-node-semantics", choices=("merge", "fail"), default="merge")

    sp = sub.add_parser("classify", help="kind, type tags and complexity verdict")
    sp.add_argument("sigma")
    sp.add_argument("--b", type=int, default=None, help="context bound (default: least bound with a Pi2 verdict)")
    common(sp)
    sp.set_defaults(run=cmd_classify)

    sp = sub.add_parser("chase", help="chase an instance")
    sp.add_argument("sigma")
    sp.add_argument("instance")
    sp.add_argument("--mode", choices=("strict", "identify"), default="strict")
    sp.add_argument("--trace", action="store_true", help="accepted for symmetry; steps are always printed")
    sp.add_argument("--degd-node-semantics", choices=("merge", "fail"), default="merge")
    common(sp)
    sp.set_defaults(run=cmd_chase)

    sp = sub.add_parser("implies", help="decide whether sigma implies tau")
    sp.add_argument("sigma")
    sp.add_argument("tau")
    common(sp, decide=True)
    sp.set_defaults(run=cmd_implies)

    sp = sub.add_parser("pc", help="parallel-correctness under constraints")
    sp.add_argument("query")
    sp.add_argument("sigma")
    sp.add_argument("--strong", action="store_true")
    common(sp, decide=True)
    sp.set_defaults(run=cmd_pc)

    sp = sub.add_parser("certain", help="certain answers of a query")
    sp.add_argument("query")
    sp.add_argument("instance")
    sp.add_argument("sigma")
    common(sp)
    sp.set_defaults(run=cmd_certain)

    sp = sub.add_parser("eval", help="global and naive evaluation of a query on an instance")
    sp.add_argument("query")
    sp.add_argument("instance")
    common(sp)
    sp.set_defaults(run=cmd_eval)

    sp = sub.add_parser("scheme", help="generate a partitioning scheme")
    sp.add_argument("kind", choices=("nonskip", "hash", "range", "copart", "hypercube"))
    sp.add_argument("--schema", default="", help="nonskip: R/2,S/1")
    sp.add_argument("--rel", default="", help="hash, range: REL/ARITY")
    sp.add_argument("--keys", default="1", help="hash: key positions, e.g. 1,3")
    sp.add_argument("--key", type=int, default=1, help="range: position compared with the bounds")
    sp.add_argument("--range", default="Range", help="range: binary range relation")
    sp.add_argument("--chain", default="", help="copart: Lineitem/2:1 > Orders/2:2=1 > Customer/2:2=1")
    sp.add_argument("--query", default="", help="hypercube: query text or .cq file")
    sp.add_argument("--dims", default="", help="hypercube: hashed variables, e.g. x,y")
    sp.add_argument("--dom", default="Dom")
    sp.add_argument("--cell", default="H")
    common(sp)
    sp.set_defaults(run=cmd_scheme)

    sp = sub.add_parser("hardgen", help="implication instance simulating an alternating machine")
    sp.add_argument("machine")
    sp.add_argument("word", nargs="?", default="")
    sp.add_argument("-o", "--output", default=None, help="write PREFIX_sigma.dc and PREFIX_tau.dc")
    common(sp)
    sp.set_defaults(run=cmd_hardgen)
    return p


def _required(a) -> None:
    need = {"hash": ("rel",), "range": ("rel",), "copart": ("chain",), "hypercube": ("query", "dims"),
            "nonskip": ("schema",)}
    if a.command == "scheme":
        for f in need[a.kind]:
            if not getattr(a, f):
                raise DistcheckError(f"scheme {a.kind} needs --{f}")


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _required(a)
        return a.run(a, out)
    except (FragmentError, NotDataFull, ConsistencyError) as e:
        err.write(f"{_where(e)}error: {e.message}\n")
        return FRAGMENT_ERROR
    except DistcheckError as e:
        err.write(f"{_where(e)}error: {e.message}\n")
        return INPUT_ERROR
    except (ValueError, TypeError) as e:
        err.write(f"error: {e}\n")
        return INPUT_ERROR


def _where(e: DistcheckError) -> str:
    return f"{e.span}: " if e.span is not None else ""


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
