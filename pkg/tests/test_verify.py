"""Bounded-model oracle, satisfaction kernels and alternating machines."""

import itertools
import random
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import randgen
from distcheck.core import DistributedInstance, Fact, model_check
from distcheck.errors import BudgetExceeded, DistcheckError, StateSpaceCap, WordAlphabetMismatch
from distcheck.implication import decide_implication
from distcheck.parser import parse_constraints
from distcheck.verify import (
    Atm, backend, brute_force_refute, fact_universe, gen_atm_instance, models_of, pack_constraints, parse_atm,
    render_atm, satisfies_all, simulate_atm,
)
from distcheck.verify import _kernels
from distcheck.verify.oracle import local_batches

FIX = Path(__file__).parent / "fixtures"


def load(name):
    return parse_constraints((FIX / name).read_text())


def one(text):
    return parse_constraints(text)[0]


# -- oracle ------------------------------------------------------------------------

def test_oracle_refutes_partial_range():
    partial, tau = load("range_sigma_partial.dc"), load("range_tau.dc")
    cm = brute_force_refute(partial, tau, [0, 1, 2], 2)
    assert cm is not None
    assert model_check(cm, partial).ok and not model_check(cm, tau).ok


def test_oracle_tau_in_sigma():
    tau = one("R(x) -> R(x)@k.")
    assert brute_force_refute([tau], tau, [0, 1, 2], 2) is None


def test_oracle_empty_sigma():
    cm = brute_force_refute([], one("R(x) -> S(x)."), [0], 1)
    assert cm.global_facts == {Fact.of("R", 0)}


def test_oracle_budget():
    with pytest.raises(BudgetExceeded):
        brute_force_refute([], one("R(x, y, z) -> S(x)."), range(4), 1)
    with pytest.raises(BudgetExceeded):
        brute_force_refute([one("R(x) -> R(x)@k.")], one("R(x) -> R(x)@k."), [0, 1, 2], 3, cap=10)


def test_models_of_counts_layouts():
    # one fact, up to two nodes: layouts (), (f), (f, f); non-skipping rules out ()
    f = Fact.of("R", 0)
    sigma = [one("R(x) -> R(x)@k.")]
    n = sum(len(locs) for _, locs in models_of(sigma, [f], 2))
    assert n == 2


def test_local_batches_are_multisets():
    rows = np.concatenate(list(local_batches(0b11, 2)))
    assert len(rows) == 1 + 3 + 6
    used = [tuple(int(m) for m in r if m) for r in rows]
    assert all(u == tuple(sorted(u)) for u in used) and len(set(used)) == len(used)


# -- kernels -----------------------------------------------------------------------

SIGMAS = [
    "R(x) -> R(x)@k. R(x)@k, S(x) -> S(x)@k.",
    "R(x)@k, R(x)@m -> k = m. S(x), x < 1 -> S(x)@k.",
    "R(x)@k, S(x)@m -> R(x)@n, S(x)@n. S(x), S(y) -> x = y.",
    "R(x)@k -> S(x)@k, R(x). S(0) -> R(1)@k.",
]


@pytest.mark.parametrize("text", SIGMAS)
def test_backends_agree_with_model_check(text):
    sigma = list(parse_constraints(text))
    values = [0, 1]
    universe = fact_universe({"R": 1, "S": 1}, values)
    p = pack_constraints(sigma, universe, values)
    for size in range(len(universe) + 1):
        for combo in itertools.combinations(range(len(universe)), size):
            g = sum(1 << i for i in combo)
            for locs in local_batches(g, 2):
                a = _kernels.satisfied(g, locs, p, "numba")
                b = _kernels.satisfied(g, locs, p, "numpy")
                assert np.array_equal(a, b)
                for row, ok in zip(locs, a):
                    facts = lambda m: {universe[i] for i in range(len(universe)) if (m >> i) & 1}  # noqa: E731
                    d = DistributedInstance(facts(g), {n: facts(int(m)) for n, m in enumerate(row) if m})
                    assert bool(ok) == model_check(d, sigma).ok


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_satisfies_all_matches_model_check(seed):
    rng = random.Random(seed)
    schema = {"P": 1, "R": 2}
    sigma = randgen.rand_sigma(rng, schema, rng.randint(1, 3), comparisons=True, consts=(0, 1), p_egd=0.3)
    d = randgen.rand_instance(rng, schema, [0, 1, 2])
    want = model_check(d, sigma).ok
    assert satisfies_all(sigma, d, "numba") == want
    assert satisfies_all(sigma, d, "numpy") == want


def test_env_flag_selects_numpy():
    code = "from distcheck.verify import backend; print(backend())"
    env = {"DISTCHECK_NO_NUMBA": "1", "PATH": "/usr/bin:/bin"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True).stdout
    assert out.strip() == "numpy"
    assert backend() in ("numba", "numpy")


# -- alternating machines ------------------------------------------------------------

def bounce(states, alphabet, moves):
    """Markers bounce back; moves gives (j, q, a) entries, the rest move right in place."""
    delta = {}
    rm = alphabet[-1]
    for j in (1, 2):
        for q in states:
            for a in alphabet:
                delta[(j, q, a)] = (q, a, "L") if a == rm else (q, a, "R")
    delta.update(moves)
    return delta


def test_fixture_machine_accepts_a():
    m = parse_atm((FIX / "accept_a.atm").read_text())
    assert simulate_atm(m, ["a"])
    s, t = gen_atm_instance(m, ["a"])
    assert decide_implication(s, t).holds


def test_no_accepting_state_rejects():
    states, alph = ("q0", "q1"), ("<", "a", ">")
    m = Atm(states, alph, bounce(states, alph, {(1, "q0", "a"): ("q1", "a", "R")}), "q0")
    assert not simulate_atm(m, ["a"])
    s, t = gen_atm_instance(m, ["a"])
    assert not decide_implication(s, t).holds


def test_universal_needs_both_branches():
    states, alph = ("q0", "r", "h"), ("<", "a", ">")
    moves = {(1, "q0", "a"): ("h", "a", "R"), (2, "q0", "a"): ("r", "a", "R")}
    uni = Atm(states, alph, bounce(states, alph, moves), "q0", {"h"}, {"q0"})
    ex = Atm(states, alph, bounce(states, alph, moves), "q0", {"h"})
    # q0 reads the left marker first; the first inner cell decides
    assert not simulate_atm(uni, ["a"]) and simulate_atm(ex, ["a"])
    for m, want in ((uni, False), (ex, True)):
        s, t = gen_atm_instance(m, ["a"])
        assert decide_implication(s, t).holds is want


def test_word_alphabet():
    m = parse_atm((FIX / "accept_a.atm").read_text())
    with pytest.raises(WordAlphabetMismatch):
        simulate_atm(m, ["b"])
    with pytest.raises(StateSpaceCap):
        simulate_atm(m, ["a"] * 12, cap=1000)


def test_atm_validation():
    states, alph = ("q0",), ("<", "a", ">")
    bad = bounce(states, alph, {(1, "q0", "<"): ("q0", "<", "L")})
    with pytest.raises(DistcheckError):
        Atm(states, alph, bad, "q0")
    with pytest.raises(DistcheckError):
        Atm(states, alph, bounce(states, alph, {}), "q0", {"q0"})


def test_atm_round_trip():
    m = parse_atm((FIX / "accept_a.atm").read_text())
    assert parse_atm(render_atm(m)) == m
    with pytest.raises(DistcheckError):
        parse_atm("states q0\nfrobnicate\n")
