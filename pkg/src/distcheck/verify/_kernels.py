"""Satisfaction kernels over bitmask-encoded distributed instances.

An instance is a global mask g (int64, one bit per fact of a fixed universe)
and a row of K local masks; unused node slots hold 0. A constraint set is a
Pack of flat arrays: per constraint its groundings, per grounding the body
requirements and head alternatives, each requirement a (fact bit, node slot)
pair with slot -1 meaning the global instance.

Two interchangeable backends: numba-compiled loops that resolve each
grounding and node assignment once and then sweep the batch,
and numpy expressions vectorised over a batch of instances. Setting
DISTCHECK_NO_NUMBA=1 selects numpy.
"""

from __future__ import annotations

import os
from typing import NamedTuple

import numpy as np


class Pack(NamedTuple):
    c_ptr: np.ndarray    # constraint -> groundings
    c_nb: np.ndarray     # body node variables
    c_nh: np.ndarray     # existential head node variables
    c_eqa: np.ndarray    # node degd slots, -1 otherwise
    c_eqb: np.ndarray
    g_bptr: np.ndarray   # grounding -> body requirements
    bfact: np.ndarray
    bslot: np.ndarray
    g_aptr: np.ndarray   # grounding -> head alternatives
    a_hptr: np.ndarray   # alternative -> head requirements
    hfact: np.ndarray
    hslot: np.ndarray


def _numba_wanted() -> bool:
    return os.environ.get("DISTCHECK_NO_NUMBA", "").strip() not in ("1", "true", "yes")


# -- numpy backend ---------------------------------------------------------------

def _bits(g, locs, fact, slot, assign):
    if slot < 0:
        return np.full(locs.shape[0], bool((g >> fact) & 1))
    return ((locs[:, assign[slot]] >> fact) & 1).astype(bool)


def satisfied_numpy(g: int, locs: np.ndarray, p: Pack) -> np.ndarray:
    B, K = locs.shape
    ok = np.ones(B, dtype=bool)
    for c in range(len(p.c_nb)):
        nb, nh, ea, eb = int(p.c_nb[c]), int(p.c_nh[c]), int(p.c_eqa[c]), int(p.c_eqb[c])
        assigns = np.array(np.meshgrid(*[np.arange(K)] * nb, indexing="ij")).reshape(nb, -1).T if nb else \
            np.zeros((1, 0), dtype=np.int64)
        exts = np.array(np.meshgrid(*[np.arange(K)] * nh, indexing="ij")).reshape(nh, -1).T if nh else \
            np.zeros((1, 0), dtype=np.int64)
        for gr in range(p.c_ptr[c], p.c_ptr[c + 1]):
            for assign in assigns:
                body = ok.copy()
                for r in range(p.g_bptr[gr], p.g_bptr[gr + 1]):
                    body &= _bits(g, locs, int(p.bfact[r]), int(p.bslot[r]), assign)
                    if not body.any():
                        break
                if not body.any():
                    continue
                if ea >= 0:
                    if assign[ea] != assign[eb]:
                        ok &= ~body
                    continue
                head = np.zeros(B, dtype=bool)
                for a in range(p.g_aptr[gr], p.g_aptr[gr + 1]):
                    for ext in exts:
                        full = np.concatenate([assign, ext])
                        h = np.ones(B, dtype=bool)
                        for r in range(p.a_hptr[a], p.a_hptr[a + 1]):
                            h &= _bits(g, locs, int(p.hfact[r]), int(p.hslot[r]), full)
                        head |= h
                ok &= ~(body & ~head)
    return ok


# -- numba backend ---------------------------------------------------------------

_satisfied_nb = None


def _build_numba():
    from numba import njit

    @njit(cache=True, boundscheck=False)
    def advance(assign, lo, hi, K):
        # odometer over assign[lo:hi] in K^(hi-lo); False after the last one
        i = hi - 1
        while i >= lo:
            assign[i] += 1
            if assign[i] < K:
                return True
            assign[i] = 0
            i -= 1
        return False

    @njit(cache=True, boundscheck=False)
    def batch(g, locs, c_ptr, c_nb, c_nh, c_eqa, c_eqb, g_bptr, bfact, bslot,
              g_aptr, a_hptr, hfact, hslot):
        # Grounding and node assignment outside, instances inside. Everything
        # that does not depend on the instance (global atoms, which column a
        # node slot reads, head extensions) is resolved before the row loop.
        B, K = locs.shape
        ok = np.ones(B, dtype=np.bool_)
        assign = np.zeros(16, dtype=np.int64)
        bcol = np.empty(64, dtype=np.int64)
        bbit = np.empty(64, dtype=np.int64)
        cap = 256
        hptr = np.empty(cap + 1, dtype=np.int64)
        hcol = np.empty(cap * 8, dtype=np.int64)
        hbit = np.empty(cap * 8, dtype=np.int64)
        for c in range(c_nb.shape[0]):
            nb = c_nb[c]
            nh = c_nh[c]
            node_egd = c_eqa[c] >= 0
            for gr in range(c_ptr[c], c_ptr[c + 1]):
                live = True
                for r in range(g_bptr[gr], g_bptr[gr + 1]):
                    if bslot[r] < 0 and (g >> bfact[r]) & 1 == 0:
                        live = False
                        break
                if not live:
                    continue
                for i in range(nb):
                    assign[i] = 0
                more = True
                while more:
                    nbody = 0
                    for r in range(g_bptr[gr], g_bptr[gr + 1]):
                        if bslot[r] >= 0:
                            bcol[nbody] = assign[bslot[r]]
                            bbit[nbody] = bfact[r]
                            nbody += 1
                    skip = False
                    ncomb = 0
                    hptr[0] = 0
                    if node_egd:
                        skip = assign[c_eqa[c]] == assign[c_eqb[c]]
                    else:
                        for a in range(g_aptr[gr], g_aptr[gr + 1]):
                            for i in range(nb, nb + nh):
                                assign[i] = 0
                            ext_more = True
                            while ext_more and not skip:
                                start = hptr[ncomb]
                                n = start
                                dead = False
                                for r in range(a_hptr[a], a_hptr[a + 1]):
                                    if hslot[r] < 0:
                                        if (g >> hfact[r]) & 1 == 0:
                                            dead = True
                                            break
                                    else:
                                        if n >= hcol.shape[0]:
                                            hcol = np.concatenate((hcol, np.empty(hcol.shape[0], np.int64)))
                                            hbit = np.concatenate((hbit, np.empty(hbit.shape[0], np.int64)))
                                        hcol[n] = assign[hslot[r]]
                                        hbit[n] = hfact[r]
                                        n += 1
                                if not dead:
                                    if n == start:
                                        skip = True  # head holds on every instance
                                    else:
                                        if ncomb + 1 >= hptr.shape[0]:
                                            hptr = np.concatenate((hptr, np.empty(hptr.shape[0], np.int64)))
                                        ncomb += 1
                                        hptr[ncomb] = n
                                ext_more = advance(assign, nb, nb + nh, K) if nh > 0 else False
                    if not skip:
                        for b in range(B):
                            if not ok[b]:
                                continue
                            body = True
                            for r in range(nbody):
                                if (locs[b, bcol[r]] >> bbit[r]) & 1 == 0:
                                    body = False
                                    break
                            if not body:
                                continue
                            found = False
                            for h in range(ncomb):
                                hit = True
                                for r in range(hptr[h], hptr[h + 1]):
                                    if (locs[b, hcol[r]] >> hbit[r]) & 1 == 0:
                                        hit = False
                                        break
                                if hit:
                                    found = True
                                    break
                            if not found:
                                ok[b] = False
                    more = advance(assign, 0, nb, K) if nb > 0 else False
        return ok

    return batch


def satisfied_numba(g: int, locs: np.ndarray, p: Pack) -> np.ndarray:
    global _satisfied_nb
    if _satisfied_nb is None:
        _satisfied_nb = _build_numba()
    return _satisfied_nb(np.int64(g), locs, *p)


def backend() -> str:
    if not _numba_wanted():
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


def satisfied(g: int, locs: np.ndarray, p: Pack, which: str | None = None) -> np.ndarray:
    """Per instance in the batch: does it satisfy every constraint of the pack?"""
    which = which or backend()
    locs = np.ascontiguousarray(locs, dtype=np.int64)
    if which == "numba":
        return satisfied_numba(g, locs, p)
    return satisfied_numpy(g, locs, p)
