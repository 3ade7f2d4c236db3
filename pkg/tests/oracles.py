"""Brute-force oracles shared by the test suites.

Everything here is deliberately naive: exhaustive searches over graded functions,
written without reusing the production algorithms they check.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from rdcpx.corpus import enumerate_atoms, enumerate_molecules
from rdcpx.morphism import (
    SclMorphism,
    compose_scl,
    enumerate_comaps,
    enumerate_maps,
    is_local_embedding,
    is_map,
)
from rdcpx.ogposet import GradedFunction, OgPoset

CORPUS_SIZE = 13
CORPUS_DIM = 3


@lru_cache(maxsize=None)
def corpus_molecules():
    return tuple(enumerate_molecules(CORPUS_SIZE, CORPUS_DIM))


@lru_cache(maxsize=None)
def corpus_atoms():
    return tuple(enumerate_atoms(CORPUS_SIZE, CORPUS_DIM))


def simplex_vertex_sets(P: OgPoset) -> tuple[list, list]:
    """Vertex sets of the j-elements of P, against every (j+1)-subset of its vertices.

    In an oriented simplex the j-elements are in bijection with (j+1)-subsets of the
    vertices, each element lying over exactly its own subset.
    """
    verts = sorted(x for x in P.elements() if x[0] == 0)
    got = [sorted(sorted(y for y in P.down(x) if y[0] == 0) for x in P.elements() if x[0] == j) for j in range(P.dim + 1)]
    want = [sorted(list(c) for c in itertools.combinations(verts, j + 1)) for j in range(P.dim + 1)]
    return got, want


def count_loop_subdivision_cells(bound: int) -> int:
    """Arrow-shaped merge cells over the one-vertex loop, counted by brute force.

    Every diagram over the loop is constant, so a cell is a 1-molecule D with at most
    ``bound`` elements plus a subdivision comap D -> arrow, counted up to isomorphism.
    All functions D -> arrow are tried.
    """
    from rdcpx.molecule import arrow
    from rdcpx.morphism import is_comap
    from rdcpx.ogposet import canonical_form

    A = arrow().carrier
    targets = sorted(A.elements())
    seen = set()
    for cert in corpus_molecules():
        D = cert.carrier
        if D.dim != 1 or len(D) > bound:
            continue
        elems = sorted(D.elements())
        for values in itertools.product(targets, repeat=len(elems)):
            mp = dict(zip(elems, values))
            if set(values) != set(targets) or any(mp[x][0] < x[0] for x in elems):
                continue
            c = GradedFunction(D, A, mp)
            if is_comap(c):
                seen.add(canonical_form(D, mp)[0])
    return len(seen)


def all_maps(P: OgPoset, Q: OgPoset) -> list[GradedFunction]:
    out = []
    for mp in enumerate_maps(P, Q):
        f = GradedFunction(P, Q, mp)
        if is_map(f):
            out.append(f)
    return out


def embedding_cocone_check(iota, iota2, R, j, j2, tests) -> tuple[int, int]:
    """For each test object Z and each cocone (a, b) into Z, count mediating maps R -> Z.

    Returns (cocones seen, cocones without exactly one mediator).
    """
    seen = bad = 0
    for Z in tests:
        maps_a = all_maps(iota.target, Z)
        maps_b = all_maps(iota2.target, Z)
        maps_h = all_maps(R, Z)
        for a in maps_a:
            for b in maps_b:
                if any(a(iota(u)) != b(iota2(u)) for u in iota.source.elements()):
                    continue
                seen += 1
                hits = sum(
                    1
                    for h in maps_h
                    if all(h(j(x)) == a(x) for x in iota.target.elements())
                    and all(h(j2(x)) == b(x) for x in iota2.target.elements())
                )
                if hits != 1:
                    bad += 1
    return seen, bad


@lru_cache(maxsize=None)
def _comaps(M: OgPoset, A: OgPoset) -> tuple:
    return tuple(enumerate_comaps(M, A))


@lru_cache(maxsize=None)
def _local_embeddings(M: OgPoset, Z: OgPoset) -> tuple:
    embs = (GradedFunction(M, Z, mp) for mp in enumerate_maps(M, Z))
    return tuple(e for e in embs if is_local_embedding(e) and is_map(e))


def sl_morphisms(A: OgPoset, Z: OgPoset, middles) -> list[SclMorphism]:
    """Subdivisions of A followed by local embeddings into Z, with middle among ``middles``."""
    out: dict = {}
    for M in middles:
        if len(M) < len(A) or M.dim != A.dim:
            continue
        subs = _comaps(M, A)
        if not subs:
            continue
        for s, e in itertools.product(subs, _local_embeddings(M, Z)):
            m = SclMorphism(s, e)
            out.setdefault(m.canonical_key(), m)
    return list(out.values())


def comerger_cocone_check(iota, s, R, t, j, tests, middles) -> tuple[int, int]:
    """Cocones under (iota, s) in subdivisions-then-local-embeddings, against the emitted square.

    ``s`` is the comap V -> cl{x}; ``t`` the comap R -> P; ``j`` the embedding V -> R.
    """
    S_iota = SclMorphism(GradedFunction.identity(iota.source), iota)
    S_s = SclMorphism.of_subdivision(s)
    S_t = SclMorphism.of_subdivision(t)
    S_j = SclMorphism(GradedFunction.identity(j.source), j)
    P, V = iota.target, s.source
    seen = bad = 0
    for Z in tests:
        legs_a = sl_morphisms(P, Z, middles)
        legs_b = sl_morphisms(V, Z, middles)
        legs_h = sl_morphisms(R, Z, middles)
        for a in legs_a:
            left = compose_scl(a, S_iota)
            for b in legs_b:
                if compose_scl(b, S_s) != left:
                    continue
                seen += 1
                hits = sum(1 for h in legs_h if compose_scl(h, S_t) == a and compose_scl(h, S_j) == b)
                if hits != 1:
                    bad += 1
    return seen, bad
