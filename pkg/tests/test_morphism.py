import pytest

from oracles import corpus_atoms
from rdcpx.construct import CylinderSpec, closure_embedding, gray, partial_cylinder
from rdcpx.corpus import compositor
from rdcpx.errors import DomainMismatch, NotACollapse, NotLocalCollapse, NotOrderPreserving, NotRound
from rdcpx.molecule import arrow, globe, paste, point
from rdcpx.morphism import (
    SclMorphism,
    brute_force_factorizations,
    classify_morphism,
    co_merger,
    compose_scl,
    enumerate_collapses,
    enumerate_maps,
    enumerate_order_maps,
    factor_CL,
    factor_collapse,
    factor_ternary,
    globe_subdivision,
    is_map,
    pullback_collapse_subdivision,
    sections_of_collapse,
)
from rdcpx.ogposet import MINUS, GradedFunction, find_isomorphism

A = arrow().carrier
PT = point().carrier
G2 = globe(2).carrier
PATH = paste(arrow(), arrow(), 0)


def to_point(P) -> GradedFunction:
    return GradedFunction(P, PT, {x: (0, 0) for x in P.elements()})


def _globe_to_arrow() -> GradedFunction:
    return GradedFunction(G2, A, {x: (1, 0) if x[0] >= 1 else x for x in G2.elements()})


# classification -----------------------------------------------------------------------

def test_identity_is_everything():
    c = classify_morphism(GradedFunction.identity(G2))
    assert all(c.as_dict().values())


def test_collapse_to_point():
    c = classify_morphism(to_point(A))
    assert c.map and c.collapse and c.cylindrical_collapse and not c.local_embedding and not c.comap


def test_boundary_inclusion_is_embedding_not_final():
    c = classify_morphism(closure_embedding(G2, next(iter(G2.faces(G2.greatest(), MINUS)))))
    assert c.local_embedding and c.map and not c.final and not c.collapse


def test_co_merger_is_comap():
    c = classify_morphism(co_merger(PATH))
    assert c.comap and not c.map


def test_order_reversing_rejected():
    flip = GradedFunction(A, A, {(0, 0): (0, 1), (0, 1): (0, 0), (1, 0): (1, 0)})
    # swapping endpoints is still order preserving as a poset map but not a map of og-posets
    assert not is_map(flip)
    bad = GradedFunction(A, G2, {(0, 0): (2, 0), (0, 1): (0, 0), (1, 0): (0, 1)})
    with pytest.raises(NotOrderPreserving):
        classify_morphism(bad)


# collapse factorisation ------------------------------------------------------------------

def test_identity_factors_with_no_steps():
    f = factor_collapse(GradedFunction.identity(G2))
    assert f.m == 0


def test_globe_to_arrow_collapses_both_ends():
    p = _globe_to_arrow()
    f = factor_collapse(p)
    assert f.m == 1
    assert f.K_seq[0] == A.full_boundary(A.all_elements)
    assert f.replays(p)


def test_globe_to_point_has_two_steps():
    f = factor_collapse(to_point(G2))
    assert f.m == 2 and f.replays(to_point(G2))


def test_non_collapse_rejected():
    with pytest.raises(NotACollapse):
        factor_collapse(closure_embedding(G2, (1, 0)))


def test_factorisation_matches_brute_force_on_small_atoms():
    seen = 0
    for cert in corpus_atoms():
        U = cert.carrier
        if len(U) > 7:
            continue
        for V in (PT, A):
            for p in enumerate_collapses(U, V):
                f = factor_collapse(p)
                brute = brute_force_factorizations(p)
                assert brute and any(ks == f.K_seq for ks, _ in brute)
                seen += 1
    assert seen >= 5


def test_sections():
    assert len(sections_of_collapse(to_point(A))) == 2
    assert len(sections_of_collapse(GradedFunction.identity(G2))) == 1
    assert len(sections_of_collapse(_globe_to_arrow())) == 2


# (C, L) factorisation ---------------------------------------------------------------------

def test_factor_CL_of_collapse_and_embedding():
    c, l = factor_CL(to_point(G2))
    assert len(l.source) == 1 and classify_morphism(c).collapse
    emb = closure_embedding(G2, (1, 0))
    c, l = factor_CL(emb)
    assert classify_morphism(c).collapse and c.is_injective()
    assert c.then(l) == emb


def test_factor_CL_rejects_comap():
    with pytest.raises(NotLocalCollapse):
        factor_CL(co_merger(PATH))


# pullbacks and span composition -------------------------------------------------------------

def _path_to_arrow_comap() -> GradedFunction:
    c = co_merger(PATH)
    return c.then(GradedFunction(c.target, A, find_isomorphism(c.target, A)))


def test_pullback_of_globe_collapse_along_path_subdivision():
    down, back = pullback_collapse_subdivision(_globe_to_arrow(), _path_to_arrow_comap())
    assert len(down.source) == 11
    assert down.target == PATH.carrier
    assert classify_morphism(down).collapse and classify_morphism(back).comap


def test_pullback_along_identity_is_identity():
    p = _globe_to_arrow()
    down, back = pullback_collapse_subdivision(p, GradedFunction.identity(A))
    assert find_isomorphism(down.source, G2) is not None and back.is_surjective()


def test_compose_with_identities():
    m = SclMorphism(_path_to_arrow_comap(), GradedFunction.identity(PATH.carrier))
    assert compose_scl(SclMorphism.identity(PATH.carrier), m) == m
    assert compose_scl(m, SclMorphism.identity(A)) == m


def test_compose_rejects_mismatch():
    with pytest.raises(DomainMismatch):
        compose_scl(SclMorphism.identity(G2), SclMorphism.identity(A))


def test_compose_subdivision_after_collapse():
    g = SclMorphism.of_subdivision(_path_to_arrow_comap())
    h = compose_scl(g, SclMorphism.of_collapse(_globe_to_arrow()))
    h.validate()
    assert h.source == G2 and h.target == PATH.carrier and len(h.middle) == 11


def test_factor_ternary_recomposes():
    g = SclMorphism.of_collapse(_globe_to_arrow())
    h = compose_scl(SclMorphism.of_subdivision(_path_to_arrow_comap()), g)
    sub, col, emb = factor_ternary(h)
    assert classify_morphism(sub).comap and classify_morphism(col).collapse and classify_morphism(emb).local_embedding
    assert col.then(emb) == h.post


# co-mergers and globe subdivisions ------------------------------------------------------------

def test_co_merger_of_globe_is_iso():
    c = co_merger(globe(2))
    assert find_isomorphism(c.target, G2) is not None and c.is_injective()


def test_co_merger_needs_round():
    from rdcpx.corpus import not_round_shape

    with pytest.raises(NotRound):
        co_merger(not_round_shape())


def test_globe_subdivision_of_compositor():
    g = globe_subdivision(compositor())
    assert g.target == G2 and classify_morphism(g).comap
    top = compositor().carrier.greatest()
    assert g(top) == G2.greatest()


def test_globe_subdivision_of_square():
    S = gray(A, A)
    g = globe_subdivision(S)
    assert classify_morphism(g).comap and g.is_surjective()


# search oracles ------------------------------------------------------------------------------

def test_pruned_map_search_agrees_with_plain_search():
    shapes = [c.carrier for c in corpus_atoms() if len(c.carrier) <= 6]
    for P in shapes:
        for Q in shapes:
            plain = sorted(
                tuple(sorted(m.items()))
                for m in enumerate_order_maps(P, Q, raise_dim=False)
                if is_map(GradedFunction(P, Q, m))
            )
            pruned = sorted(
                tuple(sorted(m.items()))
                for m in enumerate_maps(P, Q)
                if is_map(GradedFunction(P, Q, m))
            )
            assert plain == pruned


def test_collapse_counts():
    assert len(enumerate_collapses(A, PT)) == 1
    assert len(enumerate_collapses(G2, A)) == 1
    assert len(enumerate_collapses(compositor().carrier, A)) == 1
    P, _ = partial_cylinder(CylinderSpec(A, frozenset()))
    assert len(enumerate_collapses(P, A)) == 1
