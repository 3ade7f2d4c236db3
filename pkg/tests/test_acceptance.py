"""Acceptance criteria 1-14, one check each.

Run under pytest (one test per criterion, PASS/FAIL lines in the terminal summary)
or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import (  # noqa: E402
    comerger_cocone_check,
    corpus_atoms,
    corpus_molecules,
    embedding_cocone_check,
    simplex_vertex_sets,
)
from rdcpx.complex import (  # noqa: E402
    InflateCell,
    MarkedComplex,
    all_marked,
    bigon_loop_complex,
    brute_force_normal_pairs,
    degenerate,
    enumerate_marked_horns,
    enumerate_merge_cells,
    fibrancy_report,
    free_inflate,
    globular_composite,
    globular_star,
    horn_filler_search,
    inflate_cells,
    loop_complex,
    marked_closure,
    representable,
    sigma,
    verify_closure,
)
from rdcpx.complex.cells import Diagram  # noqa: E402
from rdcpx.complex.merge import _is_globe  # noqa: E402
from rdcpx.construct import (  # noqa: E402
    closure_embedding,
    cylinder_labelled,
    gray,
    gray_labelled,
    pushout_comerger,
    pushout_embedding,
)
from rdcpx.corpus import compositor, not_round_shape, simplex  # noqa: E402
from rdcpx.errors import RdcError  # noqa: E402
from rdcpx.molecule import arrow, globe, paste, point, recognize_molecule  # noqa: E402
from rdcpx.morphism import (  # noqa: E402
    SclMorphism,
    brute_force_factorizations,
    classify_morphism,
    closed_subsets,
    co_merger,
    compose_scl,
    enumerate_collapses,
    factor_collapse,
    factor_ternary,
    globe_subdivision,
    sections_of_collapse,
)
from rdcpx.ogposet import (  # noqa: E402
    MINUS,
    PLUS,
    SIGNS,
    GradedFunction,
    all_isomorphisms,
    canonical_form,
    check_oriented_thinness,
    find_embeddings,
    find_isomorphism,
)

# pinned thresholds
BUDGET_S = 90.0  # per criterion; the target is ~60 s, with headroom for slower machines
GLOBE_MAX_N = 6
SIMPLEX_MAX_K = 4
GRAY_TRIPLES = 50
MIN_COLLAPSES = 100
EXHAUSTIVE_COLLAPSE_SIZE = 11
MIN_EMBEDDING_SPANS = 30
MIN_COMERGER_SPANS = 30
MIN_SCL_COMPOSITES = 50
ASSOC_TRIPLES = 100
EZ_BASES = 10
STAR_BASES = 5

RESULTS: dict[int, tuple[bool, str, float]] = {}


# criterion 1 -------------------------------------------------------------------------

def _orientation_ok(P) -> bool:
    return all(not (P.faces(x, MINUS) & P.faces(x, PLUS)) for x in P.elements())


def _grading_ok(P) -> bool:
    return all(y[0] == x[0] - 1 for x in P.elements() for y in P.faces(x)) and all(
        P.faces(x) for x in P.elements() if x[0] > 0
    )


def crit_1():
    bad = 0
    shapes = [c.carrier for c in corpus_molecules()]
    for P in shapes:
        if not (_grading_ok(P) and _orientation_ok(P) and check_oriented_thinness(P).ok):
            bad += 1
    return bad == 0, f"{len(shapes)} carriers, {bad} violations"


# criterion 2 -------------------------------------------------------------------------

def crit_2():
    bad = 0
    checks = 0
    mols = [c.carrier for c in corpus_molecules()]
    for U in mols:
        whole = U.all_elements
        for n in range(1, min(U.dim, 3) + 1):
            for k in range(n):
                for b in SIGNS:
                    inner = U.boundary_set(whole, n, b)
                    for a in SIGNS:
                        checks += 1
                        if U.boundary_set(inner, k, a) != U.boundary_set(whole, k, a):
                            bad += 1
    atoms = [c.carrier for c in corpus_atoms()]
    unround = sum(1 for A in atoms if not A.is_round())
    nr = not_round_shape().carrier
    flag = nr.is_globular() and not nr.is_round()
    ok = bad == 0 and unround == 0 and flag
    return ok, f"{checks} boundary identities, {bad} failures; {unround}/{len(atoms)} atoms not round; (not round) globular-but-not-round={flag}"


# criterion 3 -------------------------------------------------------------------------

def crit_3():
    globes = all(len(globe(n).carrier) == 2 * n + 1 for n in range(GLOBE_MAX_N + 1))
    simplices = True
    for k in range(SIMPLEX_MAX_K + 1):
        S = simplex(k)
        sets, expected = simplex_vertex_sets(S)
        simplices &= sets == expected and list(S.sizes) == [len(e) for e in expected]
    return globes and simplices, f"globes n<={GLOBE_MAX_N}: {globes}; simplices k<={SIMPLEX_MAX_K}: {simplices}"


# criterion 4 -------------------------------------------------------------------------

def _expected_gray_arrow_faces() -> dict:
    """Signed faces of x (x) y from the Gray sign rule, labels (a, b) for a, b in the arrow."""
    A = arrow().carrier
    out = {}
    for x, y in itertools.product(A.elements(), A.elements()):
        if x[0] + y[0] == 0:
            continue
        for s in SIGNS:
            faces = {(x2, y) for x2 in A.faces(x, s)}
            faces |= {(x, y2) for y2 in A.faces(y, s if x[0] % 2 == 0 else -s)}
            out[(x, y, s)] = faces
    return out


def crit_4():
    A = arrow().carrier
    P, idx = gray_labelled(A, A)
    inv = {v: k for k, v in idx.items()}
    table_ok = list(P.sizes) == [4, 4, 1]
    for (x, y, s), faces in _expected_gray_arrow_faces().items():
        got = {inv[z] for z in P.faces(idx[(x, y)], s)}
        table_ok &= got == faces
    small = [c.carrier for c in corpus_molecules() if len(c.carrier) <= 5]
    mols_ok = all(recognize_molecule(gray(a, b)) is not None for a, b in itertools.product(small, repeat=2))
    pt = point().carrier
    triples = list(itertools.islice(itertools.product(small, repeat=3), GRAY_TRIPLES))
    iso_ok = True
    for a, b, c in triples:
        iso_ok &= len(all_isomorphisms(gray(gray(a, b), c), gray(a, gray(b, c)))) == 1
        iso_ok &= len(all_isomorphisms(gray(pt, a), a)) == 1 and len(all_isomorphisms(gray(a, pt), a)) == 1
    ok = table_ok and mols_ok and iso_ok and len(triples) == GRAY_TRIPLES
    return ok, f"(4,4,1) table {table_ok}; {len(small) ** 2} products certify {mols_ok}; {len(triples)} triples unique isos {iso_ok}"


# criteria 5 and 6 --------------------------------------------------------------------

def collapse_instances() -> tuple[list, dict]:
    """Exhaustive collapses between small corpus atoms plus cylinder-built collapses.

    Returns (distinct collapses, exhaustive enumeration keyed by (source, target)).
    """
    atoms = sorted((c.carrier for c in corpus_atoms()), key=len)
    exhaustive: dict = {}
    small = [A for A in atoms if len(A) <= EXHAUSTIVE_COLLAPSE_SIZE]
    for P in small:
        for Q in small:
            if len(Q) < len(P) and Q.dim <= P.dim:
                found = enumerate_collapses(P, Q)
                if found:
                    exhaustive[(P, Q)] = found
    built = []
    frontier = [(P, GradedFunction.identity(P)) for P in atoms if P.dim <= 2]
    for _ in range(2):
        nxt = []
        for S, p in frontier:
            for K in closed_subsets(S, S.full_boundary(S.all_elements)):
                C, _, proj = cylinder_labelled(S, K)
                if len(C) > 13 or C.dim > 3:
                    continue
                q = GradedFunction(C, S, proj).then(p)
                built.append(q)
                nxt.append((C, q))
        frontier = nxt
    distinct: dict = {}
    for q in [f for fs in exhaustive.values() for f in fs] + built:
        distinct.setdefault(SclMorphism.of_collapse(q).canonical_key(), q)
    return list(distinct.values()), exhaustive


_COLLAPSES: list = []


def _collapses():
    if not _COLLAPSES:
        _COLLAPSES.append(collapse_instances())
    return _COLLAPSES[0]


def crit_5():
    instances, _ = _collapses()
    bad = 0
    for p in instances:
        F = factor_collapse(p)
        if not F.replays(p) or len(brute_force_factorizations(p)) != 1:
            bad += 1
    ok = bad == 0 and len(instances) >= MIN_COLLAPSES
    return ok, f"{len(instances)} collapses (exhaustive up to {EXHAUSTIVE_COLLAPSE_SIZE} elements plus cylinder-built), {bad} failures"


def _canonical_collapse(p: GradedFunction) -> tuple:
    """(source key, target key, map in canonical coordinates) for grouping parallel collapses."""
    skey, spos = canonical_form(p.source)
    tkey, tpos = canonical_form(p.target)
    return skey, tkey, tuple(sorted((spos[x], tpos[p(x)]) for x in p.source.elements()))


def _is_section(p: GradedFunction, j: GradedFunction) -> bool:
    injective = len(set(j.mapping.values())) == len(j.mapping)
    return injective and all(p(j(v)) == v for v in p.target.elements())


def crit_6():
    instances, _ = _collapses()
    groups: dict = {}
    for p in instances:
        skey, tkey, graph = _canonical_collapse(p)
        groups.setdefault((skey, tkey), {})[graph] = p
    pairs = bad = 0
    sections_ok = True
    for members in groups.values():
        found = list(members.values())
        secs = []
        for p in found:
            js = sections_of_collapse(p)
            sections_ok &= bool(js) and all(_is_section(p, j) for j in js)
            secs.append(frozenset(frozenset(j.mapping.items()) for j in js))
        for i, k in itertools.combinations(range(len(found)), 2):
            pairs += 1
            if secs[i] == secs[k]:
                bad += 1
    note = "" if pairs else " (no source/target pair in the corpus admits two collapses)"
    return bad == 0 and sections_ok, (
        f"{len(instances)} collapses in {len(groups)} source/target classes, {pairs} parallel pairs, "
        f"{bad} counterexamples; sections valid {sections_ok}{note}"
    )


# criterion 7 -------------------------------------------------------------------------

def embedding_spans(limit: int) -> list:
    mols = [c.carrier for c in corpus_molecules() if len(c.carrier) <= 7]
    spans = []
    for U in (m for m in mols if len(m) <= 3):
        for P, P2 in itertools.combinations_with_replacement(mols, 2):
            if len(P) + len(P2) - len(U) > 9:
                continue
            e1 = next(iter(find_embeddings(U, P)), None)
            e2 = next(iter(find_embeddings(U, P2)), None)
            if e1 is None or e2 is None:
                continue
            spans.append((GradedFunction(U, P, e1), GradedFunction(U, P2, e2)))
            if len(spans) >= limit:
                return spans
    return spans


def comerger_spans(limit: int) -> list:
    mols = [c.carrier for c in corpus_molecules() if len(c.carrier) <= 7]
    rounds = [m for m in mols if m.dim >= 1 and m.is_round() and m.greatest() is None]
    spans = []
    for P in mols:
        for x in P.elements():
            if x[0] == 0:
                continue
            iota = closure_embedding(P, x)
            for V in rounds:
                cm = co_merger(V)
                iso = find_isomorphism(cm.target, iota.source)
                if iso is None:
                    continue
                s = GradedFunction(V, iota.source, {z: iso[cm(z)] for z in V.elements()})
                R, t, j = pushout_comerger(iota, s)
                if len(R) <= 9:
                    spans.append((len(R), P.dim, iota, s, R, t, j))
    spans.sort(key=lambda sp: sp[:2])
    return spans[:limit]


def crit_7():
    tests = [c.carrier for c in corpus_molecules() if len(c.carrier) <= 5]
    e_seen = e_bad = 0
    espans = embedding_spans(MIN_EMBEDDING_SPANS + 5)
    for i1, i2 in espans:
        R, j, j2 = pushout_embedding(i1, i2)
        seen, bad = embedding_cocone_check(i1, i2, R, j, j2, tests + [R])
        e_seen += seen
        e_bad += bad
    c_seen = c_bad = 0
    cspans = comerger_spans(MIN_COMERGER_SPANS)
    for size, _, iota, s, R, t, j in cspans:
        middles = [c.carrier for c in corpus_molecules() if len(c.carrier) <= size]
        seen, bad = comerger_cocone_check(iota, s, R, t, j, tests + [R], middles)
        c_seen += seen
        c_bad += bad
    ok = (
        len(espans) >= MIN_EMBEDDING_SPANS
        and len(cspans) >= MIN_COMERGER_SPANS
        and e_bad == 0
        and c_bad == 0
        and c_seen >= len(cspans)
    )
    return ok, (
        f"{len(espans)} embedding spans ({e_seen} cocones, {e_bad} bad); "
        f"{len(cspans)} co-merger spans ({c_seen} cocones, {c_bad} bad)"
    )


# criterion 8 -------------------------------------------------------------------------

def _ckey(P):
    return canonical_form(P)[0]


def scl_pool() -> list[SclMorphism]:
    atoms = [c.carrier for c in corpus_atoms() if len(c.carrier) <= 9 and c.carrier.dim >= 1]
    mols = [c.carrier for c in corpus_molecules() if len(c.carrier) <= 9]
    pool = []
    for P in atoms:
        pool.append(SclMorphism.of_subdivision(globe_subdivision(P)))
        for K in closed_subsets(P, P.full_boundary(P.all_elements)):
            C, _, proj = cylinder_labelled(P, K)
            if len(C) <= 13:
                pool.append(SclMorphism.of_collapse(GradedFunction(C, P, proj)))
    for V in mols:
        if V.is_round() and V.greatest() is None:
            pool.append(SclMorphism.of_subdivision(co_merger(V)))
    for P in mols:
        if len(P) <= 7:
            for x in P.elements():
                if x[0] >= 1:
                    emb = closure_embedding(P, x)
                    pool.append(SclMorphism(GradedFunction.identity(emb.source), emb))
    return pool


def _transport(f: SclMorphism, g: SclMorphism):
    """g precomposed with an isomorphism from f's target to g's source."""
    if f.target == g.source:
        return g
    iso = find_isomorphism(f.target, g.source)
    return compose_scl(g, SclMorphism(GradedFunction.identity(f.target), GradedFunction(f.target, g.source, iso)))


def crit_8():
    pool = scl_pool()
    by_source: dict = {}
    for g in pool:
        by_source.setdefault(_ckey(g.source), []).append(g)
    composites = []
    for f in pool:
        for g in by_source.get(_ckey(f.target), []):
            g2 = _transport(f, g)
            composites.append((f, g2, compose_scl(g2, f)))
    bad = 0
    for _, _, m in composites:
        s, c, e = factor_ternary(m)
        good = (
            s == m.sub
            and c.then(e) == m.post
            and classify_morphism(s).comap
            and classify_morphism(c).collapse
            and classify_morphism(e).local_embedding
        )
        bad += not good
    triples = assoc_bad = 0
    for f, g, m in composites:
        for h in by_source.get(_ckey(g.target), []):
            h2 = _transport(g, h)
            if compose_scl(h2, m) != compose_scl(compose_scl(h2, g), f):
                assoc_bad += 1
            triples += 1
            if triples >= ASSOC_TRIPLES:
                break
        if triples >= ASSOC_TRIPLES:
            break
    ok = len(composites) >= MIN_SCL_COMPOSITES and bad == 0 and assoc_bad == 0 and triples >= ASSOC_TRIPLES
    return ok, f"{len(composites)} composites, {bad} bad factorizations; {triples} triples, {assoc_bad} associativity failures"


# criterion 9 -------------------------------------------------------------------------

def ez_bases() -> dict:
    A = arrow().carrier
    return {
        "point": representable(point().carrier),
        "arrow": representable(A),
        "globe2": representable(globe(2).carrier),
        "path2": representable(paste(arrow(), arrow(), 0).carrier),
        "compositor": representable(compositor().carrier),
        "loop": loop_complex(),
        "bigon_loop": bigon_loop_complex(),
        "simplex2": representable(simplex(2)),
        "globe2#1globe2": representable(paste(globe(2), globe(2), 1).carrier),
        "square": representable(gray(A, A)),
    }


def crit_9():
    cells = bad = 0
    bases = ez_bases()
    for X in bases.values():
        Y, _ = free_inflate(X, 2)
        for v in Y.origin.values():
            cells += 1
            if len(brute_force_normal_pairs(X, v)) != 1:
                bad += 1
    return len(bases) == EZ_BASES and bad == 0, f"{len(bases)} bases, {cells} cells, {bad} without a unique normal pair"


# criterion 10 ------------------------------------------------------------------------

def crit_10():
    A = arrow().carrier
    X = representable(A)
    edge = X.value((1, 0))
    found = {v.key() for v in inflate_cells(X, 2) if isinstance(v, InflateCell) and v.dim == 2 and v.base.ref == (1, 0)}
    subsets = [frozenset({(0, 0), (0, 1)}), frozenset({(0, 1)}), frozenset({(0, 0)}), frozenset()]
    expected = []
    for K in subsets:
        C, _, proj = cylinder_labelled(A, K)
        expected.append(degenerate(edge, GradedFunction(C, A, proj)).key())
    ok = len(found) == 4 and set(expected) == found and len(set(expected)) == 4
    return ok, f"{len(found)} degenerate 2-cells over the edge; indexed by the four boundary subsets: {set(expected) == found}"


# criterion 11 ------------------------------------------------------------------------

def crit_11():
    C = compositor().carrier
    top = C.greatest()
    out_edge = next(iter(C.faces(top, PLUS)))
    horns = list(enumerate_marked_horns([(C, {top})]))
    only_output = [(h.pivot, h.sign) for h in horns] == [(out_edge, PLUS)]
    cond = all(h.check_conditions()["ok"] for h in horns)
    # marking the pivot as well breaks condition (4) for the same horn
    blocked = not any(h.pivot == out_edge for h in enumerate_marked_horns([(C, {top, out_edge})]))

    flat = MarkedComplex(representable(C), frozenset())
    rep = fibrancy_report(flat, horns)
    fail_ok = rep["status"] == "FAIL"
    for item, h in zip(rep["items"], horns):
        if item["status"] == "FAIL":
            e = {tuple(z): flat.base.value(tuple(r)) for z, r in item["witness"]}
            fail_ok &= horn_filler_search(flat, h, e) is None

    Y, _ = free_inflate(representable(point().carrier), 1)
    M = all_marked(Y, "inflate")
    A = arrow().carrier
    inventory = list(enumerate_marked_horns([(A, {A.greatest()})]))
    rep2 = fibrancy_report(M, inventory, 1)
    pass_ok = rep2["status"] == "PASS" and bool(inventory)
    for item, h in zip(rep2["items"], inventory):
        for fill in item.get("fillers", []):
            assign = {tuple(z): Y.value(tuple(r)) for z, r in fill["filler"]}
            Diagram(h.atom, assign)  # raises unless it is a valid diagram
            pass_ok &= all(assign[tuple(z)].ref == tuple(r) for z, r in fill["morphism"])
            pass_ok &= all(M.is_marked(assign[z].ref) for z in h.marking)
    ok = only_output and cond and blocked and fail_ok and pass_ok
    return ok, f"output-edge horn only {only_output}, condition (4) {cond and blocked}; flat compositor FAIL {fail_ok}; marked point PASS {pass_ok}"


# criterion 12 ------------------------------------------------------------------------

def star_bases() -> dict:
    A = arrow().carrier
    return {
        "compositor": representable(compositor().carrier),
        "globe2": representable(globe(2).carrier),
        "globe2#1globe2": representable(paste(globe(2), globe(2), 1).carrier),
        "bigon_loop": bigon_loop_complex(),
        "square": representable(gray(A, A)),
    }


def crit_12():
    triples = bad = 0
    bases = star_bases()
    for X in bases.values():
        Y, _ = free_inflate(X, 2)
        cells = [sigma(Y.value(r)) for r in Y.refs() if r[0] == 2 and _is_globe(Y.shape(r), 2)]
        for u, v, w in itertools.product(cells, repeat=3):
            try:
                uv = globular_star(u, v, 1)
                vw = globular_star(v, w, 1)
            except RdcError:
                continue
            triples += 1
            if globular_star(uv, w, 1).key() != globular_star(u, vw, 1).key():
                bad += 1
    return len(bases) == STAR_BASES and triples > 0 and bad == 0, f"{len(bases)} bases, {triples} composable triples, {bad} failures"


# criterion 13 ------------------------------------------------------------------------

def crit_13():
    from oracles import count_loop_subdivision_cells

    L = loop_complex()
    A = arrow().carrier
    got = (len(enumerate_merge_cells(L, A, 5)), len(enumerate_merge_cells(L, A, 7)))
    oracle = (count_loop_subdivision_cells(5), count_loop_subdivision_cells(7))
    return got == (2, 3) and oracle == got, f"bound 5: {got[0]}, bound 7: {got[1]} (oracle {oracle})"


# criterion 14 ------------------------------------------------------------------------

def crit_14():
    A = arrow().carrier
    cases = [
        (representable(compositor().carrier), (2, 0), [0]),
        (representable(globe(2).carrier), (2, 0), [0, 2]),
        (bigon_loop_complex(), (2, 0), [0, 2]),
        (representable(A), (1, 0), [0, 2]),
        (loop_complex(), (1, 0), [0, 2]),
    ]
    runs = problems = missed = 0
    for X, ref, extras in cases:
        seed = sigma(X.value(ref))
        size = len(globular_composite(seed).diagram.shape)
        for extra in extras:
            res = marked_closure(X, [seed], size + extra)
            runs += 1
            problems += len(verify_closure(X, res))
            missed += globular_composite(seed) not in res
    return problems == 0 and missed == 0, f"{runs} closures, {problems} violated conditions, {missed} missing glcom"


CRITERIA = {n: globals()[f"crit_{n}"] for n in range(1, 15)}


def run_criterion(n: int) -> tuple[bool, str, float]:
    t0 = time.perf_counter()
    try:
        ok, detail = CRITERIA[n]()
    except Exception as exc:  # a crash is a failure, reported with its message
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - t0
    if elapsed > BUDGET_S:
        ok, detail = False, f"{detail}; over the {BUDGET_S:.0f}s budget"
    RESULTS[n] = (ok, detail, elapsed)
    return RESULTS[n]


def format_line(n: int) -> str:
    ok, detail, elapsed = RESULTS[n]
    return f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail} [{elapsed:.1f}s]"


@pytest.mark.parametrize("n", list(CRITERIA))
def test_criterion(n):
    ok, detail, _ = run_criterion(n)
    print(format_line(n))
    assert ok, detail


if __name__ == "__main__":
    for n in CRITERIA:
        run_criterion(n)
        print(format_line(n), flush=True)
    sys.exit(0 if all(r[0] for r in RESULTS.values()) else 1)
