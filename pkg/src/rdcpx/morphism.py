"""Classification of functions between posets and the factorization results for collapses and subdivisions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .construct import cylinder_labelled
from .errors import (
    ClassificationFailure,
    DomainMismatch,
    NotACollapse,
    NotLocalCollapse,
    NotOrderPreserving,
    NotRound,
)
from .molecule import as_cert, globe, is_molecule, merger_with_map
from .ogposet import (
    MINUS,
    PLUS,
    SIGNS,
    GradedFunction,
    OgPoset,
    canonical_form,
    find_embeddings,
    find_isomorphism,
)


@dataclass(frozen=True)
class MorphismClass:
    local_embedding: bool
    map: bool
    final: bool
    comap: bool
    local_collapse: bool
    collapse: bool
    cylindrical_collapse: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


# elementary predicates -------------------------------------------------------------

def is_order_preserving(f: GradedFunction) -> bool:
    P, Q = f.source, f.target
    return all(Q.leq(f(y), f(x)) for x in P.elements() for y in P.faces(x))


def is_local_embedding(f: GradedFunction) -> bool:
    P, Q = f.source, f.target
    for x in P.elements():
        y = f(x)
        if y[0] != x[0]:
            return False
        for s in SIGNS:
            images = [f(z) for z in P.faces(x, s)]
            if len(set(images)) != len(images) or set(images) != set(Q.faces(y, s)):
                return False
    return True


def _components(P: OgPoset, members: set) -> dict:
    parent = {x: x for x in members}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x in members:
        for y in P.faces(x):
            if y in members:
                parent[find(x)] = find(y)
    return {x: find(x) for x in members}


def _zigzag_ok(f: GradedFunction, region) -> bool:
    """Elements of the region with equal images are linked by a zig-zag staying above that image."""
    P, Q = f.source, f.target
    fibres: dict = {}
    for x in region:
        fibres.setdefault(f(x), []).append(x)
    for value, fibre in fibres.items():
        if len(fibre) < 2:
            continue
        above = {z for z in region if Q.leq(value, f(z))}
        comp = _components(P, above)
        if len({comp[x] for x in fibre}) > 1:
            return False
    return True


def is_map(f: GradedFunction) -> bool:
    P, Q = f.source, f.target
    for x in P.elements():
        cx = P.down(x)
        fx = f(x)
        cfx = Q.down(fx)
        for n in range(max(x[0], fx[0]) + 1):
            for s in SIGNS:
                bd = P.boundary_set(cx, n, s)
                if f.image(bd) != Q.boundary_set(cfx, n, s):
                    return False
                if not _zigzag_ok(f, bd):
                    return False
    return True


def is_final(f: GradedFunction) -> bool:
    P, Q = f.source, f.target
    images = f.image()
    if not all(any(Q.leq(q, y) for y in images) for q in Q.elements()):
        return False
    return _zigzag_ok(f, P.all_elements)


def is_comap(c: GradedFunction) -> bool:
    P, Q = c.source, c.target
    for y in Q.elements():
        pre = c.preimage(Q.down(y))
        if not pre or not P.is_closed(pre):
            return False
        if not is_molecule(P.restrict(pre)[0]):
            return False
        for n in range(max(y[0], P.subset_dim(pre)) + 1):
            for s in SIGNS:
                if P.boundary_set(pre, n, s) != c.preimage(Q.boundary_set(Q.down(y), n, s)):
                    return False
    return True


def restriction(f: GradedFunction, x) -> GradedFunction:
    """The restriction cl{x} -> cl{f(x)}, both extracted as standalone posets."""
    P, Q = f.source, f.target
    src, si = P.restrict(P.down(x))
    tgt, ti = Q.restrict(Q.down(f(x)))
    back = {v: k for k, v in si.items()}
    return GradedFunction(src, tgt, {e: ti[f(back[e])] for e in src.elements()})


def is_local_collapse(f: GradedFunction) -> bool:
    if not is_map(f):
        return False
    for x in f.source.elements():
        try:
            factor_collapse(restriction(f, x))
        except NotACollapse:
            return False
    return True


def classify_morphism(f: GradedFunction) -> MorphismClass:
    if "class" in f._cache:
        return f._cache["class"]
    if not is_order_preserving(f):
        raise NotOrderPreserving("function does not preserve the order")
    emb = is_local_embedding(f)
    mp = emb or is_map(f)
    fin = mp and is_final(f)
    cm = is_comap(f)
    lc = emb or (mp and is_local_collapse(f))
    col = lc and fin
    cyl = False
    if col and f.source.greatest() is not None and f.target.greatest() is not None:
        try:
            factor_collapse(f)
            cyl = True
        except NotACollapse:
            cyl = False
    out = MorphismClass(emb, mp, fin, cm, lc, col, cyl)
    f._cache["class"] = out
    return out


# collapses ---------------------------------------------------------------------------

@dataclass
class CollapseFactorization:
    """p = tau_{K_1} ... tau_{K_m} iso, with K_i a closed subset of ``stages[i-1]``.

    ``stages[0]`` is the target of p and ``stages[m]`` the carrier the iso lands in;
    ``projections[i-1]`` is the generating collapse ``stages[i] -> stages[i-1]``.
    """

    K_seq: list
    stages: list
    projections: list
    iso: GradedFunction

    @property
    def m(self) -> int:
        return len(self.K_seq)

    def composite(self) -> GradedFunction:
        g = self.iso
        for proj in reversed(self.projections):
            g = g.then(proj)
        return g

    def replays(self, p: GradedFunction) -> bool:
        return self.composite() == p


def _cylinder_stage(base: OgPoset, K: frozenset) -> tuple[OgPoset, GradedFunction]:
    carrier, _, proj = cylinder_labelled(base, K)
    return carrier, GradedFunction(carrier, base, proj)


def factor_collapse(p: GradedFunction) -> CollapseFactorization:
    """Present a collapse of atoms as iterated generating collapses after an isomorphism."""
    key = "collapse_factorization"
    if key in p._cache:
        result = p._cache[key]
        if isinstance(result, Exception):
            raise result
        return result
    try:
        result = _factor_collapse(p)
    except NotACollapse as exc:
        p._cache[key] = exc
        raise
    p._cache[key] = result
    return result


def _factor_collapse(p: GradedFunction) -> CollapseFactorization:
    U, V = p.source, p.target
    top_u, top_v = U.greatest(), V.greatest()
    if top_u is None or top_v is None:
        raise NotACollapse("collapses are factored between atoms")
    m = U.dim - V.dim
    if m < 0 or not p.is_surjective() or p(top_u) != top_v:
        raise NotACollapse("not a surjection of atoms preserving the top")
    if m == 0:
        if not (p.is_injective() and is_local_embedding(p)):
            raise NotACollapse("a dimension-preserving collapse must be an isomorphism")
        return CollapseFactorization([], [V], [], p)
    ends = {}
    for s in SIGNS:
        cands = [x for x in U.faces(top_u, s) if p(x) == top_v]
        good = [
            c
            for c in cands
            if all(
                x == c or (U.faces(c) & U.faces(x)) == (U.faces(c, -s) & U.faces(x, s))
                for x in cands
            )
        ]
        if len(good) != 1:
            raise NotACollapse("no distinguished face over the top")
        ends[s] = good[0]
    lower = U.down(ends[MINUS])
    sub, idx = U.restrict(lower)
    back = {v: k for k, v in idx.items()}
    inner = factor_collapse(GradedFunction(sub, V, {e: p(back[e]) for e in sub.elements()}))
    psi = inner.iso
    shared = lower & U.down(ends[PLUS])
    base = inner.stages[-1]
    K = frozenset(psi(idx[x]) for x in shared)
    if not base.is_closed(K) or not K <= base.full_boundary(base.all_elements):
        raise NotACollapse("collapsed region is not a closed part of the boundary")
    carrier, proj = _cylinder_stage(base, K)
    down_to_target = proj
    for pr in reversed(inner.projections):
        down_to_target = down_to_target.then(pr)
    iso = find_isomorphism(U, carrier, allowed=lambda u, w: down_to_target(w) == p(u))
    if iso is None:
        raise NotACollapse("source is not the expected partial cylinder")
    return CollapseFactorization(
        inner.K_seq + [K],
        inner.stages + [carrier],
        inner.projections + [proj],
        GradedFunction(U, carrier, iso),
    )


def closed_subsets(P: OgPoset, within=None) -> list[frozenset]:
    """All closed subsets of P contained in ``within``."""
    pool = sorted(P.all_elements if within is None else within)
    out = [frozenset()]
    for x in pool:  # strata ascend, so faces are decided first
        fs = P.faces(x)
        out += [S | {x} for S in out if fs <= S]
    return out


def brute_force_factorizations(p: GradedFunction) -> list[tuple[list, dict]]:
    """Every (K-sequence, iso) presentation of p, found by exhaustive search."""
    U, V = p.source, p.target
    m = U.dim - V.dim
    found = []

    def rec(stage: OgPoset, down: GradedFunction, ks: list):
        if len(ks) == m:
            if stage.sizes != U.sizes:
                return
            for iso in find_embeddings(U, stage):
                if len(set(iso.values())) == len(iso) and all(down(iso[u]) == p(u) for u in U.elements()):
                    found.append((list(ks), iso))
            return
        for K in closed_subsets(stage, stage.full_boundary(stage.all_elements)):
            carrier, proj = _cylinder_stage(stage, K)
            if len(carrier) > len(U):
                continue
            rec(carrier, proj.then(down), ks + [K])

    if m >= 0:
        rec(V, GradedFunction.identity(V), [])
    return found


def sections_of_collapse(p: GradedFunction) -> list[GradedFunction]:
    factor_collapse(p)
    U, V = p.source, p.target
    return [
        GradedFunction(V, U, j)
        for j in find_embeddings(V, U, allowed=lambda v, u: p(u) == v)
    ]


# (C, L) factorization ------------------------------------------------------------

def factor_CL(f: GradedFunction) -> tuple[GradedFunction, GradedFunction]:
    """Split a local collapse as a collapse followed by a local embedding."""
    if not classify_morphism(f).local_collapse:
        raise NotLocalCollapse("factor_CL needs a local collapse")
    P, Q = f.source, f.target
    cls_of: dict = {}
    for value in sorted(f.image()):
        fibre = [x for x in P.elements() if f(x) == value]
        above = {z for z in P.elements() if Q.leq(value, f(z))}
        comp = _components(P, above)
        for x in fibre:
            cls_of[x] = (value, comp[x])
    classes = sorted(set(cls_of.values()))
    labels: list[list] = [[] for _ in range(Q.dim + 1)]
    for c in classes:
        labels[c[0][0]].append(c)
    rep = {}
    for x in P.elements():
        rep.setdefault(cls_of[x], x)

    index = {}
    for d, row in enumerate(labels):
        for i, c in enumerate(row):
            index[c] = (d, i)
    strata = []
    for d, row in enumerate(labels):
        out = []
        for c in row:
            x = rep[c]
            below = P.down(x)
            faces = []
            for s in SIGNS:
                chosen = []
                for r in sorted(Q.faces(c[0], s)):
                    w = next(w for w in sorted(below) if f(w) == r)
                    chosen.append(index[cls_of[w]][1])
                faces.append(chosen)
            out.append(tuple(faces))
        strata.append(out)
    while strata and not strata[-1]:
        strata.pop()
    M = OgPoset(strata)
    collapse = GradedFunction(P, M, {x: index[cls_of[x]] for x in P.elements()})
    embedding = GradedFunction(M, Q, {index[c]: c[0] for c in classes})
    return collapse, embedding


# pullbacks and spans ------------------------------------------------------------------

def pullback_collapse_subdivision(f: GradedFunction, c: GradedFunction) -> tuple[GradedFunction, GradedFunction]:
    """Pull a local collapse f: P -> Q back along a subdivision given by its comap c: Q' -> Q.

    Returns (s*f: P' -> Q', comap P' -> P).
    """
    P, Q, Qp = f.source, f.target, c.source
    if c.target != Q:
        raise DomainMismatch("the subdivision does not start at the collapse's target")
    pairs = [(x, y) for x in P.elements() for y in Qp.elements() if f(x) == c(y)]

    def below(a, b):
        return a != b and P.leq(a[0], b[0]) and Qp.leq(a[1], b[1])

    lower = {e: [a for a in pairs if below(a, e)] for e in pairs}
    covers = {
        e: [a for a in lower[e] if not any(below(a, b) for b in lower[e])] for e in pairs
    }
    rank: dict = {}
    for e in sorted(pairs, key=lambda e: len(lower[e])):
        ranks = {rank[a] for a in covers[e]}
        if len(ranks) > 1:
            raise ClassificationFailure("pullback is not graded")
        rank[e] = (ranks.pop() + 1) if ranks else 0
        expected = e[1][0] + e[0][0] - f(e[0])[0]
        if rank[e] != expected:
            raise ClassificationFailure("pullback element has an unexpected dimension")
    labels: list[list] = [[] for _ in range(max(rank.values(), default=-1) + 1)]
    for e in sorted(pairs):
        labels[rank[e]].append(e)
    index = {}
    for d, row in enumerate(labels):
        for i, e in enumerate(row):
            index[e] = (d, i)

    def sign_of(e, a) -> int:
        (x, y), (x2, y2) = e, a
        if y2 == y:
            return P.face_sign(x, x2)
        s = Qp.face_sign(y, y2)
        if s:
            parity = (x[0] - f(x)[0]) % 2
            return -s if parity else s
        return P.face_sign(x, x2)

    strata = []
    for row in labels:
        out = []
        for e in row:
            ins, outs = [], []
            for a in covers[e]:
                s = sign_of(e, a)
                if s == MINUS:
                    ins.append(index[a][1])
                elif s == PLUS:
                    outs.append(index[a][1])
                else:
                    raise ClassificationFailure("cannot orient the pullback")
            out.append((ins, outs))
        strata.append(out)
    Pp = OgPoset(strata)
    inv = {v: k for k, v in index.items()}
    down = GradedFunction(Pp, Qp, {z: inv[z][1] for z in Pp.elements()})
    back = GradedFunction(Pp, P, {z: inv[z][0] for z in Pp.elements()})
    if not classify_morphism(down).local_collapse or not classify_morphism(back).comap:
        raise ClassificationFailure("pullback legs do not classify as expected")
    return down, back


@dataclass(eq=False)
class SclMorphism:
    """A local subdivision-collapse: a subdivision of the source followed by a local collapse.

    ``sub`` is the comap ``middle -> source``; ``post`` the local collapse ``middle -> target``.
    """

    sub: GradedFunction
    post: GradedFunction
    _key: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.sub.source != self.post.source:
            raise DomainMismatch("the two legs must share their middle object")

    @property
    def source(self) -> OgPoset:
        return self.sub.target

    @property
    def target(self) -> OgPoset:
        return self.post.target

    @property
    def middle(self) -> OgPoset:
        return self.sub.source

    def canonical_key(self) -> tuple:
        if self._key is None:
            labels = {z: (self.sub(z), self.post(z)) for z in self.middle.elements()}
            self._key = (self.source, self.target, canonical_form(self.middle, labels)[0])
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, SclMorphism) and self.canonical_key() == other.canonical_key()

    def __hash__(self) -> int:
        return hash(self.canonical_key())

    def validate(self) -> None:
        if not classify_morphism(self.sub).comap:
            raise ClassificationFailure("subdivision leg is not a comap")
        if not classify_morphism(self.post).local_collapse:
            raise ClassificationFailure("collapse leg is not a local collapse")

    @staticmethod
    def identity(P: OgPoset) -> "SclMorphism":
        i = GradedFunction.identity(P)
        return SclMorphism(i, i)

    @staticmethod
    def of_collapse(f: GradedFunction) -> "SclMorphism":
        return SclMorphism(GradedFunction.identity(f.source), f)

    @staticmethod
    def of_subdivision(c: GradedFunction) -> "SclMorphism":
        return SclMorphism(c, GradedFunction.identity(c.source))

    def to_json(self) -> dict:
        return {"sub": self.sub.to_json(), "post": self.post.to_json()}


def compose_scl(g: SclMorphism, f: SclMorphism) -> SclMorphism:
    """The composite ``g after f``."""
    if f.target != g.source:
        raise DomainMismatch("composite of spans with mismatched ends")
    down, back = pullback_collapse_subdivision(f.post, g.sub)
    return SclMorphism(back.then(f.sub), down.then(g.post))


def factor_ternary(m: SclMorphism) -> tuple[GradedFunction, GradedFunction, GradedFunction]:
    """(subdivision comap, collapse, local embedding) with m = embedding . collapse . subdivision."""
    collapse, embedding = factor_CL(m.post)
    return m.sub, collapse, embedding


# co-mergers and globe subdivisions ----------------------------------------------------------

def co_merger(U) -> GradedFunction:
    """The comap U -> mrg U of the subdivision of the merger into U."""
    cert = as_cert(U)
    P = cert.carrier
    if not P.is_round():
        raise NotRound("co-merger needs a round molecule")
    m, emb = merger_with_map(cert)
    top = m.carrier.greatest()
    return GradedFunction(P, m.carrier, {x: emb.get(x, top) for x in P.elements()})


def _globe_labels(P: OgPoset, subset: frozenset) -> dict:
    n = P.subset_dim(subset)
    if n <= 0:
        return {x: (0, 0) for x in subset}
    out = {x: (n, 0) for x in subset}
    fixed: dict = {}
    for s in SIGNS:
        bd = P.boundary_set(subset, n - 1, s)
        for x, lab in _globe_labels(P, bd).items():
            if lab[0] == n - 1:
                lab = (n - 1, 0 if s == MINUS else 1)
            if fixed.setdefault(x, lab) != lab:
                raise NotRound("boundaries do not subdivide a globe consistently")
    out.update(fixed)
    return out


def globe_subdivision(U) -> GradedFunction:
    """The comap U -> O^n of the unique subdivision of the n-globe into a round U."""
    P = U.carrier if hasattr(U, "carrier") else U
    if not P.is_round():
        raise NotRound("globe subdivision needs a round shape")
    return GradedFunction(P, globe(max(P.dim, 0)).carrier, _globe_labels(P, P.all_elements))


# exhaustive searches used as oracles -----------------------------------------------------------

def enumerate_order_maps(P: OgPoset, Q: OgPoset, *, raise_dim: bool, closed: bool = False) -> Iterator[dict]:
    """Order-preserving functions with dim f(x) >= dim x (raise_dim) or <= dim x.

    With ``closed`` (lowering only) the search keeps just functions with f(cl x) = cl f(x),
    which every map satisfies.
    """
    order = sorted(P.elements(), key=lambda x: (-x[0], x[1])) if raise_dim else sorted(P.elements())
    assign: dict = {}
    qs = sorted(Q.elements())
    bds: dict = {}

    def bd(R, x, n, sign):
        slot = (id(R), x, n, sign)
        if slot not in bds:
            bds[slot] = R.boundary_set(R.down(x), n, sign)
        return bds[slot]

    def boundaries_match(x, q) -> bool:
        for n in range(max(x[0], q[0])):
            for sign in SIGNS:
                if {assign.get(y, q) for y in bd(P, x, n, sign)} != bd(Q, q, n, sign):
                    return False
        return True

    def rec(pos):
        if pos == len(order):
            yield dict(assign)
            return
        x = order[pos]
        for q in qs:
            if raise_dim and q[0] < x[0]:
                continue
            if not raise_dim and q[0] > x[0]:
                continue
            ok = True
            if raise_dim:
                for c in P.cofaces(x):
                    if not Q.leq(q, assign[c]):
                        ok = False
                        break
            else:
                for c in P.faces(x):
                    if not Q.leq(assign[c], q):
                        ok = False
                        break
                if ok and closed:
                    below = {assign[y] for y in P.down(x) if y != x}
                    below.add(q)
                    ok = below == Q.down(q) and boundaries_match(x, q)
            if ok:
                assign[x] = q
                yield from rec(pos + 1)
                del assign[x]

    yield from rec(0)


def enumerate_maps(P: OgPoset, Q: OgPoset) -> Iterator[dict]:
    """Dimension-lowering functions sending each n-boundary of cl x into that of cl f(x).

    Searched top-down: every map satisfies this for all x and every ancestor of x, so
    the result is a superset of the maps P -> Q; callers still run ``is_map``.
    """
    order = sorted(P.elements(), key=lambda x: (-x[0], x[1]))
    qs = sorted(Q.elements())
    qbd = {
        (q, n, sign): Q.boundary_set(Q.down(q), n, sign)
        for q in qs
        for n in range(q[0])
        for sign in SIGNS
    }
    # for each x: (ancestor, [(n, sign) with x in the n-boundary of cl ancestor])
    constraints: dict = {x: [] for x in order}
    for c in order:
        cl = P.down(c)
        for n in range(c[0]):
            for sign in SIGNS:
                for x in P.boundary_set(cl, n, sign):
                    if x != c:
                        slots = constraints[x]
                        if not slots or slots[-1][0] != c:
                            slots.append((c, []))
                        slots[-1][1].append((n, sign))
        for x in cl:
            if x != c and not any(a == c for a, _ in constraints[x]):
                constraints[x].append((c, []))
    assign: dict = {}

    def admissible(x, q) -> bool:
        for c, slots in constraints[x]:
            fc = assign[c]
            if not Q.leq(q, fc):
                return False
            for n, sign in slots:
                if n < fc[0] and q not in qbd[(fc, n, sign)]:
                    return False
        return True

    def rec(pos):
        if pos == len(order):
            yield dict(assign)
            return
        x = order[pos]
        for q in qs:
            if q[0] <= x[0] and admissible(x, q):
                assign[x] = q
                yield from rec(pos + 1)
                del assign[x]

    yield from rec(0)


def enumerate_comaps(P: OgPoset, Q: OgPoset) -> list[GradedFunction]:
    out = []
    for mp in enumerate_order_maps(P, Q, raise_dim=True):
        if set(mp.values()) != Q.all_elements:
            continue
        c = GradedFunction(P, Q, mp)
        if is_comap(c):
            out.append(c)
    return out


def enumerate_collapses(P: OgPoset, Q: OgPoset) -> list[GradedFunction]:
    out = []
    if P.greatest() is not None and Q.greatest() is None:
        return out
    for mp in enumerate_maps(P, Q):
        if set(mp.values()) != Q.all_elements:
            continue
        f = GradedFunction(P, Q, mp)
        if is_map(f) and classify_morphism(f).collapse:
            out.append(f)
    return out


__all__ = [
    "CollapseFactorization",
    "MorphismClass",
    "SclMorphism",
    "brute_force_factorizations",
    "classify_morphism",
    "closed_subsets",
    "co_merger",
    "compose_scl",
    "enumerate_collapses",
    "enumerate_comaps",
    "enumerate_maps",
    "enumerate_order_maps",
    "factor_CL",
    "factor_collapse",
    "factor_ternary",
    "is_comap",
    "is_final",
    "is_local_collapse",
    "is_local_embedding",
    "is_map",
    "globe_subdivision",
    "pullback_collapse_subdivision",
    "sections_of_collapse",
]
