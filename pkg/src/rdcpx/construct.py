"""Shape constructions: Gray products, joins, partial cylinders and the two kinds of pushout."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GrayOfCollapse, KNotClosed, KNotInBoundary, NotAtomSource, NotEmbedding
from .molecule import glue, is_embedding
from .ogposet import MINUS, PLUS, SIGNS, ClosedSubset, GradedFunction, OgPoset


def _build(labels_by_dim: list[list], faces_of) -> tuple[OgPoset, dict]:
    """Assemble a poset from labelled strata and a face function on labels."""
    index = {}
    for d, labels in enumerate(labels_by_dim):
        for i, lab in enumerate(labels):
            index[lab] = (d, i)
    strata = []
    for d, labels in enumerate(labels_by_dim):
        row = []
        for lab in labels:
            ins = [index[f][1] for f in faces_of(lab, MINUS)]
            outs = [index[f][1] for f in faces_of(lab, PLUS)]
            row.append((ins, outs))
        strata.append(row)
    return OgPoset(strata), index


# Gray product ------------------------------------------------------------------

def gray_labelled(P: OgPoset, Q: OgPoset) -> tuple[OgPoset, dict]:
    """Gray product with its labelling ``(x, y) -> element``."""
    if len(P) == 0 or len(Q) == 0:
        return OgPoset([]), {}
    top = P.dim + Q.dim
    labels: list[list] = [[] for _ in range(top + 1)]
    for x in P.elements():
        for y in Q.elements():
            labels[x[0] + y[0]].append((x, y))
    for row in labels:
        row.sort()

    def faces_of(lab, sign):
        x, y = lab
        out = [(a, y) for a in P.faces(x, sign)]
        ysign = sign if x[0] % 2 == 0 else -sign
        out += [(x, b) for b in Q.faces(y, ysign)]
        return out

    return _build(labels, faces_of)


def gray(P: OgPoset, Q: OgPoset) -> OgPoset:
    return gray_labelled(P, Q)[0]


def _leg_kind(f: GradedFunction) -> str:
    from .morphism import classify_morphism

    cls = classify_morphism(f)
    if cls.local_embedding:
        return "embedding"
    if cls.comap:
        return "comap"
    raise GrayOfCollapse("Gray products are only defined here for local embeddings and subdivisions")


def gray_map(f: GradedFunction, g: GradedFunction) -> GradedFunction:
    """Componentwise Gray product of two local embeddings, or of two comaps."""
    kinds = {_leg_kind(f), _leg_kind(g)}
    if len(kinds) != 1:
        from .morphism import classify_morphism

        if not (classify_morphism(f).local_embedding and classify_morphism(f).comap) and not (
            classify_morphism(g).local_embedding and classify_morphism(g).comap
        ):
            raise GrayOfCollapse("cannot mix an embedding and a subdivision in one Gray product")
    src, si = gray_labelled(f.source, g.source)
    tgt, ti = gray_labelled(f.target, g.target)
    return GradedFunction(src, tgt, {si[(x, y)]: ti[(f(x), g(y))] for (x, y) in si})


# join ------------------------------------------------------------------------------

def augment(P: OgPoset) -> OgPoset:
    """Add a least element that is an output face of every 0-dimensional element."""
    strata = [[((), ())]]
    strata.append([((), (0,))] * P.size(0))
    for d in range(1, P.dim + 1):
        strata.append(list(P.face_table[d]))
    return OgPoset(strata)


def deaugment(P: OgPoset) -> OgPoset:
    if P.size(0) != 1:
        raise KNotClosed("de-augmentation needs a unique least element")
    strata = [[((), ()) for _ in range(P.size(1))]]
    for d in range(2, P.dim + 1):
        strata.append(list(P.face_table[d]))
    return OgPoset(strata)


def join_labelled(P: OgPoset, Q: OgPoset) -> tuple[OgPoset, dict]:
    """Join with labels ``("inl", x)``, ``("inr", y)`` and ``("join", x, y)``."""
    AP, AQ = augment(P), augment(Q)
    G, gi = gray_labelled(AP, AQ)
    R = deaugment(G)
    bottom = (0, 0)
    labels = {}
    for (a, b), e in gi.items():
        if a == bottom and b == bottom:
            continue
        new = (e[0] - 1, e[1])
        if b == bottom:
            labels[("inl", (a[0] - 1, a[1]))] = new
        elif a == bottom:
            labels[("inr", (b[0] - 1, b[1]))] = new
        else:
            labels[("join", (a[0] - 1, a[1]), (b[0] - 1, b[1]))] = new
    return R, labels


def join(P: OgPoset, Q: OgPoset) -> OgPoset:
    return join_labelled(P, Q)[0]


# partial Gray cylinders -------------------------------------------------------------

@dataclass(frozen=True)
class CylinderSpec:
    base: OgPoset
    K: frozenset


def cylinder_labelled(base: OgPoset, K) -> tuple[OgPoset, dict, dict]:
    """The partial cylinder with labels ``("k", x)`` or ``(i, x)`` for i in "-", "1", "+".

    Returns (carrier, label -> element, element -> projected base element).
    """
    K = frozenset(K.members if isinstance(K, ClosedSubset) else K)
    if not K <= base.all_elements:
        raise KNotClosed("K mentions elements outside the base")
    if not base.is_closed(K):
        raise KNotClosed("K is not closed")
    top = base.dim + 1 if (base.all_elements - K) else base.dim
    labels: list[list] = [[] for _ in range(top + 1)]
    for x in base.elements():
        if x in K:
            labels[x[0]].append(("k", x))
        else:
            labels[x[0]].append(("-", x))
            labels[x[0]].append(("+", x))
            labels[x[0] + 1].append(("1", x))
    order = {"k": 0, "-": 1, "1": 2, "+": 3}
    for row in labels:
        row.sort(key=lambda lab: (lab[1], order[lab[0]]))

    def faces_of(lab, sign):
        tag, x = lab
        if tag == "k":
            return [("k", y) for y in base.faces(x, sign)]
        if tag == "1":
            out = [("-" if sign == MINUS else "+", x)]
            out += [("1", y) for y in base.faces(x, -sign) if y not in K]
            return out
        out = []
        for y in base.faces(x, sign):
            out.append(("k", y) if y in K else (tag, y))
        return out

    carrier, index = _build(labels, faces_of)
    proj = {e: lab[1] for lab, e in index.items()}
    return carrier, index, proj


def partial_cylinder(spec: CylinderSpec) -> tuple[OgPoset, GradedFunction | None]:
    """The cylinder and, when the base is an atom and K lies in its boundary, the collapse onto the base."""
    carrier, _, proj = cylinder_labelled(spec.base, spec.K)
    base = spec.base
    if base.greatest() is None:
        return carrier, None
    if not frozenset(spec.K) <= base.full_boundary(base.all_elements):
        raise KNotInBoundary("K must lie in the boundary of the atom")
    return carrier, GradedFunction(carrier, base, proj)


def generating_collapse(base: OgPoset, K) -> GradedFunction:
    K = frozenset(K)
    if base.greatest() is None:
        raise NotAtomSource("generating collapses are defined over atoms")
    if not base.is_closed(K):
        raise KNotClosed("K is not closed")
    if not K <= base.full_boundary(base.all_elements):
        raise KNotInBoundary("K must lie in the boundary of the atom")
    carrier, _, proj = cylinder_labelled(base, K)
    return GradedFunction(carrier, base, proj)


# pushouts ---------------------------------------------------------------------------

def pushout_embedding(iota: GradedFunction, iota2: GradedFunction) -> tuple[OgPoset, GradedFunction, GradedFunction]:
    """Pushout of two embeddings with a common source."""
    if iota.source != iota2.source:
        raise NotEmbedding("the two legs have different sources")
    for leg in (iota, iota2):
        if not is_embedding(leg):
            raise NotEmbedding("pushout legs must be embeddings")
    ident = {iota2(u): iota(u) for u in iota.source.elements()}
    R, lm, rm = glue(iota.target, iota2.target, ident)
    return R, GradedFunction(iota.target, R, lm), GradedFunction(iota2.target, R, rm)


def pushout_subdivision(iota: GradedFunction, sub: GradedFunction) -> tuple[OgPoset, GradedFunction, GradedFunction]:
    """Substitute V for the image of U along a subdivision U ~> V (given as its comap V -> U).

    Returns (result, comap result -> P, embedding V -> result).
    """
    if not is_embedding(iota):
        raise NotEmbedding("the host leg must be an embedding")
    if sub.target != iota.source:
        raise NotEmbedding("the subdivision does not start at the embedded shape")
    P, V = iota.target, sub.source
    image = iota.image()
    labels: list[list] = [[] for _ in range(max(P.dim, V.dim) + 1)]
    for x in P.elements():
        if x not in image:
            labels[x[0]].append(("old", x))
    for z in V.elements():
        labels[z[0]].append(("new", z))
    # elements of V lying over each element of the image, in the same dimension
    over: dict = {}
    for z in V.elements():
        y = iota(sub(z))
        if y[0] == z[0]:
            over.setdefault(y, []).append(z)

    def faces_of(lab, sign):
        tag, x = lab
        if tag == "new":
            return [("new", z) for z in V.faces(x, sign)]
        out = []
        for y in P.faces(x, sign):
            if y in image:
                out += [("new", z) for z in over.get(y, [])]
            else:
                out.append(("old", y))
        return out

    R, index = _build(labels, faces_of)
    back = {}
    for (tag, x), e in index.items():
        back[e] = x if tag == "old" else iota(sub(x))
    emb = {z: index[("new", z)] for z in V.elements()}
    return R, GradedFunction(R, P, back), GradedFunction(V, R, emb)


def pushout_comerger(iota: GradedFunction, sub: GradedFunction) -> tuple[OgPoset, GradedFunction, GradedFunction]:
    """Substitution along a subdivision whose source is an atom cl{x}."""
    if iota.source.greatest() is None:
        raise NotAtomSource("the substituted region must be an atom")
    return pushout_subdivision(iota, sub)


def closure_embedding(P: OgPoset, x) -> GradedFunction:
    """The inclusion cl{x} -> P, with cl{x} extracted as its own poset."""
    sub, idx = P.restrict(P.down(x))
    return GradedFunction(sub, P, {v: k for k, v in idx.items()})


def subset_embedding(P: OgPoset, subset) -> GradedFunction:
    sub, idx = P.restrict(subset)
    return GradedFunction(sub, P, {v: k for k, v in idx.items()})


__all__ = [
    "CylinderSpec",
    "SIGNS",
    "closure_embedding",
    "generating_collapse",
    "gray",
    "gray_map",
    "join",
    "partial_cylinder",
    "pushout_comerger",
    "pushout_embedding",
    "pushout_subdivision",
    "subset_embedding",
]
