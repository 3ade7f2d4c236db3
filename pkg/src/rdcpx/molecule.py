"""Molecules: construction by the Point/Paste/Atom clauses, recognition, and operations on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .errors import (
    BoundaryMismatch,
    DimMismatch,
    NoBoundaryIso,
    NotAMolecule,
    NotEmbedding,
    NotRewritable,
    NotRound,
    NotSubmolecule,
)
from .ogposet import (
    BOTH,
    MINUS,
    PLUS,
    SIGNS,
    Elem,
    GradedFunction,
    OgPoset,
    canonical_form,
    check_oriented_thinness,
    find_isomorphism,
    relabel,
    validate_ogposet,
)


@dataclass(eq=False)
class MoleculeCert:
    """A construction tree for a molecule.

    ``left``/``right`` are the pasted halves (Paste) or the input/output
    boundaries (Atom); ``left_map``/``right_map`` embed their carriers into
    ``carrier``.
    """

    clause: str
    carrier: OgPoset
    k: int | None = None
    left: "MoleculeCert | None" = None
    right: "MoleculeCert | None" = None
    left_map: dict = field(default_factory=dict)
    right_map: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.carrier.dim

    @property
    def is_atom(self) -> bool:
        return self.clause in ("point", "atom")

    def is_round(self) -> bool:
        return self.carrier.is_round()

    def to_json(self) -> dict:
        if self.clause == "point":
            return {"clause": "point"}
        if self.clause == "paste":
            return {"clause": "paste", "k": self.k, "left": self.left.to_json(), "right": self.right.to_json()}
        return {"clause": "atom", "input": self.left.to_json(), "output": self.right.to_json()}

    def transported(self, carrier: OgPoset, iso: dict) -> "MoleculeCert":
        """Same tree, with the root carrier renamed along ``iso: self.carrier -> carrier``."""
        return MoleculeCert(
            self.clause,
            carrier,
            self.k,
            self.left,
            self.right,
            {x: iso[y] for x, y in self.left_map.items()},
            {x: iso[y] for x, y in self.right_map.items()},
        )

    def __repr__(self) -> str:
        return f"MoleculeCert({self.clause}, sizes={list(self.carrier.sizes)})"


def cert_from_json(raw) -> MoleculeCert:
    clause = raw["clause"]
    if clause == "point":
        return point()
    if clause == "paste":
        return paste(cert_from_json(raw["left"]), cert_from_json(raw["right"]), raw.get("k"))
    if clause == "atom":
        return atom(cert_from_json(raw["input"]), cert_from_json(raw["output"]))
    raise NotAMolecule(f"unknown clause {clause!r}")


def replay(cert: MoleculeCert) -> OgPoset:
    """Rebuild the carrier from the clause tree alone."""
    return cert_from_json(cert.to_json()).carrier


# gluing --------------------------------------------------------------------

def glue(P: OgPoset, Q: OgPoset, ident: dict) -> tuple[OgPoset, dict, dict]:
    """Pushout of P and Q along ``ident``: a closed part of Q -> elements of P.

    P's elements keep their positions; Q's remaining elements are appended.
    """
    strata = [[(set(i), set(o)) for i, o in stratum] for stratum in P.face_table]
    p_map = {x: x for x in P.elements()}
    q_map = dict(ident)
    for y in Q.elements():
        if y in ident:
            continue
        d = y[0]
        while len(strata) <= d:
            strata.append([])
        q_map[y] = (d, len(strata[d]))
        strata[d].append(None)
    for y in Q.elements():
        if y in ident:
            continue
        ins = {q_map[z][1] for z in Q.faces(y, MINUS)}
        outs = {q_map[z][1] for z in Q.faces(y, PLUS)}
        strata[y[0]][q_map[y][1]] = (ins, outs)
    return OgPoset(strata), p_map, q_map


def boundary_iso(U: OgPoset, V: OgPoset, k: int, su: int, sv: int) -> dict | None:
    """The isomorphism from the k-boundary of V (sign sv) to that of U (sign su)."""
    bu = U.boundary_set(U.all_elements, k, su)
    bv = V.boundary_set(V.all_elements, k, sv)
    pu, iu = U.restrict(bu)
    pv, iv = V.restrict(bv)
    phi = find_isomorphism(pv, pu)
    if phi is None:
        return None
    back_u = {v: k_ for k_, v in iu.items()}
    return {y: back_u[phi[iv[y]]] for y in bv}


# clauses ---------------------------------------------------------------------

def point() -> MoleculeCert:
    return MoleculeCert("point", OgPoset([[((), ())]]))


def arrow() -> MoleculeCert:
    return globe(1)


def globe(n: int) -> MoleculeCert:
    cert = point()
    for _ in range(n):
        cert = atom(cert, cert)
    return cert


def paste(U: MoleculeCert, V: MoleculeCert, k: int | None = None, iota: dict | None = None, into: str = "right") -> MoleculeCert:
    """Paste V onto U along the k-boundary.

    Without ``iota`` the full boundaries must be isomorphic.  With ``iota``
    one boundary is glued onto a submolecule of the other: for
    ``into="right"`` iota maps the output k-boundary of U into the input
    k-boundary of V; for ``into="left"`` it maps the input k-boundary of V
    into the output k-boundary of U.
    """
    if k is None:
        k = min(U.dim, V.dim) - 1
    if k < 0:
        raise NoBoundaryIso("pasting needs k >= 0")
    P, Q = U.carrier, V.carrier
    if iota is None:
        ident = boundary_iso(P, Q, k, PLUS, MINUS)
        if ident is None:
            raise NoBoundaryIso(f"output {k}-boundary of the left factor and input {k}-boundary of the right factor differ")
        carrier, lm, rm = glue(P, Q, ident)
        return MoleculeCert("paste", carrier, k, U, V, lm, rm)
    if into == "right":
        src_bd = P.boundary_set(P.all_elements, k, PLUS)
        tgt_bd = Q.boundary_set(Q.all_elements, k, MINUS)
        if set(iota) != set(src_bd) or not set(iota.values()) <= tgt_bd:
            raise NotSubmolecule("iota does not land in the input boundary")
        sub_src, _ = P.restrict(src_bd)
        host, h_idx = Q.restrict(tgt_bd)
        s_idx = P.restrict(src_bd)[1]
        inner = GradedFunction(sub_src, host, {s_idx[x]: h_idx[iota[x]] for x in src_bd})
        if is_submolecule(inner) is None:
            raise NotSubmolecule("iota is not a submolecule inclusion")
        # glue U onto V: V keeps its labels, U's boundary is identified through iota
        carrier, vm, um = glue(Q, P, dict(iota))
        cert = recognize_molecule(carrier)
        if cert is None:
            raise NotSubmolecule("pasting at the submolecule is not a molecule")
        return _with_maps(cert, um, vm)
    src_bd = Q.boundary_set(Q.all_elements, k, MINUS)
    tgt_bd = P.boundary_set(P.all_elements, k, PLUS)
    if set(iota) != set(src_bd) or not set(iota.values()) <= tgt_bd:
        raise NotSubmolecule("iota does not land in the output boundary")
    sub_src, s_idx = Q.restrict(src_bd)
    host, h_idx = P.restrict(tgt_bd)
    inner = GradedFunction(sub_src, host, {s_idx[x]: h_idx[iota[x]] for x in src_bd})
    if is_submolecule(inner) is None:
        raise NotSubmolecule("iota is not a submolecule inclusion")
    carrier, um, vm = glue(P, Q, dict(iota))
    cert = recognize_molecule(carrier)
    if cert is None:
        raise NotSubmolecule("pasting at the submolecule is not a molecule")
    return _with_maps(cert, um, vm)


def _with_maps(cert: MoleculeCert, um: dict, vm: dict) -> MoleculeCert:
    """A recognised cert whose side maps are replaced by the pasting embeddings."""
    out = MoleculeCert(cert.clause, cert.carrier, cert.k, cert.left, cert.right, cert.left_map, cert.right_map)
    out.glue_maps = (um, vm)
    return out


def atom(U: MoleculeCert, V: MoleculeCert) -> MoleculeCert:
    """The atom U => V with input boundary U and output boundary V."""
    P, Q = U.carrier, V.carrier
    if P.dim != Q.dim:
        raise DimMismatch(f"input has dimension {P.dim}, output {Q.dim}")
    if not P.is_round():
        raise NotRound("input boundary is not round")
    if not Q.is_round():
        raise NotRound("output boundary is not round")
    n = P.dim
    ident: dict = {}
    for s in SIGNS:
        part = boundary_iso(P, Q, n - 1, s, s)
        if part is None:
            raise NoBoundaryIso("input and output do not share boundaries")
        for y, x in part.items():
            if ident.setdefault(y, x) != x:
                raise NoBoundaryIso("boundary isomorphisms disagree on the overlap")
    carrier, lm, rm = glue(P, Q, ident)
    strata = [list(s) for s in carrier.face_table]
    while len(strata) <= n + 1:
        strata.append([])
    ins = [lm[x][1] for x in P.elements() if x[0] == n]
    outs = [rm[y][1] for y in Q.elements() if y[0] == n]
    strata[n + 1].append((ins, outs))
    return MoleculeCert("atom", OgPoset(strata), None, U, V, lm, rm)


# recognition -------------------------------------------------------------------

_MEMO: dict = {}


def _down_closed_subsets(items: list, preds: dict) -> Iterator[frozenset]:
    """All subsets A with preds(y) <= A for every y in A."""
    units: list = []
    placed: set = set()
    for x in items:
        if x in placed:
            continue
        unit = frozenset({x} | {y for y in preds[x] if x in preds[y]})
        placed |= unit
        units.append(unit)
    unit_preds = [frozenset().union(*(preds[x] for x in u)) - u for u in units]
    order = sorted(range(len(units)), key=lambda i: len(unit_preds[i]))

    def rec(pos: int, chosen: frozenset):
        if pos == len(order):
            yield chosen
            return
        i = order[pos]
        yield from rec(pos + 1, chosen)
        if unit_preds[i] <= chosen:
            yield from rec(pos + 1, chosen | units[i])

    yield from rec(0, frozenset())


def flow_preds(P: OgPoset, subset: frozenset, k: int) -> tuple[list, dict]:
    """Maximal elements of dimension > k and their transitive k-flow predecessors."""
    maxs = sorted(x for x in P.maximal(subset) if x[0] > k)
    out_bd = {x: P.boundary_set(P.down(x), k, PLUS) for x in maxs}
    in_bd = {x: P.boundary_set(P.down(x), k, MINUS) for x in maxs}
    direct = {
        y: {x for x in maxs if x != y and any(z[0] == k for z in out_bd[x] & in_bd[y])}
        for y in maxs
    }
    preds = {}
    for y in maxs:
        seen: set = set()
        stack = list(direct[y])
        while stack:
            x = stack.pop()
            if x not in seen:
                seen.add(x)
                stack.extend(direct[x])
        preds[y] = frozenset(seen)
    return maxs, preds


def _split_candidates(P: OgPoset, subset: frozenset, k: int) -> Iterator[tuple[frozenset, frozenset]]:
    maxs, preds = flow_preds(P, subset, k)
    if len(maxs) < 2:
        return
    lower = P.boundary_set(subset, k, MINUS)
    upper = P.boundary_set(subset, k, PLUS)
    full = frozenset(maxs)
    for A in _down_closed_subsets(maxs, preds):
        if not A or A == full:
            continue
        U = P.closure_set(A) | lower
        V = P.closure_set(full - A) | upper
        if U | V != subset:
            continue
        meet = U & V
        if meet != P.boundary_set(U, k, PLUS) or meet != P.boundary_set(V, k, MINUS):
            continue
        yield U, V


def _quick_reject(P: OgPoset) -> bool:
    if not P.is_connected():
        return True
    for x in P.elements():
        if x[0] > 0 and (not P.faces(x, MINUS) or not P.faces(x, PLUS)):
            return True
    return not check_oriented_thinness(P).ok


def recognize_molecule(P: OgPoset) -> MoleculeCert | None:
    """A construction certificate for P if P is a molecule, else None.

    Results are memoised on the canonical form of P and transported back.
    """
    key, pos = canonical_form(P)
    if key not in _MEMO:
        _MEMO[key] = _recognize(relabel(P, pos))
    cert = _MEMO[key]
    if cert is None:
        return None
    return cert.transported(P, {v: k for k, v in pos.items()})


def _recognize(P: OgPoset) -> MoleculeCert | None:
    if len(P) == 0:
        return None
    if P.dim == 0:
        return point() if len(P) == 1 else None
    if _quick_reject(P):
        return None
    everything = P.all_elements
    top = P.greatest()
    n = P.dim
    if top is not None:
        halves = []
        for s in SIGNS:
            sub, idx = P.restrict(P.boundary_set(everything, n - 1, s))
            c = recognize_molecule(sub)
            if c is None or not sub.is_round():
                return None
            halves.append((c, idx))
        try:
            built = atom(halves[0][0], halves[1][0])
        except (NotRound, NoBoundaryIso, DimMismatch):
            return None
        iso = find_isomorphism(built.carrier, P)
        if iso is None:
            return None
        return built.transported(P, iso)
    for k in range(n - 1, -1, -1):
        for U, V in _split_candidates(P, everything, k):
            pu, iu = P.restrict(U)
            pv, iv = P.restrict(V)
            cu = recognize_molecule(pu)
            if cu is None:
                continue
            cv = recognize_molecule(pv)
            if cv is None:
                continue
            lm = {iu[x]: x for x in U}
            rm = {iv[x]: x for x in V}
            return MoleculeCert("paste", P, k, cu, cv, lm, rm)
    return None


def is_molecule(P: OgPoset) -> bool:
    return recognize_molecule(P) is not None


def is_atom_carrier(P: OgPoset) -> bool:
    return P.greatest() is not None and is_molecule(P)


def is_regular(P: OgPoset) -> bool:
    """Every closure cl{x} is an atom."""
    return all(is_molecule(P.restrict(P.down(x))[0]) for x in P.elements())


def as_cert(U) -> MoleculeCert:
    if isinstance(U, MoleculeCert):
        return U
    cert = recognize_molecule(U)
    if cert is None:
        raise NotAMolecule("carrier is not a molecule")
    return cert


# submolecules ----------------------------------------------------------------------

@dataclass
class SubmolWitness:
    """Nested pasting factors, outermost first, each given as a subset of the host."""

    chain: list

    def replay(self, iota: GradedFunction) -> bool:
        U = iota.target
        current = U.all_elements
        for clause, k, side, members in self.chain:
            if not members <= current:
                return False
            sub, _ = U.restrict(members)
            if clause == "factor" and not is_molecule(sub):
                return False
            current = members
        if current != iota.image():
            return False
        sub, idx = U.restrict(current)
        return find_isomorphism(iota.source, sub, fixed={x: idx[iota(x)] for x in iota.source.elements()}) is not None


def _submol_chain(P: OgPoset, subset: frozenset, image: frozenset, depth: int) -> list | None:
    if image == subset:
        return [("iso", None, None, subset)]
    if depth <= 0:
        return None
    d = P.subset_dim(subset)
    for k in range(d - 1, -1, -1):
        for s in SIGNS:
            bd = P.boundary_set(subset, k, s)
            if image <= bd and bd != subset:
                rest = _submol_chain(P, bd, image, depth - 1)
                if rest is not None:
                    return [("factor", k, s, bd)] + rest
    for k in range(d - 1, -1, -1):
        for U, V in _split_candidates(P, subset, k):
            for side, half in (("left", U), ("right", V)):
                if image <= half and is_molecule(P.restrict(half)[0]):
                    rest = _submol_chain(P, half, image, depth - 1)
                    if rest is not None:
                        return [("factor", k, side, half)] + rest
    return None


def is_embedding(iota: GradedFunction) -> bool:
    if not iota.is_injective():
        return False
    P, Q = iota.source, iota.target
    for x in P.elements():
        y = iota(x)
        if y[0] != x[0]:
            return False
        for s in SIGNS:
            if {iota(z) for z in P.faces(x, s)} != set(Q.faces(y, s)):
                return False
    return True


def is_submolecule(iota: GradedFunction) -> SubmolWitness | None:
    if not is_embedding(iota):
        raise NotEmbedding("submolecule inclusion must be an embedding")
    if not is_molecule(iota.source) or not is_molecule(iota.target):
        return None
    U = iota.target
    chain = _submol_chain(U, U.all_elements, iota.image(), len(U) + 1)
    return None if chain is None else SubmolWitness(chain)


# substitution and mergers -------------------------------------------------------------

@dataclass
class Substitution:
    cert: MoleculeCert
    w_map: dict  # elements of W -> result
    u_map: dict  # elements of U outside the rewritten interior -> result


def substitute_with_maps(U, iota: GradedFunction, W) -> Substitution:
    U = as_cert(U)
    W = as_cert(W)
    host = U.carrier
    V = iota.source
    if iota.target != host:
        raise NotRewritable("iota does not target U")
    if V.dim != host.dim:
        raise NotRewritable("rewritable submolecules have full dimension")
    if not V.is_round():
        raise NotRewritable("rewritable submolecules are round")
    if is_submolecule(iota) is None:
        raise NotSubmolecule("iota is not a submolecule inclusion")
    try:
        rule = atom(as_cert(V), W)
    except (NotRound, NoBoundaryIso, DimMismatch) as exc:
        raise BoundaryMismatch(f"cannot form the rewrite atom: {exc}") from exc
    ident = {rule.left_map[v]: iota(v) for v in V.elements()}
    glued, u_map, a_map = glue(host, rule.carrier, ident)
    n = host.dim
    out_bd = glued.boundary_set(glued.all_elements, n, PLUS)
    result, idx = glued.restrict(out_bd)
    cert = recognize_molecule(result)
    if cert is None:
        raise BoundaryMismatch("substitution did not produce a molecule")
    w_map = {w: idx[a_map[rule.right_map[w]]] for w in W.carrier.elements()}
    keep = {x: idx[u_map[x]] for x in host.elements() if u_map[x] in idx}
    return Substitution(cert, w_map, keep)


def substitute(U, iota: GradedFunction, W) -> MoleculeCert:
    return substitute_with_maps(U, iota, W).cert


def merger_with_map(U) -> tuple[MoleculeCert, dict]:
    """The merger of a round molecule and the embedding of its boundary."""
    U = as_cert(U)
    P = U.carrier
    if not P.is_round():
        raise NotRound("merger needs a round molecule")
    if P.dim <= 0:
        return U, {x: x for x in P.elements()}
    n = P.dim
    parts = []
    for s in SIGNS:
        sub, idx = P.restrict(P.boundary_set(P.all_elements, n - 1, s))
        parts.append((as_cert(sub), idx))
    m = atom(parts[0][0], parts[1][0])
    emb: dict = {}
    for (c, idx), side_map in zip(parts, (m.left_map, m.right_map)):
        for x, y in idx.items():
            emb[x] = side_map[y]
    return m, emb


def merger(U) -> MoleculeCert:
    return merger_with_map(U)[0]


# layerings ------------------------------------------------------------------------

@dataclass
class Layering:
    k: int
    parts: list  # closed subsets of the host, in pasting order

    def carriers(self, host: OgPoset) -> list[OgPoset]:
        return [host.restrict(p)[0] for p in self.parts]


def layerings(U, k: int) -> list[Layering]:
    """Decompositions U = U1 #k ... #k Um with as many parts as possible."""
    P = U.carrier if isinstance(U, MoleculeCert) else U
    return layerings_of_subset(P, P.all_elements, k)


def layerings_of_subset(P: OgPoset, subset: frozenset, k: int) -> list[Layering]:
    subset = frozenset(subset)
    if k >= P.subset_dim(subset):
        return [Layering(k, [subset])]
    maxs, preds = flow_preds(P, subset, k)
    found: list = []
    seen: set = set()
    mol_cache: dict = {}

    def molecule(part: frozenset) -> bool:
        if part not in mol_cache:
            mol_cache[part] = is_molecule(P.restrict(part)[0])
        return mol_cache[part]

    lower = P.boundary_set(subset, k, MINUS)

    def rec(done: frozenset, acc: frozenset, parts: list):
        remaining = [x for x in maxs if x not in done]
        if not remaining:
            if acc == subset:
                key = tuple(parts)
                if key not in seen:
                    seen.add(key)
                    found.append(Layering(k, list(parts)))
            return
        rem = frozenset(remaining)
        front = P.boundary_set(acc, k, PLUS)
        blocks = [
            A
            for A in _down_closed_subsets(remaining, {x: preds[x] & rem for x in remaining})
            if A
        ]
        blocks.sort(key=lambda A: (len(A), sorted(A)))
        for A in blocks:
            part = P.closure_set(A) | front
            if P.boundary_set(part, k, MINUS) != front or (acc & part) != front:
                continue
            if not molecule(part):
                continue
            rec(done | A, acc | part, parts + [part])

    rec(frozenset(), lower, [])
    if not found:
        return []
    best = max(len(layer.parts) for layer in found)
    return [layer for layer in found if len(layer.parts) == best]


def load_molecule(raw) -> MoleculeCert:
    if isinstance(raw, dict) and "clause" in raw:
        return cert_from_json(raw)
    return as_cert(validate_ogposet(raw))


__all__ = [
    "BOTH",
    "Elem",
    "Layering",
    "MoleculeCert",
    "SubmolWitness",
    "Substitution",
    "arrow",
    "atom",
    "globe",
    "is_submolecule",
    "layerings",
    "merger",
    "paste",
    "point",
    "recognize_molecule",
    "substitute",
]
