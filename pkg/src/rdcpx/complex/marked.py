"""Markings: horns, saturations, filler and fibrancy searches, equivalence witnesses and the merge closure."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from ..corpus import enumerate_molecules
from ..errors import InvalidMarking, NoBoundaryIso, NotParallel, PasteUndefined
from ..molecule import MoleculeCert, as_cert, atom, is_molecule, merger, paste, _split_candidates
from ..morphism import enumerate_comaps
from ..ogposet import MINUS, PLUS, SIGNS, GradedFunction, OgPoset, sign_char
from .cells import Diagram, DirectedComplex, build_complex, cell_diagram, enumerate_assignments
from .merge import MergeCell, merge_universe


# marked complexes ------------------------------------------------------------------

@dataclass
class MarkedComplex:
    base: DirectedComplex
    marked: frozenset = frozenset()
    variant: str = "plain"

    def __post_init__(self):
        self.marked = frozenset(tuple(r) for r in self.marked)
        if self.variant not in ("plain", "inflate", "merge"):
            raise InvalidMarking(f"unknown variant {self.variant!r}")
        refs = set(self.base.refs())
        for r in self.marked:
            if r not in refs:
                raise InvalidMarking("marking refers to a missing cell", r)
            if r[0] <= 0:
                raise InvalidMarking("cells of dimension 0 cannot be marked", r)
        if self.variant == "inflate":
            missing = getattr(self.base, "degenerate_refs", frozenset()) - self.marked
            if missing:
                raise InvalidMarking("inflate markings contain every degenerate cell", sorted(missing)[0])

    def is_marked(self, ref) -> bool:
        return tuple(ref) in self.marked

    def to_json(self) -> dict:
        out = self.base.to_json()
        out["marked"] = [list(r) for r in sorted(self.marked)]
        out["variant"] = self.variant
        return out


def load_marked_complex(spec) -> MarkedComplex:
    if isinstance(spec, str):
        spec = json.loads(spec)
    base = build_complex(spec)
    return MarkedComplex(base, frozenset(tuple(r) for r in spec.get("marked", [])), spec.get("variant", "plain"))


def all_marked(X: DirectedComplex, variant: str = "plain") -> MarkedComplex:
    return MarkedComplex(X, frozenset(r for r in X.refs() if r[0] > 0), variant)


# horns ----------------------------------------------------------------------------------

def _splits(P: OgPoset, M: frozenset, j: int) -> Iterator[tuple[frozenset, frozenset]]:
    for A, B in _split_candidates(P, M, j):
        if is_molecule(P.restrict(A)[0]) and is_molecule(P.restrict(B)[0]):
            yield A, B


def _peel(P, M, target, i, B, limit) -> Iterator[list]:
    """Decompositions M = L_i #(i-1) (...) #(i-1) R_i down to target, outermost level first."""
    if i == 0:
        if M == target:
            yield []
        return
    j = i - 1

    def ok(part):
        return P.subset_dim(part) <= i and all(z in B for z in part if z[0] == i)

    lefts = [(P.boundary_set(M, j, MINUS), M)] + list(_splits(P, M, j))
    for L, rest in lefts:
        if not target <= rest or not ok(L):
            continue
        rights = [(rest, P.boundary_set(rest, j, PLUS))] + list(_splits(P, rest, j))
        for mid, R in rights:
            if not target <= mid or not ok(R):
                continue
            for tail in _peel(P, mid, target, i - 1, B, limit):
                yield [(L, R)] + tail


def horn_witnesses(U: OgPoset, B: frozenset, x, sign: int, limit: int = 32) -> list[list]:
    """Layering witnesses for a horn, with levels listed innermost (i = 1) first.

    The smallest k admitting a witness is used; at most ``limit`` witnesses are kept.
    """
    n = U.dim
    D = U.boundary_set(U.all_elements, n - 1, sign)
    target = U.down(x)
    for k in range(0, n):
        found: list = []
        seen: set = set()
        for w in _peel(U, D, target, k, B, limit):
            w = tuple(reversed(w))
            if w not in seen:
                seen.add(w)
                found.append(list(w))
            if len(found) >= limit:
                break
        if found:
            return found
    return []


@dataclass
class HornInstance:
    atom: OgPoset
    marking: frozenset
    sign: int
    pivot: tuple
    witnesses: list = field(default_factory=list)

    @property
    def top(self):
        return self.atom.greatest()

    @property
    def domain(self) -> frozenset:
        return self.atom.all_elements - {self.top, self.pivot}

    def identity(self) -> tuple:
        return (self.atom, self.marking, self.pivot, self.sign)

    def check_conditions(self) -> dict:
        """Re-evaluate the four defining conditions without the enumerator."""
        U, B, x, a = self.atom, self.marking, self.pivot, self.sign
        top = self.top
        n = U.dim
        res = {"top_marked": top in B, "pivot_face": x in U.faces(top, a)}
        res["condition_4"] = (x in B) == (U.faces(top, -a) <= B)
        res["witnesses"] = []
        for w in self.witnesses:
            dims = all(U.subset_dim(L) <= i and U.subset_dim(R) <= i for i, (L, R) in enumerate(w, 1))
            marks = all(all(z in B for z in L | R if z[0] == i) for i, (L, R) in enumerate(w, 1))
            M = U.down(x)
            decomp = True
            for i, (L, R) in enumerate(w, 1):
                j = i - 1
                for left, right in ((L, M), (L | M, R)):
                    meet = left & right
                    if meet != U.boundary_set(left, j, PLUS) or meet != U.boundary_set(right, j, MINUS):
                        decomp = False
                for part in (L, R):
                    if part and not is_molecule(U.restrict(part)[0]):
                        decomp = False
                M = L | M | R
            decomp = decomp and M == U.boundary_set(U.all_elements, n - 1, a)
            res["witnesses"].append({"dims": dims, "decomposition": decomp, "marked": marks})
        res["ok"] = (
            res["top_marked"]
            and res["pivot_face"]
            and res["condition_4"]
            and bool(self.witnesses)
            and all(all(v.values()) for v in res["witnesses"])
        )
        return res

    def to_json(self) -> dict:
        return {
            "atom": self.atom.to_json(),
            "marking": [list(z) for z in sorted(self.marking)],
            "pivot": list(self.pivot),
            "sign": sign_char(self.sign),
            "witnesses": [
                [[[list(z) for z in sorted(L)], [list(z) for z in sorted(R)]] for L, R in w] for w in self.witnesses
            ],
        }


def enumerate_marked_horns(universe: Iterable[tuple]) -> Iterator[HornInstance]:
    """All marked horns of the given marked atoms (pairs (U, B)); one per (U, B, x, sign)."""
    for U, B in universe:
        U = U.carrier if isinstance(U, MoleculeCert) else U
        B = frozenset(tuple(z) for z in B)
        top = U.greatest()
        if top is None or top not in B or U.dim == 0:
            continue
        for a in SIGNS:
            for x in sorted(U.faces(top, a)):
                if (x in B) != (U.faces(top, -a) <= B):
                    continue
                ws = horn_witnesses(U, B, x, a)
                if ws:
                    yield HornInstance(U, B, a, x, ws)


def horn_morphisms(X: MarkedComplex, h: HornInstance) -> Iterator[dict]:
    """Morphisms from the marked horn domain into X."""
    B = h.marking

    def allowed(z, ref):
        return z not in B or X.is_marked(ref)

    yield from enumerate_assignments(h.atom, X.base, subset=h.domain, allowed=allowed)


def horn_filler_search(X: MarkedComplex, h: HornInstance, e: dict) -> dict | None:
    """An extension of e to the whole atom respecting the marking, if one exists."""
    B = h.marking
    fixed = {z: (v.ref if hasattr(v, "ref") else tuple(v)) for z, v in e.items()}

    def allowed(z, ref):
        return z not in B or X.is_marked(ref)

    for full in enumerate_assignments(h.atom, X.base, fixed=fixed, allowed=allowed):
        return full
    return None


def _refs(assign: dict) -> list:
    return [[list(z), list(v.ref)] for z, v in sorted(assign.items())]


def fibrancy_report(X: MarkedComplex, inventory: list[HornInstance], n: int | None = None) -> dict:
    items = []
    for h in inventory:
        item = {"horn": {"pivot": list(h.pivot), "sign": sign_char(h.sign), "sizes": list(h.atom.sizes)}}
        item["status"] = "PASS"
        checked = 0
        for e in horn_morphisms(X, h):
            checked += 1
            filler = horn_filler_search(X, h, e)
            if filler is None:
                item["status"] = "FAIL"
                item["witness"] = _refs(e)
                break
            item.setdefault("fillers", []).append({"morphism": _refs(e), "filler": _refs(filler)})
        item["morphisms_checked"] = checked
        items.append(item)
    unmarked = []
    if n is not None:
        unmarked = [list(r) for r in X.base.refs() if r[0] > n and not X.is_marked(r)]
    ok = all(i["status"] == "PASS" for i in items) and not unmarked
    return {"status": "PASS" if ok else "FAIL", "items": items, "unmarked_above_n": unmarked, "n": n}


# saturations ------------------------------------------------------------------------------

@dataclass
class SaturationInstance:
    carrier: OgPoset
    names: dict
    source_marking: frozenset
    target_marking: frozenset


def saturation_instance(U, V, W) -> SaturationInstance:
    """The marking on (R . W) . (U . L) that adds u, v, w to {uv, vw, r, l}."""
    U, V, W = as_cert(U), as_cert(V), as_cert(W)
    n = U.dim
    if n <= 0 or V.dim != n or W.dim != n:
        raise PasteUndefined("saturations need atoms of one positive dimension")
    try:
        uv_path = paste(U, V, n - 1)
        vw_path = paste(V, W, n - 1)
        R = atom(merger(uv_path), uv_path)
        L = atom(vw_path, merger(vw_path))
        RW = paste(R, W, n - 1)
        UL = paste(U, L, n - 1)
        sigma = paste(RW, UL, n)
    except (NoBoundaryIso, ValueError) as exc:
        raise PasteUndefined(f"the saturation shape is undefined: {exc}") from exc

    def top(c):
        return c.carrier.greatest()

    left, right = sigma.left_map, sigma.right_map
    names = {
        "r": left[RW.left_map[top(R)]],
        "uv": left[RW.left_map[R.left_map[top(R.left)]]],
        "u": left[RW.left_map[R.right_map[uv_path.left_map[top(U)]]]],
        "v": left[RW.left_map[R.right_map[uv_path.right_map[top(V)]]]],
        "w": left[RW.right_map[top(W)]],
        "l": right[UL.right_map[top(L)]],
        "vw": right[UL.right_map[L.right_map[top(L.right)]]],
    }
    src = frozenset(names[k] for k in ("uv", "vw", "r", "l"))
    return SaturationInstance(sigma.carrier, names, src, src | {names["u"], names["v"], names["w"]})


# equivalence witnesses --------------------------------------------------------------------

def _parallel(u: Diagram, v: Diagram) -> bool:
    if u.dim != v.dim:
        return False
    return all(u.boundary(None, s) == v.boundary(None, s) for s in SIGNS)


def marked_equiv_search(X: MarkedComplex, u: Diagram, v: Diagram, bound: int | None = None) -> dict:
    """Marked cells (and, with a bound, marked round diagrams) u => v and v => u."""
    if not _parallel(u, v):
        raise NotParallel("u and v do not share their boundaries")
    n = u.dim
    forward, backward = [], []
    for ref in X.base.refs():
        if ref[0] != n + 1 or not X.is_marked(ref):
            continue
        d = cell_diagram(X.base.value(ref))
        src, tgt = d.boundary(n, MINUS), d.boundary(n, PLUS)
        if src == u and tgt == v:
            forward.append(list(ref))
        if src == v and tgt == u:
            backward.append(list(ref))
    if bound is not None:
        for cert in enumerate_molecules(bound, n + 1):
            S = cert.carrier
            if S.dim != n + 1 or S.greatest() is not None or not S.is_round():
                continue
            tops = [z for z in S.elements() if z[0] == n + 1]
            for a in enumerate_assignments(S, X.base, allowed=lambda z, r: z[0] <= n or X.is_marked(r)):
                d = Diagram(S, a, check=False)
                src, tgt = d.boundary(n, MINUS), d.boundary(n, PLUS)
                refs = [list(a[z].ref) for z in tops]
                if src == u and tgt == v:
                    forward.append(refs)
                if src == v and tgt == u:
                    backward.append(refs)
    missing = [name for name, found in (("forward", forward), ("backward", backward)) if not found]
    return {"forward": forward, "backward": backward, "equivalent": not missing, "missing": missing, "bound": bound}


def invertibility_witnesses(X: MarkedComplex, a_ref) -> dict:
    """Marked z_L: a . a_L => e and z_R: h => a_R . a with e and h marked."""
    a_ref = tuple(a_ref)
    n = a_ref[0]
    left, right = [], []
    for ref in X.base.refs():
        if ref[0] != n + 1 or not X.is_marked(ref):
            continue
        d = cell_diagram(X.base.value(ref))
        for sign, bucket in ((MINUS, left), (PLUS, right)):
            pair = d.boundary(n, sign)
            single = d.boundary(n, -sign)
            S = pair.shape
            tops = sorted(z for z in S.elements() if z[0] == n)
            one = single.shape.greatest()
            if len(tops) != 2 or one is None or not X.is_marked(single.assign[one].ref):
                continue
            lower = S.boundary_set(S.all_elements, n - 1, MINUS)
            first = [z for z in tops if S.boundary_set(S.down(z), n - 1, MINUS) <= lower]
            if len(first) != 1:
                continue
            second = [z for z in tops if z != first[0]][0]
            f_ref, s_ref = pair.assign[first[0]].ref, pair.assign[second].ref
            if sign == MINUS and f_ref == a_ref:
                bucket.append({"a_L": list(s_ref), "e": list(single.assign[one].ref), "z_L": list(ref)})
            if sign == PLUS and s_ref == a_ref:
                bucket.append({"a_R": list(f_ref), "h": list(single.assign[one].ref), "z_R": list(ref)})
    return {"left": left, "right": right, "invertible_shape": bool(left and right)}


# marked closure of merge cells ------------------------------------------------------------

@dataclass
class ClosureResult:
    cells: dict  # key -> MergeCell
    bound: int
    rounds: int
    outside_universe: list

    @property
    def label(self) -> str:
        return f"closure at bound {self.bound}"

    def __contains__(self, c) -> bool:
        return c.key() in self.cells

    def __len__(self) -> int:
        return len(self.cells)


class _Factorizations:
    """Factorizations D -> V -> W of a comap through molecules V, cached on the comap."""

    def __init__(self, bound: int):
        self.bound = bound
        self.mols: dict = {}
        for cert in enumerate_molecules(bound, 8):
            self.mols.setdefault(cert.carrier.dim, []).append(cert.carrier)
        self.comaps: dict = {}
        self.cache: dict = {}

    def _comaps(self, A, B):
        if (A, B) not in self.comaps:
            self.comaps[(A, B)] = enumerate_comaps(A, B)
        return self.comaps[(A, B)]

    def of(self, sub: GradedFunction) -> list:
        if sub not in self.cache:
            D, W = sub.source, sub.target
            out = []
            for V in self.mols.get(W.dim, []):
                if len(V) > len(D) or len(V) < len(W):
                    continue
                ss = self._comaps(V, W)
                if not ss:
                    continue
                for t in self._comaps(D, V):
                    for s in ss:
                        if t.then(s) == sub:
                            out.append((V, t))
            self.cache[sub] = out
        return self.cache[sub]


def _implications(c: MergeCell, fz: _Factorizations) -> list[tuple[list, object]]:
    """Per factorization: keys whose marking forces c (condition 1), and the cell c forces (condition 2)."""
    out = []
    d = c.diagram
    for V, t in fz.of(c.sub):
        pieces = []
        for x in V.elements():
            if x[0] != V.dim:
                continue
            pre = t.preimage(V.down(x))
            Dx, idx = d.shape.restrict(pre)
            Vx, vidx = V.restrict(V.down(x))
            diag = Diagram(Dx, {idx[z]: d.assign[z] for z in pre}, check=False)
            pieces.append(MergeCell(diag, GradedFunction(Dx, Vx, {idx[z]: vidx[t(z)] for z in pre})).key())
        forced = MergeCell(d, t) if V.greatest() is not None else None
        out.append((pieces, forced))
    return out


def marked_closure(X: DirectedComplex, seed: Iterable[MergeCell], bound: int) -> ClosureResult:
    """Least set containing the seed and closed under both merge-closure conditions, within the bound."""
    universe = {c.key(): c for c in merge_universe(X, bound)}
    fz = _Factorizations(bound)
    impl = {k: _implications(c, fz) for k, c in universe.items()}
    marked = {}
    outside = []
    for c in seed:
        marked[c.key()] = c
        if c.key() not in universe:
            outside.append(c)
    rounds = 0
    changed = True
    while changed:
        changed = False
        rounds += 1
        for k, c in universe.items():
            for pieces, forced in impl[k]:
                if k not in marked and all(p in marked for p in pieces):
                    marked[k] = c
                    changed = True
                if forced is not None and k in marked and forced.key() not in marked:
                    marked[forced.key()] = universe.get(forced.key(), forced)
                    changed = True
    return ClosureResult(marked, bound, rounds, outside)


def verify_closure(X: DirectedComplex, result: ClosureResult) -> list[str]:
    """Re-check both closure conditions over the universe at the result's bound."""
    fz = _Factorizations(result.bound)
    problems = []
    for c in merge_universe(X, result.bound):
        k = c.key()
        for pieces, forced in _implications(c, fz):
            if all(p in result.cells for p in pieces) and k not in result.cells:
                problems.append(f"composite of marked pieces not marked: {c!r}")
            if forced is not None and k in result.cells and forced.key() not in result.cells:
                problems.append(f"boundary decomposition of a marked cell not marked: {forced!r}")
    return problems


__all__ = [
    "ClosureResult",
    "HornInstance",
    "MarkedComplex",
    "SaturationInstance",
    "all_marked",
    "enumerate_marked_horns",
    "fibrancy_report",
    "horn_filler_search",
    "horn_morphisms",
    "horn_witnesses",
    "invertibility_witnesses",
    "load_marked_complex",
    "marked_closure",
    "marked_equiv_search",
    "saturation_instance",
    "verify_closure",
]
