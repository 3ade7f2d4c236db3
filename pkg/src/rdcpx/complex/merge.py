"""Cells of free merge-complexes: pairs [diagram, subdivision], composites and star operations."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..construct import _build
from ..corpus import enumerate_atoms, enumerate_molecules
from ..errors import BoundaryMismatch, GlueMismatch, NotRound, ShapeMismatch
from ..morphism import (
    SclMorphism,
    classify_morphism,
    co_merger,
    enumerate_comaps,
    globe_subdivision,
    pullback_collapse_subdivision,
)
from ..ogposet import GradedFunction, OgPoset, canonical_form, find_isomorphism
from .cells import Diagram, DirectedComplex, cell_diagram, closure_iso, diagram_paste, enumerate_diagrams
from .inflate import degeneracy


@dataclass(frozen=True, eq=False)
class MergeCell:
    """[diagram, sub] where sub: diagram.shape -> W is the comap of a subdivision of the atom W."""

    diagram: Diagram
    sub: GradedFunction
    _key: list = field(default_factory=list, repr=False)

    @property
    def shape(self) -> OgPoset:
        return self.sub.target

    @property
    def dim(self) -> int:
        return self.shape.dim

    def key(self) -> tuple:
        if not self._key:
            W = self.shape
            wkey, wpos = canonical_form(W)
            labels = {d: (v.key(), wpos[self.sub(d)]) for d, v in self.diagram.assign.items()}
            self._key.append(("m", wkey, canonical_form(self.diagram.shape, labels)[0]))
        return self._key[0]

    def face(self, a) -> "MergeCell":
        W = self.shape
        if a == W.greatest():
            return self
        pre = self.sub.preimage(W.down(a))
        D, idx = self.diagram.shape.restrict(pre)
        Wa, widx = W.restrict(W.down(a))
        diag = Diagram(D, {idx[x]: self.diagram.assign[x] for x in pre}, check=False)
        return MergeCell(diag, GradedFunction(D, Wa, {idx[x]: widx[self.sub(x)] for x in pre}))

    def is_identity_pair(self) -> bool:
        return self.sub.is_identity()

    def __eq__(self, other) -> bool:
        return isinstance(other, MergeCell) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"MergeCell(shape={list(self.shape.sizes)}, middle={list(self.diagram.shape.sizes)})"

    def to_json(self) -> dict:
        return {"diagram": self.diagram.to_json(), "sub": self.sub.to_json()}


def merge_cell(u: Diagram, s: GradedFunction) -> MergeCell:
    if s.source != u.shape:
        raise ShapeMismatch("the subdivision does not start at the diagram's shape")
    if s.target.greatest() is None:
        raise ShapeMismatch("merge cells have atom shapes")
    if not classify_morphism(s).comap:
        raise ShapeMismatch("s is not the comap of a subdivision")
    return MergeCell(u, s)


def sigma(value) -> MergeCell:
    """The cell [value, id]."""
    d = cell_diagram(value)
    return MergeCell(d, GradedFunction.identity(d.shape))


def merge_act(c: MergeCell, m: SclMorphism) -> MergeCell:
    """Restrict c along a local subdivision-collapse m ending at c's shape."""
    if m.target != c.shape:
        raise ShapeMismatch("the morphism does not end at the cell's shape")
    down, back = pullback_collapse_subdivision(m.post, c.sub)
    return MergeCell(c.diagram.precompose(down), back.then(m.sub))


# flattening diagrams of merge cells ------------------------------------------------------

def _values_are_merge(d: Diagram) -> bool:
    return all(isinstance(v, MergeCell) for v in d.assign.values())


def flatten(D: Diagram) -> tuple[Diagram, GradedFunction]:
    """Glue the middles of a diagram of merge cells; returns (diagram, comap onto D's shape)."""
    S = D.shape
    info = {}
    for z in S.elements():
        m = D.assign[z]
        phi = closure_iso(S, z, m.shape)
        inv = {v: k for k, v in phi.items()}
        top = m.shape.greatest()
        info[z] = (m, phi, inv, [w for w in m.diagram.shape.elements() if m.sub(w) == top])
    idents: dict = {}

    def ident(z, z2) -> dict:
        if (z, z2) not in idents:
            m, phi, inv, _ = info[z]
            m2, phi2, _, _ = info[z2]
            pre = m.sub.preimage(m.shape.down(phi[z2]))
            sub, idx = m.diagram.shape.restrict(pre)
            back = {v: k for k, v in idx.items()}
            iso = find_isomorphism(
                sub,
                m2.diagram.shape,
                allowed=lambda s_, t_: m.diagram.assign[back[s_]].key() == m2.diagram.assign[t_].key()
                and phi2[inv[m.sub(back[s_])]] == m2.sub(t_),
            )
            if iso is None:
                raise GlueMismatch("merge cells disagree on a shared face", (z, z2))
            idents[(z, z2)] = {back[s_]: t for s_, t in iso.items()}
        return idents[(z, z2)]

    labels: list[list] = [[] for _ in range(max((w[0] for z in info for w in info[z][3]), default=-1) + 1)]
    for z in sorted(info):
        for w in sorted(info[z][3]):
            labels[w[0]].append((z, w))

    def faces_of(lab, sign):
        z, w = lab
        m, phi, inv, _ = info[z]
        out = []
        for w2 in m.diagram.shape.faces(w, sign):
            z2 = inv[m.sub(w2)]
            out.append((z, w2) if z2 == z else (z2, ident(z, z2)[w2]))
        return out

    flat, index = _build(labels, faces_of)
    assign = {index[(z, w)]: info[z][0].diagram.assign[w] for (z, w) in index}
    comap = GradedFunction(flat, S, {e: lab[0] for lab, e in index.items()})
    return Diagram(flat, assign, check=False), comap


def _as_pair(c) -> tuple[Diagram, GradedFunction]:
    """A round diagram or merge cell as (flat diagram, comap onto its own shape)."""
    if isinstance(c, MergeCell):
        return c.diagram, c.sub
    if _values_are_merge(c):
        return flatten(c)
    return c, GradedFunction.identity(c.shape)


def merger_composite(c) -> MergeCell:
    """The merger of a round diagram; a merge cell is its own merger."""
    if isinstance(c, MergeCell):
        return c
    if not c.shape.is_round():
        raise NotRound("mergers exist for round diagrams")
    d, s = _as_pair(c)
    return MergeCell(d, s.then(co_merger(c.shape)))


def globular_composite(c) -> MergeCell:
    shape = c.shape
    if not shape.is_round():
        raise NotRound("globular composites exist for round diagrams")
    d, s = _as_pair(c)
    return MergeCell(d, s.then(globe_subdivision(shape)))


# rounding and star composition ---------------------------------------------------------

def rounding_step(w: Diagram, j: int) -> Diagram:
    """w pasted at j with the unit on its output j-boundary."""
    if j >= w.dim:
        return w
    return diagram_paste(w, degeneracy(w.boundary(j, 1), "unit"), j)


def rounding(w: Diagram, n: int, k: int) -> Diagram:
    """The rounding R^n_k: apply the unit-pasting steps at k, ..., n-1."""
    for j in range(k, n):
        w = rounding_step(w, j)
    return w


def _is_globe(U: OgPoset, n: int) -> bool:
    from ..molecule import globe

    return U.dim == n and find_isomorphism(U, globe(n).carrier) is not None


def globular_star(u: MergeCell, v: MergeCell, k: int) -> MergeCell:
    n = u.dim
    if v.dim != n or not (_is_globe(u.shape, n) and _is_globe(v.shape, n)):
        raise BoundaryMismatch("star composition takes two globe-shaped cells of one dimension")
    if not 0 <= k < n:
        raise BoundaryMismatch("k must lie below the dimension")
    try:
        w = diagram_paste(cell_diagram(u), cell_diagram(v), k)
    except (GlueMismatch, ValueError) as exc:
        raise BoundaryMismatch(f"cells are not composable at {k}: {exc}") from exc
    return globular_composite(rounding(w, n, k + 1))


# bounded enumeration ---------------------------------------------------------------------

def enumerate_merge_cells(X: DirectedComplex, W: OgPoset, bound: int) -> list[MergeCell]:
    """All cells [u, s] of shape W whose middle has at most ``bound`` elements."""
    out: dict = {}
    for cert in enumerate_molecules(bound, W.dim):
        D = cert.carrier
        if D.dim != W.dim:
            continue
        comaps = enumerate_comaps(D, W)
        if not comaps:
            continue
        for d in enumerate_diagrams(D, X):
            for s in comaps:
                c = MergeCell(d, s)
                out.setdefault(c.key(), c)
    return [out[k] for k in sorted(out, key=repr)]


def merge_universe(X: DirectedComplex, bound: int, max_dim: int | None = None) -> list[MergeCell]:
    """Every merge cell of dimension >= 1 whose middle has at most ``bound`` elements."""
    top = X.dim if max_dim is None else max_dim
    cells: list = []
    for cert in enumerate_atoms(bound, top):
        W = cert.carrier
        if W.dim >= 1:
            cells += enumerate_merge_cells(X, W, bound)
    return cells


__all__ = [
    "MergeCell",
    "enumerate_merge_cells",
    "flatten",
    "globular_composite",
    "globular_star",
    "merge_act",
    "merge_cell",
    "merge_universe",
    "merger_composite",
    "rounding",
    "sigma",
]
