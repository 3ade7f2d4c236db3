"""Degenerate cells: pairs (cell, collapse), their normal form, units and unitors."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..construct import cylinder_labelled
from ..errors import NotACollapse, NotRewritable
from ..morphism import classify_morphism, enumerate_collapses
from ..ogposet import MINUS, PLUS, GradedFunction, OgPoset
from .cells import (
    Cell,
    Diagram,
    DirectedComplex,
    XCell,
    canonical_atom,
    closure_iso,
    degenerate,
    rewritable_check,
)


@dataclass(frozen=True, eq=False)
class InflateCell:
    """The cell base . collapse; normal when base is a cell of the underlying complex."""

    base: object
    collapse: GradedFunction
    _key: list = field(default_factory=list, repr=False)

    @property
    def normal(self) -> bool:
        return isinstance(self.base, XCell)

    @property
    def shape(self) -> OgPoset:
        return self.collapse.source

    @property
    def dim(self) -> int:
        return self.shape.dim

    def key(self) -> tuple:
        if not self._key:
            base, p = _flatten(self)
            c = degenerate(base, p)
            if isinstance(c, XCell):
                self._key.append(c.key())
            else:
                A, pos = canonical_atom(c.shape)
                mapping = tuple(sorted((pos[a], c.collapse(a)) for a in c.shape.elements()))
                self._key.append(("i", c.base.key(), A.face_table, mapping))
        return self._key[0]

    def face(self, a):
        p = self.collapse
        b = p(a)
        y = self.base.face(b) if b != self.base.shape.greatest() else self.base
        iso = closure_iso(self.base.shape, b, y.shape)
        sub, idx = self.shape.restrict(self.shape.down(a))
        back = {v: k for k, v in idx.items()}
        r = GradedFunction(sub, y.shape, {e: iso[p(back[e])] for e in sub.elements()})
        return degenerate(y, r)

    def __eq__(self, other) -> bool:
        return hasattr(other, "key") and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"InflateCell(base={self.base!r}, sizes={list(self.shape.sizes)})"


def _flatten(c) -> tuple:
    base, p = c.base, c.collapse
    while isinstance(base, InflateCell):
        p = p.then(base.collapse)
        base = base.base
    return base, p


def ez_normalize(c):
    """The unique (non-degenerate cell, collapse) pair presenting c."""
    if not isinstance(c, InflateCell):
        return c
    base, p = _flatten(c)
    if not classify_morphism(p).cylindrical_collapse:
        raise NotACollapse("the composite is not a collapse of atoms")
    return degenerate(base, p)


def normal_pair(c) -> tuple[XCell, GradedFunction]:
    c = ez_normalize(c)
    if isinstance(c, XCell):
        return c, GradedFunction.identity(c.shape)
    return c.base, c.collapse


# units and unitors ------------------------------------------------------------------

def degeneracy(u: Diagram, kind: str = "unit", iota: GradedFunction | None = None) -> Diagram:
    """Units and unitors as precomposition with the matching partial-cylinder collapse."""
    U = u.shape
    full = U.full_boundary(U.all_elements)
    if kind == "unit":
        K = full
    elif kind in ("left_unitor", "right_unitor"):
        if iota is None:
            raise NotRewritable("unitors need a rewritable subdiagram")
        sign = MINUS if kind == "left_unitor" else PLUS
        K = full - rewritable_check(U, iota, sign)
    else:
        raise ValueError(f"unknown degeneracy kind {kind!r}")
    carrier, _, proj = cylinder_labelled(U, K)
    return u.precompose(GradedFunction(carrier, U, proj))


def unit_of(value):
    """The unit on a single cell, as a cell of one dimension higher."""
    from .cells import cell_diagram

    return degeneracy(cell_diagram(value), "unit").top()


def collapse_subsets(base: OgPoset) -> list[frozenset]:
    """Closed subsets of the boundary of an atom, the admissible K for generating collapses."""
    from ..morphism import closed_subsets

    return closed_subsets(base, base.full_boundary(base.all_elements))


# free inflate views ----------------------------------------------------------------------

def inflate_cells(X: DirectedComplex, max_dim: int, max_size: int | None = None) -> list:
    """All normal cells (x, p) with p a collapse of atoms of dimension <= max_dim."""
    out: list = []
    seen: set = set()
    for ref in X.refs():
        x = X.value(ref)
        if ref[0] > max_dim:
            continue
        frontier = [(x.shape, GradedFunction.identity(x.shape))]
        while frontier:
            nxt = []
            for A, p in frontier:
                val = degenerate(x, p)
                k = val.key()
                if k in seen:
                    continue
                seen.add(k)
                out.append(val)
                if A.dim >= max_dim:
                    continue
                for K in collapse_subsets(A):
                    carrier, _, proj = cylinder_labelled(A, K)
                    if max_size is not None and len(carrier) > max_size:
                        continue
                    tau = GradedFunction(carrier, A, proj)
                    nxt.append((carrier, tau.then(p)))
            frontier = nxt
    out.sort(key=lambda v: (v.dim, isinstance(v, InflateCell), repr(v.key())))
    return out


def free_inflate(X: DirectedComplex, max_dim: int, max_size: int | None = None) -> tuple[DirectedComplex, dict]:
    """Materialise the free inflate-complex up to a dimension; returns (complex, value key -> ref)."""
    vals = inflate_cells(X, max_dim, max_size)
    index: dict = {}
    rows: list[list] = [[] for _ in range(max_dim + 1)]
    for v in vals:
        index[v.key()] = (v.dim, len(rows[v.dim]))
        rows[v.dim].append(v)
    cells = []
    for row in rows:
        out = []
        for v in row:
            U = v.shape
            top = U.greatest()
            attach = tuple(
                sorted((a, index[(v if a == top else v.face(a)).key()]) for a in U.elements())
            )
            out.append(Cell(U, attach))
        cells.append(out)
    Y = DirectedComplex(cells)
    Y.degenerate_refs = frozenset(index[v.key()] for v in vals if isinstance(v, InflateCell))
    Y.origin = {index[v.key()]: v for v in vals}
    return Y, index


def brute_force_normal_pairs(X: DirectedComplex, value) -> list[tuple]:
    """Every (cell, collapse) pair realising the same faces as ``value``, by exhaustive search."""
    A = value.shape
    target = _realisation(value)
    found = []
    for ref in X.refs():
        x = X.value(ref)
        if ref[0] > A.dim:
            continue
        for p in enumerate_collapses(A, x.shape):
            if _realisation_pair(x, p) == target:
                found.append((x, p))
    return found


def _realisation_pair(x: XCell, p: GradedFunction) -> dict:
    return {a: (x.face(p(a)).ref if p(a) != x.shape.greatest() else x.ref, a[0] - p(a)[0]) for a in p.source.elements()}


def _base_ref(v):
    while not isinstance(v, XCell):
        v = v.base
    return v.ref


def _realisation(value) -> dict:
    """Underlying cell and dimension drop at every face, read off through face restriction."""
    top = value.shape.greatest()
    out = {}
    for a in value.shape.elements():
        f = value if a == top else value.face(a)
        ref = _base_ref(f)
        out[a] = (ref, a[0] - ref[0])
    return out


__all__ = [
    "InflateCell",
    "brute_force_normal_pairs",
    "collapse_subsets",
    "degeneracy",
    "ez_normalize",
    "free_inflate",
    "inflate_cells",
    "normal_pair",
    "unit_of",
]
