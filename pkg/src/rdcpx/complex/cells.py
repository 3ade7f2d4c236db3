"""Finite directed complexes, cell values and pasting diagrams."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

from ..errors import AttachmentIncompatible, GlueMismatch, NotRewritable, ShapeMismatch
from ..molecule import as_cert, is_atom_carrier, is_submolecule, paste, substitute_with_maps
from ..ogposet import (
    MINUS,
    PLUS,
    GradedFunction,
    OgPoset,
    canonical_form,
    find_isomorphism,
    relabel,
    validate_ogposet,
)

Ref = tuple[int, int]

_ISO_CACHE: dict = {}
_CANON: dict = {}


def closure_iso(P: OgPoset, v, Q: OgPoset) -> dict:
    """The unique isomorphism cl{v} -> Q, as a map on elements of P."""
    slot = (P, v, Q)
    if slot not in _ISO_CACHE:
        sub, idx = P.restrict(P.down(v))
        iso = find_isomorphism(sub, Q)
        if iso is None:
            raise ShapeMismatch(f"cl{{{v}}} does not have the expected shape", v)
        _ISO_CACHE[slot] = {x: iso[idx[x]] for x in idx}
    return _ISO_CACHE[slot]


def canonical_atom(P: OgPoset) -> tuple[OgPoset, dict]:
    """A canonical copy of P and the relabelling into it."""
    key, pos = canonical_form(P)
    if key not in _CANON:
        _CANON[key] = relabel(P, pos)
    return _CANON[key], pos


# complexes ------------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    shape: OgPoset
    attach: tuple  # sorted ((elem, ref), ...)

    @cached_property
    def attach_map(self) -> dict:
        return dict(self.attach)


class DirectedComplex:
    """Cells stored per dimension; each cell is an atom with a reference for every element."""

    def __init__(self, cells: list[list[Cell]], check: bool = True):
        self.cells = [list(row) for row in cells]
        while self.cells and not self.cells[-1]:
            self.cells.pop()
        self._values: dict = {}
        if check:
            self.validate()

    @property
    def dim(self) -> int:
        return len(self.cells) - 1

    def __len__(self) -> int:
        return sum(len(row) for row in self.cells)

    def refs(self) -> list[Ref]:
        return [(d, i) for d, row in enumerate(self.cells) for i in range(len(row))]

    def cell(self, ref: Ref) -> Cell:
        d, i = ref
        if d < 0 or d >= len(self.cells) or i < 0 or i >= len(self.cells[d]):
            raise AttachmentIncompatible(f"no cell {ref}", ref)
        return self.cells[d][i]

    def shape(self, ref: Ref) -> OgPoset:
        return self.cell(ref).shape

    def attach(self, ref: Ref) -> dict:
        return self.cell(ref).attach_map

    def value(self, ref: Ref) -> "XCell":
        if ref not in self._values:
            self.cell(ref)
            self._values[ref] = XCell(self, tuple(ref))
        return self._values[ref]

    def validate(self) -> None:
        for ref in self.refs():
            c = self.cell(ref)
            U = c.shape
            top = U.greatest()
            if top is None or not is_atom_carrier(U):
                raise AttachmentIncompatible("cell shapes must be atoms", ref)
            if top[0] != ref[0]:
                raise AttachmentIncompatible("cell dimension differs from its shape", ref)
            amap = c.attach_map
            if set(amap) != set(U.elements()):
                raise AttachmentIncompatible("attachment must cover every element", ref)
            if tuple(amap[top]) != tuple(ref):
                raise AttachmentIncompatible("the top element must attach to the cell itself", ref)
            for e in U.elements():
                target = amap[e]
                tc = self.cell(target)
                if target[0] != e[0]:
                    raise AttachmentIncompatible("attachment changes dimension", (ref, e))
                try:
                    iso = closure_iso(U, e, tc.shape)
                except ShapeMismatch as exc:
                    raise AttachmentIncompatible(str(exc), (ref, e)) from exc
                tmap = tc.attach_map
                for f, g in iso.items():
                    if tuple(amap[f]) != tuple(tmap[g]):
                        raise AttachmentIncompatible("attachments are not compatible with faces", (ref, e, f))

    def to_json(self) -> dict:
        out = []
        for row in self.cells:
            out.append(
                [
                    {
                        "shape": c.shape.to_json(),
                        "attach": [[r[0], r[1], list(self.shape(r).greatest())] for _, r in c.attach],
                    }
                    for c in row
                ]
            )
        return {"cells": out}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _resolve(raw_cells, shapes, d: int, i: int, elem, depth: int = 0) -> Ref:
    """Follow a (cell, element) reference down to the cell the element stands for."""
    if depth > 64:
        raise AttachmentIncompatible("cyclic attachment", (d, i))
    try:
        shape = shapes[d][i]
    except IndexError:
        raise AttachmentIncompatible(f"attachment to a missing cell {(d, i)}", (d, i)) from None
    e = tuple(elem)
    if e not in shape:
        raise AttachmentIncompatible(f"cell {(d, i)} has no element {e}", (d, i))
    if e == shape.greatest():
        return (d, i)
    order = list(shape.elements())
    entry = raw_cells[d][i]["attach"][order.index(e)]
    return _resolve(raw_cells, shapes, entry[0], entry[1], entry[2], depth + 1)


def build_complex(spec) -> DirectedComplex:
    """Build and validate a complex from its JSON description (dict or string)."""
    from ..corpus import named_shape

    if isinstance(spec, str):
        spec = json.loads(spec)
    raw_cells = spec.get("cells", [])
    shapes: list[list[OgPoset]] = []
    for row in raw_cells:
        out = []
        for c in row:
            s = c.get("shape")
            out.append(named_shape(s) if isinstance(s, str) else validate_ogposet(s, regular=True))
        shapes.append(out)
    cells = []
    for d, row in enumerate(raw_cells):
        out = []
        for i, c in enumerate(row):
            shape = shapes[d][i]
            entries = c.get("attach")
            elems = list(shape.elements())
            if entries is None:
                if len(elems) != 1:
                    raise AttachmentIncompatible("missing attachment", (d, i))
                entries = [[d, i, [0, 0]]]
            if len(entries) != len(elems):
                raise AttachmentIncompatible("one attachment entry per shape element is required", (d, i))
            attach = []
            for e, entry in zip(elems, entries):
                if len(entry) != 3:
                    raise AttachmentIncompatible("attachment entries are [cell_dim, cell_idx, elem]", (d, i))
                if e == shape.greatest():
                    attach.append((e, (d, i)))
                else:
                    attach.append((e, _resolve(raw_cells, shapes, entry[0], entry[1], entry[2])))
            out.append(Cell(shape, tuple(sorted(attach))))
        cells.append(out)
    return DirectedComplex(cells)


def representable(P: OgPoset) -> DirectedComplex:
    """One cell per element; cell (d, i) is the element (d, i)."""
    cells: list[list[Cell]] = [[] for _ in range(P.dim + 1)]
    for x in P.elements():
        sub, idx = P.restrict(P.down(x))
        back = {v: k for k, v in idx.items()}
        cells[x[0]].append(Cell(sub, tuple(sorted((e, back[e]) for e in sub.elements()))))
    return DirectedComplex(cells)


def loop_complex() -> DirectedComplex:
    """One vertex and one edge whose endpoints both are that vertex."""
    from ..molecule import arrow, point

    v = Cell(point().carrier, (((0, 0), (0, 0)),))
    a = arrow().carrier
    e = Cell(a, (((0, 0), (0, 0)), ((0, 1), (0, 0)), ((1, 0), (1, 0))))
    return DirectedComplex([[v], [e]])


def bigon_loop_complex() -> DirectedComplex:
    """The loop with one extra 2-cell of globe shape from the edge to itself."""
    from ..molecule import globe

    X = loop_complex()
    g = globe(2).carrier
    b = Cell(g, tuple(sorted({(0, 0): (0, 0), (0, 1): (0, 0), (1, 0): (1, 0), (1, 1): (1, 0), (2, 0): (2, 0)}.items())))
    return DirectedComplex(X.cells + [[b]])


def empty_complex() -> DirectedComplex:
    return DirectedComplex([])


# cell values -------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class XCell:
    """A cell of a finite complex, used as a diagram value."""

    complex: DirectedComplex
    ref: Ref

    @property
    def shape(self) -> OgPoset:
        return self.complex.shape(self.ref)

    @property
    def dim(self) -> int:
        return self.ref[0]

    def key(self) -> tuple:
        return ("x", self.ref)

    def face(self, a) -> "XCell":
        return self.complex.value(self.complex.attach(self.ref)[a])

    def base_cell(self) -> "XCell":
        return self

    def __eq__(self, other) -> bool:
        return isinstance(other, XCell) and other.complex is self.complex and other.ref == self.ref

    def __hash__(self) -> int:
        return hash(self.ref)

    def __repr__(self) -> str:
        return f"XCell{self.ref}"


def is_iso(f: GradedFunction) -> bool:
    return (
        len(f.source) == len(f.target)
        and f.is_injective()
        and all(f(x)[0] == x[0] for x in f.source.elements())
        and all(f.image(f.source.faces(x, s)) == f.target.faces(f(x), s) for x in f.source.elements() for s in (MINUS, PLUS))
    )


def degenerate(value, r: GradedFunction):
    """The value precomposed with a collapse r: S -> value.shape, in normal form."""
    from .inflate import InflateCell
    from .merge import MergeCell, merge_act

    if r.target != value.shape:
        raise ShapeMismatch("collapse does not land in the value's shape")
    if isinstance(value, MergeCell):
        from ..morphism import SclMorphism

        if is_iso(r) and r.source == value.shape:
            return value
        return merge_act(value, SclMorphism.of_collapse(r))
    if isinstance(value, InflateCell):
        return degenerate(value.base, r.then(value.collapse))
    if is_iso(r):
        return value
    A, pos = canonical_atom(r.source)
    back = {v: k for k, v in pos.items()}
    p = GradedFunction(A, value.shape, {a: r(back[a]) for a in A.elements()})
    return InflateCell(value, p)


# diagrams ------------------------------------------------------------------------------

class Diagram:
    """A shape with a value (cell) for each element, compatible with faces."""

    def __init__(self, shape: OgPoset, assign: dict, check: bool = True, cert=None):
        self.shape = shape
        self.assign = dict(assign)
        self._cert = cert
        self._key = None
        if set(self.assign) != set(shape.elements()):
            raise AttachmentIncompatible("a diagram assigns a cell to every element")
        if check:
            self.validate()

    @property
    def cert(self):
        if self._cert is None:
            self._cert = as_cert(self.shape)
        return self._cert

    @property
    def dim(self) -> int:
        return self.shape.dim

    def __getitem__(self, x):
        return self.assign[x]

    def validate(self) -> None:
        P = self.shape
        for v in P.elements():
            val = self.assign[v]
            if val.dim != v[0]:
                raise AttachmentIncompatible("value of the wrong dimension", v)
            iso = closure_iso(P, v, val.shape)
            for w, w2 in iso.items():
                if w != v and val.face(w2).key() != self.assign[w].key():
                    raise AttachmentIncompatible("diagram is incompatible with faces", (v, w))

    def key(self) -> tuple:
        if self._key is None:
            self._key = canonical_form(self.shape, {x: v.key() for x, v in self.assign.items()})[0]
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, Diagram) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Diagram(sizes={list(self.shape.sizes)})"

    def is_round(self) -> bool:
        return self.shape.is_round()

    def top(self):
        t = self.shape.greatest()
        if t is None:
            raise ShapeMismatch("the diagram is not a single cell")
        return self.assign[t]

    def restrict(self, subset) -> "Diagram":
        sub, idx = self.shape.restrict(subset)
        return Diagram(sub, {idx[x]: self.assign[x] for x in idx}, check=False)

    def boundary(self, n: int | None = None, sign: int = 0) -> "Diagram":
        return self.restrict(self.shape.boundary_set(self.shape.all_elements, n, sign))

    def precompose(self, q: GradedFunction) -> "Diagram":
        """The diagram u . q for a local collapse (or local embedding) q: T -> shape."""
        if q.target != self.shape:
            raise ShapeMismatch("precomposition with a function into another shape")
        T = q.source
        out = {}
        for t in T.elements():
            val = self.assign[q(t)]
            iso = closure_iso(self.shape, q(t), val.shape)
            sub, idx = T.restrict(T.down(t))
            back = {v: k for k, v in idx.items()}
            r = GradedFunction(sub, val.shape, {e: iso[q(back[e])] for e in sub.elements()})
            out[t] = degenerate(val, r)
        return Diagram(T, out, check=False)

    def to_json(self) -> dict:
        return {
            "shape": self.shape.to_json(),
            "assign": [[list(x), _value_json(self.assign[x])] for x in self.shape.elements()],
        }


def _value_json(val):
    if isinstance(val, XCell):
        return list(val.ref)
    return repr(val.key())


def cell_diagram(value) -> Diagram:
    """The diagram of shape value.shape with every element sent to the matching face."""
    U = value.shape
    top = U.greatest()
    return Diagram(U, {a: (value if a == top else value.face(a)) for a in U.elements()}, check=False)


def diagram_from_refs(X: DirectedComplex, shape: OgPoset, refs: dict) -> Diagram:
    return Diagram(shape, {x: X.value(tuple(r)) for x, r in refs.items()})


def diagram_boundary(u: Diagram, n: int, sign: int) -> Diagram:
    return u.boundary(n, sign)


def _glue_values(pieces) -> dict:
    out: dict = {}
    for mapping, diag in pieces:
        for x, y in mapping.items():
            val = diag.assign[x]
            if y in out and out[y].key() != val.key():
                raise GlueMismatch("diagrams disagree on the glued region", y)
            out[y] = val
    return out


def diagram_paste(u: Diagram, v: Diagram, k: int | None = None, iota: dict | None = None, into: str = "right") -> Diagram:
    """Paste v onto u along the k-boundary; the shapes' gluing decides the identification."""
    cert = paste(u.cert, v.cert, k, iota, into)
    if hasattr(cert, "glue_maps"):
        um, vm = cert.glue_maps
    else:
        um, vm = cert.left_map, cert.right_map
    assign = _glue_values([(um, u), (vm, v)])
    return Diagram(cert.carrier, assign, check=False, cert=cert)


def diagram_substitute(u: Diagram, iota: GradedFunction, w: Diagram) -> Diagram:
    """Replace the subdiagram at iota by w; w must have the boundary of the replaced part."""
    sub = substitute_with_maps(u.cert, iota, w.cert)
    kept = {x: y for x, y in sub.u_map.items()}
    assign = _glue_values([(kept, u), (sub.w_map, w)])
    replaced = u.restrict(iota.image())
    for s in (MINUS, PLUS):
        if replaced.boundary(None, s) != w.boundary(None, s):
            raise GlueMismatch("substituted diagram has a different boundary")
    return Diagram(sub.cert.carrier, assign, check=False, cert=sub.cert)


def map_diagram(u: Diagram, f: dict, target: DirectedComplex) -> Diagram:
    """Push a diagram along a morphism of complexes given on cell references."""
    return Diagram(u.shape, {x: target.value(tuple(f[v.ref])) for x, v in u.assign.items()})


def check_complex_morphism(X: DirectedComplex, Y: DirectedComplex, f: dict) -> bool:
    for ref in X.refs():
        img = f[ref]
        if img[0] != ref[0]:
            return False
        try:
            iso = closure_iso(X.shape(ref), X.shape(ref).greatest(), Y.shape(img))
        except ShapeMismatch:
            return False
        xa, ya = X.attach(ref), Y.attach(img)
        if any(tuple(f[xa[e]]) != tuple(ya[iso[e]]) for e in xa):
            return False
    return True


# enumeration of diagrams ----------------------------------------------------------------

def enumerate_assignments(P: OgPoset, X: DirectedComplex, subset=None, fixed: dict | None = None, allowed=None):
    """All compatible assignments of cells of X to a closed subset of P (default all of P)."""
    elems = sorted(P.all_elements if subset is None else subset)
    fixed = dict(fixed or {})
    by_dim: dict = {}
    for ref in X.refs():
        by_dim.setdefault(ref[0], []).append(ref)
    assign: dict = {}

    def candidates(x):
        if x in fixed:
            return [fixed[x]]
        return by_dim.get(x[0], [])

    def rec(pos):
        if pos == len(elems):
            yield dict(assign)
            return
        x = elems[pos]
        for ref in candidates(x):
            val = X.value(ref)
            if allowed is not None and not allowed(x, ref):
                continue
            try:
                iso = closure_iso(P, x, val.shape)
            except ShapeMismatch:
                continue
            if all(w == x or val.face(w2).ref == assign[w].ref for w, w2 in iso.items()):
                assign[x] = val
                yield from rec(pos + 1)
                del assign[x]

    yield from rec(0)


def enumerate_diagrams(P: OgPoset, X: DirectedComplex) -> list[Diagram]:
    return [Diagram(P, a, check=False) for a in enumerate_assignments(P, X)]


def rewritable_check(U: OgPoset, iota: GradedFunction, sign: int) -> frozenset:
    """Check iota is a rewritable submolecule of the sign-boundary of U; return its interior."""
    n = U.dim
    bd = U.boundary_set(U.all_elements, n - 1, sign)
    if iota.target != U or not iota.image() <= bd:
        raise NotRewritable("iota does not land in the requested boundary")
    V = iota.source
    if V.dim != n - 1 or not V.is_round():
        raise NotRewritable("rewritable subdiagrams are round and of full dimension")
    host, hidx = U.restrict(bd)
    inner = GradedFunction(V, host, {v: hidx[iota(v)] for v in V.elements()})
    if is_submolecule(inner) is None:
        raise NotRewritable("iota is not a submolecule inclusion")
    return iota.image() - iota.image(V.full_boundary(V.all_elements))


__all__ = [
    "Cell",
    "Diagram",
    "DirectedComplex",
    "XCell",
    "bigon_loop_complex",
    "build_complex",
    "canonical_atom",
    "cell_diagram",
    "check_complex_morphism",
    "closure_iso",
    "degenerate",
    "diagram_boundary",
    "diagram_from_refs",
    "diagram_paste",
    "diagram_substitute",
    "empty_complex",
    "enumerate_assignments",
    "enumerate_diagrams",
    "is_iso",
    "loop_complex",
    "map_diagram",
    "representable",
    "rewritable_check",
]
