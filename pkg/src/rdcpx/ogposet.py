"""Oriented graded posets: storage, boundaries, roundness, thinness, isomorphism search.

Elements are addressed by ``(dim, index)`` pairs.  Signs are the integers
``-1`` (input) and ``+1`` (output); ``0`` means "both" where accepted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator

from .errors import (
    DanglingRef,
    FaceDimMismatch,
    NotGraded,
    OverlappingOrientation,
    OwnerMismatch,
)

Elem = tuple[int, int]
MINUS, PLUS, BOTH = -1, 1, 0
SIGNS = (MINUS, PLUS)


def sign_char(sign: int) -> str:
    return {MINUS: "-", PLUS: "+", BOTH: "both"}[sign]


def parse_sign(token) -> int:
    if token in (MINUS, PLUS, BOTH):
        return token
    table = {"-": MINUS, "+": PLUS, "both": BOTH, "in": MINUS, "out": PLUS}
    try:
        return table[token]
    except KeyError:
        raise ValueError(f"unknown sign {token!r}") from None


class OgPoset:
    """An oriented graded poset, stored as strata of (input, output) face index sets.

    ``faces[d][i]`` is a pair of frozensets of indices into stratum ``d - 1``.
    Instances are immutable; derived tables are computed lazily and cached.
    """

    __slots__ = ("_faces", "__dict__")

    def __init__(self, faces: Iterable[Iterable[tuple[Iterable[int], Iterable[int]]]]):
        self._faces = tuple(
            tuple((frozenset(i), frozenset(o)) for i, o in stratum) for stratum in faces
        )
        while self._faces and not self._faces[-1]:
            self._faces = self._faces[:-1]

    # basic shape -------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self._faces) - 1

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self._faces)

    @cached_property
    def _count(self) -> int:
        return sum(self.sizes)

    def __len__(self) -> int:
        return self._count

    def size(self, d: int) -> int:
        return len(self._faces[d]) if 0 <= d < len(self._faces) else 0

    def elements(self) -> Iterator[Elem]:
        for d, stratum in enumerate(self._faces):
            for i in range(len(stratum)):
                yield (d, i)

    @cached_property
    def all_elements(self) -> frozenset:
        return frozenset(self.elements())

    def __contains__(self, x) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == 2
            and 0 <= x[0] < len(self._faces)
            and 0 <= x[1] < len(self._faces[x[0]])
        )

    def check_elem(self, x) -> Elem:
        if x not in self:
            raise DanglingRef(f"element {x!r} does not exist", x)
        return x

    # faces and cofaces --------------------------------------------------
    def faces(self, x: Elem, sign: int = BOTH) -> frozenset:
        d, i = x
        if d == 0:
            return frozenset()
        ins, outs = self._faces[d][i]
        if sign == MINUS:
            return frozenset((d - 1, j) for j in ins)
        if sign == PLUS:
            return frozenset((d - 1, j) for j in outs)
        return frozenset((d - 1, j) for j in ins | outs)

    def face_sign(self, x: Elem, y: Elem) -> int:
        """Sign with which ``y`` is a face of ``x``; 0 if it is not a face."""
        if y[0] != x[0] - 1:
            return 0
        ins, outs = self._faces[x[0]][x[1]]
        if y[1] in ins:
            return MINUS
        if y[1] in outs:
            return PLUS
        return 0

    @cached_property
    def _cofaces(self) -> dict:
        table = {x: ([], []) for x in self.elements()}
        for d in range(1, len(self._faces)):
            for i, (ins, outs) in enumerate(self._faces[d]):
                for j in ins:
                    table[(d - 1, j)][0].append((d, i))
                for j in outs:
                    table[(d - 1, j)][1].append((d, i))
        return {x: (frozenset(a), frozenset(b)) for x, (a, b) in table.items()}

    def cofaces(self, x: Elem, sign: int = BOTH) -> frozenset:
        a, b = self._cofaces[x]
        if sign == MINUS:
            return a
        if sign == PLUS:
            return b
        return a | b

    @cached_property
    def _down(self) -> dict:
        down: dict = {}
        for x in self.elements():  # strata in increasing dimension
            acc = {x}
            for y in self.faces(x):
                acc |= down[y]
            down[x] = frozenset(acc)
        return down

    def down(self, x: Elem) -> frozenset:
        """The closure cl{x}."""
        return self._down[x]

    def leq(self, x: Elem, y: Elem) -> bool:
        return x in self._down[y]

    # subsets ------------------------------------------------------------
    def closure_set(self, subset: Iterable[Elem]) -> frozenset:
        acc: set = set()
        for x in subset:
            acc |= self._down[self.check_elem(x)]
        return frozenset(acc)

    def is_closed(self, subset) -> bool:
        s = set(subset)
        return all(y in s for x in s for y in self.faces(x))

    @staticmethod
    def subset_dim(subset) -> int:
        return max((x[0] for x in subset), default=-1)

    def maximal(self, subset) -> frozenset:
        s = subset if isinstance(subset, (set, frozenset)) else set(subset)
        return frozenset(x for x in s if not (self.cofaces(x) & s))

    def delta(self, subset, n: int, sign: int) -> frozenset:
        """n-dimensional elements of the subset with no opposite-sign cofaces inside it."""
        s = subset if isinstance(subset, (set, frozenset)) else frozenset(subset)
        return frozenset(
            x for x in s if x[0] == n and not (self.cofaces(x, -sign) & s)
        )

    def boundary_set(self, subset, n: int | None = None, sign: int = BOTH) -> frozenset:
        s = frozenset(subset)
        d = self.subset_dim(s)
        if n is None:
            n = d - 1
        if n < 0:
            return frozenset()
        if n >= d:
            return s
        if sign == BOTH:
            return self.boundary_set(s, n, MINUS) | self.boundary_set(s, n, PLUS)
        seeds = set(self.delta(s, n, sign))
        seeds |= {x for x in self.maximal(s) if x[0] < n}
        return self.closure_set(seeds)

    def full_boundary(self, subset) -> frozenset:
        s = frozenset(subset)
        acc: set = set()
        for n in range(self.subset_dim(s)):
            acc |= self.boundary_set(s, n, BOTH)
        return frozenset(acc)

    def interior(self, subset) -> frozenset:
        s = frozenset(subset)
        return s - self.full_boundary(s)

    def is_globular(self, subset=None) -> bool:
        s = self.all_elements if subset is None else frozenset(subset)
        d = self.subset_dim(s)
        for n in range(d):
            for beta in SIGNS:
                inner = self.boundary_set(s, n, beta)
                for k in range(n):
                    for alpha in SIGNS:
                        if self.boundary_set(inner, k, alpha) != self.boundary_set(s, k, alpha):
                            return False
        return True

    def is_round(self, subset=None) -> bool:
        s = self.all_elements if subset is None else frozenset(subset)
        if not self.is_globular(s):
            return False
        for n in range(self.subset_dim(s)):
            meet = self.boundary_set(s, n, MINUS) & self.boundary_set(s, n, PLUS)
            if meet != self.boundary_set(s, n - 1, BOTH):
                return False
        return True

    def greatest(self) -> Elem | None:
        top = self.maximal(self.all_elements)
        return next(iter(top)) if len(top) == 1 else None

    def is_connected(self) -> bool:
        elems = list(self.elements())
        if not elems:
            return True
        seen = {elems[0]}
        stack = [elems[0]]
        while stack:
            x = stack.pop()
            for y in self.faces(x) | self.cofaces(x):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(elems)

    def restrict(self, subset) -> tuple["OgPoset", dict]:
        """Extract a closed subset as its own poset; returns (poset, old -> new)."""
        s = frozenset(subset)
        if not self.is_closed(s):
            raise DanglingRef("restriction to a subset that is not closed", sorted(s))
        order = sorted(s)
        new_index: dict = {}
        strata: list[list] = []
        for x in order:
            d = x[0]
            while len(strata) <= d:
                strata.append([])
            new_index[x] = (d, len(strata[d]))
            strata[d].append(None)
        for x in order:
            d, _ = x
            ins = [new_index[y][1] for y in self.faces(x, MINUS)]
            outs = [new_index[y][1] for y in self.faces(x, PLUS)]
            strata[d][new_index[x][1]] = (ins, outs)
        return OgPoset(strata), new_index

    # equality, hashing, serialization ------------------------------------
    @property
    def face_table(self):
        return self._faces

    def __eq__(self, other) -> bool:
        return isinstance(other, OgPoset) and self._faces == other._faces

    @cached_property
    def _hash(self) -> int:
        return hash(self._faces)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"OgPoset(sizes={list(self.sizes)})"

    def to_json(self) -> dict:
        return {
            "strata": [
                [{"in": sorted(i), "out": sorted(o)} for i, o in stratum]
                for stratum in self._faces
            ]
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def signature(self) -> tuple:
        """Cheap isomorphism invariant: sizes and sorted signed degree vectors."""
        degs = []
        for x in self.elements():
            degs.append(
                (
                    x[0],
                    len(self.faces(x, MINUS)),
                    len(self.faces(x, PLUS)),
                    len(self.cofaces(x, MINUS)),
                    len(self.cofaces(x, PLUS)),
                )
            )
        return (self.sizes, tuple(sorted(degs)))


EMPTY = OgPoset([])


@dataclass(frozen=True)
class ClosedSubset:
    """A downward-closed set of elements of a particular poset."""

    owner: OgPoset
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.owner.is_closed(self.members):
            raise DanglingRef("subset is not closed")

    def _same(self, other: "ClosedSubset"):
        if other.owner is not self.owner and other.owner != self.owner:
            raise OwnerMismatch("closed subsets belong to different posets")

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, x) -> bool:
        return x in self.members

    def __or__(self, other: "ClosedSubset") -> "ClosedSubset":
        self._same(other)
        return ClosedSubset(self.owner, self.members | other.members)

    def __and__(self, other: "ClosedSubset") -> "ClosedSubset":
        self._same(other)
        return ClosedSubset(self.owner, self.members & other.members)

    @property
    def dim(self) -> int:
        return OgPoset.subset_dim(self.members)

    def by_dim(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.dim + 1)]
        for d, i in sorted(self.members):
            out[d].append(i)
        return out


def _members(P: OgPoset, U) -> frozenset:
    if U is None:
        return P.all_elements
    if isinstance(U, ClosedSubset):
        if U.owner is not P and U.owner != P:
            raise OwnerMismatch("closed subset belongs to another poset")
        return U.members
    return frozenset(U)


def closure(P: OgPoset, S: Iterable[Elem]) -> ClosedSubset:
    return ClosedSubset(P, P.closure_set(S))


def whole(P: OgPoset) -> ClosedSubset:
    return ClosedSubset(P, P.all_elements)


def boundary(P: OgPoset, U=None, n: int | None = None, sign=BOTH) -> ClosedSubset:
    return ClosedSubset(P, P.boundary_set(_members(P, U), n, parse_sign(sign)))


def roundness_check(P: OgPoset, U=None) -> dict:
    s = _members(P, U)
    glob = P.is_globular(s)
    return {"globular": glob, "round": glob and P.is_round(s)}


# validation ---------------------------------------------------------------

def _face_ref(raw, d: int, owner: Elem, sizes: list[int]) -> int:
    if isinstance(raw, (list, tuple)):
        if len(raw) != 2:
            raise DanglingRef(f"malformed face reference {raw!r}", owner)
        fd, fi = raw
        if fd != d - 1:
            raise FaceDimMismatch(
                f"element {owner} has a face of dimension {fd}, expected {d - 1}", owner
            )
        raw = fi
    if not isinstance(raw, int) or isinstance(raw, bool):
        raise DanglingRef(f"malformed face reference {raw!r}", owner)
    if d == 0:
        raise FaceDimMismatch(f"0-dimensional element {owner} has faces", owner)
    if not 0 <= raw < sizes[d - 1]:
        raise DanglingRef(f"element {owner} references missing face {(d - 1, raw)}", owner)
    return raw


def validate_ogposet(raw, regular: bool = False) -> OgPoset:
    """Parse and validate face-table data.

    Accepts ``{"strata": [...]}`` or the bare list.  Faces may be given as an
    index into the stratum below or as an explicit ``[dim, index]`` pair.
    """
    if isinstance(raw, str):
        raw = json.loads(raw)
    strata = raw["strata"] if isinstance(raw, dict) else raw
    if not isinstance(strata, list):
        raise NotGraded("face table must be a list of strata")
    sizes = [len(s) for s in strata]
    table = []
    for d, stratum in enumerate(strata):
        rows = []
        for i, rec in enumerate(stratum):
            owner = (d, i)
            if isinstance(rec, dict):
                ins_raw, outs_raw = rec.get("in", []), rec.get("out", [])
            else:
                ins_raw, outs_raw = rec
            ins = [_face_ref(r, d, owner, sizes) for r in ins_raw]
            outs = [_face_ref(r, d, owner, sizes) for r in outs_raw]
            if len(set(ins)) != len(ins) or len(set(outs)) != len(outs):
                raise OverlappingOrientation(f"element {owner} lists a face twice", owner)
            if set(ins) & set(outs):
                raise OverlappingOrientation(
                    f"element {owner} has a face that is both input and output", owner
                )
            if d > 0 and not ins and not outs:
                raise NotGraded(
                    f"element {owner} sits in stratum {d} but has no faces", owner
                )
            if regular and d > 0 and (not ins or not outs):
                raise NotGraded(
                    f"element {owner} lacks an input or an output face", owner
                )
            rows.append((ins, outs))
        table.append(rows)
    if table and not table[-1]:
        raise NotGraded("top stratum is empty")
    return OgPoset(table)


def loads(text: str) -> OgPoset:
    return validate_ogposet(json.loads(text))


# thinness -----------------------------------------------------------------

@dataclass
class ThinnessReport:
    ok: bool
    violations: list = field(default_factory=list)


def check_oriented_thinness(P: OgPoset) -> ThinnessReport:
    violations = []
    for x in P.elements():
        if x[0] == 1:
            if len(P.faces(x, MINUS)) != 1 or len(P.faces(x, PLUS)) != 1:
                violations.append(((x, x), "1-dimensional element needs one input and one output face"))
        if x[0] < 2:
            continue
        below: dict = {}
        for y in P.faces(x):
            for w in P.faces(y):
                below.setdefault(w, []).append(y)
        for w, mids in sorted(below.items()):
            if len(mids) != 2:
                violations.append(((w, x), f"interval has {len(mids)} intermediate elements"))
                continue
            prods = [P.face_sign(y, w) * P.face_sign(x, y) for y in mids]
            if prods[0] != -prods[1]:
                violations.append(((w, x), "orientation signs do not alternate"))
    return ThinnessReport(not violations, violations)


# morphism search ----------------------------------------------------------

def _search_order(P: OgPoset) -> list[tuple[Elem, Elem | None, int]]:
    """Order elements so each one (except component roots) follows a coface."""
    order: list = []
    seen: set = set()
    for root in sorted(P.elements(), key=lambda x: (-x[0], x[1])):
        if root in seen:
            continue
        seen.add(root)
        order.append((root, None, 0))
        queue = [root]
        while queue:
            x = queue.pop(0)
            for s in SIGNS:
                for y in sorted(P.faces(x, s)):
                    if y not in seen:
                        seen.add(y)
                        order.append((y, x, s))
                        queue.append(y)
    return order


def find_morphisms(
    P: OgPoset,
    Q: OgPoset,
    *,
    injective: bool = False,
    bijective: bool = False,
    fixed: dict | None = None,
    allowed: Callable[[Elem, Elem], bool] | None = None,
) -> Iterator[dict]:
    """Enumerate dimension-preserving maps inducing bijections on signed faces.

    These are the local embeddings (morphisms of oriented graded posets).
    ``fixed`` pins some images; ``allowed`` filters candidate pairs.
    """
    if bijective:
        injective = True
        if P.sizes != Q.sizes:
            return
    fixed = dict(fixed or {})
    order = _search_order(P)
    assign: dict = {}
    used: set = set()

    def deg(R, x):
        return (len(R.faces(x, MINUS)), len(R.faces(x, PLUS)))

    def codeg(R, x):
        return (len(R.cofaces(x, MINUS)), len(R.cofaces(x, PLUS)))

    def consistent(y, q) -> bool:
        if q not in Q or q[0] != y[0] or deg(P, y) != deg(Q, q):
            return False
        if bijective and codeg(P, y) != codeg(Q, q):
            return False
        if injective and q in used:
            return False
        if y in fixed and fixed[y] != q:
            return False
        if allowed is not None and not allowed(y, q):
            return False
        for s in SIGNS:
            for x in P.cofaces(y, s):
                if x in assign:
                    fx = assign[x]
                    if q not in Q.faces(fx, s):
                        return False
                    for y2 in P.faces(x, s):
                        if y2 != y and assign.get(y2) == q:
                            return False
            images = set()
            for z in P.faces(y, s):
                if z in assign:
                    fz = assign[z]
                    if fz not in Q.faces(q, s) or fz in images:
                        return False
                    images.add(fz)
        return True

    def rec(pos: int):
        if pos == len(order):
            yield dict(assign)
            return
        y, parent, s = order[pos]
        if y in fixed:
            cands = [fixed[y]]
        elif parent is not None:
            cands = sorted(Q.faces(assign[parent], s))
        else:
            cands = [(y[0], i) for i in range(Q.size(y[0]))]
        for q in cands:
            if consistent(y, q):
                assign[y] = q
                used.add(q)
                yield from rec(pos + 1)
                del assign[y]
                used.discard(q)

    yield from rec(0)


def find_isomorphism(P: OgPoset, Q: OgPoset, **kw) -> dict | None:
    if P.sizes != Q.sizes:
        return None
    return next(find_morphisms(P, Q, bijective=True, **kw), None)


def all_isomorphisms(P: OgPoset, Q: OgPoset, **kw) -> list[dict]:
    if P.sizes != Q.sizes:
        return []
    return list(find_morphisms(P, Q, bijective=True, **kw))


def find_embeddings(P: OgPoset, Q: OgPoset, **kw) -> Iterator[dict]:
    return find_morphisms(P, Q, injective=True, **kw)


# canonical labelling --------------------------------------------------------

def _refine(P: OgPoset, colour: dict) -> dict:
    elems = list(P.elements())
    while True:
        sig = {}
        for x in elems:
            sig[x] = (
                colour[x],
                tuple(sorted((s, colour[y]) for s in SIGNS for y in P.faces(x, s))),
                tuple(sorted((s, colour[y]) for s in SIGNS for y in P.cofaces(x, s))),
            )
        ranks = {v: r for r, v in enumerate(sorted(set(sig.values())))}
        new = {x: ranks[sig[x]] for x in elems}
        if len(set(new.values())) == len(set(colour.values())):
            return new
        colour = new


def canonical_form(P: OgPoset, labels: dict | None = None) -> tuple[tuple, dict]:
    """Canonical key and relabelling ``old -> (dim, canonical index)``.

    Two labelled posets are isomorphic (respecting labels) exactly when their
    keys are equal.  Labels are compared through ``repr``.
    """
    labels = labels or {}
    elems = list(P.elements())
    if not elems:
        return ((), ()), {}
    base = {x: (x[0], repr(labels.get(x))) for x in elems}
    ranks = {v: r for r, v in enumerate(sorted(set(base.values())))}
    start = _refine(P, {x: ranks[base[x]] for x in elems})

    best: list = [None, None]

    def leaf(colour):
        order = sorted(elems, key=lambda x: (x[0], colour[x]))
        pos: dict = {}
        counts: dict = {}
        for x in order:
            pos[x] = (x[0], counts.get(x[0], 0))
            counts[x[0]] = counts.get(x[0], 0) + 1
        key = tuple(
            (
                x[0],
                base[x][1],
                tuple(sorted(pos[y][1] for y in P.faces(x, MINUS))),
                tuple(sorted(pos[y][1] for y in P.faces(x, PLUS))),
            )
            for x in order
        )
        if best[0] is None or key < best[0]:
            best[0], best[1] = key, pos

    def rec(colour):
        classes: dict = {}
        for x in elems:
            classes.setdefault(colour[x], []).append(x)
        target = None
        for c in sorted(classes):
            if len(classes[c]) > 1:
                target = classes[c]
                break
        if target is None:
            leaf(colour)
            return
        for m in target:
            ind = {x: 2 * colour[x] + 1 for x in elems}
            ind[m] = 2 * colour[m]
            rec(_refine(P, ind))

    rec(start)
    return (P.sizes, best[0]), best[1]


def relabel(P: OgPoset, mapping: dict) -> OgPoset:
    """Rebuild P with elements renamed by a dimension-preserving bijection."""
    strata: list[list] = [[None] * P.size(d) for d in range(P.dim + 1)]
    for x in P.elements():
        d, j = mapping[x]
        strata[d][j] = (
            [mapping[y][1] for y in P.faces(x, MINUS)],
            [mapping[y][1] for y in P.faces(x, PLUS)],
        )
    return OgPoset(strata)


class GradedFunction:
    """An element-wise function between two posets.

    Dimension need not be preserved (collapses drop it).  Classification
    flags live in the morphism module and are cached on the instance.
    """

    __slots__ = ("source", "target", "mapping", "_cache")

    def __init__(self, source: OgPoset, target: OgPoset, mapping: dict):
        self.source = source
        self.target = target
        self.mapping = dict(mapping)
        self._cache: dict = {}
        for x in source.elements():
            if x not in self.mapping:
                raise DanglingRef(f"no image for element {x}", x)
            if self.mapping[x] not in target:
                raise DanglingRef(f"image {self.mapping[x]} of {x} is missing", x)

    def __call__(self, x: Elem) -> Elem:
        return self.mapping[x]

    def image(self, subset=None) -> frozenset:
        src = self.source.all_elements if subset is None else subset
        return frozenset(self.mapping[x] for x in src)

    def preimage(self, subset) -> frozenset:
        s = set(subset)
        return frozenset(x for x, y in self.mapping.items() if y in s)

    def then(self, g: "GradedFunction") -> "GradedFunction":
        """Diagrammatic composite: first self, then g."""
        if g.source != self.target:
            from .errors import DomainMismatch

            raise DomainMismatch("composite of functions with mismatched ends")
        return GradedFunction(self.source, g.target, {x: g.mapping[y] for x, y in self.mapping.items()})

    def after(self, f: "GradedFunction") -> "GradedFunction":
        return f.then(self)

    def is_injective(self) -> bool:
        return len(set(self.mapping.values())) == len(self.mapping)

    def is_surjective(self) -> bool:
        return set(self.mapping.values()) == set(self.target.elements())

    def is_identity(self) -> bool:
        return self.source == self.target and all(x == y for x, y in self.mapping.items())

    @staticmethod
    def identity(P: OgPoset) -> "GradedFunction":
        return GradedFunction(P, P, {x: x for x in P.elements()})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GradedFunction)
            and self.source == other.source
            and self.target == other.target
            and self.mapping == other.mapping
        )

    def __hash__(self) -> int:
        return hash((self.source, self.target, tuple(sorted(self.mapping.items()))))

    def __repr__(self) -> str:
        return f"GradedFunction({self.source!r} -> {self.target!r})"

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "map": [list(self.mapping[x]) for x in self.source.elements()],
        }

    @classmethod
    def from_json(cls, raw) -> "GradedFunction":
        src = validate_ogposet(raw["source"])
        tgt = validate_ogposet(raw["target"])
        images = raw["map"]
        elems = list(src.elements())
        if len(images) != len(elems):
            raise DanglingRef("map length does not match the source")
        return cls(src, tgt, {x: tuple(y) for x, y in zip(elems, images)})
