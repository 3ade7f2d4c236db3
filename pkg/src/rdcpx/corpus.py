"""Bounded enumeration of molecules and atoms, plus the named built-in shapes."""

from __future__ import annotations

import math

from .errors import DimMismatch, NoBoundaryIso, NotRound
from .molecule import MoleculeCert, arrow, as_cert, atom, globe, paste, point
from .ogposet import MINUS, PLUS, SIGNS, OgPoset, canonical_form


_BKEYS: dict = {}


def _bkey(P: OgPoset, k: int, sign: int):
    slot = (P, k, sign)
    if slot not in _BKEYS:
        sub, _ = P.restrict(P.boundary_set(P.all_elements, k, sign))
        _BKEYS[slot] = canonical_form(sub)[0]
    return _BKEYS[slot]


def enumerate_molecules(max_size: int, max_dim: int) -> list[MoleculeCert]:
    """All molecules with at most ``max_size`` elements and dimension at most ``max_dim``.

    Closure of the point under pasting and the atom clause, deduplicated by
    canonical form.  Sizes only grow, so the closure is finite.
    """
    found: dict = {}
    order: list = []

    def add(cert: MoleculeCert) -> bool:
        P = cert.carrier
        if len(P) > max_size or P.dim > max_dim:
            return False
        key = canonical_form(P)[0]
        if key in found:
            return False
        found[key] = cert
        order.append(cert)
        return True

    add(point())
    # indices: (k, sign, boundary key) -> molecules; (dim, in key, out key) -> round molecules
    by_bd: dict = {}
    round_by_bd: dict = {}
    bd_sizes: dict = {}
    frontier = list(order)
    while frontier:
        fresh: list = []
        for cert in frontier:
            P = cert.carrier
            for k in range(P.dim):
                for s in SIGNS:
                    key = _bkey(P, k, s)
                    by_bd.setdefault((k, s, key), []).append(cert)
                    bd_sizes[(id(cert), k, s)] = len(P.boundary_set(P.all_elements, k, s))
            if P.is_round():
                rk = (P.dim, _bkey(P, P.dim - 1, MINUS), _bkey(P, P.dim - 1, PLUS)) if P.dim > 0 else (0, None, None)
                round_by_bd.setdefault(rk, []).append(cert)
        for cert in frontier:
            P = cert.carrier
            for k in range(P.dim):
                # cert on the left
                room = max_size - len(P) + bd_sizes[(id(cert), k, PLUS)]
                for other in list(by_bd.get((k, MINUS, _bkey(P, k, PLUS)), [])):
                    if k >= other.dim:
                        continue
                    if len(other.carrier) <= room:
                        c = paste(cert, other, k)
                        if add(c):
                            fresh.append(c)
                # cert on the right
                room = max_size - len(P) + bd_sizes[(id(cert), k, MINUS)]
                for other in list(by_bd.get((k, PLUS, _bkey(P, k, MINUS)), [])):
                    if k >= other.dim or other is cert:
                        continue
                    if len(other.carrier) <= room:
                        c = paste(other, cert, k)
                        if add(c):
                            fresh.append(c)
            if P.is_round() and P.dim < max_dim:
                if P.dim == 0:
                    partners = round_by_bd.get((0, None, None), [])
                else:
                    partners = round_by_bd.get(
                        (P.dim, _bkey(P, P.dim - 1, MINUS), _bkey(P, P.dim - 1, PLUS)), []
                    )
                bsize = len(P.full_boundary(P.all_elements))
                for other in list(partners):
                    if len(P) + len(other.carrier) - bsize + 1 > max_size:
                        continue
                    for a, b in ((cert, other), (other, cert)):
                        try:
                            c = atom(a, b)
                        except (NotRound, NoBoundaryIso, DimMismatch):
                            continue
                        if add(c):
                            fresh.append(c)
        frontier = fresh
    return order


def enumerate_atoms(max_size: int, max_dim: int) -> list[MoleculeCert]:
    return [c for c in enumerate_molecules(max_size, max_dim) if c.carrier.greatest() is not None]


# named shapes -------------------------------------------------------------------

def simplex(k: int) -> OgPoset:
    from .construct import join

    P = OgPoset([])
    for _ in range(k + 1):
        P = join(P, point().carrier)
    return P


def cube(n: int) -> OgPoset:
    from .construct import gray

    P = point().carrier
    for _ in range(n):
        P = gray(P, arrow().carrier)
    return P


def named_shape(name: str) -> OgPoset:
    """Resolve ``point``, ``arrow``, ``globe:n``, ``simplex:k`` or ``cube:n``."""
    head, _, arg = name.partition(":")
    if head == "point":
        return point().carrier
    if head == "arrow":
        return arrow().carrier
    if head in ("globe", "simplex", "cube"):
        if not arg.isdigit():
            raise ValueError(f"shape {name!r} needs a natural-number parameter")
        n = int(arg)
        return {"globe": lambda m: globe(m).carrier, "simplex": simplex, "cube": cube}[head](n)
    raise ValueError(f"unknown shape {name!r}")


def binomial_sizes(k: int) -> tuple[int, ...]:
    return tuple(math.comb(k + 1, j + 1) for j in range(k + 1))


def compositor() -> MoleculeCert:
    """The binary compositor: a 2-atom from a two-edge path to a single edge."""
    a = arrow()
    return atom(paste(a, a, 0), a)


def not_round_shape() -> MoleculeCert:
    """A 2-molecule whose boundaries meet away from the 0-boundary."""
    a = arrow()
    triangle = atom(a, paste(a, a, 0))
    return paste(triangle, globe(2), 0)


__all__ = [
    "as_cert",
    "binomial_sizes",
    "compositor",
    "cube",
    "enumerate_atoms",
    "enumerate_molecules",
    "named_shape",
    "not_round_shape",
    "simplex",
]
