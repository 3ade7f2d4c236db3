"""Command-line front end: ``rdcpx <verb> [options]``.

Exit status: 0 success, 1 validation failure, 2 a search reported FAIL, 3 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from .errors import RdcError

DEFAULT_BOUND_ENV = "RDCPX_BOUND"
VERBS = (
    "validate",
    "info",
    "paste",
    "gray",
    "join",
    "cylinder",
    "collapse-factor",
    "ternary-factor",
    "subdivide",
    "merge",
    "horns",
    "fill",
    "fibrant",
    "closure",
    "atlas",
    "export-dot",
)


class UsageError(Exception):
    pass


class SearchFailed(Exception):
    def __init__(self, payload):
        super().__init__("search reported FAIL")
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# input helpers ---------------------------------------------------------------------

def _read_json(token: str):
    path = Path(token)
    if not path.exists():
        raise UsageError(f"no such file: {token}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{token} is not JSON: {exc}") from exc


def load_shape(token):
    """A named shape, a path to face-table JSON, or already-parsed JSON."""
    from .corpus import named_shape
    from .ogposet import validate_ogposet

    if isinstance(token, str):
        head = token.split(":")[0]
        if head in ("point", "arrow", "globe", "simplex", "cube") and not Path(token).exists():
            try:
                return named_shape(token)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
        token = _read_json(token)
    return validate_ogposet(token)


def load_map(token):
    from .ogposet import GradedFunction

    raw = _read_json(token) if isinstance(token, str) else token
    if not isinstance(raw, dict) or not {"source", "target", "map"} <= set(raw):
        raise UsageError("a map file needs source, target and map")
    src, tgt = load_shape(raw["source"]), load_shape(raw["target"])
    elems = list(src.elements())
    if len(raw["map"]) != len(elems):
        from .errors import DanglingRef

        raise DanglingRef("map length does not match the source")
    return GradedFunction(src, tgt, {x: tuple(y) for x, y in zip(elems, raw["map"])})


def _elem(text: str):
    parts = text.replace("[", "").replace("]", "").split(",")
    if len(parts) != 2:
        raise UsageError(f"elements are written d,i (got {text!r})")
    return (int(parts[0]), int(parts[1]))


def _elems(raw) -> list:
    if raw is None:
        return []
    data = json.loads(raw) if isinstance(raw, str) else raw
    return [tuple(e) for e in data]


def _need(args, n: int) -> list:
    if not args.inputs or len(args.inputs) < n:
        raise UsageError(f"this verb needs {n} --in argument(s)")
    return args.inputs


def _bound(args) -> int:
    if args.bound is not None:
        return args.bound
    env = os.environ.get(DEFAULT_BOUND_ENV)
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"{DEFAULT_BOUND_ENV} must be an integer") from exc
    return 7


# summaries ---------------------------------------------------------------------------

def shape_info(P) -> dict:
    from .molecule import is_molecule
    from .ogposet import check_oriented_thinness

    thin = check_oriented_thinness(P)
    mol = len(P) > 0 and is_molecule(P)
    return {
        "dims": list(P.sizes),
        "size": len(P),
        "molecule": mol,
        "atom": mol and P.greatest() is not None,
        "globular": P.is_globular() if len(P) else True,
        "round": mol and P.is_round(),
        "thin": thin.ok,
        "thinness_violations": len(thin.violations),
    }


def to_dot(P) -> str:
    from .ogposet import MINUS

    lines = ["digraph ogposet {", "  rankdir=BT;"]
    for x in P.elements():
        lines.append(f'  "{x[0]}_{x[1]}" [label="{x[0]}:{x[1]}"];')
    for x in P.elements():
        for y in sorted(P.faces(x)):
            s = "-" if P.face_sign(x, y) == MINUS else "+"
            lines.append(f'  "{y[0]}_{y[1]}" -> "{x[0]}_{x[1]}" [label="{s}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _factorization_json(F) -> dict:
    return {
        "m": F.m,
        "K_seq": [[list(e) for e in sorted(K)] for K in F.K_seq],
        "stages": [list(S.sizes) for S in F.stages],
        "iso": [[list(x), list(F.iso(x))] for x in F.iso.source.elements()],
    }


def _horn_from_json(raw):
    from .complex import enumerate_marked_horns
    from .ogposet import parse_sign

    U = load_shape(raw["atom"])
    B = frozenset(tuple(e) for e in raw.get("marking", []))
    pivot = tuple(raw["pivot"])
    sign = parse_sign(raw["sign"])
    for h in enumerate_marked_horns([(U, B)]):
        if h.pivot == pivot and h.sign == sign:
            return h
    from .errors import InvalidMarking

    raise InvalidMarking("inventory entry is not a marked horn", pivot)


# verbs ---------------------------------------------------------------------------------

def run_verb(args):
    v = args.verb
    if v == "validate":
        raw = _read_json(_need(args, 1)[0]) if not _is_named(args.inputs[0]) else None
        if args.kind == "complex" or (isinstance(raw, dict) and "cells" in raw):
            from .complex import load_marked_complex

            X = load_marked_complex(raw)
            return {"cells": [len(r) for r in X.base.cells], "marked": len(X.marked), "variant": X.variant}
        P = load_shape(args.inputs[0]) if raw is None else load_shape(raw)
        if args.regular:
            from .ogposet import validate_ogposet

            validate_ogposet(P.to_json(), regular=True)
        return {"dims": list(P.sizes)}
    if v == "info":
        return shape_info(load_shape(_need(args, 1)[0]))
    if v in ("paste", "gray", "join"):
        a, b = (load_shape(t) for t in _need(args, 2)[:2])
        if v == "paste":
            from .molecule import as_cert, paste

            k = args.dim if args.dim is not None else min(a.dim, b.dim) - 1
            return paste(as_cert(a), as_cert(b), k).carrier
        from .construct import gray, join

        return (gray if v == "gray" else join)(a, b)
    if v == "cylinder":
        from .construct import CylinderSpec, partial_cylinder

        base = load_shape(_need(args, 1)[0])
        carrier, tau = partial_cylinder(CylinderSpec(base, frozenset(_elems(args.K))))
        out = {"carrier": carrier.to_json(), "dims": list(carrier.sizes)}
        if tau is not None:
            out["collapse"] = [list(tau(x)) for x in carrier.elements()]
        return out
    if v == "collapse-factor":
        from .morphism import factor_collapse

        if args.source and args.target:
            from .morphism import enumerate_collapses

            found = enumerate_collapses(load_shape(args.source), load_shape(args.target))
            if len(found) != 1:
                raise UsageError(f"{len(found)} collapses between these shapes; pass a map with --in")
            p = found[0]
        else:
            p = load_map(_need(args, 1)[0])
        return _factorization_json(factor_collapse(p))
    if v == "ternary-factor":
        from .morphism import SclMorphism, factor_ternary

        raw = _read_json(_need(args, 1)[0])
        m = SclMorphism(load_map(raw["sub"]), load_map(raw["post"]))
        m.validate()
        s, c, j = factor_ternary(m)
        return {"subdivision": s.to_json(), "collapse": c.to_json(), "embedding": j.to_json()}
    if v == "subdivide":
        from .construct import closure_embedding, pushout_comerger
        from .morphism import co_merger
        from .ogposet import GradedFunction, find_isomorphism

        host, V = (load_shape(t) for t in _need(args, 2)[:2])
        if args.elem is None:
            raise UsageError("subdivide needs --elem d,i")
        x = _elem(args.elem)
        iota = closure_embedding(host, x)
        cm = co_merger(V)
        iso = find_isomorphism(cm.target, iota.source)
        if iso is None:
            from .errors import BoundaryMismatch

            raise BoundaryMismatch("the merger of the replacement is not the closure of the element")
        sub = GradedFunction(V, iota.source, {z: iso[cm(z)] for z in V.elements()})
        R, comap, emb = pushout_comerger(iota, sub)
        return {"result": R.to_json(), "dims": list(R.sizes), "comap": [list(comap(e)) for e in R.elements()]}
    if v == "merge":
        from .morphism import co_merger, globe_subdivision

        U = load_shape(_need(args, 1)[0])
        if args.globular:
            s = globe_subdivision(U)
        else:
            s = co_merger(U)
        return {"target": s.target.to_json(), "dims": list(s.target.sizes), "comap": [list(s(x)) for x in U.elements()]}
    if v == "horns":
        from .complex import enumerate_marked_horns

        U = load_shape(_need(args, 1)[0])
        B = frozenset(_elems(args.marking)) if args.marking else frozenset({U.greatest()})
        return [h.to_json() for h in enumerate_marked_horns([(U, B)])]
    if v == "fill":
        from .complex import horn_filler_search, load_marked_complex

        X = load_marked_complex(_read_json(_need(args, 1)[0]))
        if not args.horn or not args.morphism:
            raise UsageError("fill needs --horn and --morphism")
        h = _horn_from_json(_read_json(args.horn))
        e = {tuple(z): tuple(r) for z, r in _read_json(args.morphism)}
        filler = horn_filler_search(X, h, e)
        if filler is None:
            raise SearchFailed({"status": "FAIL", "morphism": [[list(z), list(r)] for z, r in sorted(e.items())]})
        return {"status": "PASS", "filler": [[list(z), list(c.ref)] for z, c in sorted(filler.items())]}
    if v == "fibrant":
        from .complex import fibrancy_report, load_marked_complex

        X = load_marked_complex(_read_json(_need(args, 1)[0]))
        if not args.inventory:
            raise UsageError("fibrant needs --inventory")
        inv = [_horn_from_json(r) for r in _read_json(args.inventory)]
        report = fibrancy_report(X, inv, args.dim)
        if report["status"] != "PASS":
            raise SearchFailed(report)
        return report
    if v == "closure":
        from .complex import globular_composite, load_marked_complex, marked_closure, sigma, verify_closure

        X = load_marked_complex(_read_json(_need(args, 1)[0]))
        seeds = [tuple(r) for r in (_elems(args.seed_cells) or sorted(X.marked))]
        res = marked_closure(X.base, [sigma(X.base.value(r)) for r in seeds], _bound(args))
        return {
            "bound": res.bound,
            "label": res.label,
            "size": len(res),
            "glcom_captured": [globular_composite(sigma(X.base.value(r))) in res for r in seeds],
            "violations": verify_closure(X.base, res),
        }
    if v == "atlas":
        from .corpus import enumerate_atoms

        atoms = enumerate_atoms(_bound(args), args.dim if args.dim is not None else 3)
        if args.sample is not None:
            rng = random.Random(args.seed)
            atoms = rng.sample(atoms, min(args.sample, len(atoms)))
        return {"bound": _bound(args), "count": len(atoms), "atoms": [a.carrier.to_json() for a in atoms]}
    if v == "export-dot":
        return to_dot(load_shape(_need(args, 1)[0]))
    raise UsageError(f"unknown verb {v!r}")


def _is_named(token: str) -> bool:
    return token.split(":")[0] in ("point", "arrow", "globe", "simplex", "cube") and not Path(token).exists()


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rdcpx", description="Regular directed complexes: shapes, maps, horns and composites.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--in", dest="inputs", action="append", help="input file or named shape (repeatable)")
    p.add_argument("--out", help="write the result here instead of stdout")
    p.add_argument("--bound", type=int, help=f"size bound (default ${DEFAULT_BOUND_ENV} or 7)")
    p.add_argument("--dim", type=int, help="pasting dimension, truncation level or dimension cap")
    p.add_argument("--seed", type=int, default=0, help="random seed for sampling")
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.add_argument("--kind", choices=("ogposet", "complex"), help="what validate should expect")
    p.add_argument("--regular", action="store_true", help="require input and output faces everywhere")
    p.add_argument("--K", help="JSON list of elements for cylinder")
    p.add_argument("--source", help="source shape for collapse-factor")
    p.add_argument("--target", help="target shape for collapse-factor")
    p.add_argument("--elem", help="element d,i for subdivide")
    p.add_argument("--globular", action="store_true", help="merge: use the globe subdivision")
    p.add_argument("--marking", help="JSON list of marked elements for horns")
    p.add_argument("--horn", help="horn JSON for fill")
    p.add_argument("--morphism", help="horn morphism JSON for fill")
    p.add_argument("--inventory", help="horn inventory JSON for fibrant")
    p.add_argument("--seed-cells", dest="seed_cells", help="JSON list of cells seeding closure")
    p.add_argument("--sample", type=int, help="atlas: sample this many atoms")
    return p


def _emit(result, args, stream) -> None:
    from .ogposet import OgPoset

    if args.format == "dot" or args.verb == "export-dot":
        if isinstance(result, OgPoset):
            text = to_dot(result)
        elif isinstance(result, str):
            text = result
        else:
            raise UsageError("dot output is only available for shapes")
    else:
        if isinstance(result, OgPoset):
            result = result.to_json()
        text = json.dumps(result, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        stream.write(text)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        if argv and not argv[0].startswith("-") and argv[0] not in VERBS:
            raise UsageError(f"unknown verb {argv[0]!r}")
        args = build_parser().parse_args(argv)
        result = run_verb(args)
        _emit(result, args, sys.stdout)
        return 0
    except UsageError as exc:
        sys.stderr.write(json.dumps({"error": "UsageError", "message": str(exc)}, sort_keys=True) + "\n")
        return 3
    except SearchFailed as exc:
        sys.stdout.write(json.dumps(exc.payload, sort_keys=True) + "\n")
        sys.stderr.write(json.dumps({"error": "SearchFailed", "message": "search reported FAIL"}, sort_keys=True) + "\n")
        return 2
    except RdcError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
        return 1
    except (KeyError, TypeError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
