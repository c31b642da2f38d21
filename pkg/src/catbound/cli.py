"""Command-line front end.

    catbound bound --invariant cat --family am --target G model.catb
    catbound tc --target G model.catb
    catbound develop --target G --radius 3 model.catb
    catbound check-curvature --target P model.catb
    catbound certify branched --target B model.catb
    catbound validate model.catb

Every subcommand accepts an optional .catb file (queries run against
the standard prelude alone when it is omitted), `--format text|json`,
`--prelude PATH` to replace the standard prelude (env CATBOUND_PRELUDE
works too), and `--plus-one` to print finite values in the convention
that counts sets rather than the normalized count.

Exit codes: 0 result established, 2 inconclusive (no finite bound, or
certificate hypotheses not established), 1 errors and diagnostics.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import apps, develop, dsl
from .engine import BoundResult, DerivationNode, Evaluator
from .extnat import ExtNat
from .facts import Family
from .model import Ref, Universe


class CliError(Exception):
    'Reported to stderr; always exit 1.'


class _Parser(argparse.ArgumentParser):
    'Usage problems are tool errors (exit 1), never inconclusive (2).'

    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    top = _Parser(
        prog="catbound",
        description="certified upper bounds for category-type invariants "
                    "of combinatorially described groups")
    sub = top.add_subparsers(dest="command", required=True,
                             parser_class=_Parser)

    def common(p: argparse.ArgumentParser, file_arg: bool = True) -> None:
        if file_arg:
            p.add_argument("file", nargs="?",
                           help=".catb model file (prelude only if omitted)")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--prelude", default=None, metavar="PATH",
                       help="replace the standard prelude")
        p.add_argument("--plus-one", action="store_true", dest="plus_one",
                       help="print finite values shifted up by one")

    p = sub.add_parser("bound", help="category / dimension upper bound")
    p.add_argument("--target", required=True, help="group name")
    p.add_argument("--invariant", choices=("cat", "gd", "cd"), default="cat")
    p.add_argument("--family", default=None,
                   help="family name for cat (case-insensitive)")
    common(p)

    p = sub.add_parser("tc", help="topological complexity upper bound")
    p.add_argument("--target", required=True, help="group name")
    common(p)

    p = sub.add_parser("develop", help="finite ball of the dual development")
    p.add_argument("--target", required=True,
                   help="graph-of-groups or polygon name")
    p.add_argument("--radius", type=int, default=2)
    common(p)

    p = sub.add_parser("check-curvature",
                       help="vertex link condition of a polygon")
    p.add_argument("--target", required=True, help="polygon name")
    common(p)

    # one free-form positional list: an optional setup kind and an
    # optional file, in either order around the flags (argparse cannot
    # fill two optional positionals split by options)
    p = sub.add_parser("certify", help="vanishing certificate for a setup")
    p.add_argument("words", nargs="*", metavar="[kind] [file]",
                   help="optional setup kind (gluing, double, branched) "
                        "and .catb model file")
    p.add_argument("--target", required=True, help="setup name")
    p.add_argument("--d", type=int, default=None,
                   help="override the copy count of a branched setup")
    common(p, file_arg=False)

    p = sub.add_parser("validate", help="load a model and report diagnostics")
    common(p)

    return top


# -- loading --------------------------------------------------------------

def _load(args) -> Universe:
    prelude = args.prelude or os.environ.get("CATBOUND_PRELUDE")
    try:
        base = dsl.load_prelude(Path(prelude) if prelude else None)
    except (OSError, ValueError) as exc:
        raise CliError(f"prelude: {exc}")
    if args.file is None:
        return base
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(str(exc))
    u, diags = dsl.load_text(text, base)
    if diags:
        raise CliError("\n".join(f"{args.file}:{d}" for d in diags))
    if u is None:
        raise CliError(f"{args.file}: no model loaded")
    return u


def _family(u: Universe, name: Optional[str]) -> Family:
    if name is None:
        raise CliError("--family is required for cat bounds")
    if name in u.families:
        return u.families[name]
    hits = [f for key, f in u.families.items() if key.lower() == name.lower()]
    if len(hits) == 1:
        return hits[0]
    known = ", ".join(sorted(u.families))
    raise CliError(f"unknown family {name!r} (known: {known})")


# -- rendering ------------------------------------------------------------

def _emit_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def _shown_value(v: ExtNat, plus_one: bool) -> str:
    if plus_one and v.is_finite:
        return str(v + ExtNat(1))
    return str(v)


def _trace_lines(node: DerivationNode, depth: int = 0,
                 out: Optional[List[str]] = None) -> List[str]:
    if out is None:
        out = []
    out.append(f"{'  ' * depth}{node.rule} = {node.value}  ({node.cite})")
    for p in node.premises:
        _trace_lines(p, depth + 1, out)
    return out


def _print_bound(r: BoundResult, args) -> int:
    if args.format == "json":
        payload = r.to_json()
        if args.plus_one and r.value.is_finite:
            payload["value"] = (r.value + ExtNat(1)).to_json()
        _emit_json(payload)
    else:
        label = (f"cat[{r.family}]" if r.invariant == "cat" else r.invariant)
        suffix = "  (+1 convention)" if args.plus_one and r.value.is_finite else ""
        print(f"{label} <= {_shown_value(r.value, args.plus_one)}{suffix}")
        assumed = r.assumptions()
        if assumed:
            print("assumed:")
            for a in assumed:
                print(f"  - {a}")
        print("trace:")
        for line in _trace_lines(r.trace, 1):
            print(line)
    return 0 if r.value.is_finite else 2


# -- subcommands ----------------------------------------------------------

def _cmd_bound(args) -> int:
    u = _load(args)
    ev = Evaluator(u)
    target = Ref(args.target)
    try:
        if args.invariant == "cat":
            r = ev.bound_cat(target, _family(u, args.family))
        elif args.invariant == "gd":
            r = ev.bound_gd(target)
        else:
            r = ev.bound_cd(target)
    except KeyError as exc:
        raise CliError(f"unresolved target: {exc.args[0]}")
    return _print_bound(r, args)


def _cmd_tc(args) -> int:
    u = _load(args)
    try:
        r = Evaluator(u).bound_tc(Ref(args.target))
    except KeyError as exc:
        raise CliError(f"unresolved target: {exc.args[0]}")
    return _print_bound(r, args)


def _cmd_develop(args) -> int:
    u = _load(args)
    try:
        ball = develop.develop_target(u, args.target, args.radius)
    except ValueError as exc:
        raise CliError(str(exc))
    report = develop.verify_stabilizers(ball)
    if args.format == "json":
        _emit_json({
            "name": ball.name,
            "radius": ball.radius,
            "complete": ball.complete,
            "cells": [{
                "id": c.id, "dim": c.dim, "kind": c.kind, "level": c.level,
                "stab_order": c.stab_order, "incident": list(c.incident),
                "chart": c.chart,
            } for c in ball.cells],
            "stabilizers_consistent": report.ok,
        })
        return 0
    dims = sorted({c.dim for c in ball.cells})
    counts = ", ".join(f"dim {d}: {len(ball.of_dim(d))}" for d in dims)
    print(f"ball around the base cell of {ball.name}, radius {ball.radius}"
          f" ({'complete' if ball.complete else 'truncated at the frontier'})")
    print(f"cells: {counts}")
    for kind, orders in sorted(report.orders.items()):
        print(f"stabilizer orders, {kind}: {sorted(orders)}")
    if not report.ok:
        print("stabilizer inconsistencies:")
        for p in report.problems:
            print(f"  - {p}")
    return 0


def _cmd_check_curvature(args) -> int:
    u = _load(args)
    try:
        kind, payload = u.resolve(Ref(args.target))
    except (KeyError, ValueError) as exc:
        raise CliError(str(exc))
    if kind != "polygon":
        raise CliError(f"{args.target!r} is not a polygon of groups")
    try:
        report = develop.check_curvature(u, payload)
    except ValueError as exc:
        raise CliError(str(exc))
    if args.format == "json":
        _emit_json({
            "target": args.target,
            "holds": report.holds,
            "vertex": report.vertex,
            "witness": list(report.witness) if report.witness is not None else None,
            "detail": report.detail,
        })
    elif report.holds:
        print(f"link condition holds for {args.target}")
    else:
        witness = "{" + ", ".join(str(x) for x in report.witness or ()) + "}"
        print(f"link condition fails for {args.target} at vertex "
              f"{report.vertex}: intersection {witness} ({report.detail})")
    return 0


_SETUP_KINDS = {
    "GluingSetup": "gluing",
    "DoubleSetup": "double",
    "BranchedSetup": "branched",
}


def _cmd_certify(args) -> int:
    args.kind, args.file = None, None
    for word in args.words:
        if word in ("gluing", "double", "branched") and args.kind is None:
            args.kind = word
        elif args.file is None:
            args.file = word
        else:
            raise CliError(f"unexpected argument {word!r}")
    u = _load(args)
    setup = u.setups.get(args.target)
    if setup is None:
        known = ", ".join(sorted(u.setups)) or "none"
        raise CliError(f"unknown setup {args.target!r} (known: {known})")
    kind = _SETUP_KINDS[type(setup).__name__]
    if args.kind is not None and args.kind != kind:
        raise CliError(f"setup {args.target!r} is a {kind}, not a {args.kind}")
    if args.d is not None:
        if kind != "branched":
            raise CliError("--d applies only to branched setups")
        setup = dataclasses.replace(setup, d=args.d)
    try:
        if kind == "gluing":
            cert = apps.certify_gluing(u, setup)
        elif kind == "double":
            cert = apps.certify_double(u, setup)
        else:
            cert = apps.certify_branched(u, setup)
    except apps.PreconditionError as exc:
        raise CliError(str(exc))
    if args.format == "json":
        _emit_json(cert.to_json())
    else:
        print(cert.to_text())
    return 0 if cert.conclusion != "inconclusive" else 2


def _cmd_validate(args) -> int:
    prelude = args.prelude or os.environ.get("CATBOUND_PRELUDE")
    try:
        base = dsl.load_prelude(Path(prelude) if prelude else None)
    except (OSError, ValueError) as exc:
        raise CliError(f"prelude: {exc}")
    if args.file is None:
        u, diags = base, []
    else:
        try:
            text = Path(args.file).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(str(exc))
        u, diags = dsl.load_text(text, base)
    if args.format == "json":
        _emit_json({
            "ok": not diags,
            "diagnostics": [{"loc": d.loc, "message": d.message} for d in diags],
        })
        return 1 if diags else 0
    if diags:
        for d in diags:
            print(f"{args.file}:{d}", file=sys.stderr)
        return 1
    assert u is not None
    print(f"ok: {len(u.group_names())} groups, {len(u.homs)} homomorphisms, "
          f"{len(u.families)} families, {len(u.setups)} setups")
    return 0


_COMMANDS = {
    "bound": _cmd_bound,
    "tc": _cmd_tc,
    "develop": _cmd_develop,
    "check-curvature": _cmd_check_curvature,
    "certify": _cmd_certify,
    "validate": _cmd_validate,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        # known-args so certify's trailing positionals survive argparse's
        # single-chunk positional matching; anything else left over is an
        # error
        args, extras = _build_parser().parse_known_args(argv)
        if extras and (args.command != "certify"
                       or any(x.startswith("-") for x in extras)):
            raise CliError(f"unrecognized arguments: {' '.join(extras)}")
        if extras:
            args.words = list(args.words) + extras
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
