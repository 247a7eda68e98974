"""Command-line front end.

Exit status: 0 when every check passes, 1 when a check fails, 2 on usage or
input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import experiments, fileio
from .density import log_concave_hull
from .errors import EpsOutOfRange, ParseError, PLStabError, UnknownSuite
from .midpoint import PLTriple, sup_convolution
from .stability import certify, l1_bound_check
from .transport import DEFAULT_TOL, align, pl_deficit_integral, quadratic_cost

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _density(path):
    obj = fileio.load(path)
    if isinstance(obj, PLTriple):
        raise UsageError(f"{path}: expected a density file, got a triple")
    return obj


def _triple(path):
    obj = fileio.load(path)
    if not isinstance(obj, PLTriple):
        raise UsageError(f"{path}: expected a triple file")
    return obj


def cmd_deficit(a):
    return _json({"deficit_integral": pl_deficit_integral(_density(a.f), _density(a.g), a.tol)}), True


def cmd_cost(a):
    return _json({"quadratic_cost": quadratic_cost(_density(a.f), _density(a.g), a.tol)}), True


def cmd_l1(a):
    rep = l1_bound_check(_density(a.f), _density(a.g), a.constant, a.tol)
    return _json(rep.to_dict()), rep.margin.passed


def cmd_align(a):
    return _json(asdict(align(_density(a.f), _density(a.m)))), True


def cmd_certify(a):
    cert = certify(_triple(a.triple), a.constant)
    return _json(cert.to_dict()), cert.passed


def cmd_supconv(a):
    return fileio.emit(sup_convolution(_density(a.f), _density(a.g), a.alpha)), True


def cmd_hull(a):
    try:
        data = json.loads(Path(a.points).read_text())
        points = data["points"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{a.points}: expected {{\"points\": [[x, y], ...]}}: {exc}") from exc
    hull = log_concave_hull(points, data.get("left_tail_slope"), data.get("right_tail_slope"))
    return fileio.emit(hull), True


def cmd_example(a):
    if a.alpha != 0.5:
        raise UsageError("the example triples are defined for alpha = 0.5")
    base = _density(a.base) if a.base else None
    triple = experiments.make_example(a.kind, a.eps, base)
    return fileio.emit(triple), True


def cmd_sweep(a):
    base = _density(a.base) if a.base else None
    rows, fits = experiments.sweep(a.kind, a.eps, a.tol, base)
    sys.stderr.write(_json({k: asdict(v) for k, v in fits.items()}))
    return experiments.rows_to_csv(rows), True


def cmd_suite(a):
    rep = experiments.run_suite(a.name, a.trials, a.seed)
    return _json(rep.to_dict()), rep.ok


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="absolute quadrature tolerance")
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--constant", type=float, default=None, help="acceptance constant for bound ratios")
    common.add_argument("--alpha", type=float, default=0.5, help="weight of f in the midpoint")
    common.add_argument("--out", help="write the result here instead of stdout")

    parser = argparse.ArgumentParser(prog="plstab", description="Stability checks for log-concave midpoint inequalities.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, *positional):
        p = sub.add_parser(name, parents=[common], help=help_text)
        for arg in positional:
            p.add_argument(arg)
        p.set_defaults(func=fn)
        return p

    add("deficit", cmd_deficit, "deficit integral of the monotone transport", "f", "g")
    add("cost", cmd_cost, "quadratic transport cost", "f", "g")
    add("l1", cmd_l1, "L1 distance against the transport-cost bound", "f", "g")
    add("align", cmd_align, "best a, b for |f - a m(. + b)|", "f", "m")
    add("certify", cmd_certify, "stability certificate for a triple file", "triple")
    add("supconv", cmd_supconv, "weighted sup-convolution of two functions", "f", "g")
    add("hull", cmd_hull, "log-concave hull of points from a JSON file", "points")
    ex = add("example", cmd_example, "emit an example triple", "kind")
    ex.add_argument("--eps", type=float, required=True)
    ex.add_argument("--base", help="even base density file (exa2)")
    sw = add("sweep", cmd_sweep, "CSV sweep over eps with exponent fits on stderr", "kind")
    sw.add_argument("--eps", type=float, nargs="+", default=[0.02, 0.01, 0.005, 0.0025])
    sw.add_argument("--base", help="even base density file (exa2)")
    su = add("suite", cmd_suite, "seeded property suite", "name")
    su.add_argument("--trials", type=int, default=200)
    return parser


DEFAULT_CONSTANTS = {"l1": 64.0, "certify": 10.0}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.constant is None:
        args.constant = DEFAULT_CONSTANTS.get(args.command, 10.0)
    try:
        text, ok = args.func(args)
    except (ParseError, UsageError, UnknownSuite, EpsOutOfRange, FileNotFoundError) as exc:
        sys.stderr.write(f"plstab: error: {exc}\n")
        return EXIT_USAGE
    except PLStabError as exc:
        sys.stderr.write(f"plstab: check failed: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    except ValueError as exc:
        sys.stderr.write(f"plstab: error: {exc}\n")
        return EXIT_USAGE
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
