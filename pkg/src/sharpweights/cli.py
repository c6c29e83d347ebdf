"""Command-line entry point: ``sharpweights <subcommand> ...``.

Exit status is 0 when every check passes, 1 when a report records a violation
(the report is still written) and 2 for usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .functionals import SearchConfig, ap_constant
from .matweight import ConvergenceError, MatrixWeight, cg_maximal, matrix_ap
from .operators import QuadConfig, dual_hardy_experiment, weak_lp_quasinorm
from .stepfn import DomainError, Interval, StepFunction
from .suites import DEFAULT_SIZES, SUITES, run_property_suites
from .weights import build_power_weight, build_weight_large_p, build_weight_small_p

DEFAULT_P = {"small-p": (1.25, 1.5, 1.75), "hilbert": (1.25, 1.5, 1.75), "large-p": (2.0, 3.0), "power": (2.0, 3.0)}


class UsageError(Exception):
    pass


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}") from None


def _load_step(path: str) -> StepFunction:
    try:
        return StepFunction.from_dict(_load_json(path))
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"{path} does not hold a step function: {e}") from None


def _load_matrix(path: str) -> MatrixWeight:
    try:
        return MatrixWeight.from_dict(_load_json(path))
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"{path} does not hold a matrix weight: {e}") from None


def _emit(text: str, out, timing=None):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    path = Path(out)
    path.write_text(text if text.endswith("\n") else text + "\n")
    if timing is not None:
        side = path.with_name(path.name + ".timing.json")
        side.write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=experiments._jsonable)


# -- subcommands ---------------------------------------------------------------


def cmd_construct_weight(a) -> int:
    if a.family == "power":
        if a.eps is None:
            raise UsageError("--eps is required for the power family")
        w = build_power_weight(a.eps)
    else:
        if a.N is None or a.p is None:
            raise UsageError(f"--N and --p are required for the {a.family} family")
        w = (build_weight_small_p if a.family == "small-p" else build_weight_large_p)(a.N, a.p)
    _emit(_dump(w.to_dict()), a.out)
    return 0


def cmd_ap(a) -> int:
    w = _load_step(a.weight)
    cfg = SearchConfig(domain=Interval(*a.domain)) if a.domain else None
    rep = ap_constant(w, a.p, cfg)
    _emit(_dump(rep.to_dict()), a.out)
    return 0


def cmd_matrix_ap(a) -> int:
    W = _load_matrix(a.weight)
    _emit(_dump(matrix_ap(W, a.p).to_dict()), a.out)
    return 0


def cmd_weak_norm(a) -> int:
    g = _load_step(a.g)
    weight = _load_step(a.weight) if a.weight else None
    _emit(_dump(weak_lp_quasinorm(g, a.p, weight=weight).to_dict()), a.out)
    return 0


def cmd_dual_hardy(a) -> int:
    w = _load_step(a.weight)
    raw = _load_json(a.E)
    try:
        E = [Interval(float(x), float(y)) for x, y in raw]
    except (TypeError, ValueError) as e:
        raise UsageError(f"{a.E} must list [a, b] pairs: {e}") from None
    rep = dual_hardy_experiment(w, a.p, E, QuadConfig())
    _emit(_dump(rep.to_dict()), a.out)
    return 1 if rep.flagged else 0


def cmd_cg_max(a) -> int:
    W = _load_matrix(a.weight)
    f = np.asarray(_load_json(a.f), dtype=np.float64)
    if f.size != W.size * W.n:
        raise UsageError(f"f needs {W.size} vectors of length {W.n}")
    value = cg_maximal(W, a.p, f.reshape(W.size, W.n), a.x, a.mode)
    _emit(_dump({"value": value, "x": a.x, "p": a.p, "mode": a.mode}), a.out)
    return 0


def _parse_sizes(items) -> dict:
    sizes = {}
    for item in items or ():
        name, _, n = item.partition("=")
        if name not in DEFAULT_SIZES or not n.isdigit():
            raise UsageError(f"--size expects NAME=COUNT with NAME in {', '.join(SUITES)}")
        sizes[name] = int(n)
    return sizes


def cmd_experiment(a) -> int:
    if a.which == "suites":
        rep = run_property_suites(a.seed, _parse_sizes(a.size), a.only, a.jobs)
        reports = [rep]
    else:
        ps = a.p or DEFAULT_P[a.which]
        reports = []
        for p in ps:
            if a.which == "small-p":
                rep = experiments.run_sharpness_small_p(p, a.N or experiments.SMALL_P_GRID, a.jobs)
            elif a.which == "hilbert":
                rep = experiments.run_hilbert_small_p(p, a.N or experiments.SMALL_P_GRID, a.jobs)
            elif a.which == "large-p":
                rep = experiments.run_sharpness_large_p(p, a.N or experiments.LARGE_P_GRID, a.jobs)
            else:
                rep = experiments.run_power_weight(p, a.eps or experiments.EPS_GRID, a.jobs)
            rep.seed = a.seed
            reports.append(rep)
    passed = all(r.passed for r in reports)
    body = {"experiment": a.which, "passed": passed, "reports": [r.to_dict() for r in reports]}
    timing = {"wall_clock": sum(r.wall_clock for r in reports)}
    if a.which == "suites":
        timing["suites"] = reports[0].timing
    _emit(_dump(body), a.out, timing)
    if a.out:
        rows = "".join(r.to_csv() for r in reports if r.points)
        if rows:
            Path(a.out).with_suffix(".csv").write_text(rows)
    for r in reports:
        for c in r.checks:
            if not c.passed:
                print(f"violation [{r.experiment} p={r.params.get('p', '-')}] {c.name}: {c.value:.6g} not {c.threshold}",
                      file=sys.stderr)
    return 0 if passed else 1


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="FILE", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for grid points or suites")

    ap = argparse.ArgumentParser(prog="sharpweights", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("construct-weight", parents=[common], help="emit an extremal weight as JSON")
    s.add_argument("--family", choices=("small-p", "large-p", "power"), required=True)
    s.add_argument("--p", type=float)
    s.add_argument("--N", type=int)
    s.add_argument("--eps", type=float)
    s.set_defaults(func=cmd_construct_weight)

    s = sub.add_parser("ap", parents=[common], help="A_p constant of a step weight")
    s.add_argument("--weight", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--domain", type=float, nargs=2, metavar=("A", "B"))
    s.set_defaults(func=cmd_ap)

    s = sub.add_parser("matrix-ap", parents=[common], help="matrix A_p constant over mesh cubes")
    s.add_argument("--weight", required=True)
    s.add_argument("--p", type=float, required=True)
    s.set_defaults(func=cmd_matrix_ap)

    s = sub.add_parser("weak-norm", parents=[common], help="weak L^p quasinorm of a step function")
    s.add_argument("--g", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--weight")
    s.set_defaults(func=cmd_weak_norm)

    s = sub.add_parser("dual-hardy", parents=[common], help="L^p'(sigma) norm of the dual Hardy test function")
    s.add_argument("--weight", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--E", required=True, help="JSON list of [a, b] intervals")
    s.set_defaults(func=cmd_dual_hardy)

    s = sub.add_parser("cg-max", parents=[common], help="Christ-Goldberg maximal function at a point")
    s.add_argument("--weight", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--f", required=True, help="JSON array of one vector per mesh piece")
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--mode", choices=("dyadic-local", "all-mesh-intervals"), default="dyadic-local")
    s.set_defaults(func=cmd_cg_max)

    s = sub.add_parser("experiment", parents=[common], help="scaling experiments and property suites")
    s.add_argument("which", choices=("small-p", "large-p", "power", "hilbert", "suites"))
    s.add_argument("--p", type=float, action="append", help="repeatable; defaults to the standard grid")
    s.add_argument("--N", type=int, nargs="+")
    s.add_argument("--eps", type=float, nargs="+")
    s.add_argument("--size", action="append", metavar="SUITE=COUNT")
    s.add_argument("--only", nargs="+", choices=SUITES)
    s.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return a.func(a)
    except UsageError as e:
        print(f"sharpweights: {e}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, ConvergenceError) as e:
        print(f"sharpweights: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
