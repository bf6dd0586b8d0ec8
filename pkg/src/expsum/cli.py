"""Command-line front end.

    expsum pdf    --spec S.json --t-min 0 --t-max 5 --points 6
    expsum cdf    --spec S.json --t 1 --t 2
    expsum mgf    --spec S.json --s 0 --s 0.5
    expsum check  --spec S.json --tol-abs 1e-7 --mc-samples 100000
    expsum sample --spec S.json --n 1000 --seed 7

Exit codes: 0 success/pass, 1 check failed, 2 input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Any

from . import density, oracle
from .density import ComponentSpec, EvalOptions, SumDistribution
from .errors import ConvergenceError, DomainError, ExpSumError

__all__ = ["SpecError", "parse_spec", "load_spec", "spec_to_dict", "main", "CSV_COLUMNS"]

EXIT_OK, EXIT_CHECK_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

CSV_COLUMNS = {
    "pdf": ("t", "pdf", "condition_estimate", "method"),
    "cdf": ("t", "cdf"),
    "mgf": ("s", "mgf"),
    "sample": ("sample",),
}

_TOP_KEYS = {"components", "options"}
_COMP_KEYS = {"kind", "shape", "rate"}
_OPT_KEYS = {"regroup_tol", "policy"}


class SpecError(ExpSumError, ValueError):
    """A spec file failed to parse; the message names the offending field."""


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{where}: expected a number, got {value!r}")
    return value


def parse_spec(data: Any) -> tuple[SumDistribution, EvalOptions]:
    """Validate a decoded spec document and build the distribution."""
    if not isinstance(data, dict):
        raise SpecError("spec: top level must be a JSON object")
    extra = set(data) - _TOP_KEYS
    if extra:
        raise SpecError(f"spec: unknown field(s) {sorted(extra)}")
    comps = data.get("components")
    if not isinstance(comps, list) or not comps:
        raise SpecError("components: must be a nonempty list")
    out = []
    for i, c in enumerate(comps):
        where = f"components[{i}]"
        if not isinstance(c, dict):
            raise SpecError(f"{where}: must be an object")
        extra = set(c) - _COMP_KEYS
        if extra:
            raise SpecError(f"{where}: unknown field(s) {sorted(extra)}")
        kind = c.get("kind")
        if kind not in density.KINDS:
            raise SpecError(f"{where}.kind: must be one of {list(density.KINDS)}, got {kind!r}")
        if "rate" not in c:
            raise SpecError(f"{where}.rate: missing")
        rate = _number(c["rate"], f"{where}.rate")
        if not (math.isfinite(rate) and rate > 0):
            raise SpecError(f"{where}.rate: must be a positive number, got {rate!r}")
        if "shape" in c:
            shape = _number(c["shape"], f"{where}.shape")
        elif kind == "exponential":
            shape = 1
        else:
            raise SpecError(f"{where}.shape: required for kind {kind!r}")
        if not (math.isfinite(shape) and shape > 0):
            raise SpecError(f"{where}.shape: must be a positive number, got {shape!r}")
        try:
            out.append(ComponentSpec(kind, int(shape) if kind != "gamma" and float(shape).is_integer() else shape, rate))
        except DomainError as exc:
            raise SpecError(f"{where}.shape: {exc}") from None
    opts = data.get("options", {})
    if not isinstance(opts, dict):
        raise SpecError("options: must be an object")
    extra = set(opts) - _OPT_KEYS
    if extra:
        raise SpecError(f"options: unknown field(s) {sorted(extra)}")
    kw = {}
    if "policy" in opts:
        if opts["policy"] not in density.POLICIES:
            raise SpecError(f"options.policy: must be one of {list(density.POLICIES)}, got {opts['policy']!r}")
        kw["policy"] = opts["policy"]
    if "regroup_tol" in opts:
        tol = _number(opts["regroup_tol"], "options.regroup_tol")
        if not tol > 0:
            raise SpecError(f"options.regroup_tol: must be positive, got {tol!r}")
        kw["rel_gap"] = float(tol)
    return SumDistribution(tuple(out)), EvalOptions(**kw)


def load_spec(path: str) -> tuple[SumDistribution, EvalOptions]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_spec(data)


def spec_to_dict(spec: SumDistribution, options: EvalOptions | None = None) -> dict:
    comps = []
    for c in spec.components:
        d = {"kind": c.kind, "rate": c.rate}
        if c.kind != "exponential":
            d["shape"] = c.shape
        comps.append(d)
    doc: dict[str, Any] = {"components": comps}
    if options is not None:
        doc["options"] = {"policy": options.policy, "regroup_tol": options.rel_gap}
    return doc


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    # repr of a float is the shortest string that round-trips
    return repr(float(x))


def _json_num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _emit(args, quantity, rows, extra=None):
    cols = CSV_COLUMNS[quantity]
    fh = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8", newline="")
    try:
        if args.format == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        else:
            doc = {"quantity": quantity, "columns": list(cols),
                   "rows": [{k: _json_num(v) for k, v in zip(cols, r)} for r in rows]}
            if extra:
                doc.update(extra)
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _grid(args, spec, options):
    if args.t:
        if any(not (math.isfinite(t) and t >= 0) for t in args.t):
            raise DomainError("--t values must be nonnegative")
        return density.EvalGrid(tuple(sorted(args.t)), options)
    if args.t_max is None:
        raise DomainError("give --t-max (with --t-min/--points) or explicit --t values")
    if not args.t_min >= 0:
        raise DomainError("--t-min must be nonnegative")
    if not args.t_max > args.t_min:
        raise DomainError("--t-max must exceed --t-min")
    if args.points < 2:
        raise DomainError("--points must be at least 2")
    return density.default_grid(spec, args.t_min, args.t_max, args.points, args.log_grid, options)


def cmd_pdf(args) -> int:
    spec, options = load_spec(args.spec)
    grid = _grid(args, spec, options)
    res = density.pdf(spec, grid)
    rows = [(t, r.value, r.condition_estimate, r.method) for t, r in zip(grid.points, res)]
    _emit(args, "pdf", rows, {"spec": spec_to_dict(spec, options)})
    return EXIT_OK


def cmd_cdf(args) -> int:
    spec, options = load_spec(args.spec)
    grid = _grid(args, spec, options)
    rows = [(t, density.cdf(spec, t, options)) for t in grid.points]
    _emit(args, "cdf", rows, {"spec": spec_to_dict(spec, options)})
    return EXIT_OK


def cmd_mgf(args) -> int:
    spec, options = load_spec(args.spec)
    rows = [(s, density.mgf(spec, s)) for s in args.s]
    _emit(args, "mgf", rows, {"spec": spec_to_dict(spec, options)})
    return EXIT_OK


def cmd_sample(args) -> int:
    spec, _ = load_spec(args.spec)
    x = oracle.sample_sum(spec, args.n, args.seed)
    _emit(args, "sample", [(float(v),) for v in x])
    return EXIT_OK


def cmd_check(args) -> int:
    spec, options = load_spec(args.spec)
    # surface strict-mode rejections before running the oracle
    density.canonicalize(spec, options.policy, options.rel_gap)
    grid = oracle.check_grid(spec, args.points)
    grid = density.EvalGrid(grid.points, options)
    rep = oracle.check_spec(spec, grid, args.tol_abs, args.mc_samples, args.seed)
    doc = {k: _json_num(v) for k, v in rep.to_dict().items()}
    fh = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK if rep.verdict == "pass" else EXIT_CHECK_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="expsum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="JSON spec file")
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    for name, fn in (("pdf", cmd_pdf), ("cdf", cmd_cdf)):
        p = sub.add_parser(name, help=f"evaluate the {name} on a grid")
        common(p)
        p.add_argument("--t-min", type=float, default=0.0)
        p.add_argument("--t-max", type=float)
        p.add_argument("--points", type=int, default=101)
        p.add_argument("--log-grid", action="store_true")
        p.add_argument("--t", type=float, action="append", help="explicit point (repeatable)")
        p.set_defaults(func=fn)

    p = sub.add_parser("mgf", help="evaluate the moment generating function")
    common(p)
    p.add_argument("--s", type=float, action="append", required=True)
    p.set_defaults(func=cmd_mgf)

    p = sub.add_parser("check", help="compare the closed form against the oracles")
    common(p)
    p.add_argument("--tol-abs", type=float, default=1e-7)
    p.add_argument("--mc-samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=41)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sample", help="draw Monte Carlo samples")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (SpecError, DomainError) as exc:
        print(f"expsum: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, ArithmeticError, FloatingPointError) as exc:
        print(f"expsum: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
