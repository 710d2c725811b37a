"""Command-line interface: eval, verify, scan, figdata.

Exit codes: 0 ok, 1 ledger differs (verify --expect-known-errata), 2 usage/validation, 3 singular point, 4 internal error.
Errors are written to stderr as one JSON object ``{"error": code, "message": ...}``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

from . import figures, svg
from .analysis import analyze
from .controller import ConfigFunction, ControllerSpec, ParamPoint, SingularPoint
from .expr import ExprSyntaxError, UnboundSymbol, UnknownSymbol
from .scan import InvalidJob, ScanJob, run_scan
from .verify import (
    default_grid,
    errata_markdown,
    grid_from_json,
    ledger_csv,
    ledger_differences,
    read_ledger,
    verify,
)

EXIT_OK, EXIT_USAGE, EXIT_SINGULAR, EXIT_INTERNAL = 0, 2, 3, 4
EVAL_QUANTITIES = ("det", "minors", "R", "gamma", "flat")


class UsageError(Exception):
    pass


class JsonArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage", message)
        sys.exit(EXIT_USAGE)


def _emit_error(code: str, message: str, **extra) -> None:
    payload = {"error": code, "message": message, **extra}
    sys.stderr.write(json.dumps(_clean(payload), sort_keys=True) + "\n")


def _clean(obj):
    """JSON-safe copy: numpy to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    return obj


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


# -- eval ------------------------------------------------------------------------


def _parse_assignments(text: str, what: str) -> dict[str, float]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise UsageError(f"{what}: expected name=value, got {part!r}")
        k, v = (s.strip() for s in part.split("=", 1))
        try:
            val = float(v)
        except ValueError as exc:
            raise UsageError(f"{what}: {v!r} is not a number") from exc
        if not math.isfinite(val):
            raise UsageError(f"{what}: {k} must be finite")
        out[k] = val
    return out


EVAL_FILE_KEYS = {"schema_version", "spec", "point", "order", "quantities", "expression", "constants"}


def cmd_eval(args) -> int:
    doc = {}
    if args.spec:
        doc = _load_json(args.spec)
        unknown = set(doc) - EVAL_FILE_KEYS
        if unknown:
            raise UsageError(f"unknown keys in {args.spec}: {sorted(unknown)}")
        if doc.get("schema_version", 1) != 1:
            raise UsageError("unsupported schema_version")
    spec_fields = dict(doc.get("spec", {}))
    for name in ("S", "n", "mode", "f"):
        val = getattr(args, name)
        if val is not None:
            spec_fields[name] = val
    spec = ControllerSpec.from_json(spec_fields)

    point_fields = dict(doc.get("point", {}))
    if args.point:
        point_fields.update(_parse_assignments(args.point, "--point"))
    unknown = set(point_fields) - set(spec.coordinates)
    if unknown:
        raise UsageError(f"--point has coordinates {sorted(unknown)} not in {spec.mode} mode {spec.coordinates}")
    point = ParamPoint(
        float(point_fields.get("a", 0.0)),
        float(point_fields.get("b", 0.0)),
        float(point_fields.get("f", spec.f)),
    )
    order = args.order if args.order is not None else int(doc.get("order", 4))
    if not 2 <= order <= 4:
        raise UsageError("--order must be 2, 3 or 4")
    if args.quantities:
        quantities = [q.strip() for q in args.quantities.split(",") if q.strip()]
    else:
        quantities = list(doc.get("quantities", EVAL_QUANTITIES))
    bad = set(quantities) - set(EVAL_QUANTITIES)
    if bad:
        raise UsageError(f"unknown quantities {sorted(bad)}; choose from {list(EVAL_QUANTITIES)}")
    expression = args.expression or doc.get("expression")
    constants = dict(doc.get("constants", {}))
    if args.const:
        constants.update(_parse_assignments(args.const, "--const"))
    func = ConfigFunction(expression, constants) if expression else ConfigFunction()

    rep = analyze(spec, point, order, func)
    out: dict = {
        "spec": spec.to_json(),
        "point": {c: getattr(point, c) for c in spec.coordinates},
        "coordinates": list(spec.coordinates),
        "value": rep.derivs.value,
        "metric": rep.metric.g,
        "classification": rep.classification.value,
        "tau": rep.metric.tau,
    }
    if "det" in quantities:
        out["det"] = rep.metric.det
    if "minors" in quantities:
        out["minors"] = list(rep.metric.leading_minors)
    if "gamma" in quantities and rep.derivs.third is not None:
        out["christoffel_first"] = 0.5 * rep.derivs.third
    if "R" in quantities:
        out["R"] = rep.scalar
        if rep.geometry is not None:
            out["riemann_lowered"] = rep.geometry.riemann_lowered
            out["ricci"] = rep.geometry.ricci
    if "flat" in quantities and rep.flat_certificate is not None:
        out["flat_certificate"] = rep.flat_certificate
        out["flat_scale"] = rep.flat_scale
    sys.stdout.write(json.dumps(_clean(out), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# -- verify ------------------------------------------------------------------------


def expected_ledger_text() -> str:
    return (resources.files("ctrlgeom") / "data" / "expected_ledger.csv").read_text()


def cmd_verify(args) -> int:
    if args.grid == "default":
        points = default_grid()
    else:
        try:
            points = grid_from_json(_load_json(args.grid))
        except ValueError as exc:
            raise UsageError(f"bad grid file: {exc}") from exc
    records = verify(points, args.workers)
    text = ledger_csv(records)
    _write(args.out, text)
    if args.errata:
        _write(args.errata, errata_markdown(records))
    if args.expect_known_errata:
        expected_text = Path(args.expected).read_text() if args.expected else expected_ledger_text()
        expected = read_ledger(expected_text)
        diffs = ledger_differences(read_ledger(text), expected)
        if diffs:
            _emit_error("ledger_differs", f"{len(diffs)} difference(s) from the expected ledger",
                        differences=diffs[:50])
            return 1
    return EXIT_OK


# -- scan / figdata --------------------------------------------------------------------


def cmd_scan(args) -> int:
    job = ScanJob.from_json(_load_json(args.job))
    if args.svg and len(job.axes) == 3:
        raise UsageError("--svg supports 1- and 2-axis scans only")
    result = run_scan(job, args.workers)
    _write(args.out, result.to_csv())
    boundaries = args.boundaries
    if boundaries is None and args.out not in (None, "-"):
        boundaries = str(Path(args.out).with_suffix(".boundaries.json"))
    if boundaries:
        _write(boundaries, result.boundaries_json())
    if args.svg:
        _write(args.svg, svg.render(result, title=Path(args.job).stem))
    return EXIT_OK


def cmd_figdata(args) -> int:
    figs = sorted(figures.FIGURES) if args.fig == "all" else [int(args.fig)]
    outdir = Path(args.outdir)
    for fig in figs:
        result, text = figures.figure_data(fig, args.workers)
        _write(str(outdir / f"fig{fig}.csv"), text)
        if args.svg:
            _write(str(outdir / f"fig{fig}.svg"), svg.render(result, title=f"Figure {fig}"))
    return EXIT_OK


# -- entry point -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = JsonArgumentParser(
        prog="ctrlgeom",
        description="Intrinsic Hessian geometry of low-pass-filter controllers.",
        epilog="Exit codes: 0 ok, 1 ledger differs (verify --expect-known-errata), 2 usage/validation, 3 singular point, 4 internal error.",
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=JsonArgumentParser)

    e = sub.add_parser("eval", help="metric, minors, Christoffels and curvature at one point")
    e.add_argument("--spec", help="JSON file with spec/point/order/quantities keys")
    e.add_argument("--S", type=float)
    e.add_argument("--n", type=int)
    e.add_argument("--mode", choices=("constant", "variable"))
    e.add_argument("--f", type=float, help="mismatch factor (constant mode) or default point f")
    e.add_argument("--point", help="coordinates, e.g. a=0,b=0 or a=0,b=0,f=1")
    e.add_argument("--order", type=int, help="jet order (2-4, default 4)")
    e.add_argument("--quantities", help=f"comma list from {','.join(EVAL_QUANTITIES)}")
    e.add_argument("--expression", help="custom configuration function in a, b, f, S, n")
    e.add_argument("--const", help="extra constants for --expression, e.g. k=2,c=0.5")
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", help="compare printed closed forms against AD; write the ledger CSV")
    v.add_argument("--grid", default="default", help="'default' or a grid JSON file")
    v.add_argument("--out", help="ledger CSV path (default stdout)")
    v.add_argument("--errata", help="also write a markdown errata summary here")
    v.add_argument("--expect-known-errata", action="store_true",
                   help="exit 1 if the ledger differs from the committed expected ledger")
    v.add_argument("--expected", help="alternative expected ledger for --expect-known-errata")
    v.add_argument("--workers", type=int, default=1)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("scan", help="evaluate a scan job over a parameter grid")
    s.add_argument("--job", required=True, help="scan job JSON")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.add_argument("--boundaries", help="boundaries JSON path (default: next to --out)")
    s.add_argument("--svg", help="optional SVG plot path")
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_scan)

    fd = sub.add_parser("figdata", help="write canonical CSVs for the bundled figure jobs")
    fd.add_argument("--fig", required=True, choices=[str(k) for k in sorted(figures.FIGURES)] + ["all"])
    fd.add_argument("--outdir", default=".")
    fd.add_argument("--svg", action="store_true", help="also write figN.svg")
    fd.add_argument("--workers", type=int, default=None)
    fd.set_defaults(func=cmd_figdata)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except SingularPoint as exc:
        _emit_error("singular_point", str(exc), distance=exc.distance)
        return EXIT_SINGULAR
    except (UsageError, InvalidJob, ExprSyntaxError, UnknownSymbol, UnboundSymbol) as exc:
        _emit_error("validation", str(exc))
        return EXIT_USAGE
    except ValueError as exc:
        _emit_error("validation", str(exc))
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        _emit_error("internal", f"{type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
