"""Command line entry point: ``ncwave soliton|verify|mi|reduce``.

Exit codes: 0 success, 2 input error, 3 degenerate output (more than half of
the grid at poles), 4 numerical or stencil error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import mi
from .darboux import field_grid
from .lax import (
    LIMITS,
    FieldGrid,
    StencilError,
    eom_residual,
    eom_terms,
    reduced_residual,
    residual_stats,
)
from .ncalgebra import SingularMatrixError
from .scenario import (
    ScenarioFile,
    ScenarioFormatError,
    format_scenario,
    load_preset,
    load_scenario,
)

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_NUMERIC = 0, 2, 3, 4
POLE_LIMIT = 0.5
COMPONENTS = ("u11", "u12", "u21", "u22")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def field_columns(mode: str) -> list[str]:
    if mode == "commutative":
        return ["x", "t", "re", "im", "abs", "status"]
    cols = ["x", "t"]
    for c in COMPONENTS:
        cols += [f"{c}_re", f"{c}_im", f"{c}_abs"]
    return cols + ["status"]


def write_field_csv(grid: FieldGrid, path: Path) -> None:
    """Rows are t-major then x; pole rows carry status 'pole' and nan values."""
    nt, nx = grid.values.shape[:2]
    vals = grid.values.reshape(nt * nx, -1)
    T, X = np.meshgrid(grid.ts, grid.xs, indexing="ij")
    parts = [X.ravel(), T.ravel()]
    for k in range(vals.shape[1]):
        parts += [vals[:, k].real, vals[:, k].imag, np.abs(vals[:, k])]
    table = np.column_stack(parts)
    status = np.where(grid.poles.ravel(), "pole", "ok")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(field_columns(grid.mode))
        for row, st in zip(table, status):
            writer.writerow([repr(float(v)) for v in row] + [st])


def _write_json(obj, path: Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(args) -> ScenarioFile:
    if args.preset:
        return load_preset(args.preset)
    if not args.scenario:
        raise ScenarioFormatError("either --scenario or --preset is required")
    return load_scenario(args.scenario)


def _generate(sf: ScenarioFile) -> FieldGrid:
    xs, ts = sf.grid.axes()
    grid = field_grid(sf.soliton_scenario(), xs, ts)
    return grid


def _pole_fraction(grid: FieldGrid) -> float:
    return float(grid.poles.mean())


def _verify_stats(sf: ScenarioFile, grid: FieldGrid, order: int) -> dict:
    jet, terms = eom_terms(grid, sf.params, order)
    res = eom_residual(grid, sf.params, order)
    stats = residual_stats(res)
    ok = ~jet.poles
    per_term = {name: float(np.abs(v[ok]).max()) if ok.any() else float("nan")
                for name, v in terms.items()}
    stats.update({
        "gridSpacing": {"dx": grid.dx, "dt": grid.dt},
        "stencilOrder": order,
        "trimmedBoundary": True,
        "perTerm": per_term,
        "poles": int(grid.poles.sum()),
    })
    return stats


def order_study(sf: ScenarioFile, order: int = 2) -> dict:
    """Residual at spacing h and h/2 over the same window, and the observed order."""
    coarse = _generate(sf)
    g = sf.grid
    fine_sf = replace(sf, grid=replace(g, nx=2 * g.nx - 1, nt=2 * g.nt - 1))
    fine = _generate(fine_sf)
    r1 = residual_stats(eom_residual(coarse, sf.params, order))["maxResidual"]
    r2 = residual_stats(eom_residual(fine, sf.params, order))["maxResidual"]
    observed = float(np.log2(r1 / r2)) if r1 > 0 and r2 > 0 else float("nan")
    return {"coarseMax": r1, "fineMax": r2, "observedOrder": observed}


def cmd_soliton(args) -> int:
    sf = _load(args)
    grid = _generate(sf)
    write_field_csv(grid, Path(args.out))
    frac = _pole_fraction(grid)
    if frac > POLE_LIMIT:
        raise CliError(f"{frac:.0%} of grid points are poles", EXIT_DEGENERATE)
    return EXIT_OK


def cmd_verify(args) -> int:
    sf = _load(args)
    grid = _generate(sf)
    if _pole_fraction(grid) > POLE_LIMIT:
        raise CliError("more than half of the grid points are poles", EXIT_DEGENERATE)
    stats = _verify_stats(sf, grid, args.order)
    if args.order_study:
        stats["orderStudy"] = order_study(sf, args.order)
    _write_json(stats, Path(args.out))
    return EXIT_OK


def cmd_mi(args) -> int:
    sf = _load(args) if (args.scenario or args.preset) else None
    params = sf.params if sf else _params_from_flags(args)
    settings = sf.mi if sf else None
    c = args.c if args.c is not None else (settings.c if settings else 1.0)
    k_max = args.k_max if args.k_max is not None else (settings.k_max if settings else 3.0)
    samples = args.samples if args.samples is not None else (settings.samples if settings else 601)
    if samples < 100 or k_max <= 0:
        raise ScenarioFormatError("mi: need --samples >= 100 and --k-max > 0")
    ks = np.linspace(-k_max, k_max, samples)
    if not np.any(ks == 0.0):
        ks = np.sort(np.append(ks, 0.0))
    closed = mi.growth_rate_closed(ks, c, params)
    numeric = mi.growth_rate_numeric(ks, c, params)
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "omegaRe", "omegaIm", "growthRate", "unstable"])
        for k, om, g in zip(ks, closed, numeric):
            w.writerow([repr(float(k)), repr(float(om.real)), repr(float(om.imag)), repr(float(g)),
                        int(g > 1e-12)])
    bands = mi.unstable_band(c, params, k_max, samples)
    summary = {
        "c": c, "kMax": k_max, "samples": samples,
        "params": {"alpha1": params.alpha1, "alpha2": params.alpha2, "gamma": params.gamma},
        "bands": [list(b) for b in bands],
        "maxGrowth": float(np.max(numeric)),
        "routeMaxDifference": float(np.max(np.abs(closed.real - numeric))),
    }
    summary_path = Path(args.summary) if args.summary else out.with_suffix(".json")
    _write_json(summary, summary_path)
    return EXIT_OK


def _params_from_flags(args):
    from .lax import ModelParams
    return ModelParams(args.alpha1, args.alpha2, args.gamma)


def cmd_reduce(args) -> int:
    if args.limit not in LIMITS:
        raise ScenarioFormatError(f"unknown limit {args.limit!r}; expected one of {sorted(LIMITS)}")
    sf = _load(args)
    reduced = sf.with_params(sf.params.reduce(args.limit))
    out = Path(args.out)
    scenario_out = Path(args.scenario_out) if args.scenario_out else out.with_suffix(".toml")
    scenario_out.write_text(format_scenario(reduced), encoding="utf-8")
    grid = _generate(reduced)
    if _pole_fraction(grid) > POLE_LIMIT:
        raise CliError("more than half of the grid points are poles", EXIT_DEGENERATE)
    stats = _verify_stats(reduced, grid, args.order)
    stats["limit"] = args.limit
    stats["reducedEquation"] = residual_stats(reduced_residual(grid, args.limit, reduced.params, args.order))
    stats["scenario"] = str(scenario_out)
    _write_json(stats, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncwave", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--scenario", help="scenario file (TOML, schema = 1)")
        p.add_argument("--preset", help="name of a bundled preset instead of --scenario")
        p.add_argument("--out", required=True, help=out_help)

    p = sub.add_parser("soliton", help="sample the soliton field to CSV")
    common(p, "CSV output path")
    p.set_defaults(func=cmd_soliton)

    p = sub.add_parser("verify", help="PDE residual statistics as JSON")
    common(p, "JSON output path")
    p.add_argument("--order", type=int, default=2, choices=(2, 4, 6), help="stencil accuracy order")
    p.add_argument("--order-study", action="store_true", help="also rerun at half spacing")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mi", help="modulational-instability sweep to CSV plus band JSON")
    common(p, "CSV output path")
    p.add_argument("--c", type=float, help="plane-wave amplitude")
    p.add_argument("--k-max", type=float, dest="k_max")
    p.add_argument("--samples", type=int)
    p.add_argument("--summary", help="band summary JSON path (default: OUT with .json)")
    p.add_argument("--alpha1", type=float, default=0.0)
    p.add_argument("--alpha2", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("reduce", help="apply a reduction limit, regenerate and verify")
    common(p, "JSON output path")
    p.add_argument("--limit", required=True, help="one of: " + ", ".join(sorted(LIMITS)))
    p.add_argument("--scenario-out", help="where to write the reduced scenario")
    p.add_argument("--order", type=int, default=2, choices=(2, 4, 6))
    p.set_defaults(func=cmd_reduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as err:
        print(f"ncwave: {err}", file=sys.stderr)
        return err.code
    except (ScenarioFormatError, ValueError) as err:
        if isinstance(err, StencilError):
            print(f"ncwave: stencil error: {err}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"ncwave: input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularMatrixError, ArithmeticError, FloatingPointError) as err:
        print(f"ncwave: numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"ncwave: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
