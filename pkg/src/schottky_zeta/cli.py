"""Command-line interface: validate, delta, scan, cover, homcount, primitives.

Groups come from a JSON file (--group) or a named builder (--builder NAME
--params "l1,l2").  Every command writes its tables, figures, and a
manifest echoing the resolved parameters into --out; identical
configurations produce byte-identical outputs.

Exit codes: 0 ok, 1 validation failure, 2 parse error, 3 certification
shortfall, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import report
from .errors import (
    BoundaryZero,
    CutoffUncertain,
    DiscsNotSeparated,
    IncompletePrimitives,
    LostZero,
    MaxDepth,
    NoBracket,
    NoConvergence,
    NodeEscapes,
    NonElementaryRequired,
    NotHyperbolic,
)
from .geodesics import enumerate_primitives_by_length, transition_system
from .homcount import asymptotic_fit, homology_count_table
from .resonances import (
    Rect,
    calibrate_window,
    cover_resonances,
    count_zeros_disc,
    find_zeros,
    spectral_measure,
)
from .schottky import BUILDERS, group_from_dict, group_to_dict, validate
from .transfer import (
    DEFAULT_ORDER,
    dimension_from_determinant,
    hausdorff_dimension,
    pressure,
)
from .zeta import CoverSpec, zeta_det

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARSE = 2
EXIT_CERTIFICATION = 3
EXIT_NUMERICAL = 4

VALIDATION_ERRORS = (DiscsNotSeparated, NonElementaryRequired, NotHyperbolic)
CERTIFICATION_ERRORS = (CutoffUncertain, IncompletePrimitives)
NUMERICAL_ERRORS = (BoundaryZero, LostZero, MaxDepth, NoBracket,
                    NoConvergence, NodeEscapes)


class ParseFailure(Exception):
    pass


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError as exc:
        raise ParseFailure(f"expected comma-separated numbers, got {text!r}") from exc


def _load_group(args) -> tuple:
    """Resolve the group from --group or --builder; returns (group, source dict)."""
    if args.group:
        path = Path(args.group)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseFailure(f"cannot read group file {path}: {exc}") from exc
        try:
            group = group_from_dict(data)
        except ValueError as exc:
            raise ParseFailure(str(exc)) from exc
        return group, {"group_file": str(path)}
    if args.builder:
        if args.builder not in BUILDERS:
            raise ParseFailure(
                f"unknown builder {args.builder!r}; available: {sorted(BUILDERS)}")
        params = _floats(args.params or "")
        group = BUILDERS[args.builder](*params)
        return group, {"builder": args.builder, "params": params}
    raise ParseFailure("either --group FILE or --builder NAME is required")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_validate(args) -> int:
    group, source = _load_group(args)
    rep = validate(group)
    out = _out_dir(args)
    report_path = out / "validation_report.txt"
    report_path.write_text(str(rep) + "\n")
    files = [report_path.name]
    files.append(report.write_manifest(
        out, "validate", {**source, "group": group_to_dict(group)}, files).name)
    print(str(rep))
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_delta(args) -> int:
    group, source = _load_group(args)
    out = _out_dir(args)
    order = args.order
    d_pressure = hausdorff_dimension(group, order)
    d_zero = dimension_from_determinant(group, order, hint=d_pressure)
    d_double = hausdorff_dimension(group, 2 * order)
    sigmas = [round(0.02 + 0.02 * k, 10) for k in range(49)]
    pressures = [pressure(group, s, order) for s in sigmas]
    curve_path = report.write_rows(out / "pressure_curve.csv",
                                    ["sigma", "pressure"],
                                    list(zip(sigmas, pressures)))
    fig_path = report.plot_pressure_curve(out / "pressure.png", sigmas,
                                          pressures, d_pressure)
    delta_path = report.write_rows(
        out / "delta.csv",
        ["method", "value"],
        [["pressure_root", d_pressure],
         ["determinant_zero", d_zero],
         [f"pressure_root_order_{2 * order}", d_double]])
    files = [curve_path.name, fig_path.name, delta_path.name]
    files.append(report.write_manifest(
        out, "delta", {**source, "order": order}, files).name)
    print(f"delta (pressure root, order {order}):     {d_pressure!r}")
    print(f"delta (determinant zero, order {order}):  {d_zero!r}")
    print(f"two-method difference: {abs(d_pressure - d_zero):.3e}")
    print(f"order-doubling change ({order} -> {2 * order}): "
          f"{abs(d_pressure - d_double):.3e}")
    return EXIT_OK


def _parse_rect(text: str) -> Rect:
    vals = _floats(text)
    if len(vals) != 4:
        raise ParseFailure("--rect needs re_min,re_max,im_min,im_max")
    try:
        return Rect(*vals)
    except ValueError as exc:
        raise ParseFailure(str(exc)) from exc


def cmd_scan(args) -> int:
    group, source = _load_group(args)
    out = _out_dir(args)
    order = args.order
    rect = _parse_rect(args.rect)
    theta = tuple(_floats(args.theta)) if args.theta else (0.0,) * group.rank
    if len(theta) != group.rank:
        raise ParseFailure(f"--theta needs {group.rank} coordinates")
    # Zeros on the requested contour: nudge the rectangle and record it.
    perturbation = 0.0
    zeros = None
    for bump in (0.0, 1e-4, -1e-4, 2e-4):
        try:
            grown = Rect(rect.re_min - bump, rect.re_max + bump,
                         rect.im_min - bump, rect.im_max + bump)
            zeros = find_zeros(group, grown, theta, order)
            perturbation = bump
            break
        except BoundaryZero:
            continue
    if zeros is None:
        raise BoundaryZero("contour zeros persisted through perturbations")
    csv_path = report.write_resonances_csv(out / "resonances.csv", zeros,
                                           group.rank, order)
    landscape = None
    if args.zeta_grid:
        k = args.zeta_grid
        res = np.linspace(rect.re_min, rect.re_max, k)
        ims = np.linspace(rect.im_min, rect.im_max, k)
        rows, mags = [], np.empty((k, k))
        for i, y in enumerate(ims):
            for j, x in enumerate(res):
                z, err = zeta_det(group, complex(x, y), theta, order)
                rows.append((theta, complex(x, y), z, err))
                mags[i, j] = np.log10(max(abs(z), 1e-300))
        report.write_zeta_grid_csv(out / "zeta_grid.csv", rows, group.rank)
        landscape = (res, ims, mags)
    fig_path = report.plot_zero_scan(out / "scan.png", rect, zeros, landscape)
    files = [csv_path.name, fig_path.name] + \
        (["zeta_grid.csv"] if args.zeta_grid else [])
    files.append(report.write_manifest(
        out, "scan",
        {**source, "order": order, "rect": [rect.re_min, rect.re_max,
                                            rect.im_min, rect.im_max],
         "theta": list(theta), "boundary_perturbation": perturbation,
         "zeta_grid": args.zeta_grid}, files).name)
    print(f"{sum(z.multiplicity for z in zeros)} zero(s) in the rectangle "
          f"(perturbation {perturbation})")
    return EXIT_OK


def cmd_cover(args) -> int:
    group, source = _load_group(args)
    out = _out_dir(args)
    order = args.order
    moduli = [int(x) for x in _floats(args.cover)]
    cover = CoverSpec(tuple(moduli))
    cal = calibrate_window(group, order)
    eps0 = args.window if args.window else cal.eps_star
    rect = Rect(cal.delta - eps0, cal.delta + 0.01, -cal.t_star, cal.t_star)
    zeros = cover_resonances(group, cover, rect, order)
    hist = spectral_measure(group, cover, eps0, args.bins, order,
                            im_window=cal.t_star)
    n_strip = sum(z.multiplicity for z in zeros)
    n_real = sum(z.multiplicity for z in zeros if abs(z.s.imag) < 1e-8)
    disc_count = sum(
        count_zeros_disc(group, complex(cal.delta), 0.02, th, order)
        for th in cover.character_grid(group.rank))
    summary = {
        "delta": cal.delta,
        "eps_star": eps0,
        "t_star": cal.t_star,
        "theta_window": cal.theta_max,
        "group_order": cover.group_order,
        "strip_zeros": n_strip,
        "strip_zeros_real": n_real,
        "strip_zeros_per_group_order": n_strip / cover.group_order,
        "disc_0.02_zeros": disc_count,
        "disc_zeros_per_group_order": disc_count / cover.group_order,
    }
    csv_path = report.write_resonances_csv(out / "cover_resonances.csv", zeros,
                                           group.rank, order)
    hist_path = report.write_histogram_csv(out / "spectral_histogram.csv", hist)
    fig_hist = report.plot_spectral_histogram(out / "spectral_histogram.png",
                                              hist, cal.delta)
    fig_scan = report.plot_zero_scan(out / "cover_zeros.png", rect, zeros)
    summary_path = out / "weyl_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    files = [csv_path.name, hist_path.name, fig_hist.name, fig_scan.name,
             summary_path.name]
    files.append(report.write_manifest(
        out, "cover",
        {**source, "order": order, "cover": moduli, "window": eps0,
         "bins": args.bins}, files).name)
    print(f"|G| = {cover.group_order}: {n_strip} strip zero(s), {n_real} real, "
          f"{disc_count} in D(delta, 0.02)")
    return EXIT_OK


def cmd_homcount(args) -> int:
    group, source = _load_group(args)
    out = _out_dir(args)
    t_max = args.tmax
    try:
        system = transition_system(group)
    except CutoffUncertain:
        print("certified max T: 0.0 (no contraction certified)")
        raise
    cutoff = math.ceil(t_max / system.floor)
    alphas = ([tuple(int(x) for x in _floats(a)) for a in args.alpha]
              if args.alpha else [(0,) * group.rank,
                                  (1,) + (0,) * (group.rank - 1)])
    t_grid = [float(t) for t in range(args.tmin, int(t_max) + 1)]
    delta = hausdorff_dimension(group, args.order)
    tables, fits = [], {}
    for alpha in alphas:
        table = homology_count_table(group, alpha, t_grid, args.order, delta)
        tables.append(table)
        fit = asymptotic_fit(table, args.terms)
        fits["(" + ",".join(str(a) for a in alpha) + ")"] = {
            "c0": fit.c0,
            "coefficients": list(fit.coefficients),
            "residual": fit.residual,
            "condition": fit.condition,
        }
    files = []
    for table in tables:
        name = "homcount_" + "_".join(str(a) for a in table.alpha) + ".csv"
        files.append(report.write_homcount_csv(out / name, table).name)
    fit_path = out / "fit_report.json"
    fit_path.write_text(json.dumps(
        {"delta": delta, "word_cutoff": cutoff, "fits": fits},
        indent=2, sort_keys=True) + "\n")
    fig = report.plot_normalized_counts(out / "normalized_counts.png", tables)
    files += [fit_path.name, fig.name]
    files.append(report.write_manifest(
        out, "homcount",
        {**source, "order": args.order, "tmin": args.tmin, "tmax": t_max,
         "terms": args.terms,
         "alphas": [list(t.alpha) for t in tables]}, files).name)
    for key, fit in fits.items():
        print(f"alpha={key}: c0={fit['c0']!r} residual={fit['residual']:.3e}")
    return EXIT_OK


def cmd_primitives(args) -> int:
    group, source = _load_group(args)
    out = _out_dir(args)
    classes = enumerate_primitives_by_length(group, args.tmax)
    csv_path = report.write_primitives_csv(out / "primitives.csv", classes,
                                           group.rank)
    files = [csv_path.name]
    files.append(report.write_manifest(
        out, "primitives", {**source, "tmax": args.tmax}, files).name)
    print(f"{len(classes)} primitive class(es) up to length {args.tmax}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schottky-zeta",
        description="Resonances of Schottky surfaces via twisted "
                    "transfer-operator determinants")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--group", help="JSON group description file")
        p.add_argument("--builder", help=f"builder name: {sorted(BUILDERS)}")
        p.add_argument("--params", help="comma-separated builder parameters")
        p.add_argument("--order", type=int, default=DEFAULT_ORDER,
                       help="collocation order per disc")
        p.add_argument("--out", default="runs/latest", help="output directory")

    p = sub.add_parser("validate", help="check the disc system and pairing")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("delta", help="limit-set dimension by two methods")
    common(p)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("scan", help="locate determinant zeros in a rectangle")
    common(p)
    p.add_argument("--rect", required=True,
                   help="re_min,re_max,im_min,im_max")
    p.add_argument("--theta", help="character point t1,..,tr (default 0)")
    p.add_argument("--zeta-grid", type=int, default=0, metavar="K",
                   help="also write a KxK grid of zeta values over the rect")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("cover", help="cover resonances, spectral measure, "
                                     "Weyl counts")
    common(p)
    p.add_argument("--cover", required=True, help="moduli N1,..,Nk")
    p.add_argument("--window", type=float, default=0.0,
                   help="strip depth below delta (default: calibrated)")
    p.add_argument("--bins", type=int, default=5, help="histogram bins")
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("homcount", help="exact homology class counts and fits")
    common(p)
    p.add_argument("--tmax", type=float, required=True, help="largest length T")
    p.add_argument("--tmin", type=int, default=6, help="smallest grid T")
    p.add_argument("--terms", type=int, default=1,
                   help="correction terms in the 1/T fit")
    p.add_argument("--alpha", action="append",
                   help="class vector a1,..,ar (repeatable; default 0 and e1)")
    p.set_defaults(func=cmd_homcount)

    p = sub.add_parser("primitives", help="emit the primitive class table")
    common(p)
    p.add_argument("--tmax", type=float, required=True, help="largest length T")
    p.set_defaults(func=cmd_primitives)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseFailure as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CERTIFICATION_ERRORS as exc:
        print(f"certification shortfall: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
