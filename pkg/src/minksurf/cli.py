"""Command-line front end: extract, check, reconstruct, roundtrip, catalog.

Exit codes: 0 success, 1 residuals over threshold under --strict (or any
other library error), 2 chart not isotropic, 3 minimal point encountered,
4 I/O or format problem, 5 incompatible invariant data.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .catalog import CATALOG
from .congruence import congruence_distance
from .errors import (
    IncompatibleData,
    MinimalPoint,
    MinksurfError,
    NotIsotropic,
)
from .grid import GridDomain
from .invariants import (
    InvariantSet,
    ResidualReport,
    SurfaceType,
    classify,
    compare_refinement,
    derived_coefficients,
    integrability_residuals,
    theorem_conditions_residuals,
)
from .minkowski import (
    Frame,
    frame_gram_residual,
    reorthonormalize,
    reorthonormalize_legs,
    standard_frame,
)
from .reconstruction import ReconstructionConfig, flatness_residual, reconstruct
from .surfaces import SurfacePatch, extract_invariants

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_NOT_ISOTROPIC = 2
EXIT_MINIMAL = 3
EXIT_IO = 4
EXIT_INCOMPATIBLE = 5

_THEOREM_TYPES = {
    "1": SurfaceType.FIRST_TYPE,
    "2": SurfaceType.SECOND_TYPE,
    "3": SurfaceType.THIRD_TYPE,
}


def _print_report(report: ResidualReport, title: str, stream=None):
    stream = stream if stream is not None else sys.stdout
    print(title, file=stream)
    has_order = any(c.convergence_order is not None for c in report.conditions)
    header = f"  {'condition':<18} {'max':>12} {'l2':>12}" + ("  order" if has_order else "")
    print(header, file=stream)
    for c in report.conditions:
        line = f"  {c.name:<18} {c.max_norm:>12.4e} {c.l2_norm:>12.4e}"
        if has_order:
            line += "  " + (f"{c.convergence_order:5.2f}" if c.convergence_order is not None else "    -")
        print(line, file=stream)
    print(f"  (interior margin: {report.interior_margin} cells)", file=stream)


def _parse_vec4(text: str) -> np.ndarray:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"expected 4 comma-separated numbers, got {len(parts)}")
    return np.array(parts)


def _parse_frame(text: str) -> Frame:
    if text == "standard":
        return standard_frame()
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 16:
        raise ValueError("frame must be 'standard' or 16 comma-separated numbers (rows x,y,n1,n2)")
    frame = Frame(np.array(parts).reshape(4, 4))
    residual = frame_gram_residual(frame)
    if residual > 1e-8:
        frame = reorthonormalize(frame)
    return frame


def _second_frame() -> Frame:
    """Deterministic alternative initial frame: rotated and boosted standard frame."""
    theta, phi = 0.7, 0.3
    rot = np.eye(4)
    rot[0, 0] = rot[1, 1] = np.cos(theta)
    rot[0, 1] = -np.sin(theta)
    rot[1, 0] = np.sin(theta)
    boost = np.eye(4)
    boost[2, 2] = boost[3, 3] = np.cosh(phi)
    boost[2, 3] = boost[3, 2] = np.sinh(phi)
    return Frame(standard_frame().legs @ (rot @ boost).T)


def _load(path, expected=None):
    try:
        obj = io.load_any(path)
    except (OSError, json.JSONDecodeError, ValueError, KeyError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc
    if expected is not None and not isinstance(obj, expected):
        raise _IOFailure(f"{path} does not contain a {expected.__name__}")
    return obj


class _IOFailure(Exception):
    pass


def _resolve_type(inv: InvariantSet, theorem: str, zero_tol: float) -> SurfaceType:
    if theorem == "auto":
        return inv.surface_type or classify(inv, zero_tol)
    return _THEOREM_TYPES[theorem]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_extract(args) -> int:
    patch = _load(args.surface, SurfacePatch)
    extraction = extract_invariants(patch, order=args.order, minimal_tol=args.tol)
    inv = extraction.invariants
    try:
        surface_type = classify(inv, args.zero_tol)
        inv = inv.with_type(surface_type)
        type_label = surface_type.value
    except MinksurfError as exc:
        type_label = f"ambiguous ({exc})"
    report = integrability_residuals(inv, extraction.derived, order=args.order, margin=args.margin)

    out = Path(args.output or Path(args.surface).with_suffix("").name + ".invariants.json")
    io.dump_json(out, io.invariant_set_to_dict(inv, args.order))
    report_path = Path(args.report or Path(args.surface).with_suffix("").name + ".report.json")
    io.dump_json(report_path, io.residual_report_to_dict(report))

    if args.format == "json":
        print(json.dumps({"surface_type": type_label,
                          "invariants": str(out),
                          "report": str(report_path)}, sort_keys=True))
    else:
        print(f"surface type: {type_label}")
        _print_report(report, "integrability residuals:")
        print(f"wrote {out} and {report_path}")
    return EXIT_OK


def _cmd_check(args) -> int:
    inv = _load(args.invariants, InvariantSet)
    surface_type = _resolve_type(inv, args.theorem, args.zero_tol)
    report = theorem_conditions_residuals(
        inv, surface_type, order=args.order, margin=args.margin, zero_tol=args.zero_tol
    )
    if args.refine:
        fine = _load(args.refine, InvariantSet)
        ratio = inv.domain.hu / fine.domain.hu
        if not np.isclose(ratio, 2.0):
            raise _IOFailure("--refine expects the same data sampled at half the step")
        # same physical interior on both grids, otherwise the order estimate
        # is polluted when error coefficients grow towards the boundary
        fine_report = theorem_conditions_residuals(
            fine, surface_type, order=args.order, margin=2 * args.margin, zero_tol=args.zero_tol
        )
        report = compare_refinement(report, fine_report)

    if args.report:
        io.dump_json(Path(args.report), io.residual_report_to_dict(report))
    if args.format == "json":
        print(json.dumps(io.residual_report_to_dict(report), sort_keys=True))
    else:
        _print_report(report, f"condition residuals ({surface_type.value}):")
    if args.strict and report.max_norm() > args.tol:
        print(
            f"strict mode: max residual {report.max_norm():.3e} exceeds {args.tol:.1e}",
            file=sys.stderr,
        )
        return EXIT_RESIDUAL
    return EXIT_OK


def _make_config(args) -> ReconstructionConfig:
    cfg = ReconstructionConfig(
        strategy={"uv": "u-then-v", "vu": "v-then-u"}[args.path],
        reproject_every=args.reproject_every,
        subdivide=args.subdivide,
        order=args.order,
        margin=args.margin,
        zero_tol=args.zero_tol,
    )
    if args.strict:
        cfg = replace(cfg, hard_threshold=cfg.warn_threshold)
    return cfg


def _cmd_reconstruct(args) -> int:
    inv = _load(args.invariants, InvariantSet)
    frame0 = _parse_frame(args.frame)
    p0 = _parse_vec4(args.origin)
    config = _make_config(args)
    patch = reconstruct(inv, p0, frame0, config)
    out = Path(args.output or Path(args.invariants).with_suffix("").name + ".surface.json")
    if args.format == "csv":
        io.save_surface_csv(out.with_suffix(".csv"), patch)
        out = out.with_suffix(".csv")
    else:
        io.dump_json(out, io.surface_patch_to_dict(patch, args.order))

    summary = {"surface": str(out)}
    if args.path_check:
        other = replace(
            config, strategy="v-then-u" if config.strategy == "u-then-v" else "u-then-v"
        )
        patch2 = reconstruct(inv, p0, frame0, other)
        corner = float(np.linalg.norm(patch.z.values[-1, -1] - patch2.z.values[-1, -1]))
        summary["path_corner_discrepancy"] = corner
    if args.format == "json":
        print(json.dumps(summary, sort_keys=True))
    else:
        print(f"wrote {out}")
        if "path_corner_discrepancy" in summary:
            print(f"far-corner discrepancy between sweeps: {summary['path_corner_discrepancy']:.4e}")
    return EXIT_OK


def _roundtrip_invariants(inv: InvariantSet, args, summary: dict) -> int:
    config = _make_config(args)
    patch1 = reconstruct(inv, np.zeros(4), standard_frame(), config)
    patch2 = reconstruct(inv, np.zeros(4), _second_frame(), config)
    summary["congruence_distance"] = congruence_distance(patch1, patch2)

    extraction = extract_invariants(patch1, order=args.order)
    got = extraction.invariants
    factor = config.subdivide
    diffs = {}
    for name in ("f", "nu", "lambda1", "lambda2", "mu1", "mu2"):
        want = getattr(inv, name).values
        have = getattr(got, name).values[::factor, ::factor]
        diffs[name] = float(np.max(np.abs(want - have)))
    summary["field_roundtrip_max_error"] = diffs
    return EXIT_OK


def _roundtrip_surface(patch: SurfacePatch, args, summary: dict) -> int:
    extraction = extract_invariants(patch, order=args.order)
    inv = extraction.invariants
    surface_type = classify(inv, args.zero_tol)
    summary["surface_type"] = surface_type.value
    if surface_type in (SurfaceType.MINIMAL, SurfaceType.INFLECTION_DEGENERATE):
        raise IncompatibleData(
            f"roundtrip refuses {surface_type.value} data: no reconstruction applies"
        )
    inv = inv.with_type(surface_type)
    frame0 = reorthonormalize(Frame(extraction.frames[0, 0]))
    # extraction leaves a lower-order ring at the boundary; the flatness gate
    # must look past the ring plus the extra derivative it takes
    margin = max(4, args.margin)
    config = replace(_make_config(args), margin=margin)
    rebuilt = reconstruct(inv, patch.z.values[0, 0], frame0, config)
    original = SurfacePatch(
        z=patch.z, frames=reorthonormalize_legs(extraction.frames), f=inv.f
    )
    if config.subdivide == 1:
        summary["congruence_distance"] = congruence_distance(original, rebuilt)
    dc = extraction.derived
    summary["flatness_max"] = flatness_residual(
        inv, dc, surface_type, args.order, margin
    ).max_norm()
    return EXIT_OK


def _cmd_roundtrip(args) -> int:
    obj = _load(args.input)
    summary: dict = {}
    if isinstance(obj, InvariantSet):
        code = _roundtrip_invariants(obj, args, summary)
    elif isinstance(obj, SurfacePatch):
        code = _roundtrip_surface(obj, args, summary)
    else:
        raise _IOFailure("roundtrip needs a surface or invariant-set file")
    if args.format == "json":
        print(json.dumps(summary, sort_keys=True))
    else:
        for key, value in summary.items():
            print(f"{key}: {value}")
    return code


def _parse_params(text: str, defaults: dict) -> dict:
    params = dict(defaults)
    if text:
        for item in text.split(","):
            key, _, value = item.partition("=")
            key = key.strip()
            if key not in params:
                raise _IOFailure(f"unknown parameter {key!r}; expected {sorted(params)}")
            params[key] = float(value)
    return params


def _parse_grid(text: str) -> GridDomain:
    parts = text.split(",")
    if len(parts) != 6:
        raise _IOFailure("--grid expects u0,v0,hu,hv,nu,nv")
    u0, v0, hu, hv = (float(p) for p in parts[:4])
    return GridDomain(u0, v0, hu, hv, int(parts[4]), int(parts[5]))


def _cmd_catalog(args) -> int:
    if args.action == "list":
        for name, entry in CATALOG.items():
            params = ", ".join(f"{k}={v}" for k, v in entry["params"].items()) or "none"
            print(f"{name:<22} {entry['kind']:<11} params: {params}")
            print(f"{'':<22} {entry['doc']}")
        return EXIT_OK
    entry = CATALOG.get(args.name)
    if entry is None:
        raise _IOFailure(f"unknown catalog entry {args.name!r}; try 'catalog list'")
    if not args.grid:
        raise _IOFailure("catalog emit needs --grid u0,v0,hu,hv,nu,nv")
    domain = _parse_grid(args.grid)
    params = _parse_params(args.params, entry["params"])
    made = entry["make"](domain, **params)
    out = Path(args.output or f"{args.name}.json")
    if entry["kind"] == "surface":
        if args.format == "csv":
            io.save_surface_csv(out, made)
        else:
            io.dump_json(out, io.surface_patch_to_dict(made))
    else:
        io.dump_json(out, io.invariant_set_to_dict(made))
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(parser, *, zero_tol=True, margin=True):
    parser.add_argument("--order", type=int, choices=(2, 4), default=2,
                        help="stencil order (default 2)")
    parser.add_argument("--format", choices=("table", "json", "csv"), default="table",
                        help="output style for the summary")
    if zero_tol:
        parser.add_argument("--zero-tol", type=float, default=1e-7,
                            help="relative tolerance for the == 0 tests in classification")
    if margin:
        parser.add_argument("--margin", type=int, default=2,
                            help="interior margin (cells) for residual norms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minksurf",
        description="Extract, verify, and reconstruct timelike surfaces in Minkowski 4-space.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="surface file -> invariant set + residual report")
    p.add_argument("surface", help="surface patch file (.json or .csv)")
    p.add_argument("-o", "--output", help="invariant-set output path")
    p.add_argument("--report", help="residual-report output path")
    p.add_argument("--tol", type=float, default=None,
                   help="minimal-point tolerance for the mean curvature norm")
    _add_common(p)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("check", help="invariant set -> condition residual report")
    p.add_argument("invariants", help="invariant-set file")
    p.add_argument("--theorem", choices=("auto", "1", "2", "3"), default="auto",
                   help="condition set to check (auto classifies the data)")
    p.add_argument("--refine", help="companion file with the same data at half the step")
    p.add_argument("--strict", action="store_true",
                   help="exit 1 when the max residual exceeds --tol")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="strict-mode residual threshold (default 1e-6)")
    p.add_argument("--report", help="write the report JSON here")
    _add_common(p)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("reconstruct", help="invariant set -> surface file")
    p.add_argument("invariants", help="invariant-set file")
    p.add_argument("-o", "--output", help="surface output path")
    p.add_argument("--origin", default="0,0,0,0", help="initial point x1,x2,x3,x4")
    p.add_argument("--frame", default="standard",
                   help="'standard' or 16 comma-separated numbers (rows x,y,n1,n2)")
    p.add_argument("--path", choices=("uv", "vu"), default="uv",
                   help="sweep order: uv = u-then-v (default), vu = v-then-u")
    p.add_argument("--reproject-every", type=int, default=1,
                   help="re-projection cadence in steps, 0 disables")
    p.add_argument("--subdivide", type=int, default=1,
                   help="integrate on a grid refined by this factor")
    p.add_argument("--path-check", action="store_true",
                   help="also integrate the other sweep and report the corner discrepancy")
    p.add_argument("--strict", action="store_true",
                   help="refuse data already at the warning-level flatness residual")
    _add_common(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("roundtrip", help="existence + uniqueness check on one file")
    p.add_argument("input", help="surface or invariant-set file")
    p.add_argument("--path", choices=("uv", "vu"), default="uv")
    p.add_argument("--reproject-every", type=int, default=1)
    p.add_argument("--subdivide", type=int, default=1)
    p.add_argument("--strict", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_roundtrip)

    p = sub.add_parser("catalog", help="list or emit the analytic test families")
    p.add_argument("action", choices=("list", "emit"))
    p.add_argument("name", nargs="?", help="catalog entry name (for emit)")
    p.add_argument("--params", default="", help="comma-separated name=value overrides")
    p.add_argument("--grid", help="u0,v0,hu,hv,nu,nv")
    p.add_argument("-o", "--output", help="output path")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_catalog)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NotIsotropic as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_ISOTROPIC
    except MinimalPoint as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MINIMAL
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IncompatibleData as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except MinksurfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESIDUAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
