"""JSON and CSV file formats for fields, invariant sets, patches, and reports.

JSON output is deterministic: keys are sorted and floats use Python's repr
(shortest round-trip form), so identical inputs produce identical bytes and
reloading reproduces every double bit-for-bit.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .grid import GridDomain, ScalarField, Vec4Field
from .invariants import ConditionResidual, InvariantSet, ResidualReport, SurfaceType
from .surfaces import SurfacePatch

__all__ = [
    "domain_to_dict",
    "domain_from_dict",
    "scalar_field_to_dict",
    "scalar_field_from_dict",
    "invariant_set_to_dict",
    "invariant_set_from_dict",
    "surface_patch_to_dict",
    "surface_patch_from_dict",
    "residual_report_to_dict",
    "residual_report_from_dict",
    "dump_json",
    "load_json",
    "load_any",
    "save_surface_csv",
    "load_surface_csv",
    "save_scalar_csv",
]

_FIELD_NAMES = ("f", "nu", "lambda1", "lambda2", "mu1", "mu2")


def dump_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise ValueError("top-level JSON value must be an object")
    return payload


def domain_to_dict(domain: GridDomain, order: int = 2) -> dict:
    return {
        "u0": domain.u0,
        "v0": domain.v0,
        "hu": domain.hu,
        "hv": domain.hv,
        "nu": domain.nu,
        "nv": domain.nv,
        "order": order,
    }


def domain_from_dict(header: dict) -> GridDomain:
    try:
        return GridDomain(
            u0=float(header["u0"]),
            v0=float(header["v0"]),
            hu=float(header["hu"]),
            hv=float(header["hv"]),
            nu=int(header["nu"]),
            nv=int(header["nv"]),
        )
    except KeyError as exc:
        raise ValueError(f"domain header is missing key {exc}") from exc


def stencil_order(payload: dict, default: int = 2) -> int:
    return int(payload.get("domain", {}).get("order", default))


def _flat(values: np.ndarray):
    return np.asarray(values, float).ravel().tolist()


def _grid_values(header: dict, flat, trailing=()):
    dom = domain_from_dict(header)
    arr = np.asarray(flat, float)
    expected = dom.nu * dom.nv * int(np.prod(trailing, dtype=int)) if trailing else dom.nu * dom.nv
    if arr.size != expected:
        raise ValueError(f"expected {expected} values, got {arr.size}")
    return dom, arr.reshape((dom.nu, dom.nv) + trailing)


def scalar_field_to_dict(field: ScalarField, order: int = 2) -> dict:
    return {
        "kind": "scalar_field",
        "domain": domain_to_dict(field.domain, order),
        "values": _flat(field.values),
    }


def scalar_field_from_dict(payload: dict) -> ScalarField:
    dom, values = _grid_values(payload["domain"], payload["values"])
    return ScalarField(dom, values)


def invariant_set_to_dict(inv: InvariantSet, order: int = 2) -> dict:
    return {
        "kind": "invariant_set",
        "domain": domain_to_dict(inv.domain, order),
        "surface_type": inv.surface_type.value if inv.surface_type else None,
        "fields": {name: _flat(getattr(inv, name).values) for name in _FIELD_NAMES},
    }


def invariant_set_from_dict(payload: dict) -> InvariantSet:
    fields = payload.get("fields")
    if not isinstance(fields, dict):
        raise ValueError("invariant_set payload needs a 'fields' object")
    parsed = {}
    for name in _FIELD_NAMES:
        if name not in fields:
            raise ValueError(f"invariant_set is missing field '{name}'")
        dom, values = _grid_values(payload["domain"], fields[name])
        parsed[name] = ScalarField(dom, values)
    tag = payload.get("surface_type")
    surface_type = SurfaceType(tag) if tag else None
    return InvariantSet(surface_type=surface_type, **parsed)


def surface_patch_to_dict(patch: SurfacePatch, order: int = 2) -> dict:
    payload = {
        "kind": "surface_patch",
        "domain": domain_to_dict(patch.domain, order),
        "coordinates": {
            f"x{i + 1}": _flat(patch.z.values[..., i]) for i in range(4)
        },
    }
    if patch.f is not None:
        payload["f"] = _flat(patch.f.values)
    if patch.frames is not None:
        payload["frames"] = _flat(patch.frames)
    return payload


def surface_patch_from_dict(payload: dict) -> SurfacePatch:
    coords = payload.get("coordinates")
    if not isinstance(coords, dict):
        raise ValueError("surface_patch payload needs a 'coordinates' object")
    columns = []
    for i in range(4):
        key = f"x{i + 1}"
        if key not in coords:
            raise ValueError(f"surface_patch is missing coordinate '{key}'")
        dom, values = _grid_values(payload["domain"], coords[key])
        columns.append(values)
    z = Vec4Field(dom, np.stack(columns, axis=-1))
    f = None
    if payload.get("f") is not None:
        _, fvals = _grid_values(payload["domain"], payload["f"])
        f = ScalarField(dom, fvals)
    frames = None
    if payload.get("frames") is not None:
        _, frames = _grid_values(payload["domain"], payload["frames"], trailing=(4, 4))
    return SurfacePatch(z=z, frames=frames, f=f)


def residual_report_to_dict(report: ResidualReport) -> dict:
    return {
        "kind": "residual_report",
        "interior_margin": report.interior_margin,
        "conditions": [
            {
                "condition": c.name,
                "max": c.max_norm,
                "l2": c.l2_norm,
                "order": c.convergence_order,
            }
            for c in report.conditions
        ],
    }


def residual_report_from_dict(payload: dict) -> ResidualReport:
    conditions = tuple(
        ConditionResidual(
            name=entry["condition"],
            max_norm=float(entry["max"]),
            l2_norm=float(entry["l2"]),
            convergence_order=None if entry.get("order") is None else float(entry["order"]),
        )
        for entry in payload.get("conditions", [])
    )
    return ResidualReport(conditions=conditions, interior_margin=int(payload["interior_margin"]))


_LOADERS = {
    "scalar_field": scalar_field_from_dict,
    "invariant_set": invariant_set_from_dict,
    "surface_patch": surface_patch_from_dict,
    "residual_report": residual_report_from_dict,
}


def load_any(path):
    """Load any of the package's JSON formats, dispatching on the 'kind' key,
    or a surface CSV when the path ends in .csv."""
    if str(path).endswith(".csv"):
        return load_surface_csv(path)
    payload = load_json(path)
    kind = payload.get("kind")
    if kind not in _LOADERS:
        raise ValueError(f"unrecognized file kind {kind!r}")
    return _LOADERS[kind](payload)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def save_surface_csv(path, patch: SurfacePatch):
    U, V = patch.domain.mesh()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "x1", "x2", "x3", "x4"])
        for i in range(patch.domain.nu):
            for j in range(patch.domain.nv):
                writer.writerow(
                    [repr(float(c)) for c in (U[i, j], V[i, j], *patch.z.values[i, j])]
                )


def load_surface_csv(path) -> SurfacePatch:
    """Rows u,v,x1..x4 covering a full uniform grid, in any row order."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:6]] != ["u", "v", "x1", "x2", "x3", "x4"]:
            raise ValueError("surface CSV must start with header u,v,x1,x2,x3,x4")
        for row in reader:
            if not row:
                continue
            rows.append([float(c) for c in row[:6]])
    if not rows:
        raise ValueError("surface CSV contains no samples")
    data = np.asarray(rows, float)
    us = np.unique(data[:, 0])
    vs = np.unique(data[:, 1])
    if len(us) < 3 or len(vs) < 3:
        raise ValueError("surface CSV needs at least a 3x3 grid")
    hu = np.diff(us)
    hv = np.diff(vs)
    if np.ptp(hu) > 1e-9 * hu[0] or np.ptp(hv) > 1e-9 * hv[0]:
        raise ValueError("surface CSV samples are not on a uniform grid")
    if len(us) * len(vs) != len(data):
        raise ValueError("surface CSV does not cover the full grid")
    dom = GridDomain(float(us[0]), float(vs[0]), float(hu[0]), float(hv[0]), len(us), len(vs))
    z = np.empty((dom.nu, dom.nv, 4))
    iu = np.searchsorted(us, data[:, 0])
    iv = np.searchsorted(vs, data[:, 1])
    z[iu, iv] = data[:, 2:6]
    return SurfacePatch(z=Vec4Field(dom, z))


def save_scalar_csv(path, field: ScalarField, column: str = "value"):
    U, V = field.domain.mesh()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", column])
        for i in range(field.domain.nu):
            for j in range(field.domain.nv):
                writer.writerow([repr(float(U[i, j])), repr(float(V[i, j])),
                                 repr(float(field.values[i, j]))])
