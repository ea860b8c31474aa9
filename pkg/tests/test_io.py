"""File formats: bit-exact JSON round-trips, CSV grids, deterministic output."""

import json

import numpy as np
import pytest

from minksurf import io
from minksurf.catalog import constant_first_type, product_surface
from minksurf.grid import GridDomain, ScalarField, d_du
from minksurf.invariants import ConditionResidual, ResidualReport, SurfaceType
from minksurf.surfaces import SurfacePatch, extract_invariants


@pytest.fixture
def dom():
    return GridDomain(-0.5, 0.25, 0.05, 0.1, 9, 7)


def test_scalar_field_roundtrip_bit_exact(dom, rng, tmp_path):
    field = ScalarField(dom, rng.standard_normal(dom.shape))
    path = tmp_path / "field.json"
    io.dump_json(path, io.scalar_field_to_dict(field))
    back = io.load_any(path)
    np.testing.assert_array_equal(back.values, field.values)
    assert back.domain == field.domain


def test_derivatives_reproducible_after_reload(dom, rng, tmp_path):
    field = ScalarField(dom, rng.standard_normal(dom.shape))
    path = tmp_path / "field.json"
    io.dump_json(path, io.scalar_field_to_dict(field))
    back = io.load_any(path)
    np.testing.assert_array_equal(d_du(back).values, d_du(field).values)


def test_invariant_set_roundtrip(tmp_path):
    dom = GridDomain(0.0, 0.0, 0.05, 0.05, 11, 11)
    inv = constant_first_type(1.5, dom)
    path = tmp_path / "inv.json"
    io.dump_json(path, io.invariant_set_to_dict(inv))
    back = io.load_any(path)
    assert back.surface_type is SurfaceType.FIRST_TYPE
    np.testing.assert_array_equal(back.mu1.values, inv.mu1.values)


def test_surface_patch_roundtrip_with_frames(tmp_path):
    dom = GridDomain(0.0, 0.0, 0.05, 0.05, 15, 15)
    patch = product_surface(1.0, 2.0, dom)
    ext = extract_invariants(patch)
    full = SurfacePatch(z=patch.z, frames=ext.frames, f=ext.invariants.f)
    path = tmp_path / "surface.json"
    io.dump_json(path, io.surface_patch_to_dict(full))
    back = io.load_any(path)
    np.testing.assert_array_equal(back.z.values, full.z.values)
    np.testing.assert_array_equal(back.frames, full.frames)
    np.testing.assert_array_equal(back.f.values, full.f.values)


def test_residual_report_roundtrip(tmp_path):
    report = ResidualReport(
        conditions=(
            ConditionResidual("gauss", 1.25e-7, 3.5e-8, 2.01),
            ConditionResidual("ricci", 0.0, 0.0, None),
        ),
        interior_margin=2,
    )
    path = tmp_path / "report.json"
    io.dump_json(path, io.residual_report_to_dict(report))
    back = io.load_any(path)
    assert back.by_name("gauss").convergence_order == 2.01
    assert back.by_name("ricci").max_norm == 0.0
    assert back.interior_margin == 2


def test_json_output_is_deterministic(tmp_path):
    dom = GridDomain(0.0, 0.0, 0.05, 0.05, 11, 11)
    inv = constant_first_type(1.0, dom)
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    io.dump_json(p1, io.invariant_set_to_dict(inv))
    io.dump_json(p2, io.invariant_set_to_dict(inv))
    assert p1.read_bytes() == p2.read_bytes()


def test_load_any_rejects_unknown_kind(tmp_path):
    path = tmp_path / "odd.json"
    path.write_text(json.dumps({"kind": "mystery"}))
    with pytest.raises(ValueError):
        io.load_any(path)


def test_surface_csv_roundtrip(tmp_path):
    dom = GridDomain(0.0, 0.0, 0.05, 0.05, 9, 9)
    patch = product_surface(1.0, 2.0, dom)
    path = tmp_path / "surface.csv"
    io.save_surface_csv(path, patch)
    back = io.load_any(str(path))
    np.testing.assert_array_equal(back.z.values, patch.z.values)
    assert back.domain == patch.domain


def test_surface_csv_accepts_shuffled_rows(tmp_path, rng):
    dom = GridDomain(0.0, 0.0, 0.05, 0.05, 5, 5)
    patch = product_surface(1.0, 2.0, dom)
    path = tmp_path / "surface.csv"
    io.save_surface_csv(path, patch)
    lines = path.read_text().strip().split("\n")
    body = lines[1:]
    rng.shuffle(body)
    path.write_text("\n".join([lines[0]] + body) + "\n")
    back = io.load_any(str(path))
    np.testing.assert_array_equal(back.z.values, patch.z.values)


def test_surface_csv_rejects_nonuniform(tmp_path):
    path = tmp_path / "bad.csv"
    rows = ["u,v,x1,x2,x3,x4"]
    for u in (0.0, 0.1, 0.35):
        for v in (0.0, 0.1, 0.2):
            rows.append(f"{u},{v},0,0,0,{u + v}")
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(ValueError):
        io.load_surface_csv(path)


def test_scalar_csv_export(tmp_path):
    dom = GridDomain(0.0, 0.0, 0.5, 0.5, 3, 3)
    field = ScalarField(dom, np.arange(9.0).reshape(3, 3))
    path = tmp_path / "field.csv"
    io.save_scalar_csv(path, field, column="residual")
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "u,v,residual"
    assert len(lines) == 10
