"""Coefficient matrices, flatness, frame/position integration, reconstruction."""

import numpy as np
import pytest
from scipy.linalg import expm

from minksurf.catalog import (
    constant_first_type,
    constant_first_type_closures,
    third_type_family,
    third_type_family_closures,
)
from minksurf.errors import IncompatibleData, StepUnstable
from minksurf.grid import GridDomain, ScalarField, constant_field
from minksurf.invariants import (
    DerivedCoefficients,
    InvariantSet,
    SurfaceType,
    derived_coefficients,
)
from minksurf.minkowski import FRAME_GRAM, Frame, legs_gram_residual, standard_frame
from minksurf.reconstruction import (
    AnalyticCoefficients,
    ReconstructionConfig,
    build_coefficient_matrices,
    coefficient_matrix_fields,
    flatness_residual,
    integrate_frame,
    integrate_position,
    reconstruct,
)
from minksurf.surfaces import check_isotropic, extract_invariants

A_UNIT = np.array([[0, 0, 0, 1], [0, 0, -1, 0], [-1, 0, 0, 0], [0, 1, 0, 0]], float)
B_UNIT = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [0, -1, 0, 0], [1, 0, 0, 0]], float)


def constant_setup(c=1.0, h=0.05, n=21):
    dom = GridDomain(0.0, 0.0, h, h, n, n)
    inv = constant_first_type(c, dom)
    dc = derived_coefficients(inv, SurfaceType.FIRST_TYPE)
    return dom, inv, dc


def third_setup(h=0.02, n=51, u0=0.25):
    dom = GridDomain(u0, u0, h, h, n, n)
    inv = third_type_family(1.0, 1.0, 1.0, dom)
    dc = derived_coefficients(inv, SurfaceType.THIRD_TYPE)
    return dom, inv, dc


def test_constant_matrices_match_direct_substitution():
    _, inv, dc = constant_setup(c=1.0)
    cm = build_coefficient_matrices(inv, dc, 3, 7)
    np.testing.assert_allclose(cm.a, A_UNIT, atol=1e-14)
    np.testing.assert_allclose(cm.b, B_UNIT, atol=1e-14)


def test_third_type_b_matrix_last_row_zero():
    _, inv, dc = third_setup()
    cm = build_coefficient_matrices(inv, dc, 5, 5, SurfaceType.THIRD_TYPE)
    np.testing.assert_allclose(cm.b[3], 0.0, atol=1e-14)


def test_matrices_are_infinitesimally_frame_preserving(rng):
    # A G0 + G0 A^T = 0 holds identically in the field values, which is why
    # exact frames stay exact in the continuum
    for _ in range(10):
        vals = rng.standard_normal(10)
        vals[0] = abs(vals[0]) + 0.1  # f > 0
        dom = GridDomain(0, 0, 1, 1, 3, 3)
        fields = [constant_field(dom, w) for w in vals]
        inv = InvariantSet(fields[0], fields[3], fields[4], fields[5],
                           fields[6].with_values(fields[6].values + 2.0), fields[7])
        dc = DerivedCoefficients(fields[1], fields[2], fields[8], fields[9])
        A, B = coefficient_matrix_fields(inv, dc)
        for M in (A[0, 0], B[0, 0]):
            defect = M @ FRAME_GRAM + FRAME_GRAM @ M.T
            np.testing.assert_allclose(defect, 0.0, atol=1e-12)


def test_flatness_zero_for_constant_data():
    _, inv, dc = constant_setup(c=2.0)
    report = flatness_residual(inv, dc, SurfaceType.FIRST_TYPE)
    assert report.max_norm() == 0.0
    assert len(report.conditions) == 16


def test_flatness_third_type_stencil_order():
    maxima = []
    for h, n, margin in ((0.02, 51, 2), (0.01, 101, 4)):
        dom = GridDomain(0.25, 0.25, h, h, n, n)
        inv = third_type_family(1.0, 1.0, 1.0, dom)
        dc = derived_coefficients(inv, SurfaceType.THIRD_TYPE)
        maxima.append(flatness_residual(inv, dc, SurfaceType.THIRD_TYPE, margin=margin).max_norm())
    assert maxima[0] < 0.1
    assert 3.0 < maxima[0] / maxima[1] < 5.5


def test_flatness_floor_under_perturbation():
    floors = []
    for h, n in ((0.02, 51), (0.01, 101)):
        dom, inv, _ = third_setup(h, n)
        pert = InvariantSet(inv.f, inv.nu, inv.lambda1, inv.lambda2,
                            inv.mu1.with_values(inv.mu1.values + 0.1), inv.mu2,
                            SurfaceType.THIRD_TYPE)
        dcp = derived_coefficients(pert, SurfaceType.THIRD_TYPE)
        floors.append(flatness_residual(pert, dcp, SurfaceType.THIRD_TYPE).max_norm())
    assert min(floors) > 0.02
    assert floors[0] == pytest.approx(floors[1], rel=0.3)


# ---------------------------------------------------------------------------
# frame integration
# ---------------------------------------------------------------------------

def test_zero_coefficients_keep_frame_constant():
    dom = GridDomain(0.0, 0.0, 0.1, 0.1, 11, 11)
    one = constant_field(dom, 1.0)
    zero = constant_field(dom, 0.0)
    inv = InvariantSet(one, zero, zero, zero, zero, zero)
    dc = DerivedCoefficients(zero, zero, zero, zero)
    ff = integrate_frame(inv, dc, standard_frame(), reproject_every=0)
    np.testing.assert_array_equal(ff.legs[7, 9], standard_frame().legs)
    assert ff.gram_drift == 0.0


def test_constant_data_frame_matches_expm_oracle():
    dom, inv, dc = constant_setup(c=1.0, h=0.05, n=21)
    F0 = standard_frame()
    ff = integrate_frame(inv, dc, F0, reproject_every=0)

    def oracle(u, v):
        return expm(B_UNIT * v) @ expm(A_UNIT * u) @ F0.legs

    for i, j in ((20, 20), (10, 15), (0, 20)):
        np.testing.assert_allclose(ff.legs[i, j], oracle(dom.u[i], dom.v[j]), atol=5e-7)

    # fourth-order decay under step halving
    ff2 = integrate_frame(inv, dc, F0, reproject_every=0, subdivide=2)
    e1 = np.max(np.abs(ff.legs[20, 20] - oracle(dom.u[20], dom.v[20])))
    e2 = np.max(np.abs(ff2.legs[40, 40] - oracle(dom.u[20], dom.v[20])))
    assert 12.0 < e1 / e2 < 20.0


def test_gram_drift_fourth_order_without_reprojection():
    residuals = []
    for h, n in ((0.02, 100), (0.01, 199)):
        dom = GridDomain(0.0, 0.0, h, h, n, n)
        inv = constant_first_type(1.0, dom)
        dc = derived_coefficients(inv, SurfaceType.FIRST_TYPE)
        ff = integrate_frame(inv, dc, standard_frame(), reproject_every=0)
        residuals.append(legs_gram_residual(ff.legs))
    assert 10.0 < residuals[0] / residuals[1] < 40.0


def test_reprojection_pins_gram_residual():
    dom, inv, dc = constant_setup(c=1.0, h=0.02, n=60)
    ff = integrate_frame(inv, dc, standard_frame(), reproject_every=1)
    assert legs_gram_residual(ff.legs) < 1e-11
    assert ff.gram_drift < 1e-7


def test_initial_frame_must_be_clean():
    dom, inv, dc = constant_setup()
    legs = standard_frame().legs.copy()
    legs[2] *= 1.0 + 1e-6
    with pytest.raises(ValueError):
        integrate_frame(inv, dc, Frame(legs))


def test_step_unstable_guard():
    dom, inv, dc = constant_setup(c=30.0, h=0.05, n=21)
    with pytest.raises(StepUnstable):
        integrate_frame(inv, dc, standard_frame(), magnitude_bound=1.5)


def test_path_strategies_agree_on_constant_data():
    # the coefficient matrices commute here, so the two sweep orders apply the
    # same step operators; re-projection is off because its nonlinear
    # correction is the only thing that breaks exact commutation
    _, inv, dc = constant_setup(c=1.0)
    fa = integrate_frame(inv, dc, standard_frame(), "u-then-v", reproject_every=0)
    fb = integrate_frame(inv, dc, standard_frame(), "v-then-u", reproject_every=0)
    assert np.max(np.abs(fa.legs - fb.legs)) < 1e-12


def test_analytic_coefficients_match_sampled_on_constant_data():
    dom, inv, dc = constant_setup(c=1.0)
    closures = constant_first_type_closures(1.0)
    src = AnalyticCoefficients(closures, dom)
    fa = integrate_frame(src, None, standard_frame(), reproject_every=0)
    fb = integrate_frame(inv, dc, standard_frame(), reproject_every=0)
    np.testing.assert_allclose(fa.legs, fb.legs, atol=1e-13)


def test_analytic_third_type_fourth_order_self_convergence():
    closures = third_type_family_closures(1.0, 1.0, 1.0)
    dom = GridDomain(0.5, 0.5, 0.04, 0.04, 26, 26)
    corner = []
    for factor in (1, 2, 4):
        src = AnalyticCoefficients(closures, dom, subdivide=factor)
        ff = integrate_frame(src, None, standard_frame(), reproject_every=0)
        corner.append(ff.legs[-1, -1])
    d1 = np.max(np.abs(corner[0] - corner[1]))
    d2 = np.max(np.abs(corner[1] - corner[2]))
    assert 12.0 < d1 / d2 < 22.0


# ---------------------------------------------------------------------------
# position integration
# ---------------------------------------------------------------------------

def test_constant_frame_integrates_to_plane():
    dom = GridDomain(0.0, 0.0, 0.1, 0.1, 11, 11)
    one = constant_field(dom, 1.0)
    zero = constant_field(dom, 0.0)
    inv = InvariantSet(one, zero, zero, zero, zero, zero)
    dc = DerivedCoefficients(zero, zero, zero, zero)
    ff = integrate_frame(inv, dc, standard_frame(), reproject_every=0)
    z0 = np.array([1.0, 2.0, 3.0, 4.0])
    z = integrate_position(one, ff, z0)
    U, V = dom.mesh()
    expected = (z0 + U[..., None] * standard_frame().legs[0]
                + V[..., None] * standard_frame().legs[1])
    np.testing.assert_allclose(z.values, expected, atol=1e-12)


def test_position_matches_exponential_oracle():
    dom, inv, dc = constant_setup(c=1.0, h=0.05, n=21)
    F0 = standard_frame()
    z0 = np.zeros(4)
    Ainv = np.linalg.inv(A_UNIT)
    Binv = np.linalg.inv(B_UNIT)

    def oracle(u, v):
        term1 = (Ainv @ (expm(A_UNIT * u) - np.eye(4)) @ F0.legs)[0]
        term2 = (Binv @ (expm(B_UNIT * v) - np.eye(4)) @ expm(A_UNIT * u) @ F0.legs)[1]
        return z0 + term1 + term2

    errs = []
    for factor in (1, 2):
        ff = integrate_frame(inv, dc, F0, reproject_every=1, subdivide=factor)
        z = integrate_position(None, ff, z0)
        errs.append(np.max(np.abs(z.values[-1, -1] - oracle(dom.u[-1], dom.v[-1]))))
    assert errs[0] < 1e-6
    assert 12.0 < errs[0] / errs[1] < 20.0


# ---------------------------------------------------------------------------
# full reconstruction
# ---------------------------------------------------------------------------

def test_reconstructed_patch_is_isotropic_with_matching_f():
    dom = GridDomain(0.0, 0.0, 0.01, 0.01, 101, 101)
    inv = constant_first_type(1.0, dom)
    patch = reconstruct(inv, np.zeros(4), standard_frame())
    f = check_isotropic(patch)
    assert np.max(np.abs(f.values - 1.0)) < 1e-6
    assert patch.frames is not None and patch.f is not None


def test_roundtrip_third_type_classifies_back():
    dom, inv, _ = third_setup(h=0.02, n=41)
    with pytest.warns(UserWarning):
        patch = reconstruct(inv, np.zeros(4), standard_frame())
    ext = extract_invariants(patch)
    from minksurf.invariants import classify

    assert classify(ext.invariants, 1e-3) is SurfaceType.THIRD_TYPE


def test_incompatible_data_is_refused():
    dom, inv, _ = third_setup(h=0.02, n=41)
    pert = InvariantSet(inv.f, inv.nu, inv.lambda1, inv.lambda2,
                        inv.mu1.with_values(inv.mu1.values + 0.3), inv.mu2,
                        SurfaceType.THIRD_TYPE)
    with pytest.raises(IncompatibleData):
        reconstruct(pert, np.zeros(4), standard_frame())


def test_degenerate_types_are_refused():
    dom = GridDomain(0.0, 0.0, 0.05, 0.05, 11, 11)
    zero = constant_field(dom, 0.0)
    one = constant_field(dom, 1.0)
    minimal = InvariantSet(one, zero, zero, zero, one, one)
    with pytest.raises(IncompatibleData):
        reconstruct(minimal, np.zeros(4), standard_frame())


def test_subdivided_reconstruction_keeps_extent():
    dom = GridDomain(0.0, 0.0, 0.04, 0.04, 11, 11)
    inv = constant_first_type(1.0, dom)
    patch = reconstruct(inv, np.zeros(4), standard_frame(),
                        ReconstructionConfig(subdivide=2))
    assert patch.domain.nu == 21
    assert patch.domain.u[-1] == pytest.approx(dom.u[-1])
