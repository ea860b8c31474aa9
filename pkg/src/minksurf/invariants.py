"""Invariant sextuples, derived coefficients, classification, and residuals.

A surface in isotropic parameters is encoded by six scalar fields
(f, nu, lambda1, lambda2, mu1, mu2).  The vanishing pattern of mu2 and
lambda2 splits the data into three types with their own compatibility
condition sets; this module classifies the data, derives the dependent
coefficients (gamma1, gamma2, beta1, beta2), and measures how well the
data satisfies both the raw integrability equations and the per-type
condition sets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AmbiguousType, DivisionGuard, TypeMismatch
from .grid import (
    GridDomain,
    ScalarField,
    d2_dudv,
    d2_duu,
    d2_dvv,
    d_du,
    d_dv,
    require_same_domain,
)

__all__ = [
    "SurfaceType",
    "InvariantSet",
    "DerivedCoefficients",
    "ConditionResidual",
    "ResidualReport",
    "AnalyticInvariants",
    "classify",
    "swap_parameters",
    "derived_coefficients",
    "integrability_residuals",
    "theorem_conditions_residuals",
    "compare_refinement",
]

DEFAULT_ZERO_TOL = 1e-7


class SurfaceType(enum.Enum):
    FIRST_TYPE = "first_type"                    # mu1 != 0 and mu2 != 0
    SECOND_TYPE = "second_type"                  # mu2 == 0, lambda2 != 0, mu1 != 0
    THIRD_TYPE = "third_type"                    # mu2 == 0, lambda2 == 0, mu1 != 0
    INFLECTION_DEGENERATE = "inflection_degenerate"  # mu1 == 0 and mu2 == 0
    MINIMAL = "minimal"                          # nu == 0


@dataclass(frozen=True, eq=False)
class InvariantSet:
    """The six invariant fields on a shared domain, plus an optional type tag."""

    f: ScalarField
    nu: ScalarField
    lambda1: ScalarField
    lambda2: ScalarField
    mu1: ScalarField
    mu2: ScalarField
    surface_type: Optional[SurfaceType] = None

    def __post_init__(self):
        require_same_domain(self.f, self.nu, self.lambda1, self.lambda2, self.mu1, self.mu2)
        if not np.all(self.f.values > 0.0):
            raise ValueError("conformal factor f must be positive everywhere")

    @property
    def domain(self) -> GridDomain:
        return self.f.domain

    def with_type(self, surface_type: Optional[SurfaceType]) -> "InvariantSet":
        return InvariantSet(
            self.f, self.nu, self.lambda1, self.lambda2, self.mu1, self.mu2, surface_type
        )


@dataclass(frozen=True, eq=False)
class DerivedCoefficients:
    """Dependent coefficients: gamma_i from f, beta_i from the case formulas."""

    gamma1: ScalarField
    gamma2: ScalarField
    beta1: ScalarField
    beta2: ScalarField

    def __post_init__(self):
        require_same_domain(self.gamma1, self.gamma2, self.beta1, self.beta2)

    @property
    def domain(self) -> GridDomain:
        return self.gamma1.domain


@dataclass(frozen=True)
class ConditionResidual:
    name: str
    max_norm: float
    l2_norm: float
    convergence_order: Optional[float] = None


@dataclass(frozen=True)
class ResidualReport:
    """Per-condition residual norms, evaluated on the grid interior."""

    conditions: tuple
    interior_margin: int

    def names(self):
        return [c.name for c in self.conditions]

    def by_name(self, name: str) -> ConditionResidual:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def max_norm(self) -> float:
        return max((c.max_norm for c in self.conditions), default=0.0)


@dataclass(frozen=True)
class AnalyticInvariants:
    """Closed-form invariant data; callables must broadcast over numpy arrays."""

    f: Callable
    gamma1: Callable
    gamma2: Callable
    nu: Callable
    lambda1: Callable
    lambda2: Callable
    mu1: Callable
    mu2: Callable
    beta1: Callable
    beta2: Callable
    surface_type: Optional[SurfaceType] = None


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def _curvature_scale(inv: InvariantSet) -> float:
    return max(
        float(np.max(np.abs(g.values)))
        for g in (inv.nu, inv.lambda1, inv.lambda2, inv.mu1, inv.mu2)
    )


def classify(inv: InvariantSet, tol: float = DEFAULT_ZERO_TOL) -> SurfaceType:
    """Surface type from the vanishing pattern of the invariant fields.

    "== 0" means max-norm below tol and "!= 0" means min absolute value above
    tol, both relative to the joint max-norm of the five curvature fields.
    Mixed grids (a zero-test holding on part of the domain only) raise
    AmbiguousType instead of guessing.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    scale = _curvature_scale(inv)
    if scale == 0.0:
        return SurfaceType.MINIMAL
    thr = tol * scale

    def is_zero(g):
        return float(np.max(np.abs(g.values))) <= thr

    def nonvanishing(g):
        return float(np.min(np.abs(g.values))) > thr

    if is_zero(inv.nu):
        return SurfaceType.MINIMAL
    if not (is_zero(inv.nu) or nonvanishing(inv.nu)):
        raise AmbiguousType("nu vanishes on part of the grid; crop to a single-type sub-domain")
    if is_zero(inv.mu1) and is_zero(inv.mu2):
        return SurfaceType.INFLECTION_DEGENERATE
    if is_zero(inv.mu1):
        raise AmbiguousType(
            "mu1 vanishes while mu2 does not; apply swap_parameters to normalize mu1 != 0"
        )
    if is_zero(inv.mu2):
        if not nonvanishing(inv.mu1):
            raise AmbiguousType("mu1 neither vanishes nor stays away from zero on the grid")
        if is_zero(inv.lambda2):
            return SurfaceType.THIRD_TYPE
        if nonvanishing(inv.lambda2):
            return SurfaceType.SECOND_TYPE
        raise AmbiguousType("lambda2 neither vanishes nor stays away from zero on the grid")
    if nonvanishing(inv.mu1) and nonvanishing(inv.mu2):
        return SurfaceType.FIRST_TYPE
    raise AmbiguousType("mu1 or mu2 neither vanishes nor stays away from zero on the grid")


def swap_parameters(inv: InvariantSet) -> InvariantSet:
    """Exchange the roles of u and v (and with them the paired invariants).

    Transposes every field onto the swapped domain and exchanges
    lambda1 <-> lambda2, mu1 <-> mu2.  Used to normalize data with
    mu1 == 0 but mu2 != 0.  No orientation flip of the normal frame is
    applied.  The returned set is untagged.
    """
    dom = inv.domain.swapped()

    def sw(g):
        return ScalarField(dom, g.values.T.copy())

    return InvariantSet(
        f=sw(inv.f),
        nu=sw(inv.nu),
        lambda1=sw(inv.lambda2),
        lambda2=sw(inv.lambda1),
        mu1=sw(inv.mu2),
        mu2=sw(inv.mu1),
    )


# ---------------------------------------------------------------------------
# derived coefficients
# ---------------------------------------------------------------------------

def _guard(name: str, den: np.ndarray, rel_tol: float):
    floor = rel_tol * max(1.0, float(np.max(np.abs(den))))
    mag = np.abs(den)
    if np.min(mag) <= floor:
        idx = np.unravel_index(int(np.argmin(mag)), den.shape)
        raise DivisionGuard(
            f"denominator {name} dips to {den[idx]:.3e} at grid index {idx}",
            index=idx,
            value=float(den[idx]),
        )


def derived_coefficients(
    inv: InvariantSet,
    surface_type: SurfaceType,
    order: int = 2,
    guard_tol: float = 1e-9,
) -> DerivedCoefficients:
    """gamma1 = f_u / f^2, gamma2 = f_v / f^2, and the per-type beta formulas."""
    f = inv.f.values
    fu = d_du(inv.f, order).values
    fv = d_dv(inv.f, order).values
    gamma1 = fu / f**2
    gamma2 = fv / f**2
    # log-derivatives of f^2, computed from 2*ln f (f > 0 enforced)
    logf2 = inv.f.with_values(2.0 * np.log(f))
    lu = d_du(logf2, order).values
    lv = d_dv(logf2, order).values

    nu = inv.nu.values
    l1 = inv.lambda1.values
    l2 = inv.lambda2.values
    m1 = inv.mu1.values
    m2 = inv.mu2.values

    if surface_type is SurfaceType.FIRST_TYPE:
        den1 = f * m2
        den2 = f * m1
        _guard("f*mu2", den1, guard_tol)
        _guard("f*mu1", den2, guard_tol)
        beta1 = (d_du(inv.lambda2, order).values + d_dv(inv.nu, order).values + l2 * lu) / den1
        beta2 = (d_du(inv.nu, order).values + d_dv(inv.lambda1, order).values + l1 * lv) / den2
    elif surface_type is SurfaceType.SECOND_TYPE:
        den2 = f * m1
        _guard("f*mu1", den2, guard_tol)
        _guard("lambda2", l2, guard_tol)
        beta2 = (d_du(inv.nu, order).values + d_dv(inv.lambda1, order).values + l1 * lv) / den2
        beta1 = -nu * beta2 / l2
    elif surface_type is SurfaceType.THIRD_TYPE:
        den = nu * f
        _guard("nu*f", den, guard_tol)
        beta2 = np.zeros_like(f)
        beta1 = -(d_dv(inv.mu1, order).values + m1 * lv) / den
    else:
        raise TypeMismatch(
            f"no derived-coefficient formulas for surface type {surface_type.value}"
        )

    dom = inv.domain
    return DerivedCoefficients(
        gamma1=ScalarField(dom, gamma1),
        gamma2=ScalarField(dom, gamma2),
        beta1=ScalarField(dom, beta1),
        beta2=ScalarField(dom, beta2),
    )


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------

def _interior(arr: np.ndarray, margin: int) -> np.ndarray:
    if margin < 0:
        raise ValueError("margin must be >= 0")
    if margin == 0:
        return arr
    if arr.shape[0] <= 2 * margin or arr.shape[1] <= 2 * margin:
        raise ValueError(f"margin {margin} leaves no interior on grid {arr.shape}")
    return arr[margin:-margin, margin:-margin]


def _condition(name: str, residual_field: np.ndarray, margin: int) -> ConditionResidual:
    core = _interior(residual_field, margin)
    return ConditionResidual(
        name=name,
        max_norm=float(np.max(np.abs(core))),
        l2_norm=float(np.sqrt(np.mean(core**2))),
    )


def _report(named_fields, margin) -> ResidualReport:
    return ResidualReport(
        conditions=tuple(_condition(name, arr, margin) for name, arr in named_fields),
        interior_margin=margin,
    )


def integrability_residuals(
    inv: InvariantSet,
    dc: DerivedCoefficients,
    order: int = 2,
    margin: int = 2,
) -> ResidualReport:
    """Residuals of the six raw integrability equations of the moving frame.

    Directional derivatives along the null tangents are x(.) = (1/f) d/du and
    y(.) = (1/f) d/dv.  The first four are Codazzi-type equations (named by the
    coefficient they differentiate), then the Gauss and Ricci equations.
    """
    require_same_domain(inv.f, dc.gamma1)
    f = inv.f.values

    def xd(g):
        return d_du(g, order).values / f

    def yd(g):
        return d_dv(g, order).values / f

    nu = inv.nu.values
    l1 = inv.lambda1.values
    l2 = inv.lambda2.values
    m1 = inv.mu1.values
    m2 = inv.mu2.values
    g1 = dc.gamma1.values
    g2 = dc.gamma2.values
    b1 = dc.beta1.values
    b2 = dc.beta2.values

    fields = [
        ("codazzi_lambda2", xd(inv.lambda2) + yd(inv.nu) + 2 * g1 * l2 - m2 * b1),
        ("codazzi_lambda1", xd(inv.nu) + yd(inv.lambda1) + 2 * g2 * l1 - m1 * b2),
        ("codazzi_mu2", xd(inv.mu2) + 2 * g1 * m2 + nu * b2 + l2 * b1),
        ("codazzi_mu1", yd(inv.mu1) + 2 * g2 * m1 + nu * b1 + l1 * b2),
        ("gauss", xd(dc.gamma2) + yd(dc.gamma1) + 2 * g1 * g2 - nu**2 + l1 * l2 + m1 * m2),
        ("ricci", xd(dc.beta2) - yd(dc.beta1) + m1 * l2 - l1 * m2 + g1 * b2 - g2 * b1),
    ]
    return _report(fields, margin)


def _structural_zero(name: str, g: ScalarField, inv: InvariantSet, zero_tol: float):
    thr = zero_tol * max(_curvature_scale(inv), np.finfo(float).tiny)
    worst = float(np.max(np.abs(g.values)))
    if worst > thr:
        raise TypeMismatch(f"{name} must vanish for this surface type, max |{name}| = {worst:.3e}")


def theorem_conditions_residuals(
    inv: InvariantSet,
    surface_type: SurfaceType,
    order: int = 2,
    margin: int = 2,
    zero_tol: float = DEFAULT_ZERO_TOL,
    guard_tol: float = 1e-9,
) -> ResidualReport:
    """Residuals of the fundamental-theorem condition set for the given type.

    The conditions are the compatibility equations that remain after the beta
    coefficients are eliminated; the set depends on the type.  For third-type
    data the report also carries the consistency residual between the supplied
    nu and the one determined by f.
    """
    f = inv.f.values
    logf2 = inv.f.with_values(2.0 * np.log(f))
    lu = d_du(logf2, order).values
    lv = d_dv(logf2, order).values
    luv = d2_dudv(logf2, order).values
    nu = inv.nu.values
    l1 = inv.lambda1.values
    l2 = inv.lambda2.values
    m1 = inv.mu1.values
    m2 = inv.mu2.values
    dom = inv.domain

    if surface_type is SurfaceType.FIRST_TYPE:
        _guard("mu1", m1, guard_tol)
        _guard("mu2", m2, guard_tol)
        q1 = d_du(inv.lambda2, order).values + d_dv(inv.nu, order).values + l2 * lu
        q2 = d_du(inv.nu, order).values + d_dv(inv.lambda1, order).values + l1 * lv
        s2 = inv.f.with_values(l2**2 + m2**2)
        s1 = inv.f.with_values(l1**2 + m1**2)
        cond_i = (
            d_du(s2, order).values
            + 2 * lu * s2.values
            + 2 * l2 * d_dv(inv.nu, order).values
            + (2 * nu * m2 / m1) * q2
        )
        cond_ii = (
            d_dv(s1, order).values
            + 2 * lv * s1.values
            + 2 * l1 * d_du(inv.nu, order).values
            + (2 * nu * m1 / m2) * q1
        )
        cond_iii = luv / f**2 + l1 * l2 + m1 * m2 - nu**2
        cond_iv = (
            (m1 * l2 - m2 * l1) * (f**2 * m1 * m2 - luv)
            + d2_duu(inv.nu, order).values * m2
            - d2_dvv(inv.nu, order).values * m1
            + d2_dudv(inv.lambda1, order).values * m2
            - d2_dudv(inv.lambda2, order).values * m1
            + m2 * d_du(inv.lambda1, order).values * lv
            - m1 * d_dv(inv.lambda2, order).values * lu
            - (m2 * d_du(inv.mu1, order).values / m1) * q2
            + (m1 * d_dv(inv.mu2, order).values / m2) * q1
        )
        fields = [
            ("cond_i", cond_i),
            ("cond_ii", cond_ii),
            ("cond_iii", cond_iii),
            ("cond_iv", cond_iv),
        ]
    elif surface_type is SurfaceType.SECOND_TYPE:
        _structural_zero("mu2", inv.mu2, inv, zero_tol)
        _guard("mu1", m1, guard_tol)
        _guard("lambda2", l2, guard_tol)
        q2 = d_du(inv.nu, order).values + d_dv(inv.lambda1, order).values + l1 * lv
        cond_i = d_du(inv.lambda2, order).values + d_dv(inv.nu, order).values + lu * l2
        cond_ii = (
            d_dv(inv.mu1, order).values
            + lv * m1
            - ((nu**2 - l1 * l2) / (l2 * m1)) * q2
        )
        cond_iii = luv / f**2 - (nu**2 - l1 * l2)
        cond_iv = (
            l2
            * (
                d2_duu(inv.nu, order).values
                + d2_dudv(inv.lambda1, order).values
                + d_du(inv.lambda1, order).values * lv
                + l1 * luv
            )
            + nu
            * (
                d2_dudv(inv.nu, order).values
                + d2_dvv(inv.lambda1, order).values
                + d_dv(inv.lambda1, order).values * lv
                + l1 * d2_dvv(logf2, order).values
            )
            + f**2 * m1**2 * l2**2
            - q2
            * (
                l2 * d_du(inv.mu1, order).values / m1
                + d_dv(inv.nu, order).values
                - nu * d_dv(inv.mu1, order).values / m1
                - nu * d_dv(inv.lambda2, order).values / l2
            )
        )
        fields = [
            ("cond_i", cond_i),
            ("cond_ii", cond_ii),
            ("cond_iii", cond_iii),
            ("cond_iv", cond_iv),
        ]
    elif surface_type is SurfaceType.THIRD_TYPE:
        _structural_zero("mu2", inv.mu2, inv, zero_tol)
        _structural_zero("lambda2", inv.lambda2, inv, zero_tol)
        metric_term = luv  # equals (nu*f)^2 for admissible data, must be positive
        if np.min(metric_term) <= 0.0:
            idx = np.unravel_index(int(np.argmin(metric_term)), metric_term.shape)
            raise DivisionGuard(
                f"(ln f^2)_uv is non-positive at grid index {idx}; "
                "third-type conditions are undefined there",
                index=idx,
                value=float(metric_term[idx]),
            )
        cond_i = d_dv(inv.f.with_values(luv / f**2), order).values
        cond_ii = (
            d_dv(inv.lambda1, order).values
            + l1 * lv
            + d_du(inv.f.with_values(np.sqrt(metric_term) / f), order).values
        )
        cond_iii = (
            d2_dvv(inv.mu1, order).values
            + d_dv(inv.mu1, order).values * lv
            + m1 * d2_dvv(logf2, order).values
        )
        fields = [
            ("cond_i", cond_i),
            ("cond_ii", cond_ii),
            ("cond_iii", cond_iii),
            ("nu_consistency", nu**2 - luv / f**2),
        ]
    else:
        raise TypeMismatch(f"no fundamental condition set for surface type {surface_type.value}")

    return _report(fields, margin)


def compare_refinement(coarse: ResidualReport, fine: ResidualReport) -> ResidualReport:
    """Attach convergence orders log2(coarse/fine) of the max norms; the
    reports must come from the same data sampled at steps h and h/2."""
    orders = []
    for c in coarse.conditions:
        f_ = fine.by_name(c.name)
        if c.max_norm > 0.0 and f_.max_norm > 0.0:
            order = float(np.log2(c.max_norm / f_.max_norm))
        else:
            order = None
        orders.append(
            ConditionResidual(
                name=c.name,
                max_norm=f_.max_norm,
                l2_norm=f_.l2_norm,
                convergence_order=order,
            )
        )
    return ResidualReport(conditions=tuple(orders), interior_margin=fine.interior_margin)
