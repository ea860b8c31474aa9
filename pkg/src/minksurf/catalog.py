"""Analytic test surfaces and invariant families with symbolically derived oracles.

Every generator ships with the oracle that regenerates its expected values:
charts carry a symbolic extraction of their invariants (sympy differentiation,
fully independent of the finite-difference pipeline), invariant families carry
closed-form coefficient closures, and the second-type probe re-checks its own
construction a posteriori.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional

import numpy as np
import sympy as sp

from .errors import ProbeInfeasible
from .grid import GridDomain, ScalarField, Vec4Field, constant_field
from .invariants import (
    AnalyticInvariants,
    InvariantSet,
    SurfaceType,
    theorem_conditions_residuals,
)
from .surfaces import SurfacePatch

__all__ = [
    "Chart",
    "product_surface",
    "product_chart",
    "cylinder_surface",
    "cylinder_chart",
    "constant_first_type",
    "constant_first_type_closures",
    "third_type_family",
    "third_type_family_closures",
    "second_type_probe",
    "CATALOG",
]


def _sym_mdot(p, q):
    return p[0] * q[0] + p[1] * q[1] + p[2] * q[2] - p[3] * q[3]


def _sym_cross(a, b, c):
    """Symbolic Minkowski-orthogonal complement of three independent vectors."""
    rows = sp.Matrix([[a[i], b[i], c[i]] for i in range(4)]).T
    comps = []
    for ell in range(4):
        cols = [i for i in range(4) if i != ell]
        comps.append((-1) ** ell * rows[:, cols].det())
    return sp.Matrix([comps[0], comps[1], comps[2], -comps[3]])


@dataclass(frozen=True)
class Chart:
    """Closed-form chart with lambdified position/tangents and invariant oracles.

    `invariants` maps each invariant name to a callable of (u, v); values come
    from symbolic differentiation of the chart.
    """

    z: Callable
    z_u: Callable
    z_v: Callable
    invariants: Dict[str, Callable]

    def patch(self, domain: GridDomain) -> SurfacePatch:
        U, V = domain.mesh()
        coords = np.stack(
            [np.broadcast_to(np.asarray(c, float), U.shape) for c in self.z(U, V)], axis=-1
        )
        return SurfacePatch(z=Vec4Field(domain, coords))

    def invariants_at(self, u: float, v: float) -> Dict[str, float]:
        return {name: float(fn(u, v)) for name, fn in self.invariants.items()}


def _symbolic_chart(z_expr, u, v, orientation_point=(0.3, 0.4)) -> Chart:
    """Extract the geometric frame and invariants of a chart symbolically.

    Normalized vectors are never differentiated: with H orthogonal to the
    normal complement c = cross(x, y, H) exactly, the projections reduce to
    <x_u, H>/(f nu), <H_u, c>/(f nu |c|), and so on, which keeps the sympy
    expression trees tractable.
    """
    zu = z_expr.diff(u)
    zv = z_expr.diff(v)
    F = _sym_mdot(zu, zv)
    f = sp.sqrt(-F)
    x = zu / f
    y = zv / f
    zuv = z_expr.diff(u).diff(v)
    w = zuv / f**2
    w_normal = w + _sym_mdot(w, y) * x + _sym_mdot(w, x) * y
    H = -w_normal
    nu = sp.sqrt(_sym_mdot(H, H))
    c = _sym_cross(x, y, H)
    cnorm = sp.sqrt(_sym_mdot(c, c))
    # orientation: det(x, y, n1, n2) > 0, decided numerically at a sample point
    legs_fn = sp.lambdify((u, v), [list(x), list(y), list(H), list(c)], modules="numpy")
    legs = np.array(legs_fn(*orientation_point), dtype=float)
    sign = 1.0 if np.linalg.det(legs) > 0 else -1.0
    c = sign * c

    exprs = {
        "f": f,
        "nu": nu,
        "lambda1": _sym_mdot(x.diff(u), H) / (f * nu),
        "mu1": _sym_mdot(x.diff(u), c) / (f * cnorm),
        "lambda2": _sym_mdot(y.diff(v), H) / (f * nu),
        "mu2": _sym_mdot(y.diff(v), c) / (f * cnorm),
        "beta1": _sym_mdot(H.diff(u), c) / (f * nu * cnorm),
        "beta2": _sym_mdot(H.diff(v), c) / (f * nu * cnorm),
        "E": _sym_mdot(zu, zu),
        "F": F,
        "G": _sym_mdot(zv, zv),
    }
    lamb = {k: sp.lambdify((u, v), e, modules="numpy") for k, e in exprs.items()}
    z_fn = sp.lambdify((u, v), list(z_expr), modules="numpy")
    zu_fn = sp.lambdify((u, v), list(zu), modules="numpy")
    zv_fn = sp.lambdify((u, v), list(zv), modules="numpy")
    return Chart(z=z_fn, z_u=zu_fn, z_v=zv_fn, invariants=lamb)


@lru_cache(maxsize=None)
def product_chart(a: float, b: float) -> Chart:
    """Circle-times-hyperbola product surface in null coordinates.

    Chart (a cos phi, a sin phi, b cosh psi, b sinh psi) with
    phi = (u - v) / (2a), psi = (u + v) / (2b), fixed so that F < 0.
    """
    if not (a > 0 and b > 0):
        raise ValueError("product surface needs a > 0 and b > 0")
    u, v = sp.symbols("u v", real=True)
    phi = (u - v) / (2 * sp.Float(a))
    psi = (u + v) / (2 * sp.Float(b))
    z = sp.Matrix([a * sp.cos(phi), a * sp.sin(phi), b * sp.cosh(psi), b * sp.sinh(psi)])
    return _symbolic_chart(z, u, v)


def product_surface(a: float, b: float, domain: GridDomain) -> SurfacePatch:
    return product_chart(a, b).patch(domain)


@lru_cache(maxsize=None)
def cylinder_chart(r: float) -> Chart:
    """Circular cylinder over the time axis, in null coordinates; every point
    is an inflection point (the surface lies in a 3-space)."""
    if not r > 0:
        raise ValueError("cylinder needs r > 0")
    u, v = sp.symbols("u v", real=True)
    theta = (u - v) / (2 * sp.Float(r))
    t = (u + v) / 2
    z = sp.Matrix([r * sp.cos(theta), r * sp.sin(theta), sp.Integer(0), t])
    return _symbolic_chart(z, u, v)


def cylinder_surface(r: float, domain: GridDomain) -> SurfacePatch:
    return cylinder_chart(r).patch(domain)


def constant_first_type(c: float, domain: GridDomain) -> InvariantSet:
    """f = 1, nu = mu1 = mu2 = c, lambda1 = lambda2 = 0; compatible for any c != 0."""
    if c == 0.0:
        raise ValueError("constant first-type data needs c != 0")
    return InvariantSet(
        f=constant_field(domain, 1.0),
        nu=constant_field(domain, c),
        lambda1=constant_field(domain, 0.0),
        lambda2=constant_field(domain, 0.0),
        mu1=constant_field(domain, c),
        mu2=constant_field(domain, c),
        surface_type=SurfaceType.FIRST_TYPE,
    )


def constant_first_type_closures(c: float) -> AnalyticInvariants:
    if c == 0.0:
        raise ValueError("constant first-type data needs c != 0")
    const = lambda value: (lambda u, v: np.full(np.shape(u), value, dtype=float))
    return AnalyticInvariants(
        f=const(1.0),
        gamma1=const(0.0),
        gamma2=const(0.0),
        nu=const(c),
        lambda1=const(0.0),
        lambda2=const(0.0),
        mu1=const(c),
        mu2=const(c),
        beta1=const(0.0),
        beta2=const(0.0),
        surface_type=SurfaceType.FIRST_TYPE,
    )


def _third_type_exprs(coef_lambda1: float, coef_a: float, coef_b: float):
    u, v = sp.symbols("u v", real=True)
    s = u + v
    f = 1 / s
    lam1 = sp.Float(coef_lambda1) * s**2
    mu1 = sp.Float(coef_a) * s + sp.Float(coef_b) * s**2
    logf2 = 2 * sp.log(f)
    nu = sp.sqrt(logf2.diff(u).diff(v)) / f
    beta1 = -(mu1.diff(v) + mu1 * logf2.diff(v)) / (nu * f)
    return u, v, {
        "f": f,
        "nu": nu,
        "lambda1": lam1,
        "mu1": mu1,
        "gamma1": f.diff(u) / f**2,
        "gamma2": f.diff(v) / f**2,
        "beta1": beta1,
    }


def third_type_family(
    coef_lambda1: float,
    coef_a: float,
    coef_b: float,
    domain: GridDomain,
    min_sum: float = 0.5,
) -> InvariantSet:
    """f = 1/(u+v), lambda1 = C (u+v)^2, mu1 = A (u+v) + B (u+v)^2, lambda2 = mu2 = 0.

    Satisfies the third-type condition set identically; the domain must keep
    u + v >= min_sum away from the f singularity.
    """
    if domain.u0 + domain.v0 < min_sum:
        raise ValueError(f"domain must satisfy u + v >= {min_sum}, corner is at "
                         f"{domain.u0 + domain.v0}")
    u, v, e = _third_type_exprs(coef_lambda1, coef_a, coef_b)
    fns = {k: sp.lambdify((u, v), expr, modules="numpy") for k, expr in e.items()}
    U, V = domain.mesh()

    def field(name):
        return ScalarField(domain, np.broadcast_to(np.asarray(fns[name](U, V), float),
                                                   domain.shape).copy())

    zero = constant_field(domain, 0.0)
    return InvariantSet(
        f=field("f"),
        nu=field("nu"),
        lambda1=field("lambda1"),
        lambda2=zero,
        mu1=field("mu1"),
        mu2=zero,
        surface_type=SurfaceType.THIRD_TYPE,
    )


def third_type_family_closures(coef_lambda1: float, coef_a: float, coef_b: float) -> AnalyticInvariants:
    u, v, e = _third_type_exprs(coef_lambda1, coef_a, coef_b)
    fns = {k: sp.lambdify((u, v), expr, modules="numpy") for k, expr in e.items()}
    zero = lambda uu, vv: np.zeros(np.shape(uu))
    return AnalyticInvariants(
        f=fns["f"],
        gamma1=fns["gamma1"],
        gamma2=fns["gamma2"],
        nu=fns["nu"],
        lambda1=fns["lambda1"],
        lambda2=zero,
        mu1=fns["mu1"],
        mu2=zero,
        beta1=fns["beta1"],
        beta2=zero,
        surface_type=SurfaceType.THIRD_TYPE,
    )


@dataclass(frozen=True)
class SecondTypeSeeds:
    """Closed-form seeds for the second-type probe.

    f = exp(warp * u * v), nu = nu0 + nu_slope * u, lambda2 = k0 / f^2
    (solves the first condition exactly for any warp), lambda1 forced by the
    metric condition, mu1(v0)^2 = w0.
    """

    warp: float = 0.01
    nu0: float = 1.0
    nu_slope: float = 0.2
    k0: float = 0.5
    w0: float = 0.04


def second_type_probe(
    domain: GridDomain,
    seeds: SecondTypeSeeds = SecondTypeSeeds(),
    max_residual: Optional[float] = 0.5,
    order: int = 2,
    margin: int = 2,
):
    """Numerically generated second-type data with a posteriori residuals.

    Conditions (i) and (iii) hold exactly by the seed construction; mu1 is
    solved from condition (ii) along v-lines by one-dimensional integration.
    Condition (iv) is a genuine PDE constraint that quadrature cannot enforce,
    so its residual is measured and reported; ProbeInfeasible is raised when
    the worst of (iii)/(iv) exceeds max_residual (None disables the check).

    Returns (invariant_set, residual_report).
    """
    from scipy.integrate import solve_ivp

    u, v = sp.symbols("u v", real=True)
    s = seeds
    f = sp.exp(sp.Float(s.warp) * u * v)
    nu = sp.Float(s.nu0) + sp.Float(s.nu_slope) * u
    lam2 = sp.Float(s.k0) / f**2
    logf2 = 2 * sp.log(f)
    curv = logf2.diff(u).diff(v) / f**2          # the metric side of condition (iii)
    lam1 = (nu**2 - curv) / lam2                 # makes condition (iii) exact
    q2 = nu.diff(u) + lam1.diff(v) + lam1 * logf2.diff(v)
    rhs_w = 2 * (nu**2 - lam1 * lam2) / lam2 * q2
    decay = 2 * logf2.diff(v)

    rhs_fn = sp.lambdify((u, v), rhs_w, modules="numpy")
    decay_fn = sp.lambdify((u, v), decay, modules="numpy")
    uu = domain.u

    def ode(t, w):
        return np.broadcast_to(rhs_fn(uu, t), uu.shape) - np.broadcast_to(
            decay_fn(uu, t), uu.shape
        ) * w

    sol = solve_ivp(
        ode,
        (domain.v0, domain.v[-1]),
        np.full(domain.nu, s.w0),
        t_eval=domain.v,
        rtol=1e-10,
        atol=1e-12,
        method="RK45",
    )
    if not sol.success:
        raise ProbeInfeasible(f"mu1 quadrature failed: {sol.message}")
    w_grid = sol.y  # shape (nu, nv)
    if np.min(w_grid) <= 0.0:
        raise ProbeInfeasible("mu1^2 left the positive cone; pick gentler seeds")

    U, V = domain.mesh()

    def field(expr):
        fn = sp.lambdify((u, v), expr, modules="numpy")
        return ScalarField(domain, np.broadcast_to(np.asarray(fn(U, V), float),
                                                   domain.shape).copy())

    inv = InvariantSet(
        f=field(f),
        nu=field(nu),
        lambda1=field(lam1),
        lambda2=field(lam2),
        mu1=ScalarField(domain, np.sqrt(w_grid)),
        mu2=constant_field(domain, 0.0),
        surface_type=SurfaceType.SECOND_TYPE,
    )
    report = theorem_conditions_residuals(inv, SurfaceType.SECOND_TYPE, order, margin)
    if max_residual is not None:
        worst = max(report.by_name("cond_iii").max_norm, report.by_name("cond_iv").max_norm)
        if worst > max_residual:
            raise ProbeInfeasible(
                f"a posteriori residual {worst:.3e} exceeds threshold {max_residual:.3e}"
            )
    return inv, report


# registry for the CLI
CATALOG = {
    "product": {
        "kind": "surface",
        "params": {"a": 1.0, "b": 2.0},
        "make": lambda domain, a, b: product_surface(a, b, domain),
        "doc": "circle x hyperbola product surface (first type, parallel mean curvature)",
    },
    "cylinder": {
        "kind": "surface",
        "params": {"r": 1.0},
        "make": lambda domain, r: cylinder_surface(r, domain),
        "doc": "circular cylinder in a 3-space (inflection degenerate)",
    },
    "constant-first-type": {
        "kind": "invariants",
        "params": {"c": 1.0},
        "make": lambda domain, c: constant_first_type(c, domain),
        "doc": "constant compatible first-type data",
    },
    "third-type": {
        "kind": "invariants",
        "params": {"C": 1.0, "A": 1.0, "B": 1.0},
        "make": lambda domain, C, A, B: third_type_family(C, A, B, domain),
        "doc": "closed-form third-type family on u + v >= 0.5",
    },
    "second-type-probe": {
        "kind": "invariants",
        "params": {},
        "make": lambda domain: second_type_probe(domain)[0],
        "doc": "numerically generated second-type data (a posteriori residuals)",
    },
}
