"""Frame-system integration and surface reconstruction from invariant data.

The moving frame W (legs stacked as rows) satisfies the linear system
W_u = A W, W_v = B W with coefficient matrices assembled from the invariant
fields, and the position follows from z_u = f x, z_v = f y.  Data is
compatible exactly when the zero-curvature residual A_v - B_u + AB - BA
vanishes; this module measures that residual, propagates the frame with a
classical 4th-order one-step method (optionally re-projecting onto the
pseudo-orthonormal set after every k steps), and integrates the position
with a Simpson rule whose midpoint leg values come from cubic Hermite
interpolation (leg derivatives at the nodes are exact via A and B).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import IncompatibleData, StepUnstable
from .grid import GridDomain, ScalarField, Vec4Field, d_du, d_dv
from .invariants import (
    AnalyticInvariants,
    DerivedCoefficients,
    InvariantSet,
    ResidualReport,
    SurfaceType,
    classify,
    derived_coefficients,
)
from .invariants import _condition  # shared residual-entry builder
from .minkowski import Frame, frame_gram_residual, reorthonormalize_legs
from .surfaces import SurfacePatch

__all__ = [
    "CoefficientMatrices",
    "SampledCoefficients",
    "AnalyticCoefficients",
    "FrameFieldPatch",
    "ReconstructionConfig",
    "build_coefficient_matrices",
    "coefficient_matrix_fields",
    "flatness_residual",
    "integrate_frame",
    "integrate_position",
    "reconstruct",
]

PATH_STRATEGIES = ("u-then-v", "v-then-u")


@dataclass(frozen=True)
class CoefficientMatrices:
    """The two 4x4 coefficient matrices at one grid point."""

    a: np.ndarray
    b: np.ndarray


def _assemble(f, g1, g2, nu, l1, l2, m1, m2, b1, b2):
    """Vectorized assembly of A and B from broadcastable coefficient arrays."""
    shape = np.broadcast(f, g1, nu).shape
    zeros = np.zeros(shape)

    def mat(rows):
        return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)

    A = mat([
        [g1, zeros, l1, m1],
        [zeros, -g1, -nu, zeros],
        [-nu, l1, zeros, b1],
        [zeros, m1, -b1, zeros],
    ]) * f[..., None, None]
    B = mat([
        [-g2, zeros, -nu, zeros],
        [zeros, g2, l2, m2],
        [l2, -nu, zeros, b2],
        [m2, zeros, -b2, zeros],
    ]) * f[..., None, None]
    return A, B


def _type_masked(inv: InvariantSet, dc: DerivedCoefficients, surface_type: Optional[SurfaceType]):
    """Field arrays with the structural zeros of the type substituted exactly."""
    l2 = inv.lambda2.values
    m2 = inv.mu2.values
    b2 = dc.beta2.values
    if surface_type is SurfaceType.SECOND_TYPE:
        m2 = np.zeros_like(m2)
    elif surface_type is SurfaceType.THIRD_TYPE:
        m2 = np.zeros_like(m2)
        l2 = np.zeros_like(l2)
        b2 = np.zeros_like(b2)
    return (
        inv.f.values,
        dc.gamma1.values,
        dc.gamma2.values,
        inv.nu.values,
        inv.lambda1.values,
        l2,
        inv.mu1.values,
        inv.mu2.values if surface_type is SurfaceType.FIRST_TYPE or surface_type is None else m2,
        dc.beta1.values,
        b2,
    )


def coefficient_matrix_fields(
    inv: InvariantSet,
    dc: DerivedCoefficients,
    surface_type: Optional[SurfaceType] = None,
):
    """A and B over the whole grid, shape (nu, nv, 4, 4) each."""
    f, g1, g2, nu, l1, l2, m1, m2, b1, b2 = _type_masked(inv, dc, surface_type)
    return _assemble(f, g1, g2, nu, l1, l2, m1, m2, b1, b2)


def build_coefficient_matrices(
    inv: InvariantSet,
    dc: DerivedCoefficients,
    i: int,
    j: int,
    surface_type: Optional[SurfaceType] = None,
) -> CoefficientMatrices:
    """Coefficient matrices at grid index (i, j)."""
    fields = [arr[i, j] for arr in _type_masked(inv, dc, surface_type)]
    A, B = _assemble(*[np.asarray(v) for v in fields])
    return CoefficientMatrices(a=A, b=B)


def flatness_residual(
    inv: InvariantSet,
    dc: DerivedCoefficients,
    surface_type: Optional[SurfaceType] = None,
    order: int = 2,
    margin: int = 2,
) -> ResidualReport:
    """Componentwise zero-curvature residual A_v - B_u + AB - BA on the interior."""
    A, B = coefficient_matrix_fields(inv, dc, surface_type)
    dom = inv.domain
    Av = np.empty_like(A)
    Bu = np.empty_like(B)
    for r in range(4):
        for c in range(4):
            Av[..., r, c] = d_dv(ScalarField(dom, A[..., r, c]), order).values
            Bu[..., r, c] = d_du(ScalarField(dom, B[..., r, c]), order).values
    res = Av - Bu + A @ B - B @ A
    conditions = [
        _condition(f"comp_{r + 1}{c + 1}", res[..., r, c], margin)
        for r in range(4)
        for c in range(4)
    ]
    return ResidualReport(conditions=tuple(conditions), interior_margin=margin)


# ---------------------------------------------------------------------------
# coefficient sources for the integrators
# ---------------------------------------------------------------------------

class SampledCoefficients:
    """Invariant data on grid nodes; values between nodes by bilinear interpolation.

    Optionally refines the integration grid by an integer factor, which
    subdivides every step of the one-step method.
    """

    def __init__(
        self,
        inv: InvariantSet,
        dc: DerivedCoefficients,
        surface_type: Optional[SurfaceType] = None,
        subdivide: int = 1,
    ):
        self.domain = inv.domain.refined(subdivide)
        A, B = coefficient_matrix_fields(inv, dc, surface_type)
        self._data_domain = inv.domain
        self._A = A
        self._B = B
        self._f = inv.f.values

    def _lerp(self, values, u, v):
        dom = self._data_domain
        su = np.clip((np.asarray(u, float) - dom.u0) / dom.hu, 0.0, dom.nu - 1.0)
        sv = np.clip((np.asarray(v, float) - dom.v0) / dom.hv, 0.0, dom.nv - 1.0)
        su, sv = np.broadcast_arrays(su, sv)
        i0 = np.minimum(su.astype(int), dom.nu - 2)
        j0 = np.minimum(sv.astype(int), dom.nv - 2)
        tu = (su - i0)[(...,) + (None,) * (values.ndim - 2)]
        tv = (sv - j0)[(...,) + (None,) * (values.ndim - 2)]
        v00 = values[i0, j0]
        v10 = values[i0 + 1, j0]
        v01 = values[i0, j0 + 1]
        v11 = values[i0 + 1, j0 + 1]
        return (
            (1 - tu) * (1 - tv) * v00
            + tu * (1 - tv) * v10
            + (1 - tu) * tv * v01
            + tu * tv * v11
        )

    def a_at(self, u, v):
        return self._lerp(self._A, u, v)

    def b_at(self, u, v):
        return self._lerp(self._B, u, v)

    def f_at(self, u, v):
        return self._lerp(self._f, u, v)


class AnalyticCoefficients:
    """Coefficient matrices evaluated from closed-form invariant functions."""

    def __init__(self, closures: AnalyticInvariants, domain: GridDomain, subdivide: int = 1):
        self.domain = domain.refined(subdivide)
        self._c = closures

    def _fields(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        c = self._c
        def ev(fn):
            return np.broadcast_to(np.asarray(fn(u, v), float), u.shape).astype(float)
        return (
            ev(c.f), ev(c.gamma1), ev(c.gamma2), ev(c.nu), ev(c.lambda1),
            ev(c.lambda2), ev(c.mu1), ev(c.mu2), ev(c.beta1), ev(c.beta2),
        )

    def a_at(self, u, v):
        return _assemble(*self._fields(u, v))[0]

    def b_at(self, u, v):
        return _assemble(*self._fields(u, v))[1]

    def f_at(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.broadcast_to(np.asarray(self._c.f(u, v), float), u.shape).astype(float)


@dataclass(frozen=True, eq=False)
class FrameFieldPatch:
    """Propagated frame field with its provenance.

    gram_drift is the largest Gram deviation observed immediately before any
    re-projection; the stored legs are post-projection.
    """

    domain: GridDomain
    legs: np.ndarray
    gram_drift: float
    strategy: str
    coeffs: object


@dataclass(frozen=True)
class ReconstructionConfig:
    strategy: str = "u-then-v"
    reproject_every: int = 1
    subdivide: int = 1
    order: int = 2
    margin: int = 2
    zero_tol: float = 1e-7
    hard_threshold: float = 1e-2   # refuse above this times the coefficient scale
    warn_threshold: float = 1e-6   # warn above this times the coefficient scale
    magnitude_bound: float = 1e8


def _rk4_step(M0, Mh, M1, W, h):
    k1 = M0 @ W
    k2 = Mh @ (W + (0.5 * h) * k1)
    k3 = Mh @ (W + (0.5 * h) * k2)
    k4 = M1 @ (W + h * k3)
    return W + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _gram_drift(legs):
    from .minkowski import gram_deviation

    return float(np.max(np.abs(gram_deviation(legs))))


class _Sweeper:
    """One-step propagation of stacked frame states along a grid axis."""

    def __init__(self, coeffs, reproject_every, magnitude_bound):
        self.coeffs = coeffs
        self.reproject_every = reproject_every
        self.bound = magnitude_bound
        self.drift = 0.0
        self._steps = 0

    def step(self, W, matrix_at, t0, h):
        M0 = matrix_at(t0)
        Mh = matrix_at(t0 + 0.5 * h)
        M1 = matrix_at(t0 + h)
        W = _rk4_step(M0, Mh, M1, W, h)
        if np.max(np.abs(W)) > self.bound:
            raise StepUnstable(
                f"frame component magnitude exceeded {self.bound:.1e} during propagation"
            )
        self._steps += 1
        self.drift = max(self.drift, _gram_drift(W))
        if self.reproject_every and self._steps % self.reproject_every == 0:
            W = reorthonormalize_legs(W)
        return W


def integrate_frame(
    inv,
    dc: Optional[DerivedCoefficients] = None,
    frame0: Optional[Frame] = None,
    strategy: str = "u-then-v",
    *,
    surface_type: Optional[SurfaceType] = None,
    reproject_every: int = 1,
    subdivide: int = 1,
    magnitude_bound: float = 1e8,
    gram_tol: float = 1e-10,
) -> FrameFieldPatch:
    """Propagate the frame from the grid origin across the whole grid.

    `inv` is either an InvariantSet (with `dc`) or a prepared coefficient
    source.  With "u-then-v" the frame is first swept along the u-axis and
    then along every v-line at once; "v-then-u" mirrors this.  Re-projection
    runs after every `reproject_every` steps (0 disables it).
    """
    if strategy not in PATH_STRATEGIES:
        raise ValueError(f"strategy must be one of {PATH_STRATEGIES}")
    if frame0 is None:
        raise ValueError("an initial frame is required")
    residual0 = frame_gram_residual(frame0)
    if residual0 >= gram_tol:
        raise ValueError(
            f"initial frame Gram residual {residual0:.3e} exceeds {gram_tol:.1e}"
        )
    if isinstance(inv, InvariantSet):
        if dc is None:
            raise ValueError("derived coefficients are required with an InvariantSet")
        coeffs = SampledCoefficients(inv, dc, surface_type, subdivide)
    else:
        coeffs = inv

    dom = coeffs.domain
    uu, vv = dom.u, dom.v
    W = np.empty((dom.nu, dom.nv, 4, 4))
    sweeper = _Sweeper(coeffs, reproject_every, magnitude_bound)

    if strategy == "u-then-v":
        state = frame0.legs[None, :, :]
        W[0, 0] = state[0]
        for i in range(dom.nu - 1):
            state = sweeper.step(state, lambda t: coeffs.a_at(t, vv[0])[None], uu[i], dom.hu)
            W[i + 1, 0] = state[0]
        state = W[:, 0].copy()
        for j in range(dom.nv - 1):
            state = sweeper.step(state, lambda t: coeffs.b_at(uu, t), vv[j], dom.hv)
            W[:, j + 1] = state
    else:
        state = frame0.legs[None, :, :]
        W[0, 0] = state[0]
        for j in range(dom.nv - 1):
            state = sweeper.step(state, lambda t: coeffs.b_at(uu[0], t)[None], vv[j], dom.hv)
            W[0, j + 1] = state[0]
        state = W[0, :].copy()
        for i in range(dom.nu - 1):
            state = sweeper.step(state, lambda t: coeffs.a_at(t, vv), uu[i], dom.hu)
            W[i + 1, :] = state

    return FrameFieldPatch(
        domain=dom, legs=W, gram_drift=sweeper.drift, strategy=strategy, coeffs=coeffs
    )


def _hermite_midpoint(x0, x1, d0, d1, h):
    return 0.5 * (x0 + x1) + (h / 8.0) * (d0 - d1)


def _position_axis(z0, legs_line, leg_index, matrices, f_nodes, f_mid, h):
    """Cumulative integral of f * leg along one line via Simpson steps.

    legs_line: (n, k, 4, 4) frame states, matrices: (n, k, 4, 4) coefficient
    matrices at the same nodes, f arrays broadcast over (n, k).
    """
    x = legs_line[..., leg_index, :]
    dx = (matrices @ legs_line)[..., leg_index, :]
    g = f_nodes[..., None] * x
    n = x.shape[0]
    z = np.empty(x.shape)
    z[0] = z0
    for i in range(n - 1):
        xm = _hermite_midpoint(x[i], x[i + 1], dx[i], dx[i + 1], h)
        gm = f_mid[i][..., None] * xm
        z[i + 1] = z[i] + (h / 6.0) * (g[i] + 4.0 * gm + g[i + 1])
    return z


def integrate_position(
    f: Optional[ScalarField],
    frames: FrameFieldPatch,
    z0,
    strategy: Optional[str] = None,
) -> Vec4Field:
    """Integrate z_u = f x, z_v = f y through the propagated frame field."""
    strategy = strategy or frames.strategy
    if strategy not in PATH_STRATEGIES:
        raise ValueError(f"strategy must be one of {PATH_STRATEGIES}")
    dom = frames.domain
    coeffs = frames.coeffs
    uu, vv = dom.u, dom.v
    U, V = dom.mesh()
    if f is not None:
        if f.domain != dom:
            raise ValueError("f must be sampled on the integration grid")
        f_nodes = f.values
    else:
        f_nodes = coeffs.f_at(U, V)
    z0 = np.asarray(z0, float)
    W = frames.legs
    z = np.empty((dom.nu, dom.nv, 4))

    if strategy == "u-then-v":
        A_line = coeffs.a_at(uu, vv[0])
        f_mid_u = coeffs.f_at(0.5 * (uu[:-1] + uu[1:]), vv[0])
        z[:, 0] = _position_axis(
            z0, W[:, 0], 0, A_line, f_nodes[:, 0], f_mid_u, dom.hu
        )
        B_all = coeffs.b_at(U, V)
        f_mid_v = coeffs.f_at(U[:, :-1], 0.5 * (V[:, :-1] + V[:, 1:]))
        zv = _position_axis(
            z[:, 0],
            np.moveaxis(W, 1, 0),
            1,
            np.moveaxis(B_all, 1, 0),
            f_nodes.T,
            np.moveaxis(f_mid_v, 1, 0),
            dom.hv,
        )
        z = np.moveaxis(zv, 0, 1)
    else:
        B_line = coeffs.b_at(uu[0], vv)
        f_mid_v = coeffs.f_at(uu[0], 0.5 * (vv[:-1] + vv[1:]))
        z[0, :] = _position_axis(
            z0, W[0, :], 1, B_line, f_nodes[0, :], f_mid_v, dom.hv
        )
        A_all = coeffs.a_at(U, V)
        f_mid_u = coeffs.f_at(0.5 * (U[:-1, :] + U[1:, :]), V[:-1, :])
        z = _position_axis(z[0, :], W, 0, A_all, f_nodes, f_mid_u, dom.hu)

    return Vec4Field(dom, z)


def _coefficient_scale(inv: InvariantSet, dc: DerivedCoefficients, surface_type) -> float:
    A, B = coefficient_matrix_fields(inv, dc, surface_type)
    return max(float(np.max(np.abs(A))), float(np.max(np.abs(B))))


def reconstruct(
    inv: InvariantSet,
    p0,
    frame0: Frame,
    config: ReconstructionConfig = ReconstructionConfig(),
) -> SurfacePatch:
    """Full pipeline: classify, derive coefficients, check flatness, integrate.

    Raises IncompatibleData when the zero-curvature residual exceeds
    hard_threshold times the coefficient scale, and warns above
    warn_threshold times the scale.
    """
    surface_type = inv.surface_type or classify(inv, config.zero_tol)
    if surface_type in (SurfaceType.MINIMAL, SurfaceType.INFLECTION_DEGENERATE):
        raise IncompatibleData(
            f"reconstruction does not cover {surface_type.value} data "
            "(no fundamental condition set applies)"
        )
    dc = derived_coefficients(inv, surface_type, config.order)
    report = flatness_residual(inv, dc, surface_type, config.order, config.margin)
    scale = _coefficient_scale(inv, dc, surface_type)
    worst = report.max_norm()
    if worst > config.hard_threshold * scale:
        raise IncompatibleData(
            f"flatness residual {worst:.3e} exceeds {config.hard_threshold:.1e} x "
            f"coefficient scale {scale:.3e}; the data is not compatible"
        )
    if worst > config.warn_threshold * scale:
        warnings.warn(
            f"flatness residual {worst:.3e} above warning level "
            f"{config.warn_threshold:.1e} x scale {scale:.3e}",
            stacklevel=2,
        )

    frames = integrate_frame(
        inv,
        dc,
        frame0,
        config.strategy,
        surface_type=surface_type,
        reproject_every=config.reproject_every,
        subdivide=config.subdivide,
        magnitude_bound=config.magnitude_bound,
    )
    z = integrate_position(None, frames, p0)
    dom = frames.domain
    U, V = dom.mesh()
    f_int = ScalarField(dom, frames.coeffs.f_at(U, V))
    return SurfacePatch(z=z, frames=frames.legs, f=f_int)
