"""Frame and invariant extraction from sampled surfaces in isotropic parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MinimalPoint, NotIsotropic
from .grid import ScalarField, Vec4Field, d2_dudv, d_du, d_dv, require_same_domain
from .invariants import DerivedCoefficients, InvariantSet
from .minkowski import METRIC_DIAG, Motion, minkowski_dot

__all__ = [
    "SurfacePatch",
    "Extraction",
    "DegeneracyFlags",
    "apply_motion",
    "check_isotropic",
    "geometric_frame",
    "extract_invariants",
    "detect_degeneracies",
]


@dataclass(frozen=True, eq=False)
class SurfacePatch:
    """Sampled immersion z(u, v), optionally with a frame field and f attached.

    frames has shape (nu, nv, 4, 4) with legs stacked as rows (x, y, n1, n2).
    """

    z: Vec4Field
    frames: Optional[np.ndarray] = None
    f: Optional[ScalarField] = None

    def __post_init__(self):
        if self.frames is not None:
            frames = np.asarray(self.frames, float)
            if frames.shape != (self.z.domain.nu, self.z.domain.nv, 4, 4):
                raise ValueError(f"frame field shape {frames.shape} does not match the grid")
            if not np.all(np.isfinite(frames)):
                raise ValueError("frame field contains non-finite values")
            object.__setattr__(self, "frames", frames)
        if self.f is not None:
            require_same_domain(self.z, self.f)

    @property
    def domain(self):
        return self.z.domain


def apply_motion(motion: Motion, patch: SurfacePatch) -> SurfacePatch:
    """Move every sample by the motion; attached frames transform by the linear part."""
    z = Vec4Field(patch.domain, motion.apply_points(patch.z.values))
    frames = None
    if patch.frames is not None:
        frames = patch.frames @ motion.linear.T
    return SurfacePatch(z=z, frames=frames, f=patch.f)


def _first_fundamental(patch: SurfacePatch, order: int):
    zu = d_du(patch.z, order).values
    zv = d_dv(patch.z, order).values
    E = minkowski_dot(zu, zu)
    F = minkowski_dot(zu, zv)
    G = minkowski_dot(zv, zv)
    return zu, zv, E, F, G


def _isotropy_tolerance(patch: SurfacePatch, F: np.ndarray) -> float:
    h = max(patch.domain.hu, patch.domain.hv)
    return 10.0 * h * h * max(1.0, float(np.max(np.abs(F))))


def check_isotropic(patch: SurfacePatch, tol: Optional[float] = None, order: int = 2) -> ScalarField:
    """Verify E ~ 0, G ~ 0, F < 0 pointwise and return f = sqrt(-F).

    The default tolerance scales with the squared grid step because the metric
    coefficients are evaluated through the derivative stencils.
    """
    zu, zv, E, F, G = _first_fundamental(patch, order)
    if tol is None:
        tol = _isotropy_tolerance(patch, F)

    def worst(arr):
        idx = np.unravel_index(int(np.argmax(np.abs(arr))), arr.shape)
        return idx, float(arr[idx])

    for name, coeff in (("E", E), ("G", G)):
        if np.max(np.abs(coeff)) >= tol:
            idx, value = worst(coeff)
            raise NotIsotropic(
                f"|{name}| = {abs(value):.3e} at grid index {idx} exceeds tolerance {tol:.3e}; "
                "the chart is not in isotropic parameters",
                component=name,
                index=idx,
                value=value,
            )
    if np.max(F) > -tol:
        idx = np.unravel_index(int(np.argmax(F)), F.shape)
        raise NotIsotropic(
            f"F = {F[idx]:.3e} at grid index {idx} is not negative beyond tolerance {tol:.3e}",
            component="F",
            index=idx,
            value=float(F[idx]),
        )
    return ScalarField(patch.domain, np.sqrt(-F))


def _minkowski_cross(a, b, c):
    """Vector w with <w, t> = +-det(t; a; b; c); orthogonal to a, b, c."""
    rows = np.stack([a, b, c], axis=-2)
    cross = np.empty(a.shape, dtype=float)
    cols = np.arange(4)
    for ell in range(4):
        minor = rows[..., cols != ell]
        cross[..., ell] = (-1.0) ** ell * np.linalg.det(minor)
    return cross * METRIC_DIAG


def _frame_pipeline(patch: SurfacePatch, minimal_tol: Optional[float], order: int,
                    orientation: int, raise_on_minimal: bool):
    """Shared extraction core: f, null tangents, mean curvature, normal frame."""
    ffield = check_isotropic(patch, order=order)
    f = ffield.values
    zu, zv, _, _, _ = _first_fundamental(patch, order)
    x = zu / f[..., None]
    y = zv / f[..., None]

    zuv = d2_dudv(patch.z, order).values
    w = zuv / (f**2)[..., None]
    # normal projection in the null tangent basis: w_tan = -<w,y> x - <w,x> y
    w_normal = w + minkowski_dot(w, y)[..., None] * x + minkowski_dot(w, x)[..., None] * y
    H = -w_normal
    q = minkowski_dot(H, H)
    # the normal bundle is spacelike, so <H,H> >= 0 up to stencil error
    clipped = int(np.count_nonzero(q < 0.0))
    nu = np.sqrt(np.clip(q, 0.0, None))

    if minimal_tol is None:
        minimal_tol = 1e-9 * max(1.0, float(np.max(nu)))
    minimal_mask = nu < minimal_tol
    if raise_on_minimal and np.any(minimal_mask):
        idx = np.unravel_index(int(np.argmin(nu)), nu.shape)
        raise MinimalPoint(
            f"mean curvature norm {nu[idx]:.3e} at grid index {idx} is below "
            f"tolerance {minimal_tol:.3e}",
            index=idx,
            value=float(nu[idx]),
        )

    nu_safe = np.where(minimal_mask, 1.0, nu)
    n1 = H / nu_safe[..., None]
    n2 = _minkowski_cross(x, y, n1)
    norm2 = minkowski_dot(n2, n2)
    norm2_safe = np.where(norm2 <= 0.0, 1.0, norm2)
    n2 = n2 / np.sqrt(norm2_safe)[..., None]
    legs = np.stack([x, y, n1, n2], axis=-2)
    # orientation convention: det(x, y, n1, n2) > 0, then the optional flip
    det = np.linalg.det(legs)
    n2 = n2 * np.where(det < 0.0, -1.0, 1.0)[..., None] * float(orientation)
    legs = np.stack([x, y, n1, n2], axis=-2)
    return ffield, legs, ScalarField(patch.domain, nu), minimal_mask, clipped


def geometric_frame(
    patch: SurfacePatch,
    minimal_tol: Optional[float] = None,
    order: int = 2,
    orientation: int = 1,
):
    """Canonical frame field (x, y, n1, n2) and the mean curvature norm nu.

    x = z_u / f and y = z_v / f are the null tangents; n1 is the unit normal
    along the mean curvature vector; n2 completes the normal frame with
    det(x, y, n1, n2) > 0 (flip with orientation=-1).
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    _, legs, nu, _, _ = _frame_pipeline(patch, minimal_tol, order, orientation, True)
    return legs, nu


@dataclass(frozen=True, eq=False)
class Extraction:
    """Full extraction result: invariants, dependent coefficients, frames."""

    invariants: InvariantSet
    derived: DerivedCoefficients
    frames: np.ndarray
    clipped_minimal_radicands: int
    # informational: sign of the time component of x at the origin sample
    x_time_sign: int

    @property
    def parallel_mean_curvature(self) -> bool:
        """True when beta1 = beta2 = 0 and nu is constant (up to grid noise)."""
        h2 = max(self.invariants.domain.hu, self.invariants.domain.hv) ** 2
        nu = self.invariants.nu.values
        scale = max(1.0, float(np.max(np.abs(nu))))
        betas = max(
            float(np.max(np.abs(self.derived.beta1.values))),
            float(np.max(np.abs(self.derived.beta2.values))),
        )
        return betas < 50 * h2 * scale and float(np.ptp(nu)) < 50 * h2 * scale


def extract_invariants(
    patch: SurfacePatch,
    order: int = 2,
    orientation: int = 1,
    minimal_tol: Optional[float] = None,
) -> Extraction:
    """Measure the six invariant fields and the dependent coefficients.

    All covariant derivatives are realized as (1/f) times the grid stencils
    applied to the sampled frame legs, then projected with the inner product.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    ffield, legs, nu, _, clipped = _frame_pipeline(patch, minimal_tol, order, orientation, True)
    f = ffield.values
    dom = patch.domain
    x = Vec4Field(dom, legs[..., 0, :])
    n1 = Vec4Field(dom, legs[..., 2, :])
    n2v = legs[..., 3, :]

    dx_u = d_du(x, order).values / f[..., None]
    ydir = Vec4Field(dom, legs[..., 1, :])
    dy_v = d_dv(ydir, order).values / f[..., None]
    dn1_u = d_du(n1, order).values / f[..., None]
    dn1_v = d_dv(n1, order).values / f[..., None]

    lam1 = minkowski_dot(dx_u, legs[..., 2, :])
    mu1 = minkowski_dot(dx_u, n2v)
    lam2 = minkowski_dot(dy_v, legs[..., 2, :])
    mu2 = minkowski_dot(dy_v, n2v)
    beta1 = minkowski_dot(dn1_u, n2v)
    beta2 = minkowski_dot(dn1_v, n2v)

    fu = d_du(ffield, order).values
    fv = d_dv(ffield, order).values

    inv = InvariantSet(
        f=ffield,
        nu=nu,
        lambda1=ScalarField(dom, lam1),
        lambda2=ScalarField(dom, lam2),
        mu1=ScalarField(dom, mu1),
        mu2=ScalarField(dom, mu2),
    )
    dc = DerivedCoefficients(
        gamma1=ScalarField(dom, fu / f**2),
        gamma2=ScalarField(dom, fv / f**2),
        beta1=ScalarField(dom, beta1),
        beta2=ScalarField(dom, beta2),
    )
    x_time_sign = 1 if legs[0, 0, 0, 3] >= 0 else -1
    return Extraction(
        invariants=inv,
        derived=dc,
        frames=legs,
        clipped_minimal_radicands=clipped,
        x_time_sign=x_time_sign,
    )


@dataclass(frozen=True, eq=False)
class DegeneracyFlags:
    minimal: np.ndarray
    inflection: np.ndarray


def detect_degeneracies(patch: SurfacePatch, tol: Optional[float] = None, order: int = 2) -> DegeneracyFlags:
    """Per-sample minimal (nu < tol) and inflection (mu1^2 + mu2^2 < tol^2) flags.

    Unlike extraction this never raises at minimal points; the frame (and with
    it the inflection test) is simply undefined there.
    """
    ffield, legs, nufield, _, _ = _frame_pipeline(patch, None, order, 1, False)
    f = ffield.values
    dom = patch.domain
    nu = nufield.values

    x = Vec4Field(dom, legs[..., 0, :])
    ydir = Vec4Field(dom, legs[..., 1, :])
    dx_u = d_du(x, order).values / f[..., None]
    dy_v = d_dv(ydir, order).values / f[..., None]
    n1v = legs[..., 2, :]
    n2v = legs[..., 3, :]
    lam1 = minkowski_dot(dx_u, n1v)
    lam2 = minkowski_dot(dy_v, n1v)
    mu1 = minkowski_dot(dx_u, n2v)
    mu2 = minkowski_dot(dy_v, n2v)

    if tol is None:
        scale = max(float(np.max(np.abs(a))) for a in (nu, lam1, lam2, mu1, mu2))
        tol = max(1e-2 * scale, 1e-9)

    minimal = nu < tol
    inflection = (mu1**2 + mu2**2 < tol**2) & ~minimal
    return DegeneracyFlags(minimal=minimal, inflection=inflection)
