"""Rectangular (u, v) grids, sampled fields, and finite-difference operators.

Fields are stored row-major with u as the slow index, so arrays over a
domain have shape (nu, nv) plus any trailing component axes.  Derivative
operators use centered stencils in the interior and one-sided stencils of
the same order at the boundary, so the stated order holds at every sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatch, GridTooSmall

__all__ = [
    "GridDomain",
    "ScalarField",
    "Vec4Field",
    "constant_field",
    "sample_scalar",
    "d_du",
    "d_dv",
    "d2_duu",
    "d2_dvv",
    "d2_dudv",
]


@dataclass(frozen=True)
class GridDomain:
    """Uniform sampling of the rectangle [u0, u0+(nu-1)hu] x [v0, v0+(nv-1)hv]."""

    u0: float
    v0: float
    hu: float
    hv: float
    nu: int
    nv: int

    def __post_init__(self):
        if not (self.hu > 0.0 and self.hv > 0.0):
            raise ValueError(f"grid steps must be positive, got hu={self.hu}, hv={self.hv}")
        if self.nu < 3 or self.nv < 3:
            raise GridTooSmall(f"need at least 3 samples per axis, got {self.nu}x{self.nv}")

    @property
    def shape(self):
        return (self.nu, self.nv)

    @property
    def u(self):
        return self.u0 + self.hu * np.arange(self.nu)

    @property
    def v(self):
        return self.v0 + self.hv * np.arange(self.nv)

    def mesh(self):
        """Return (U, V) coordinate arrays of shape (nu, nv)."""
        return np.meshgrid(self.u, self.v, indexing="ij")

    def refined(self, factor: int) -> "GridDomain":
        """Same extent with every step subdivided `factor` times."""
        if factor < 1:
            raise ValueError("refinement factor must be >= 1")
        return GridDomain(
            self.u0,
            self.v0,
            self.hu / factor,
            self.hv / factor,
            (self.nu - 1) * factor + 1,
            (self.nv - 1) * factor + 1,
        )

    def swapped(self) -> "GridDomain":
        return GridDomain(self.v0, self.u0, self.hv, self.hu, self.nv, self.nu)


def _validated(domain, values, trailing):
    arr = np.asarray(values, dtype=float)
    expected = (domain.nu, domain.nv) + trailing
    if arr.shape != expected:
        raise ValueError(f"values shape {arr.shape} does not match domain shape {expected}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field contains non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real-valued samples on a GridDomain."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _validated(self.domain, self.values, ()))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.domain, values)


@dataclass(frozen=True, eq=False)
class Vec4Field:
    """Vec4-valued samples on a GridDomain, shape (nu, nv, 4)."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _validated(self.domain, self.values, (4,)))

    def with_values(self, values) -> "Vec4Field":
        return Vec4Field(self.domain, values)


def constant_field(domain: GridDomain, value: float) -> ScalarField:
    return ScalarField(domain, np.full(domain.shape, float(value)))


def sample_scalar(domain: GridDomain, fn) -> ScalarField:
    """Sample fn(U, V) on the domain; fn must broadcast over arrays."""
    U, V = domain.mesh()
    return ScalarField(domain, np.broadcast_to(np.asarray(fn(U, V), float), domain.shape).copy())


def require_same_domain(*fields):
    dom = fields[0].domain
    for f in fields[1:]:
        if f.domain != dom:
            raise DomainMismatch("fields do not share one grid domain")
    return dom


# ---------------------------------------------------------------------------
# finite-difference stencils
# ---------------------------------------------------------------------------

def _fornberg_weights(x, x0, m):
    """Weights of the m-th derivative at x0 from samples at nodes x (Fornberg 1988)."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


_WEIGHTS_CACHE: dict = {}


def _stencil_weights(m: int, order: int):
    """Unit-spacing weights: (interior centered, low-edge list, high-edge list).

    Interior window has order+1 points; each of the order//2 edge layers uses a
    one-sided window of m+order points, which keeps the full order there.
    """
    key = (m, order)
    if key not in _WEIGHTS_CACHE:
        half = order // 2
        we = m + order
        interior = _fornberg_weights(np.arange(-half, half + 1, dtype=float), 0.0, m)
        nodes = np.arange(we, dtype=float)
        low = [_fornberg_weights(nodes, float(i), m) for i in range(half)]
        high = [_fornberg_weights(nodes - (we - 1), float(-i), m) for i in range(half)]
        _WEIGHTS_CACHE[key] = (interior, low, high)
    return _WEIGHTS_CACHE[key]


def _differentiate(values, h, axis, m, order):
    if order not in (2, 4):
        raise ValueError("stencil order must be 2 or 4")
    arr = np.moveaxis(np.asarray(values, float), axis, 0)
    n = arr.shape[0]
    half = order // 2
    we = m + order
    if n < max(order + 1, we):
        raise GridTooSmall(
            f"derivative of order {m} at accuracy {order} needs {max(order + 1, we)} "
            f"samples along the axis, got {n}"
        )
    interior, low, high = _stencil_weights(m, order)
    scale = h ** (-m)
    out = np.empty_like(arr)
    core = n - 2 * half
    acc = interior[0] * arr[0:core]
    for j in range(1, order + 1):
        acc = acc + interior[j] * arr[j : j + core]
    out[half : n - half] = acc
    for i in range(half):
        out[i] = np.tensordot(low[i], arr[:we], axes=(0, 0))
        out[n - 1 - i] = np.tensordot(high[i], arr[n - we :], axes=(0, 0))
    out *= scale
    return np.moveaxis(out, 0, axis)


def d_du(field, order: int = 2):
    """First derivative along u. Accepts ScalarField or Vec4Field."""
    return field.with_values(_differentiate(field.values, field.domain.hu, 0, 1, order))


def d_dv(field, order: int = 2):
    """First derivative along v."""
    return field.with_values(_differentiate(field.values, field.domain.hv, 1, 1, order))


def d2_duu(field, order: int = 2):
    """Second derivative along u."""
    return field.with_values(_differentiate(field.values, field.domain.hu, 0, 2, order))


def d2_dvv(field, order: int = 2):
    """Second derivative along v."""
    return field.with_values(_differentiate(field.values, field.domain.hv, 1, 2, order))


def d2_dudv(field, order: int = 2):
    """Mixed partial, composed as d_du(d_dv(field))."""
    return d_du(d_dv(field, order), order)
