"""Signature-(3,1) linear algebra: inner product, causal classes, frames, motions.

Convention fixed throughout the package: coordinates (x1, x2, x3, x4) with the
time coordinate last, inner product x1*y1 + x2*y2 + x3*y3 - x4*y4.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrame

__all__ = [
    "METRIC_DIAG",
    "FRAME_GRAM",
    "CausalClass",
    "Frame",
    "Motion",
    "minkowski_dot",
    "causal_class",
    "gram_functions",
    "frame_gram_residual",
    "reorthonormalize",
    "motion_from_frames",
    "standard_frame",
]

METRIC_DIAG = np.array([1.0, 1.0, 1.0, -1.0])

# Target Gram matrix of a pseudo-orthonormal frame with legs ordered
# (x, y, n1, n2): null tangent pair paired to -1, orthonormal normals.
FRAME_GRAM = np.array(
    [
        [0.0, -1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)


def minkowski_dot(a, b):
    """Indefinite inner product; broadcasts over leading axes."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return np.einsum("...i,...i->...", a * METRIC_DIAG, b)


class CausalClass(enum.Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    ZERO = "zero"


def causal_class(a, tol: float = 1e-9) -> CausalClass:
    """Causal character of a vector; Zero takes precedence over Lightlike."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    a = np.asarray(a, float)
    if np.max(np.abs(a)) < tol:
        return CausalClass.ZERO
    q = minkowski_dot(a, a)
    if abs(q) < tol:
        return CausalClass.LIGHTLIKE
    return CausalClass.SPACELIKE if q > 0 else CausalClass.TIMELIKE


@dataclass(frozen=True, eq=False)
class Frame:
    """Pseudo-orthonormal frame; legs stacked as rows (x, y, n1, n2)."""

    legs: np.ndarray

    def __post_init__(self):
        legs = np.asarray(self.legs, float)
        if legs.shape != (4, 4):
            raise ValueError(f"frame legs must be a 4x4 array, got shape {legs.shape}")
        if not np.all(np.isfinite(legs)):
            raise ValueError("frame legs contain non-finite values")
        object.__setattr__(self, "legs", legs)

    @classmethod
    def from_legs(cls, x, y, n1, n2) -> "Frame":
        return cls(np.stack([x, y, n1, n2]).astype(float))

    @property
    def x(self):
        return self.legs[0]

    @property
    def y(self):
        return self.legs[1]

    @property
    def n1(self):
        return self.legs[2]

    @property
    def n2(self):
        return self.legs[3]


def standard_frame() -> Frame:
    """Exact pseudo-orthonormal frame aligned with the coordinate axes."""
    return Frame.from_legs(
        [1.0, 0.0, 0.0, 1.0],
        [-0.5, 0.0, 0.0, 0.5],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    )


def gram_deviation(legs):
    """Gram matrix of the legs minus its pseudo-orthonormal target; batched."""
    legs = np.asarray(legs, float)
    gram = np.einsum("...ik,...jk->...ij", legs * METRIC_DIAG, legs)
    return gram - FRAME_GRAM


_H_INDEX = [(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def gram_functions(frame: Frame) -> np.ndarray:
    """The ten scalar frame conditions, in the order
    <x,x>, <y,y>, <n1,n1>-1, <n2,n2>-1, <x,y>+1, <x,n1>, <x,n2>, <y,n1>, <y,n2>, <n1,n2>.
    """
    dev = gram_deviation(frame.legs)
    return np.array([dev[i, j] for i, j in _H_INDEX])


def frame_gram_residual(frame: Frame) -> float:
    """Max absolute value over the ten frame conditions."""
    return float(np.max(np.abs(gram_functions(frame))))


def legs_gram_residual(legs) -> float:
    """Max Gram deviation over a batch of frames (any leading shape)."""
    return float(np.max(np.abs(gram_deviation(legs))))


def reorthonormalize(frame: Frame) -> Frame:
    """Project a slightly drifted frame back onto the pseudo-orthonormal set.

    Sweep: normalize n1, orthonormalize n2 against it, project x and y off the
    normal plane, then mix and rescale the tangent pair so that
    <x,x> = <y,y> = 0 and <x,y> = -1.  Fixed point on exact frames.
    """
    return Frame(reorthonormalize_legs(frame.legs))


def reorthonormalize_legs(legs) -> np.ndarray:
    """Batched re-projection; legs has shape (..., 4, 4)."""
    legs = np.asarray(legs, float)
    x = legs[..., 0, :]
    y = legs[..., 1, :]
    n1 = legs[..., 2, :]
    n2 = legs[..., 3, :]

    nn1 = minkowski_dot(n1, n1)
    if np.any(nn1 < 0.25):
        raise DegenerateFrame("n1 is far from unit spacelike")
    n1 = n1 / np.sqrt(nn1)[..., None]
    n2 = n2 - minkowski_dot(n2, n1)[..., None] * n1
    nn2 = minkowski_dot(n2, n2)
    if np.any(nn2 < 0.01):
        raise DegenerateFrame("normal pair is near-collinear")
    n2 = n2 / np.sqrt(nn2)[..., None]

    x = x - minkowski_dot(x, n1)[..., None] * n1 - minkowski_dot(x, n2)[..., None] * n2
    y = y - minkowski_dot(y, n1)[..., None] * n1 - minkowski_dot(y, n2)[..., None] * n2

    a = minkowski_dot(x, x)
    b = minkowski_dot(y, y)
    c = minkowski_dot(x, y)
    if np.any(c > -0.1):
        raise DegenerateFrame("lightlike pair has |<x,y>| below 0.1 or wrong sign")
    disc = c * c - a * b
    if np.any(disc <= 0.0):
        raise DegenerateFrame("tangent pair cannot be renullified")
    # Roots of the self-product quadratics closest to zero, so exact frames map
    # to themselves and the correction is continuous.
    den = (-c + np.sqrt(disc))[..., None]
    xn = x + (a[..., None] / den) * y
    yn = y + (b[..., None] / den) * x
    cn = minkowski_dot(xn, yn)
    s = np.sqrt(-1.0 / cn)[..., None]
    xn = xn * s
    yn = yn * s
    return np.stack([xn, yn, n1, n2], axis=-2)


@dataclass(frozen=True, eq=False)
class Motion:
    """Affine map z -> linear @ z + translation whose linear part is a Lorentz map."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = np.asarray(self.linear, float)
        tr = np.asarray(self.translation, float)
        if lin.shape != (4, 4) or tr.shape != (4,):
            raise ValueError("motion needs a 4x4 linear part and a 4-vector translation")
        if not (np.all(np.isfinite(lin)) and np.all(np.isfinite(tr))):
            raise ValueError("motion contains non-finite values")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "Motion":
        return cls(np.eye(4), np.zeros(4))

    def metric_defect(self) -> float:
        """Max deviation of L^T eta L from eta."""
        eta = np.diag(METRIC_DIAG)
        return float(np.max(np.abs(self.linear.T @ eta @ self.linear - eta)))

    def apply_points(self, z):
        z = np.asarray(z, float)
        return z @ self.linear.T + self.translation

    def apply_vectors(self, w):
        return np.asarray(w, float) @ self.linear.T


def motion_from_frames(p, frame_p: Frame, q, frame_q: Frame, gram_tol: float = 1e-8) -> Motion:
    """Motion taking (p, frame_p) to (q, frame_q) leg by leg."""
    rp = frame_gram_residual(frame_p)
    rq = frame_gram_residual(frame_q)
    if rp >= gram_tol or rq >= gram_tol:
        raise DegenerateFrame(
            f"frames must satisfy the Gram conditions within {gram_tol}, "
            f"got residuals {rp:.3e} and {rq:.3e}"
        )
    # L maps each leg of frame_p to the matching leg of frame_q:
    # L @ legs_p[i] = legs_q[i], i.e. L = (legs_p^-1 legs_q)^T.
    linear = np.linalg.solve(frame_p.legs, frame_q.legs).T
    translation = np.asarray(q, float) - linear @ np.asarray(p, float)
    return Motion(linear, translation)
