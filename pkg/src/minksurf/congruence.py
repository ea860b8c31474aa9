"""Congruence test: are two patches equal up to a Minkowski motion?

Alignment uses only the origin frames, exactly as the uniqueness statements
fix their initial data, so the distance directly probes uniqueness rather
than performing a best-fit registration.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainMismatch, MissingFrames
from .minkowski import Frame, Motion, motion_from_frames
from .surfaces import SurfacePatch, apply_motion

__all__ = ["congruence_distance"]


def congruence_distance(patch1: SurfacePatch, patch2: SurfacePatch, gram_tol: float = 1e-8) -> float:
    """Max Euclidean 4-norm of z1 - M(z2) after aligning origin frames.

    M maps patch2's origin sample and frame onto patch1's.  The Euclidean
    norm is used purely as an unambiguous zero-detector for "numerically
    equal points"; no motion-invariance is claimed for it.
    """
    if patch1.domain != patch2.domain:
        raise DomainMismatch("congruence test needs identical grid domains")
    if patch1.frames is None or patch2.frames is None:
        raise MissingFrames("both patches need an attached frame field at the origin sample")
    p2 = patch2.z.values[0, 0]
    p1 = patch1.z.values[0, 0]
    if np.array_equal(p1, p2) and np.array_equal(patch1.frames[0, 0], patch2.frames[0, 0]):
        # identical origin data: the aligning motion is the identity, exactly
        motion = Motion.identity()
    else:
        motion = motion_from_frames(
            p2, Frame(patch2.frames[0, 0]), p1, Frame(patch1.frames[0, 0]), gram_tol
        )
    moved = apply_motion(motion, patch2)
    diff = patch1.z.values - moved.z.values
    return float(np.max(np.linalg.norm(diff, axis=-1)))
