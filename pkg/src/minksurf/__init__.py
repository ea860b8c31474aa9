"""Timelike-surface invariants and Bonnet-type reconstruction in Minkowski 4-space."""

from . import catalog, congruence, errors, grid, invariants, io, minkowski, reconstruction, surfaces
from .errors import MinksurfError
from .grid import GridDomain, ScalarField, Vec4Field, d2_dudv, d2_duu, d2_dvv, d_du, d_dv
from .invariants import (
    AnalyticInvariants,
    DerivedCoefficients,
    InvariantSet,
    ResidualReport,
    SurfaceType,
    classify,
    compare_refinement,
    derived_coefficients,
    integrability_residuals,
    swap_parameters,
    theorem_conditions_residuals,
)
from .minkowski import (
    CausalClass,
    Frame,
    Motion,
    causal_class,
    frame_gram_residual,
    minkowski_dot,
    motion_from_frames,
    reorthonormalize,
    standard_frame,
)
from .congruence import congruence_distance
from .reconstruction import (
    CoefficientMatrices,
    FrameFieldPatch,
    ReconstructionConfig,
    build_coefficient_matrices,
    flatness_residual,
    integrate_frame,
    integrate_position,
    reconstruct,
)
from .surfaces import (
    Extraction,
    SurfacePatch,
    apply_motion,
    check_isotropic,
    detect_degeneracies,
    extract_invariants,
    geometric_frame,
)

__version__ = "0.1.0"
