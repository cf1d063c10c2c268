"""Geometric-measure experiments: polynomial variety measures, distances
to scaling-invariant cones, walk-on-spheres harmonic measure, and
two-measure density diagnostics.

The subpackages are usable directly; this module re-exports the most
common entry points.
"""

from .cone import (
    ConeDistanceResult,
    ConeSpec,
    brute_force_flat_distance,
    cone_distance,
    detect_degree,
    flatness_theta,
    growth_exponent,
    make_cone,
    scale_scan,
)
from .measure import (
    Ball,
    DiscreteMeasure,
    SolverError,
    ball_mass,
    bl_bruteforce,
    coarsen,
    dimension_slope,
    doubling_profile,
    f_ball,
    f_ball_detailed,
    f_r,
    measure_from_csv,
    measure_to_csv,
    translate_dilate,
)
from .polycore import (
    ConstantEllipticMatrix,
    Polynomial,
    apply_operator,
    check_ellipticity,
    harmonic_basis,
    homogeneous_parts,
    identity_matrix,
    parse_polynomial,
    symmetrize_sqrt,
)
from .polymeasure import (
    BumpSpec,
    PolyMeasureSpec,
    linear_pushforward,
    sample_polymeasure,
    scaling_report,
    weak_pairing,
)
from .stochastic import (
    BoundaryQuery,
    ImplicitDomain,
    WalkConfig,
    ball_domain,
    ball_query,
    blowup_experiment,
    elliptic_reduce,
    halfspace_domain,
    slit_domain,
    slit_side_query,
    superlevel_domain,
    upper_halfplane,
    wos_boundary_hits,
    wos_harmonic_measure,
)
from .weights import (
    WeightPanel,
    a_inf_quantity,
    bmo_oscillation,
    hru_delta_recipe,
    hru_moduli,
    korey_check,
    va_inf_scan,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "BoundaryQuery",
    "BumpSpec",
    "ConeDistanceResult",
    "ConeSpec",
    "ConstantEllipticMatrix",
    "DiscreteMeasure",
    "ImplicitDomain",
    "PolyMeasureSpec",
    "Polynomial",
    "SolverError",
    "WalkConfig",
    "WeightPanel",
    "a_inf_quantity",
    "apply_operator",
    "ball_domain",
    "ball_mass",
    "ball_query",
    "bl_bruteforce",
    "blowup_experiment",
    "bmo_oscillation",
    "brute_force_flat_distance",
    "check_ellipticity",
    "coarsen",
    "cone_distance",
    "detect_degree",
    "dimension_slope",
    "doubling_profile",
    "elliptic_reduce",
    "f_ball",
    "f_ball_detailed",
    "f_r",
    "flatness_theta",
    "growth_exponent",
    "halfspace_domain",
    "harmonic_basis",
    "homogeneous_parts",
    "hru_delta_recipe",
    "hru_moduli",
    "identity_matrix",
    "korey_check",
    "linear_pushforward",
    "make_cone",
    "measure_from_csv",
    "measure_to_csv",
    "parse_polynomial",
    "sample_polymeasure",
    "scale_scan",
    "scaling_report",
    "slit_domain",
    "slit_side_query",
    "superlevel_domain",
    "symmetrize_sqrt",
    "translate_dilate",
    "upper_halfplane",
    "va_inf_scan",
    "weak_pairing",
    "wos_boundary_hits",
    "wos_harmonic_measure",
]
