"""Numerical bounds for holomorphically invariant functions and metrics."""

from .discs import AnalyticDisc, disc_from_samples, holder_half_norm, winding_number
from .domains import (
    Annulus, Ball, DefiningFunction, Domain, Ellipsoid, HalfSpaceCap, Polydisc, Product,
    ReinhardtDAlpha, UnitDisc, boundary_grid, domain_from_config, levi_form, outward_normal,
    signed_distance, strong_convexity_margin,
)
from .errors import (
    BudgetExhausted, DegenerateGradient, DegeneratePair, Infeasible, InvariantMetricsError,
    LiftFailure, MultipleRoots, NoCauchyTrend, NoConvergence, NoRoot, NotBoundaryAttached,
    NotStronglyConvexAt, PoleHit, UnsupportedDomain,
)
from .geodesics import (
    LeftInverse, StationaryCertificate, ball_geodesic, certify_stationary,
    geodesic_perturbation_gap, left_inverse,
)
from .harness import ExperimentConfig, ExperimentReport, run_experiment
from .hyperbolic import (
    MoebiusMap, annulus_kobayashi, annulus_metric, ball_automorphism, ball_distance,
    ball_metric, poincare_distance, poincare_metric, scaling_automorphism,
)
from .metrics import (
    Budget, caratheodory_lower, caratheodory_reiffen_lower, closed_form, compare,
    kobayashi_distance_upper, kobayashi_royden_upper, lempert_upper,
)
from .scaling import (
    ScalingSchedule, blended_family, blended_function, c2_distance, chi, lbk_disc,
    normal_form_from_remainder, normalize_at_boundary_point, scaled_defining,
    transport_geodesic,
)

__all__ = [
    "AnalyticDisc", "Annulus", "annulus_kobayashi", "annulus_metric", "Ball",
    "ball_automorphism", "ball_distance", "ball_geodesic", "ball_metric", "blended_family",
    "blended_function", "boundary_grid", "Budget", "BudgetExhausted", "c2_distance",
    "caratheodory_lower", "caratheodory_reiffen_lower", "certify_stationary", "chi",
    "closed_form", "compare", "DefiningFunction", "DegenerateGradient", "DegeneratePair",
    "disc_from_samples", "Domain", "domain_from_config", "Ellipsoid", "ExperimentConfig",
    "ExperimentReport", "geodesic_perturbation_gap", "HalfSpaceCap", "holder_half_norm",
    "Infeasible", "InvariantMetricsError", "kobayashi_distance_upper",
    "kobayashi_royden_upper", "lbk_disc", "left_inverse", "LeftInverse", "lempert_upper",
    "levi_form", "LiftFailure", "MoebiusMap", "MultipleRoots", "NoCauchyTrend",
    "NoConvergence", "normal_form_from_remainder", "normalize_at_boundary_point", "NoRoot",
    "NotBoundaryAttached", "NotStronglyConvexAt", "outward_normal", "poincare_distance",
    "poincare_metric", "PoleHit", "Polydisc", "Product", "ReinhardtDAlpha",
    "run_experiment", "scaled_defining", "scaling_automorphism", "ScalingSchedule",
    "signed_distance", "StationaryCertificate", "strong_convexity_margin",
    "transport_geodesic", "UnitDisc", "UnsupportedDomain", "winding_number",
]
