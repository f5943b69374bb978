"""Polytopic matrix factorization.

Factor ``Y = H S`` where every column of ``S`` lies in a known polytope,
together with the geometry the method rests on: polytope representations and
polars, maximum volume inscribed ellipsoids, identifiability and
sufficient-scattering certificates, synthetic data generators and recovery
metrics.
"""
from .datagen import (GroundTruth, InflationParams, add_noise, generate_inflated_mvie,
                      generate_mixing, generate_polar_domain, make_ground_truth,
                      pad_with_interior, snr_db)
from .factorizer import (FactorizationProblem, FactorizationResult, SolverAborted,
                         detmax_objective, evaluate_lagrangian, factorize, recovery_preset)
from .geometry import (IdentifiabilityReport, ScatterReport, check_identifiable,
                       check_scattered, is_signed_permutation, vertex_automorphisms)
from .io import load_polytope, read_matrix, save_polytope, write_matrix
from .metrics import FactorMatch, SirScore, match_factors, sir
from .mvie import Ellipsoid, JohnReport, mvie_closed_form, mvie_of, mvie_solve, verify_john
from .polytope import (Box, FeatureSpec, HalfspaceForm, L1Ball, Polytope, SimplexCap,
                       Special, VertexForm, contains, extreme_points, halfspaces_to_vertices,
                       make_special, pex, polar, vertices_to_halfspaces)
from .projection import (Projector, make_projector, project_binf, project_featurespec,
                         project_l1)

__version__ = "0.1.0"

__all__ = [
    "Box", "Ellipsoid", "FactorMatch", "FactorizationProblem", "FactorizationResult",
    "FeatureSpec", "GroundTruth", "HalfspaceForm", "IdentifiabilityReport",
    "InflationParams", "JohnReport", "L1Ball", "Polytope", "Projector", "ScatterReport",
    "SimplexCap", "SirScore", "SolverAborted", "Special", "VertexForm", "add_noise",
    "check_identifiable", "check_scattered", "contains", "detmax_objective",
    "evaluate_lagrangian", "extreme_points", "factorize", "generate_inflated_mvie",
    "generate_mixing", "generate_polar_domain", "halfspaces_to_vertices",
    "is_signed_permutation", "load_polytope", "make_ground_truth", "make_projector",
    "make_special", "match_factors", "mvie_closed_form", "mvie_of", "mvie_solve",
    "pad_with_interior", "pex", "polar", "project_binf", "project_featurespec",
    "project_l1", "read_matrix", "recovery_preset", "save_polytope", "sir", "snr_db",
    "verify_john", "vertex_automorphisms", "vertices_to_halfspaces", "write_matrix",
]
