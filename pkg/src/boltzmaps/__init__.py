"""Boltzmann planar maps through labelled mobiles.

Sampling of face-weighted random planar maps via the four-type tree
encoding, criticality solving for weight sequences, lazily explored local
limits, and quenched neighbourhood-frequency experiments.
"""

from .map_core import (BadRoot, Disconnected, MapError, NonPlanar,
                       NotInvolution, PlanarMap, RootKind, build_map,
                       distances_from_root, face_degrees, parse_map,
                       serialize_map, vertex_degrees)
from .local_topology import BallCode, ball, ball_code, canonical_code, d_loc
from .weights import (DomainError, FiniteWeights, GeometricWeights,
                      NoSolution, NonConvergence, NumericalInstability,
                      SingularPoint, Status, WeightError, WeightModel,
                      criticality_matrix, criticality_residual, critical_scale,
                      eval_f, eval_f_derivs, model_from_dict, model_from_json,
                      model_to_dict, quadrangulation_model,
                      regular_criticality_check, solve_system, spectral_radius,
                      vertex_weight_params, vertex_weighted_model)
from .mobile import (GAMMAS, GAMMA_EDGES, GAMMA_FACES, GAMMA_VERTICES,
                     EmptyEvent, GammaVector, MarkedMobile, Mobile,
                     MobileError, SizeBudgetExceeded, Timeout,
                     TruncationTooSmall, UnsolvedModel, assign_labels,
                     bridge_count, decorate, detect_lattice, enumerate_bridges,
                     fringe, FRINGE_PLACEHOLDER, mean_offspring_matrix,
                     parse_mobile, sample_bridge, sample_conditioned,
                     sample_gamma_sizes, sample_killed_tree,
                     sample_killed_type_counts, sample_offspring, sample_tree,
                     serialize_mobile, size_distribution)
from .bdfg import (MalformedMobile, PsiResult, TypeMismatch, assemble_T0,
                   conditioned_class_weights, psi, psi_full,
                   sample_boltzmann_map, sample_unconditioned_map)
from .limit import (ExplorationBudget, NotCritical, SpineMobile,
                    eta_distribution, extend_spine, limit_ball,
                    sample_biased_block, sample_eta, sample_limit_ball,
                    stationary_type_frequencies)
from .census import bijection_report, enumerate_pointed_rooted_maps

__version__ = "0.1.0"
