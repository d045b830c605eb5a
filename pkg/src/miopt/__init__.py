"""Verification-first toolkit for multiobjective interval-valued
optimization problems (MIOPs) and the associated noncooperative games.

Everything is organized around checkable certificates: solution
concepts are decided against explicit finite candidate grids,
subdifferentials are finitely generated polytopes with exactness
tracking, and every KKT-type condition reduces to a min-norm
computation whose multipliers and witnesses are reported.
"""

from .certificates import (BCQReport, CertificateError, CertificateReport,
                           GenConvexReport, MinNormResult, ModKKTOutcome,
                           SearchOutcome, SequenceReport, SufficiencyReport,
                           approx_kkt_sequence, bcq_check, eps_kkt_thm_4_1,
                           gen_convexity_check, hull_distance, kkt_check,
                           min_norm_over_multipliers, modified_eps_kkt,
                           sufficiency_thm_4_3)
from .evp import (DescentError, DescentTrace, EvpCertificate, PremiseError,
                  QuasiExistenceReport, descent_eps_minimal, evp_descent,
                  evp_descent_vector, quasi_existence)
from .expr import (Abs, Const, Expr, ExprError, IVFunction, Max, Min, Polytope,
                   Power, Product, Scale, Sum, Var, clarke_subdiff, eval_expr,
                   gradient, is_smooth, linear_combination, parse_expr,
                   to_string, weak_gen_gradient)
from .game import (Game, GameError, Player, find_deviation, fix_opponents,
                   game_kkt, game_sufficiency, is_w_eps_ne, is_w_eps_ne_direct,
                   is_w_eps_qne, is_w_eps_qne_direct, profile_feasible)
from .grid import (GridError, GridSpec, Prop21Report, Thm33Verdict, ValueTable,
                   check_prop_2_1, check_thm_3_3, default_points_per_dim,
                   eps_minimal_mask, feasible_grid, grid_points,
                   quasi_minimal_mask, spec_for, value_table)
from .interval import (Interval, ZERO, add, cw_leq, cw_lt, gh_diff, hausdorff,
                       norm, scalar_mul)
from .io import SchemaError, load, problem_from_dict, game_from_dict, save, serialize
from .problem import (DEFAULT_TOLERANCES, MIOProblem, Tolerances, active_set,
                      as_epsilon, feasible, is_weak_eps_minimal,
                      is_weak_eps_quasi_minimal, is_weak_minimal,
                      restrict_to_ball)

__version__ = "0.1.0"
