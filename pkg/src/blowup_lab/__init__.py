"""Numerical laboratory for a weighted Lyapunov blowup argument in a
thermal boundary-layer model: grids, an explicit heat-kernel lift, a
piecewise weight family, an adaptive IMEX layer solver, Lyapunov
functional audits, and a scenario CLI.
"""

from .grid import (Field, Grid, build_grid, cumulative_integral,
                   first_derivative, integrate, integrate_between,
                   second_derivative)
from .lift import (LiftParams, erf, erfc, phi, phi_derivative_fields,
                   phi_derivatives, phi_field, solve_lift_reference,
                   verify_lift_properties)
from .weight import (ConstraintReport, SearchFailure, WeightSpec,
                     build_weight, choose_eta, derive_mu_lambda, eval_weight,
                     eval_weight_arrays, search_parameters,
                     tail_integral_from, validate_constraints,
                     weight_l1_norm)
from .solver import (LayerState, ScenarioConfig, Trace, axis_restriction_run,
                     energy_audit, init_state, lifted_field, run,
                     sign_audits, step)
from .lyapunov import (LyapunovConstants, compare_trajectory, decompose_rhs,
                       forcing_field, functional, inequality_audit,
                       lower_bound, predict_blowup_time, psi, psi_integral,
                       threshold_g0)
from .config import (ConfigError, ParsedConfig, RunManifest, config_digest,
                     parse_config, parse_config_text, read_trace_csv,
                     run_scenario, write_audit_csv, write_trace_csv)
from .reports import AuditEntry, AuditReport

__version__ = "0.1.0"
