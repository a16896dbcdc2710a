"""Split-form continuous summation-by-parts discretizations and Riccati error envelopes."""

from csbp.bounds import bound_constants, riccati_coefficients, term_inequality_report
from csbp.discretization import rk4_integrate, split_rhs, truncation_error
from csbp.fluxes import burgers_model, get_model, make_exact, symmetric2_model
from csbp.riccati import blow_up_time, classify, envelope_check, evaluate, numeric_oracle
from csbp.sbp import build_operator, build_reference_element, two_norm
from csbp.studies import (
    StudyConfig,
    fit_order,
    run_convergence_study,
    run_scaling_study,
    run_simulation,
)

__all__ = [
    "StudyConfig",
    "blow_up_time",
    "bound_constants",
    "build_operator",
    "build_reference_element",
    "burgers_model",
    "classify",
    "envelope_check",
    "evaluate",
    "fit_order",
    "get_model",
    "make_exact",
    "numeric_oracle",
    "riccati_coefficients",
    "rk4_integrate",
    "run_convergence_study",
    "run_scaling_study",
    "run_simulation",
    "split_rhs",
    "symmetric2_model",
    "term_inequality_report",
    "truncation_error",
    "two_norm",
]
