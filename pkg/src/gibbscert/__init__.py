"""gibbscert: convergence-bound certificates for hierarchical gamma Gibbs samplers.

Computes the rate constants and total-variation bounds for the depth-3 and
depth-4 hierarchical gamma Gibbs chains, and verifies every ingredient
(pathwise inequalities, drift conditions, coupling overlap probabilities) by
seeded, reproducible Monte Carlo.
"""
from .bounds import BoundSpec, PiFunctionals, estimate_pi_functionals, evaluate_bound, minimal_t
from .chain import (
    GammaBlock,
    ModelParams,
    ParamError,
    draw_block,
    lift_2d_to_4d,
    log_equilibrium_density,
    step_full,
    step_n3,
    step_reduced,
    validate_params,
)
from .constants import ConstantsTable, compute_constants, compute_constants_n3, compute_constants_n4, ratio_expectation_closed_form
from .coupling import CouplingOutcome, EnvelopeInit, envelope_init, maximal_gamma_couple, one_shot_step, uniform_coupled_step
from .gamma import GammaParams, check_density_envelope, gamma_pdf_cdf, gamma_tv, median_probabilities, sample_gamma
from .ratio_drift import (
    CoupledRecord,
    PathwiseViolation,
    check_pathwise,
    compute_omegas,
    compute_q,
    compute_r_hat,
    drift_quantities,
    init_record,
    ratio_step,
)
from .rng import RngStream
from .verify import (
    McConfig,
    McReport,
    estimate_tv_by_coupling,
    run_replicas,
    verify_auxiliary_math,
    verify_drift_mc,
    verify_inequality_suite,
    verify_suite,
)

__version__ = "0.1.0"
