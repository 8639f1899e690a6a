"""Relaxed splitting solvers with convergence-rate certification.

Modules
-------
prox, catalog
    Function and set abstractions and closed-form instances.
splitting
    Relaxed PRS and forward-backward splitting with inequality monitoring.
feasibility
    Squared-distance PRS, MAP, product-space methods and gap diagnostics.
admm
    Relaxed ADMM with dual references and rate constants.
rates
    Rate constants, envelopes, fitting and certificates.
problems, experiment, cli
    Instance generators, the LP self-dual embedding and the experiment runner.
"""

from .admm import AdmmProblem, admm_rate_constant, admm_step, dual_constants, run_admm
from .catalog import catalog_make
from .feasibility import (
    FeasibilityProblem,
    feas_contraction_constant,
    feas_prs_step,
    map_infeasible_diagnostics,
    map_run,
    multi_set_step,
    product_space_mu,
    subspace_mu_bound,
)
from .prox import ConvexSet, ProxFunction, dist_sq_prox_coeffs, extract_subgradient, prox_eval, refl_eval
from .rates import (
    RateCertificate,
    RateEnvelope,
    certify,
    check_summable_rates,
    fit_empirical_rate,
    fpr_bounds,
    paper_constants,
    prs_linear_constant,
    theorem3_bound,
)
from .schedules import RelaxationSchedule, SolverConfig, StepsizePair
from .splitting import fbs_step, prs_step, run_fbs, run_prs
from .trace import IterationTrace, best_iterate, ergodic_average

__version__ = "0.1.0"
