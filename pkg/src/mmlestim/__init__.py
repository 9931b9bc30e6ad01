"""Penalised (Wallace-Freeman) M-estimation with maximum-likelihood
baselines, first-order bias machinery, codelength evaluation, and a Monte
Carlo verification harness."""

from .bias import (
    CumulantSet,
    compute_cumulants,
    cox_snell_bias,
    cox_snell_bias_sum_form,
    wf_bias,
)
from .codelength import (
    CodelengthReport,
    bic_gap_profile,
    kappa_const,
    kappa_is_exact,
    message_length,
    optimal_cell_volume,
)
from .estimators import (
    EstimateResult,
    asymptotic_cov,
    fit_mle,
    fit_wf,
    predicted_shift,
)
from .models import (
    DataSet,
    ModelSpec,
    ParamPoint,
    get_model,
    load_dataset,
    model_names,
    save_dataset,
    weibull_bias_ratio,
    weibull_mle_bias_closed,
    weibull_mml_bias_closed,
    weibull_sample,
)
from .numerics import (
    RngStream,
    central_grad,
    central_jacobian,
    expect_quadrature,
    laguerre_rule,
    log_det_spd,
    solve_spd,
)
from .priors import (
    PriorSpec,
    get_prior,
    penalty,
    penalty_gradient_a,
)
from .simulate import (
    ShiftScalingResult,
    SimConfig,
    SimReport,
    SweepResult,
    consistency_sweep,
    run_sim,
    shift_scaling_check,
)
from .verify import CRITERION_NAMES, CriterionResult, run_all, run_criterion

__version__ = "0.1.0"

__all__ = [
    "CodelengthReport",
    "CRITERION_NAMES",
    "CriterionResult",
    "CumulantSet",
    "DataSet",
    "EstimateResult",
    "ModelSpec",
    "ParamPoint",
    "PriorSpec",
    "RngStream",
    "ShiftScalingResult",
    "SimConfig",
    "SimReport",
    "SweepResult",
    "asymptotic_cov",
    "bic_gap_profile",
    "central_grad",
    "central_jacobian",
    "compute_cumulants",
    "consistency_sweep",
    "cox_snell_bias",
    "cox_snell_bias_sum_form",
    "expect_quadrature",
    "fit_mle",
    "fit_wf",
    "get_model",
    "get_prior",
    "kappa_const",
    "kappa_is_exact",
    "laguerre_rule",
    "load_dataset",
    "log_det_spd",
    "message_length",
    "model_names",
    "optimal_cell_volume",
    "penalty",
    "penalty_gradient_a",
    "predicted_shift",
    "run_all",
    "run_criterion",
    "run_sim",
    "save_dataset",
    "shift_scaling_check",
    "solve_spd",
    "weibull_bias_ratio",
    "weibull_mle_bias_closed",
    "weibull_mml_bias_closed",
    "weibull_sample",
    "wf_bias",
    "__version__",
]
