"""Maximum-likelihood and penalised (Wallace-Freeman) fitting.

Both fits run damped Newton on the mean objective

    Q_n(theta) = -(1/n) sum_i log p(x_i | theta) [+ (1/n) pen(theta)]

in natural coordinates, with positivity enforced by step halving rather than
reparameterization: the Fisher and penalty formulas are stated in natural
coordinates, and a reparameterization would move the finite-n penalised
optimum. The penalty weight is fixed at 1/n; there is no tuning knob.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, NoConvergence, NotPositiveDefinite
from .models import DataSet, ModelSpec, ParamPoint, _values
from .numerics import central_jacobian, inv_spd, solve_spd
from .priors import PriorSpec, penalty, penalty_gradient_a

DEFAULT_TOL = 1e-10
MAX_ITER = 200

# Accept a step when the objective does not increase beyond float noise; a
# strict decrease test stalls in ~1e-16 churn near the optimum.
LINESEARCH_SLACK = 1e-12
MAX_HALVINGS = 60


@dataclass
class EstimateResult:
    """Fitted point with convergence diagnostics.

    observed_info is the sample-level negative log-likelihood Hessian at the
    optimum (penalty excluded for both estimators, so the two fits report
    commensurable curvatures). Fit functions raise NoConvergence instead of
    returning converged=False, so any returned result satisfies
    residual <= tolerance.
    """

    theta_hat: ParamPoint
    objective: float
    residual: float
    iterations: int
    converged: bool
    observed_info: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _admissible(x, positivity):
    if not np.all(np.isfinite(x)):
        return False
    for i, flag in enumerate(positivity):
        if flag and not x[i] > 0.0:
            return False
    return True


def _newton(value_grad_hess, x0, positivity, fisher_fallback, tol, max_iter):
    """Damped Newton with backtracking halving and a Fisher-scoring fallback.

    Returns (x, f, residual, iterations, trace). The convergence test runs
    before each step, so an already-stationary start returns after zero
    iterations with the start point untouched.
    """
    x = np.asarray(x0, dtype=float).copy()
    if not _admissible(x, positivity):
        raise DomainError(f"fit: inadmissible starting point {x}")
    f, g, hess = value_grad_hess(x)
    if not np.isfinite(f):
        raise DomainError(f"fit: objective not finite at starting point {x}")
    trace = [f]
    for iteration in range(max_iter):
        residual = float(np.abs(g).max())
        if residual <= tol:
            return x, f, residual, iteration, trace
        step = None
        for candidate_hess in (hess, fisher_fallback(x)):
            try:
                step = solve_spd(candidate_hess, -g)
                break
            except NotPositiveDefinite:
                continue
        if step is None:
            raise NotPositiveDefinite(
                f"fit: no positive definite curvature at iterate {x}"
            )
        scale = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            candidate = x + scale * step
            if _admissible(candidate, positivity):
                f_new, g_new, hess_new = value_grad_hess(candidate)
                if np.isfinite(f_new) and f_new <= f + LINESEARCH_SLACK * (1.0 + abs(f)):
                    x, f, g, hess = candidate, f_new, g_new, hess_new
                    trace.append(f)
                    accepted = True
                    break
            scale *= 0.5
        if not accepted:
            raise NoConvergence(
                f"fit: line search stalled at residual {residual:.3e} "
                f"(iteration {iteration})"
            )
    raise NoConvergence(
        f"fit: residual {float(np.abs(g).max()):.3e} after {max_iter} iterations"
    )


def _run_fits(value_grad_hess, starts, positivity, fisher_fallback, tol, max_iter):
    """Run Newton from each start; keep the smallest objective.

    Distinct optima (beyond 1e-6 relative separation) are counted in the
    diagnostics so flat or multimodal objectives are visible to the caller.
    """
    best = None
    optima = []
    for start in starts:
        x, f, residual, iterations, trace = _newton(
            value_grad_hess, start, positivity, fisher_fallback, tol, max_iter
        )
        optima.append(x)
        if best is None or f < best[1]:
            best = (x, f, residual, iterations, trace)
    distinct = []
    for x in optima:
        if not any(
            np.all(np.abs(x - y) <= 1e-6 * (1.0 + np.abs(y))) for y in distinct
        ):
            distinct.append(x)
    return best, len(optima), len(distinct)


def _validate_fit_inputs(model: ModelSpec, data: DataSet):
    if data.n < model.dim + 1:
        raise DomainError(
            f"fit: need at least {model.dim + 1} observations, got {data.n}"
        )


def _starts(model: ModelSpec, data: DataSet, init, inits):
    # The init rule doubles as the degeneracy gate (all-equal observations and
    # the like), so run it even when an explicit start overrides its value:
    # otherwise a degenerate sample sends Newton to a runaway pseudo-optimum
    # whose gradient underflows the tolerance.
    default = model.default_init(data)
    first = default if init is None else _values(init)
    starts = [np.asarray(first, dtype=float)]
    for extra in inits or ():
        starts.append(np.asarray(_values(extra), dtype=float))
    return starts


def fit_mle(
    model: ModelSpec,
    data: DataSet,
    init=None,
    *,
    inits: Optional[Sequence] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
) -> EstimateResult:
    """Maximum likelihood via damped Newton; residual is ||(1/n) grad l||_inf."""
    _validate_fit_inputs(model, data)
    x_obs = data.observations
    n = data.n

    def value_grad_hess(theta):
        with np.errstate(over="ignore", invalid="ignore"):
            logpdf = model.logpdf(theta, x_obs)
            f = -float(np.mean(logpdf))
            if not np.isfinite(f):
                return np.inf, None, None
            g = -model.grad(theta, x_obs).mean(axis=-1)
            hess = -model.hess(theta, x_obs).mean(axis=-1)
        return f, g, hess

    best, n_starts, n_distinct = _run_fits(
        value_grad_hess, _starts(model, data, init, inits),
        model.positivity, model.fisher, tol, max_iter,
    )
    x, f, residual, iterations, trace = best
    observed_info = -model.hess(x, x_obs).sum(axis=-1)
    return EstimateResult(
        theta_hat=model.make_point(x),
        objective=f,
        residual=residual,
        iterations=iterations,
        converged=True,
        observed_info=observed_info,
        diagnostics={
            "objective_trace": trace,
            "n_inits": n_starts,
            "n_distinct_optima": n_distinct,
            "n": n,
        },
    )


def fit_wf(
    model: ModelSpec,
    prior: PriorSpec,
    data: DataSet,
    init=None,
    *,
    inits: Optional[Sequence] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
) -> EstimateResult:
    """Penalised fit: stationarity of (1/n) sum rho + (1/n) pen(theta).

    The residual is ||Psi_n||_inf with Psi_n = -(1/n) grad l - (1/n) a(theta).
    init defaults to the ML fit, which also makes the Jeffreys case exact:
    a(theta) vanishes identically, so the start is already stationary and the
    returned point is bit-identical to the ML point.
    """
    _validate_fit_inputs(model, data)
    x_obs = data.observations
    n = data.n

    def pen_hessian(theta):
        # Hessian of pen via central differences of its analytic gradient -a.
        jac = central_jacobian(
            lambda t: -penalty_gradient_a(model, prior, t), theta
        )
        return 0.5 * (jac + jac.T)

    def value_grad_hess(theta):
        with np.errstate(over="ignore", invalid="ignore"):
            logpdf = model.logpdf(theta, x_obs)
            f_lik = -float(np.mean(logpdf))
            if not np.isfinite(f_lik):
                return np.inf, None, None
            f = f_lik + penalty(model, prior, theta) / n
            if not np.isfinite(f):
                return np.inf, None, None
            g = -model.grad(theta, x_obs).mean(axis=-1) - penalty_gradient_a(
                model, prior, theta
            ) / n
            hess = -model.hess(theta, x_obs).mean(axis=-1) + pen_hessian(theta) / n
        return f, g, hess

    def fisher_fallback(theta):
        base = model.fisher(theta)
        with_pen = base + pen_hessian(theta) / n
        try:
            solve_spd(with_pen, np.zeros(model.dim))
            return with_pen
        except NotPositiveDefinite:
            return base

    if init is None and not (inits or ()):
        init = fit_mle(model, data, tol=tol, max_iter=max_iter).theta_hat

    best, n_starts, n_distinct = _run_fits(
        value_grad_hess, _starts(model, data, init, inits),
        model.positivity, fisher_fallback, tol, max_iter,
    )
    x, f, residual, iterations, trace = best
    observed_info = -model.hess(x, x_obs).sum(axis=-1)
    return EstimateResult(
        theta_hat=model.make_point(x),
        objective=f,
        residual=residual,
        iterations=iterations,
        converged=True,
        observed_info=observed_info,
        diagnostics={
            "objective_trace": trace,
            "n_inits": n_starts,
            "n_distinct_optima": n_distinct,
            "n": n,
        },
    )


def predicted_shift(model: ModelSpec, prior: PriorSpec, theta, n: int):
    """First-order penalised-minus-ML shift (1/n) I(theta)^-1 a(theta)."""
    if n < 1:
        raise DomainError("predicted_shift: n must be >= 1")
    vals = _values(theta)
    a = penalty_gradient_a(model, prior, vals)
    return solve_spd(model.fisher(vals), a) / n


def asymptotic_cov(model: ModelSpec, theta):
    """Limit covariance of sqrt(n) (theta_hat - theta): I(theta)^-1."""
    return inv_spd(model.fisher(_values(theta)))
