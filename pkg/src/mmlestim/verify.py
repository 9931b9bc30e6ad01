"""The acceptance suite: ten named criteria with fixed seeds.

Each criterion checks one verifiable claim about the estimators at desk
scale: closed-form oracle agreement for the bias machinery, Monte Carlo
agreement for the asymptotic laws, and exactness for the codelength
constants. Statistical criteria compare against bands of at least 3 standard
errors (computed from the run itself) plus an explicit budget for
higher-order terms where one is stated.

Seeds are pinned so the default run is reproducible; passing a nonzero seed
offsets them, which re-randomizes every Monte Carlo criterion (the checks
are sized to pass the overwhelming share of seeds, but only the default is a
certified reference run). Fast mode cuts replicate counts and widens the
statistical bands accordingly; oracle and exactness criteria are unaffected.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import codelength
from .bias import compute_cumulants, cox_snell_bias, wf_bias
from .errors import EstimError
from .models import (
    EULER_GAMMA,
    ZETA3,
    get_model,
    weibull_mle_bias_closed,
    weibull_mml_bias_closed,
    weibull_bias_ratio,
)
from .numerics import RngStream, central_grad, central_jacobian, expect_quadrature
from .priors import get_prior
from .simulate import SimConfig, consistency_sweep, run_sim, shift_scaling_check

ORACLE_GRID = tuple((k, lam) for k in (0.5, 1.0, 2.0) for lam in (0.5, 1.0, 2.0))


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} ({self.seconds:.1f}s): {self.detail}"


def _criterion_cox_snell_oracle(fast: bool, seed: int) -> tuple:
    """Generic cumulant pipeline vs the closed-form ML bias on the grid."""
    model = get_model("weibull")
    n = 100
    worst = 0.0
    for k, lam in ORACLE_GRID:
        theta = np.array([k, lam])
        generic = cox_snell_bias(model, theta, n)
        closed = weibull_mle_bias_closed(theta, n)
        worst = max(worst, float(np.max(np.abs(generic - closed) / np.abs(closed))))
    return worst <= 1e-6, f"max relative error {worst:.3e} (tolerance 1e-6)"


def _criterion_wf_bias_oracle(fast: bool, seed: int) -> tuple:
    """Generic penalised-bias pipeline vs its closed form, half-Cauchy priors."""
    model = get_model("weibull")
    prior = get_prior("half_cauchy_product", model)
    n = 100
    worst = 0.0
    for k, lam in ORACLE_GRID:
        theta = np.array([k, lam])
        generic = wf_bias(model, prior, theta, n)
        closed = weibull_mml_bias_closed(theta, n)
        worst = max(worst, float(np.max(np.abs(generic - closed) / np.abs(closed))))
    return worst <= 1e-6, f"max relative error {worst:.3e} (tolerance 1e-6)"


def _criterion_shape_bias_coefficient(fast: bool, seed: int) -> tuple:
    """18 (pi^2 - 2 zeta(3)) / pi^4 must land in [1.379, 1.380]."""
    coefficient = 18.0 * (math.pi ** 2 - 2.0 * ZETA3) / math.pi ** 4
    # cross-check through the bias operation itself: shape bias at k=1, n=1
    from_op = float(weibull_mle_bias_closed(np.array([1.0, 1.0]), 1)[0])
    consistent = abs(coefficient - from_op) <= 1e-12
    inside = 1.379 <= coefficient <= 1.380
    return inside and consistent, (
        f"coefficient {coefficient:.6f} in [1.379, 1.380]: {inside}; "
        f"bias-op agreement {abs(coefficient - from_op):.1e}"
    )


def _criterion_bias_ratio(fast: bool, seed: int) -> tuple:
    """R(k, 1) > 1 on the k grid; R(1, 1) against the independent pipeline."""
    model = get_model("weibull")
    prior = get_prior("half_cauchy_product", model)
    ks = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
    ratios = {k: weibull_bias_ratio(k) for k in ks}
    all_above_one = all(r > 1.0 for r in ratios.values())
    r_closed = ratios[1.0]
    theta = np.array([1.0, 1.0])
    cumulants = compute_cumulants(model, theta)
    pipeline_mle = cox_snell_bias(model, theta, 100, cumulants=cumulants)[0]
    pipeline_wf = wf_bias(model, prior, theta, 100, cumulants=cumulants)[0]
    r_pipeline = pipeline_mle / pipeline_wf
    literal_ok = abs(r_closed - 1.78788) <= 1e-4
    pipeline_ok = abs(r_pipeline - r_closed) <= 1e-6 * r_closed
    return all_above_one and literal_ok and pipeline_ok, (
        f"min ratio {min(ratios.values()):.5f} > 1: {all_above_one}; "
        f"R(1,1) = {r_closed:.6f} (|dev from 1.78788| = {abs(r_closed - 1.78788):.2e}); "
        f"pipeline ratio dev {abs(r_pipeline - r_closed):.2e}"
    )


def _criterion_monte_carlo_bias(fast: bool, seed: int) -> tuple:
    """Empirical shape biases at (2, 1), n=100 vs first-order theory.

    Band: 3 SE plus 15% of the target, the budget for the O(1/n^2) remainder
    at n=100. Also requires the penalised estimator to beat ML in absolute
    shape bias, the headline property of the correction.
    """
    replicates = 2000 if fast else 20000
    cfg = SimConfig(
        model="weibull",
        prior="half_cauchy_product",
        theta0=(2.0, 1.0),
        n=100,
        replicates=replicates,
        seed=1101 + seed,
    )
    report = run_sim(cfg)
    target_mle = float(weibull_mle_bias_closed(np.array([2.0, 1.0]), 100)[0])
    target_wf = float(weibull_mml_bias_closed(np.array([2.0, 1.0]), 100)[0])
    # pin the closed forms to their 5-digit reference values (displays are
    # truncated, so the absolute slack is 5e-6 rather than half an ulp)
    literal_ok = (
        abs(target_mle - 0.027590) <= 5e-6 and abs(target_wf - 0.008136) <= 5e-6
    )
    emp_mle = report.estimators["mle"]["bias"][0]
    emp_wf = report.estimators["wf"]["bias"][0]
    se_mle = report.estimators["mle"]["se"][0]
    se_wf = report.estimators["wf"]["se"][0]
    band_mle = 3.0 * se_mle + 0.15 * abs(target_mle)
    band_wf = 3.0 * se_wf + 0.15 * abs(target_wf)
    ok_mle = abs(emp_mle - target_mle) <= band_mle
    ok_wf = abs(emp_wf - target_wf) <= band_wf
    ok_order = abs(emp_wf) < abs(emp_mle)
    return ok_mle and ok_wf and ok_order and literal_ok, (
        f"ML shape bias {emp_mle:.6f} vs {target_mle:.6f} "
        f"(|dev| {abs(emp_mle - target_mle):.2e} <= band {band_mle:.2e}); "
        f"WF shape bias {emp_wf:.6f} vs {target_wf:.6f} "
        f"(|dev| {abs(emp_wf - target_wf):.2e} <= band {band_wf:.2e}); "
        f"|WF| < |ML|: {ok_order}; targets at reference values: {literal_ok}; "
        f"replicates {replicates}"
    )


def _criterion_shift_law(fast: bool, seed: int) -> tuple:
    """n * mean(WF - ML) at n in {200, 800} vs I^-1 a, then the Jeffreys zero.

    Replicates are deliberately modest: the second-order remainder in the
    mean shift is about -4/n for the shape coordinate, so the 3 SE band must
    stay wide enough to cover it honestly (SE scales n / sqrt(R) here).
    """
    n_grid = (200, 800)
    replicates = (100, 200)
    half_cauchy = shift_scaling_check(
        "weibull", "half_cauchy_product", (2.0, 1.0), n_grid, replicates, 1301 + seed
    )
    # the n-free prediction I^-1 a at (2, 1) has reference value
    # (-1.9454, -0.2056) to 4 decimals
    display_dev = float(
        np.max(np.abs(np.asarray(half_cauchy.theory) - [-1.9454, -0.2056]))
    )
    ok_display = display_dev <= 1e-4
    worst_z = 0.0
    ok = True
    for row in half_cauchy.rows:
        for c in range(2):
            dev = abs(row["scaled_mean"][c] - half_cauchy.theory[c])
            band = 3.0 * row["scaled_se"][c]
            worst_z = max(worst_z, abs(row["z"][c]))
            ok = ok and dev <= band
    jeffreys = shift_scaling_check(
        "weibull", "jeffreys", (2.0, 1.0), n_grid, (100, 100), 1303 + seed
    )
    jeffreys_max = max(
        abs(v) for row in jeffreys.rows for v in row["scaled_mean"]
    )
    # The Jeffreys fit starts at the ML point, which is already stationary
    # when a(theta) = 0, so the shift is exactly zero, not merely within SE.
    ok_jeffreys = all(
        abs(row["scaled_mean"][c]) <= 3.0 * row["scaled_se"][c] + 1e-12
        for row in jeffreys.rows
        for c in range(2)
    )
    theory_text = ", ".join(f"{v:.4f}" for v in half_cauchy.theory)
    return ok and ok_jeffreys and ok_display, (
        f"half-Cauchy max |z| {worst_z:.2f} vs theory ({theory_text}), "
        f"reference dev {display_dev:.1e}; "
        f"Jeffreys max |n * shift| {jeffreys_max:.2e}"
    )


def _criterion_asymptotic_normality(fast: bool, seed: int) -> tuple:
    """Covariance of sqrt(n)(ML - theta0) at (1, 1), n=1000 vs I^-1."""
    replicates = 1000 if fast else 5000
    band = 0.15 if fast else 0.10
    cfg = SimConfig(
        model="weibull",
        prior="half_cauchy_product",
        theta0=(1.0, 1.0),
        n=1000,
        replicates=replicates,
        seed=1501 + seed,
    )
    report = run_sim(cfg)
    emp = np.asarray(report.estimators["mle"]["cov"])
    g1 = EULER_GAMMA - 1.0
    pi2 = math.pi ** 2
    # I^-1 at (1, 1): (1/pi^2) [[6, 6(1-gamma)], [6(1-gamma), 6(gamma-1)^2 + pi^2]]
    target = np.array(
        [[6.0, -6.0 * g1], [-6.0 * g1, 6.0 * g1 ** 2 + pi2]]
    ) / pi2
    rel = np.abs(emp - target) / np.abs(target)
    worst = float(rel.max())
    return worst <= band, (
        f"max entrywise relative deviation {worst:.3f} "
        f"(band {band:.2f}, replicates {replicates})"
    )


def _criterion_convergence_rate(fast: bool, seed: int) -> tuple:
    """log-log RMSE slope over n in {100, 400, 1600} near -1/2, both fits."""
    replicates = 400 if fast else 2000
    band = 0.10 if fast else 0.07
    sweep = consistency_sweep(
        "weibull",
        "half_cauchy_product",
        (2.0, 1.0),
        (100, 400, 1600),
        replicates,
        1701 + seed,
    )
    worst = 0.0
    for name in ("mle", "wf"):
        for slope in sweep.slopes[name]:
            worst = max(worst, abs(slope + 0.5))
    slope_text = "; ".join(
        f"{name}: " + ", ".join(f"{s:.4f}" for s in sweep.slopes[name])
        for name in ("mle", "wf")
    )
    return worst <= band, (
        f"slopes {slope_text}; max |slope + 0.5| = {worst:.4f} (band {band:.2f})"
    )


def _criterion_codelength_constants(fast: bool, seed: int) -> tuple:
    """Exact quantisation constants, the cell-volume identity, gap boundedness."""
    exact = {
        1: 1.0 / 12.0,
        2: 5.0 / (36.0 * math.sqrt(3.0)),
        3: 19.0 / (192.0 * 2.0 ** (1.0 / 3.0)),
    }
    const_dev = max(abs(codelength.kappa_const(d) - v) for d, v in exact.items())
    identity_dev = max(
        abs(
            -math.log(codelength.optimal_cell_volume(d))
            - 0.5 * d * math.log(codelength.kappa_const(d))
        )
        for d in (1, 2, 3)
    )
    model = get_model("weibull")
    prior = get_prior("half_cauchy_product", model)
    data = model.sample(np.array([2.0, 1.0]), 2000, RngStream(1901 + seed, 0))
    profile = codelength.bic_gap_profile(model, prior, data, (250, 500, 1000, 2000))
    gaps = dict(profile)
    max_step = max(
        abs(gaps[n] - gaps[2 * n]) for n in (250, 500, 1000)
    )
    ok = const_dev <= 1e-15 and identity_dev <= 1e-12 and max_step < 0.5
    return ok, (
        f"constants |dev| {const_dev:.1e}; volume identity |dev| {identity_dev:.1e}; "
        f"max |gap(n) - gap(2n)| {max_step:.4f} (band 0.5)"
    )


def _criterion_derivative_bartlett_suite(fast: bool, seed: int) -> tuple:
    """Analytic derivatives vs central differences; score and information
    identities by quadrature, both families, across the parameter grid."""
    fd_worst = 0.0
    score_worst = 0.0
    info_worst = 0.0
    probes = np.array([0.31, 1.0, 2.7])
    cases = [("weibull", [np.array([k, lam]) for k, lam in ORACLE_GRID])]
    cases.append(("exponential", [np.array([r]) for r in (0.5, 1.0, 2.0)]))
    for name, thetas in cases:
        model = get_model(name)
        for theta in thetas:
            for x in probes:
                analytic_grad = model.grad(theta, x)
                fd_grad = central_grad(lambda t: float(model.logpdf(t, x)), theta)
                fd_worst = max(
                    fd_worst,
                    float(
                        np.max(
                            np.abs(analytic_grad - fd_grad)
                            / (1.0 + np.abs(analytic_grad))
                        )
                    ),
                )
                analytic_hess = model.hess(theta, x)
                fd_hess = central_jacobian(lambda t: model.grad(t, x), theta)
                fd_worst = max(
                    fd_worst,
                    float(
                        np.max(
                            np.abs(analytic_hess - fd_hess)
                            / (1.0 + np.abs(analytic_hess))
                        )
                    ),
                )
                analytic_third = model.third(theta, x)
                fd_third = central_jacobian(lambda t: model.hess(t, x), theta)
                fd_worst = max(
                    fd_worst,
                    float(
                        np.max(
                            np.abs(analytic_third - fd_third)
                            / (1.0 + np.abs(analytic_third))
                        )
                    ),
                )
            d = model.dim
            for i in range(d):
                score_worst = max(
                    score_worst,
                    abs(
                        expect_quadrature(
                            model, theta, lambda x: model.grad(theta, x)[i]
                        )
                    ),
                )
            fisher = model.fisher(theta)
            for i in range(d):
                for j in range(d):
                    info_worst = max(
                        info_worst,
                        abs(
                            expect_quadrature(
                                model, theta, lambda x: -model.hess(theta, x)[i, j]
                            )
                            - fisher[i, j]
                        ),
                    )
    ok = fd_worst <= 1e-5 and score_worst <= 1e-8 and info_worst <= 1e-8
    return ok, (
        f"max FD relative error {fd_worst:.2e} (tol 1e-5); "
        f"max |E[score]| {score_worst:.2e} (tol 1e-8); "
        f"max |E[-hess] - I| {info_worst:.2e} (tol 1e-8)"
    )


CRITERIA = (
    ("cox-snell-oracle", _criterion_cox_snell_oracle),
    ("wf-bias-oracle", _criterion_wf_bias_oracle),
    ("shape-bias-coefficient", _criterion_shape_bias_coefficient),
    ("bias-ratio", _criterion_bias_ratio),
    ("monte-carlo-bias", _criterion_monte_carlo_bias),
    ("shift-law", _criterion_shift_law),
    ("asymptotic-normality", _criterion_asymptotic_normality),
    ("convergence-rate", _criterion_convergence_rate),
    ("codelength-constants", _criterion_codelength_constants),
    ("derivative-bartlett-suite", _criterion_derivative_bartlett_suite),
)

CRITERION_NAMES = tuple(name for name, _ in CRITERIA)


def run_criterion(name: str, fast: bool = False, seed: int = 0) -> CriterionResult:
    table = dict(CRITERIA)
    if name not in table:
        raise EstimError(
            f"unknown criterion {name!r}; available: {', '.join(CRITERION_NAMES)}"
        )
    start = time.perf_counter()
    try:
        passed, detail = table[name](fast, seed)
    except EstimError as exc:
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(
        name=name,
        passed=bool(passed),
        detail=detail,
        seconds=time.perf_counter() - start,
    )


def run_all(fast: bool = False, seed: int = 0):
    return [run_criterion(name, fast=fast, seed=seed) for name in CRITERION_NAMES]
