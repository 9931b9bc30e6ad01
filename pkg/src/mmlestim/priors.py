"""Prior densities, the penalty pen(theta), and its negative gradient a(theta).

The estimation penalty is pen(theta) = -log pi(theta) + (1/2) log det I(theta)
with per-observation I; the 1/n penalty weight is applied by the estimator.
a(theta) = -grad pen = grad log pi - (1/2) grad log det I drives the
first-order shift between the penalised and ML fits.

Improper priors (flat, Jeffreys-type) drop their normalization constants:
only gradients and theta-differences of the penalty matter for estimation,
and absolute codelengths under them are flagged as holding up to an additive
constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError
from .models import ModelSpec, _values
from .numerics import central_grad, log_det_spd

PRIOR_KINDS = ("flat", "jeffreys", "fisher_squared", "half_cauchy_product")


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """Log prior density and its gradient.

    kind is one of flat, jeffreys, fisher_squared, half_cauchy_product, or
    custom; `proper` records whether log_density is a genuine normalized
    density (False for the improper choices).
    """

    kind: str
    log_density: Callable
    grad_log_density: Callable
    proper: bool


def _grad_log_det_fisher(model: ModelSpec, theta):
    vals = _values(theta)
    if model.grad_log_det_fisher is not None:
        return np.asarray(model.grad_log_det_fisher(vals), dtype=float)
    return central_grad(lambda t: log_det_spd(model.fisher(t)), vals)


def flat_prior(model: ModelSpec) -> PriorSpec:
    dim = model.dim
    return PriorSpec(
        kind="flat",
        log_density=lambda theta: 0.0,
        grad_log_density=lambda theta: np.zeros(dim),
        proper=False,
    )


def jeffreys_prior(model: ModelSpec) -> PriorSpec:
    """pi proportional to det(I)^(1/2); cancels the penalty so a(theta) = 0."""
    return PriorSpec(
        kind="jeffreys",
        log_density=lambda theta: 0.5 * log_det_spd(model.fisher(_values(theta))),
        grad_log_density=lambda theta: 0.5 * _grad_log_det_fisher(model, theta),
        proper=False,
    )


def fisher_squared_prior(model: ModelSpec) -> PriorSpec:
    """pi proportional to det(I); yields the Firth-type penalised score."""
    return PriorSpec(
        kind="fisher_squared",
        log_density=lambda theta: log_det_spd(model.fisher(_values(theta))),
        grad_log_density=lambda theta: _grad_log_det_fisher(model, theta),
        proper=False,
    )


def half_cauchy_product_prior(model: ModelSpec) -> PriorSpec:
    """Independent unit half-Cauchy densities 2 / (pi (1 + t^2)) per coordinate.

    Unit scales only: that is the configuration every closed-form oracle in
    this package targets.
    """
    def log_density(theta):
        vals = _values(theta)
        return float(np.sum(np.log(2.0 / np.pi) - np.log1p(vals ** 2)))

    def grad_log_density(theta):
        vals = _values(theta)
        return -2.0 * vals / (1.0 + vals ** 2)

    return PriorSpec(
        kind="half_cauchy_product",
        log_density=log_density,
        grad_log_density=grad_log_density,
        proper=True,
    )


def get_prior(kind: str, model: ModelSpec) -> PriorSpec:
    factories = {
        "flat": flat_prior,
        "jeffreys": jeffreys_prior,
        "fisher_squared": fisher_squared_prior,
        "half_cauchy_product": half_cauchy_product_prior,
    }
    try:
        factory = factories[kind]
    except KeyError:
        raise ConfigError(
            f"unknown prior {kind!r}; available: {', '.join(PRIOR_KINDS)}"
        ) from None
    return factory(model)


def penalty(model: ModelSpec, prior: PriorSpec, theta) -> float:
    """pen(theta) = -log pi(theta) + (1/2) log det I(theta), per-observation I."""
    vals = _values(theta)
    return -float(prior.log_density(vals)) + 0.5 * log_det_spd(model.fisher(vals))


def penalty_gradient_a(model: ModelSpec, prior: PriorSpec, theta):
    """a(theta) = -grad pen(theta) = grad log pi - (1/2) grad log det I.

    The Jeffreys prior uses the same gradient helper on both sides of the
    difference, so its a(theta) is exactly zero, not merely small.
    """
    vals = _values(theta)
    grad_pi = np.asarray(prior.grad_log_density(vals), dtype=float)
    return grad_pi - 0.5 * _grad_log_det_fisher(model, vals)
