"""Parametric family contracts and the two concrete families.

Two families are provided: the Weibull family (d = 2, the worked example all
bias oracles target) and a unit-dimension exponential family used as a sanity
model. All densities, scores, and derivative tensors use the per-observation
convention; sample-level quantities are formed by explicit n-scaling at call
sites (the full-sample information is K = n I). Derivative arrays carry the
derivative indices first and the observation axis last, so for example
hess(theta, x)[i, j] broadcasts over x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import zeta

from .errors import DataFormatError, DegenerateData, DomainError
from .numerics import RngStream, TINY

EULER_GAMMA = float(np.euler_gamma)
ZETA3 = float(zeta(3.0))  # Apery's constant
PI2 = math.pi ** 2
PI4 = math.pi ** 4


def _values(theta):
    """Accept either a ParamPoint or a bare array of parameter values."""
    vals = getattr(theta, "values", theta)
    return np.asarray(vals, dtype=float)


@dataclass(frozen=True, eq=False)
class ParamPoint:
    """A d-vector of parameter values with a positivity mask.

    Coordinates flagged in `positivity` are constrained to (0, inf); the
    constructor rejects violations, so a ParamPoint is admissible by
    construction.
    """

    values: np.ndarray
    positivity: tuple

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=float)).copy()
        object.__setattr__(self, "values", vals)
        if len(self.positivity) != vals.size:
            raise DomainError("ParamPoint: positivity mask length mismatch")
        if not np.all(np.isfinite(vals)):
            raise DomainError("ParamPoint: non-finite parameter value")
        for i, flag in enumerate(self.positivity):
            if flag and not vals[i] > 0.0:
                raise DomainError(
                    f"ParamPoint: coordinate {i} must be strictly positive, got {vals[i]}"
                )

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class DataSet:
    """Observed sample. Both implemented families live on (0, inf)."""

    observations: np.ndarray

    def __post_init__(self):
        obs = np.atleast_1d(np.asarray(self.observations, dtype=float)).copy()
        object.__setattr__(self, "observations", obs)
        if obs.ndim != 1:
            raise DomainError("DataSet: observations must be one-dimensional")
        if not np.all(np.isfinite(obs)):
            raise DomainError("DataSet: non-finite observation")
        if not np.all(obs > 0.0):
            raise DomainError("DataSet: observations must be strictly positive")

    @property
    def n(self) -> int:
        return self.observations.size


def load_dataset(path) -> DataSet:
    """Read a data file: one observation per line, '#' starts a comment."""
    raw = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                raw.append(float(text))
            except ValueError as exc:
                raise DataFormatError(
                    f"{path}: line {lineno}: cannot parse observation {text!r}"
                ) from exc
    if not raw:
        raise DataFormatError(f"{path}: no observations found")
    try:
        return DataSet(np.asarray(raw, dtype=float))
    except DomainError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def save_dataset(data: DataSet, path, header: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for value in data.observations:
            # repr of the Python float round-trips exactly and reloads bitwise
            fh.write(f"{float(value)!r}\n")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A parametric family: log-density derivatives to third order, Fisher
    information, and a sampler expressed through a unit-exponential transform.

    `transform(theta, u)` maps unit-exponential draws u to observations; the
    sampler and the expectation quadrature share it, so sampled moments and
    quadrature expectations agree by construction.
    """

    name: str
    dim: int
    positivity: tuple
    coord_names: tuple
    logpdf: Callable
    grad: Callable
    hess: Callable
    third: Callable
    fisher: Callable
    transform: Callable
    default_init: Callable
    grad_log_det_fisher: Optional[Callable] = None

    def make_point(self, values) -> ParamPoint:
        return ParamPoint(np.asarray(values, dtype=float), self.positivity)

    def sample(self, theta, n: int, stream: RngStream) -> DataSet:
        if n < 1:
            raise DomainError("sample: n must be >= 1")
        rng = stream.generator()
        # -log1p(-U) is exact unit-exponential sampling; the clamp keeps the
        # support open at 0 so log x stays finite for every draw.
        u = np.maximum(-np.log1p(-rng.random(n)), TINY)
        return DataSet(self.transform(_values(theta), u))


# ---------------------------------------------------------------------------
# Weibull family: density (k / lam) (x / lam)^(k-1) exp(-(x/lam)^k).
# Writing z = log(x / lam) and u = (x / lam)^k = e^(k z), every derivative
# below is a short polynomial in z times u, which keeps the expectation
# integrals Gamma-type.


def _weibull_check(theta):
    k, lam = theta
    if not (k > 0.0 and lam > 0.0):
        raise DomainError(f"weibull: parameters must be positive, got k={k}, lam={lam}")
    return k, lam


def _weibull_zu(theta, x):
    k, lam = _weibull_check(theta)
    x = np.asarray(x, dtype=float)
    if not np.all(x > 0.0):
        raise DomainError("weibull: observations must be strictly positive")
    z = np.log(x) - math.log(lam)
    u = np.exp(k * z)
    return k, lam, z, u


def weibull_logpdf(theta, x):
    """Per-observation log-density log k - log lam + (k-1) z - u."""
    theta = _values(theta)
    k, lam, z, u = _weibull_zu(theta, x)
    return math.log(k) - math.log(lam) + (k - 1.0) * z - u


def weibull_grad(theta, x):
    theta = _values(theta)
    k, lam, z, u = _weibull_zu(theta, x)
    d_k = 1.0 / k + z * (1.0 - u)
    d_lam = (k / lam) * (u - 1.0)
    return np.stack(np.broadcast_arrays(d_k, d_lam))


def weibull_hess(theta, x):
    theta = _values(theta)
    k, lam, z, u = _weibull_zu(theta, x)
    h_kk = -1.0 / k ** 2 - z ** 2 * u
    h_kl = (u - 1.0 + k * z * u) / lam
    h_ll = (k / lam ** 2) * (1.0 - (1.0 + k) * u)
    h_kk, h_kl, h_ll = np.broadcast_arrays(h_kk, h_kl, h_ll)
    return np.stack([np.stack([h_kk, h_kl]), np.stack([h_kl, h_ll])])


def weibull_third(theta, x):
    theta = _values(theta)
    k, lam, z, u = _weibull_zu(theta, x)
    t_kkk = 2.0 / k ** 3 - z ** 3 * u
    t_kkl = (2.0 * z + k * z ** 2) * u / lam
    t_kll = (1.0 - u * (1.0 + 2.0 * k + k * z * (1.0 + k))) / lam ** 2
    t_lll = (k / lam ** 3) * ((1.0 + k) * (2.0 + k) * u - 2.0)
    t_kkk, t_kkl, t_kll, t_lll = np.broadcast_arrays(t_kkk, t_kkl, t_kll, t_lll)
    row_kk = np.stack([t_kkk, t_kkl])
    row_kl = np.stack([t_kkl, t_kll])
    row_ll = np.stack([t_kll, t_lll])
    return np.stack([np.stack([row_kk, row_kl]), np.stack([row_kl, row_ll])])


def weibull_fisher(theta):
    """Per-observation expected information; det is pi^2 / (6 lam^2) for every k."""
    theta = _values(theta)
    k, lam = _weibull_check(theta)
    g1 = EULER_GAMMA - 1.0
    return np.array(
        [
            [(6.0 * g1 ** 2 + PI2) / (6.0 * k ** 2), g1 / lam],
            [g1 / lam, k ** 2 / lam ** 2],
        ]
    )


def weibull_grad_log_det_fisher(theta):
    theta = _values(theta)
    _, lam = _weibull_check(theta)
    return np.array([0.0, -2.0 / lam])


def weibull_transform(theta, u):
    k, lam = _values(theta)
    return lam * np.asarray(u, dtype=float) ** (1.0 / k)


def weibull_default_init(data: DataSet) -> np.ndarray:
    # Moment matching on log X: stdev(log X) = pi / (k sqrt 6) and
    # mean(log X) = log lam - gamma / k.
    logs = np.log(data.observations)
    spread = float(np.std(logs))
    if spread == 0.0:
        raise DegenerateData("weibull: all observations equal, shape is unidentified")
    k0 = 1.28 / spread
    lam0 = math.exp(float(np.mean(logs)) + EULER_GAMMA / k0)
    return np.array([k0, lam0])


def weibull_sample(theta, n: int, stream: RngStream) -> DataSet:
    return WEIBULL.sample(theta, n, stream)


def weibull_mle_bias_closed(theta, n: int):
    """First-order (1/n) bias of the ML estimator, closed form.

    The shape component is 18 k (pi^2 - 2 zeta(3)) / (n pi^4), a positive
    coefficient of about 1.38 k / n.
    """
    theta = _values(theta)
    k, lam = _weibull_check(theta)
    if n < 1:
        raise DomainError("weibull_mle_bias_closed: n must be >= 1")
    b_k = 18.0 * k * (PI2 - 2.0 * ZETA3) / PI4
    b_lam = (
        lam
        * (
            72.0 * (EULER_GAMMA - 1.0) * k * ZETA3
            + 6.0 * PI2 * (5.0 * k + EULER_GAMMA * (-4.0 * k + EULER_GAMMA - 2.0) + 1.0)
            + PI4 * (1.0 - 2.0 * k)
        )
        / (2.0 * PI4 * k ** 2)
    )
    return np.array([b_k, b_lam]) / n


def weibull_mml_bias_closed(theta, n: int):
    """First-order bias of the penalised estimator under the unit half-Cauchy
    prior pair: ML bias plus the explicit (1/n) penalty correction."""
    theta = _values(theta)
    k, lam = _weibull_check(theta)
    g1 = EULER_GAMMA - 1.0
    c_k = (6.0 / PI2) * (
        g1 * (lam ** 2 - 1.0) / (lam ** 2 + 1.0) - 2.0 * k ** 3 / (k ** 2 + 1.0)
    )
    c_lam = (lam / (PI2 * k ** 2)) * (
        12.0 * g1 * k ** 3 / (k ** 2 + 1.0)
        - (6.0 * g1 ** 2 + PI2) * (lam ** 2 - 1.0) / (lam ** 2 + 1.0)
    )
    return weibull_mle_bias_closed(theta, n) + np.array([c_k, c_lam]) / n


def weibull_bias_ratio(k: float) -> float:
    """Shape-bias ratio ML / penalised at lam = 1; exceeds 1 for every k > 0."""
    if not k > 0.0:
        raise DomainError("weibull_bias_ratio: k must be positive")
    denom = PI2 * (k ** 2 + 3.0) - 6.0 * (k ** 2 + 1.0) * ZETA3
    if denom <= 0.0:
        # Cannot happen for k > 0; reaching this signals a defect upstream.
        raise DomainError("weibull_bias_ratio: non-positive denominator")
    return 3.0 * (k ** 2 + 1.0) * (PI2 - 2.0 * ZETA3) / denom


WEIBULL = ModelSpec(
    name="weibull",
    dim=2,
    positivity=(True, True),
    coord_names=("k", "lambda"),
    logpdf=weibull_logpdf,
    grad=weibull_grad,
    hess=weibull_hess,
    third=weibull_third,
    fisher=weibull_fisher,
    transform=weibull_transform,
    default_init=weibull_default_init,
    grad_log_det_fisher=weibull_grad_log_det_fisher,
)


# ---------------------------------------------------------------------------
# Exponential family f(x | theta) = theta e^(-theta x), the d = 1 oracle
# model: every cumulant is a monomial in theta, so all bias formulas can be
# checked by hand.


def _exponential_check(theta):
    rate = float(theta[0])
    if not rate > 0.0:
        raise DomainError(f"exponential: rate must be positive, got {rate}")
    return rate


def _exponential_x(x):
    x = np.asarray(x, dtype=float)
    if not np.all(x > 0.0):
        raise DomainError("exponential: observations must be strictly positive")
    return x


def exponential_logpdf(theta, x):
    rate = _exponential_check(_values(theta))
    return math.log(rate) - rate * _exponential_x(x)


def exponential_grad(theta, x):
    rate = _exponential_check(_values(theta))
    return (1.0 / rate - _exponential_x(x))[np.newaxis]


def exponential_hess(theta, x):
    rate = _exponential_check(_values(theta))
    x = _exponential_x(x)
    return np.broadcast_to(-1.0 / rate ** 2, (1, 1) + x.shape)


def exponential_third(theta, x):
    rate = _exponential_check(_values(theta))
    x = _exponential_x(x)
    return np.broadcast_to(2.0 / rate ** 3, (1, 1, 1) + x.shape)


def exponential_fisher(theta):
    rate = _exponential_check(_values(theta))
    return np.array([[1.0 / rate ** 2]])


def exponential_grad_log_det_fisher(theta):
    rate = _exponential_check(_values(theta))
    return np.array([-2.0 / rate])


def exponential_transform(theta, u):
    rate = _values(theta)[0]
    return np.asarray(u, dtype=float) / rate


def exponential_default_init(data: DataSet) -> np.ndarray:
    return np.array([1.0 / float(np.mean(data.observations))])


EXPONENTIAL = ModelSpec(
    name="exponential",
    dim=1,
    positivity=(True,),
    coord_names=("theta",),
    logpdf=exponential_logpdf,
    grad=exponential_grad,
    hess=exponential_hess,
    third=exponential_third,
    fisher=exponential_fisher,
    transform=exponential_transform,
    default_init=exponential_default_init,
    grad_log_det_fisher=exponential_grad_log_det_fisher,
)


_REGISTRY = {spec.name: spec for spec in (WEIBULL, EXPONENTIAL)}


def model_names():
    return tuple(sorted(_REGISTRY))


def get_model(name: str) -> ModelSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise DomainError(
            f"unknown model {name!r}; available: {', '.join(model_names())}"
        ) from None
