"""First-order bias machinery: cumulant tensors and the matrix bias formula.

Conventions, fixed once for the whole package:

- All cumulants are per-observation expectations. The matrix bias formula is
  usually written with full-sample quantities K = n I and A = n A_bar; the
  two n factors cancel against K^-1 twice, leaving the single explicit 1/n
  used here.
- vec(.) is column stacking, and the (d x d^2) cumulant matrix A_bar is laid
  out in d column blocks indexed by the derivative label l, block entry
  (i, j) = kappa_ij^(l) - (1/2) kappa_ijl. Since that layout is easy to get
  wrong silently, the permuted triple-sum form of the same expansion is
  implemented as well; the two must agree to float precision and tests hold
  them to 1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import DomainError, SymmetryViolation
from .estimators import predicted_shift
from .models import ModelSpec, _values
from .numerics import central_jacobian, expect_quadrature, inv_spd
from .priors import PriorSpec


@dataclass(frozen=True, eq=False)
class CumulantSet:
    """Per-observation expected derivatives of the log-density.

    kappa2[i, j] = E[l_ij], kappa3[i, j, l] = E[l_ijl] and
    kappa2_grad[i, j, l] = d kappa2[i, j] / d theta_l. a_bar is the assembled
    (d x d^2) matrix described in the module docstring.
    """

    kappa2: np.ndarray
    kappa3: np.ndarray
    kappa2_grad: np.ndarray
    a_bar: np.ndarray

    @property
    def dim(self) -> int:
        return self.kappa2.shape[0]

    @property
    def a_tensor(self) -> np.ndarray:
        """a[i, j, l] = kappa2_grad[i, j, l] - kappa3[i, j, l] / 2."""
        return self.kappa2_grad - 0.5 * self.kappa3


def _assemble_a_bar(a_tensor: np.ndarray) -> np.ndarray:
    d = a_tensor.shape[0]
    # blocks indexed by l (outer), columns by j (inner): entry (i, l*d + j)
    return a_tensor.transpose(0, 2, 1).reshape(d, d * d)


def compute_cumulants(model: ModelSpec, theta, rtol: float = 1e-9) -> CumulantSet:
    """Quadrature cumulants kappa2 and kappa3, plus differenced kappa2_grad.

    kappa3 is integrated entry by entry over all d^3 components, not just the
    unique triples, so an asymmetric third-derivative implementation is
    caught here (SymmetryViolation beyond 1e-5 relative) instead of being
    silently symmetrized away. kappa2_grad comes from central differences of
    the analytic Fisher matrix (kappa2 = -I), which avoids compounding
    quadrature noise through a difference quotient.
    """
    vals = _values(theta)
    d = model.dim

    kappa2 = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            kappa2[i, j] = expect_quadrature(
                model, vals, lambda x: model.hess(vals, x)[i, j], rtol=rtol
            )

    kappa3 = np.empty((d, d, d))
    for i in range(d):
        for j in range(d):
            for l in range(d):
                kappa3[i, j, l] = expect_quadrature(
                    model, vals, lambda x: model.third(vals, x)[i, j, l], rtol=rtol
                )

    scale = 1.0 + float(np.abs(kappa3).max())
    for perm in permutations(range(3)):
        asym = float(np.abs(kappa3 - kappa3.transpose(perm)).max())
        if asym > 1e-5 * scale:
            raise SymmetryViolation(
                f"compute_cumulants: kappa3 asymmetry {asym:.3e} under permutation {perm}"
            )

    fisher_jac = central_jacobian(
        lambda t: np.asarray(model.fisher(t), dtype=float), vals
    )
    kappa2_grad = -fisher_jac  # kappa2 = -I entrywise

    a_bar = _assemble_a_bar(kappa2_grad - 0.5 * kappa3)
    return CumulantSet(
        kappa2=kappa2, kappa3=kappa3, kappa2_grad=kappa2_grad, a_bar=a_bar
    )


def cox_snell_bias(model: ModelSpec, theta, n: int, cumulants: CumulantSet = None):
    """First-order ML bias (1/n) I^-1 A_bar vec(I^-1), matrix form."""
    if n < 1:
        raise DomainError("cox_snell_bias: n must be >= 1")
    vals = _values(theta)
    if cumulants is None:
        cumulants = compute_cumulants(model, vals)
    fisher_inv = inv_spd(model.fisher(vals))
    vec = fisher_inv.flatten(order="F")  # column stacking
    return fisher_inv @ (cumulants.a_bar @ vec) / n


def cox_snell_bias_sum_form(
    model: ModelSpec, theta, n: int, cumulants: CumulantSet = None
):
    """The same expansion as an explicit triple sum over cumulant indices.

    b_s = (1/n) sum_{i,j,l} I^{si} I^{jl} (kappa_ij^(l) - kappa_ijl / 2).
    Kept as an independently-coded cross-check on the vec/layout conventions
    of the matrix form.
    """
    if n < 1:
        raise DomainError("cox_snell_bias_sum_form: n must be >= 1")
    vals = _values(theta)
    if cumulants is None:
        cumulants = compute_cumulants(model, vals)
    fisher_inv = inv_spd(model.fisher(vals))
    return np.einsum(
        "si,jl,ijl->s", fisher_inv, fisher_inv, cumulants.a_tensor
    ) / n


def wf_bias(
    model: ModelSpec, prior: PriorSpec, theta, n: int, cumulants: CumulantSet = None
):
    """First-order bias of the penalised estimator: ML bias plus I^-1 a / n.

    Under the Jeffreys prior a(theta) = 0 exactly, so this equals the ML bias.
    """
    return cox_snell_bias(model, theta, n, cumulants=cumulants) + predicted_shift(
        model, prior, theta, n
    )
