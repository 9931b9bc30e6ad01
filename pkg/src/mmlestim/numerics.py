"""Dense linear algebra, finite differences, quadrature, and random streams.

Everything here is pure: identical inputs give identical outputs, so callers
may fan out across threads or processes freely. Matrices are plain row-major
ndarrays; the models in this package never exceed d = 3, so no sparse or
blocked paths exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh_tridiagonal

from .errors import (
    DomainError,
    LinearSolveFailure,
    NonFiniteEvaluation,
    NotPositiveDefinite,
    QuadratureNotConverged,
)

TINY = float(np.finfo(float).tiny)

# Step constant for central differences: cube root of machine epsilon, the
# usual bias/roundoff compromise for second-order stencils.
FD_STEP = float(np.cbrt(np.finfo(float).eps))


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream: (seed, stream_id) determines the sequence.

    generator() builds a fresh Philox generator every call, so a stream value
    can be reused or shipped to a worker process without hidden state, and
    distinct stream_ids give statistically independent streams for the same
    seed. Replicate r of a simulation uses stream_id = r.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed, self.stream_id]))

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def solve_spd(m, b):
    """Solve m x = b for symmetric positive definite m via Cholesky.

    Residual contract: ||m x - b||_inf <= 1e-10 * (1 + ||b||_inf). One pass of
    iterative refinement keeps that bound comfortably for the well-conditioned
    low-dimensional matrices this package produces; a violation raises
    LinearSolveFailure rather than returning a silently bad solution.
    """
    m = np.asarray(m, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(b))):
        raise NonFiniteEvaluation("solve_spd: non-finite input")
    scale = float(np.abs(m).max()) if m.size else 0.0
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("solve_spd: matrix must be square")
    if float(np.abs(m - m.T).max()) > 1e-12 * (1.0 + scale):
        raise DomainError("solve_spd: matrix is not symmetric")
    try:
        cf = cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"solve_spd: {exc}") from exc
    x = cho_solve(cf, b, check_finite=False)
    x = x + cho_solve(cf, b - m @ x, check_finite=False)
    resid = float(np.abs(m @ x - b).max())
    if not resid <= 1e-10 * (1.0 + float(np.abs(b).max())):
        raise LinearSolveFailure(f"solve_spd: residual {resid:.3e} exceeds contract")
    return x


def inv_spd(m):
    """Inverse of a symmetric positive definite matrix, symmetrized."""
    m = np.asarray(m, dtype=float)
    inv = solve_spd(m, np.eye(m.shape[0]))
    return 0.5 * (inv + inv.T)


def log_det_spd(m):
    """log det of a symmetric positive definite matrix via Cholesky."""
    m = np.asarray(m, dtype=float)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"log_det_spd: {exc}") from exc
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def _steps(x, h):
    if h is None:
        return FD_STEP * np.maximum(1.0, np.abs(x))
    return np.broadcast_to(np.asarray(h, dtype=float), x.shape).copy()


def central_grad(f, x, h=None):
    """Central-difference gradient of a scalar field.

    Default step rule: h_i = cbrt(machine eps) * max(1, |x_i|). Pass h to
    override (scalar or per-coordinate), e.g. for step-halving studies.
    """
    x = np.asarray(x, dtype=float)
    steps = _steps(x, h)
    grad = np.empty_like(x)
    for i in range(x.size):
        probe = np.zeros_like(x)
        probe[i] = steps[i]
        hi = f(x + probe)
        lo = f(x - probe)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NonFiniteEvaluation(f"central_grad: non-finite probe at coordinate {i}")
        grad[i] = (hi - lo) / (2.0 * steps[i])
    return grad


def central_jacobian(f, x, h=None):
    """Central differences of an array-valued f; result shape f(x).shape + (d,)."""
    x = np.asarray(x, dtype=float)
    steps = _steps(x, h)
    cols = []
    for i in range(x.size):
        probe = np.zeros_like(x)
        probe[i] = steps[i]
        hi = np.asarray(f(x + probe), dtype=float)
        lo = np.asarray(f(x - probe), dtype=float)
        if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
            raise NonFiniteEvaluation(f"central_jacobian: non-finite probe at coordinate {i}")
        cols.append((hi - lo) / (2.0 * steps[i]))
    return np.stack(cols, axis=-1)


@lru_cache(maxsize=None)
def laguerre_rule(order: int):
    """Gauss-Laguerre nodes and weights from the Jacobi matrix (Golub-Welsch).

    The symmetric tridiagonal eigenproblem stays stable through order 512,
    unlike polynomial-recurrence constructions which overflow near order 180.
    Weights are the squared first eigenvector components (total mass 1, the
    integral of e^{-u}).
    """
    if order < 1:
        raise DomainError("laguerre_rule: order must be >= 1")
    k = np.arange(order, dtype=float)
    nodes, vecs = eigh_tridiagonal(2.0 * k + 1.0, k[1:])
    weights = vecs[0] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _unit_exponential_quad(h, order):
    """Fixed-order approximation of the integral of h(u) e^{-u} over (0, inf).

    The integrand families here contain powers of log u, which plain
    Gauss-Laguerre resolves only at O(1/order). Splitting at u = 1 fixes that:
    on (0, 1] substitute u = e^{-t} (the log singularity becomes polynomial in
    t), on [1, inf) shift u = 1 + v; both pieces then carry a native e^{-t}
    weight and converge spectrally.
    """
    t, w = laguerre_rule(order)
    u_lo = np.maximum(np.exp(-t), TINY)  # clamp: exp underflow at large nodes
    lower = float(w @ (h(u_lo) * np.exp(-u_lo)))
    upper = math.exp(-1.0) * float(w @ h(1.0 + t))
    return lower + upper


def expect_quadrature(model, theta, g, rtol=1e-9, start_order=32, max_order=512):
    """Expectation of g(X) under model at theta, X = model.transform(theta, U).

    U is unit exponential, so the integral reduces to a Gamma-type integral on
    (0, inf) with weight e^{-u} and no heavy-tail truncation. The order is
    chosen by doubling until two consecutive orders agree to rtol relative;
    failure to converge by max_order raises QuadratureNotConverged. g must
    accept an ndarray of observations and evaluate elementwise.
    """

    def h(u):
        return np.asarray(g(model.transform(theta, u)), dtype=float)

    prev = _unit_exponential_quad(h, start_order)
    order = 2 * start_order
    while order <= max_order:
        cur = _unit_exponential_quad(h, order)
        if abs(cur - prev) <= rtol * (1.0 + abs(cur)):
            return cur
        prev = cur
        order *= 2
    raise QuadratureNotConverged(
        f"expect_quadrature: doubling test still failing at order {max_order}"
    )
