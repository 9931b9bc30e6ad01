"""Monte Carlo harness for the estimator family.

Determinism contract: a report is a pure function of its config. Replicate r
always draws from RngStream(seed, base + r), results land in index-addressed
arrays, and reductions run in fixed array order, so the output is
byte-identical no matter how many worker processes the run fans out across.
Work is split into fixed-size replicate blocks (not per-worker shares) and
workers rebuild the model and prior from their registry names, which keeps
the task payloads picklable.

Failed replicates (no convergence) are excluded from every statistic and
counted, never silently dropped; more than 1% failures aborts the run since
at that point the numbers would grade the solver, not the theory.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bias import compute_cumulants, cox_snell_bias, wf_bias
from .errors import (
    ConfigError,
    DegenerateData,
    NoConvergence,
    NotPositiveDefinite,
    TooManyFailures,
)
from .estimators import fit_mle, fit_wf, predicted_shift
from .models import get_model
from .numerics import RngStream, solve_spd
from .priors import get_prior, penalty_gradient_a

THREADS_ENV = "MML_ESTIM_THREADS"
BLOCK = 256  # replicates per task; fixed so the split never depends on workers
FAILURE_BUDGET = 0.01

# Streams for different grid points of a sweep are offset by this much so no
# replicate stream is ever reused across grid points.
GRID_STREAM_STRIDE = 1_000_000


def worker_count(workload: int) -> int:
    """Resolve the worker count from MML_ESTIM_THREADS (0 or unset = auto).

    Auto serializes small runs: process startup costs more than a few
    thousand fits. The returned count never affects results, only wall time.
    """
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw and raw != "0":
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        if value < 0:
            raise ConfigError(f"{THREADS_ENV} must be >= 0, got {value}")
        return max(1, value)
    if workload < 2_000_000:
        return 1
    return min(os.cpu_count() or 1, 8)


@dataclass(frozen=True)
class SimConfig:
    model: str
    prior: str
    theta0: tuple
    n: int
    replicates: int
    seed: int
    outputs: tuple = ("mean", "bias", "se", "cov", "shift")

    def validate(self):
        model = get_model(self.model)
        get_prior(self.prior, model)
        model.make_point(np.asarray(self.theta0, dtype=float))
        if self.n < model.dim + 1:
            raise ConfigError(f"simulate: n must be >= {model.dim + 1}, got {self.n}")
        if self.replicates < 100:
            raise ConfigError(
                f"simulate: replicates must be >= 100 for any bias claim, "
                f"got {self.replicates}"
            )
        return model


def _fit_pair(model, prior, theta0_vals, n, seed, stream_id):
    """One replicate: sample, fit both estimators. NaNs mark failures."""
    d = model.dim
    data = model.sample(theta0_vals, n, RngStream(seed, stream_id))
    try:
        mle = fit_mle(model, data)
        mle_vals, mle_ok = mle.theta_hat.values, True
    except (NoConvergence, DegenerateData, NotPositiveDefinite):
        mle_vals, mle_ok = np.full(d, np.nan), False
    if mle_ok:
        try:
            wf = fit_wf(model, prior, data, init=mle.theta_hat)
            wf_vals, wf_ok = wf.theta_hat.values, True
        except (NoConvergence, DegenerateData, NotPositiveDefinite):
            wf_vals, wf_ok = np.full(d, np.nan), False
    else:
        wf_vals, wf_ok = np.full(d, np.nan), False
    return mle_vals, wf_vals, mle_ok, wf_ok


def _replicate_block(model_name, prior_name, theta0, n, seed, base, r0, r1):
    model = get_model(model_name)
    prior = get_prior(prior_name, model)
    theta0_vals = np.asarray(theta0, dtype=float)
    count = r1 - r0
    mle = np.empty((count, model.dim))
    wf = np.empty((count, model.dim))
    mle_ok = np.empty(count, dtype=bool)
    wf_ok = np.empty(count, dtype=bool)
    for idx, r in enumerate(range(r0, r1)):
        mle[idx], wf[idx], mle_ok[idx], wf_ok[idx] = _fit_pair(
            model, prior, theta0_vals, n, seed, base + r
        )
    return r0, mle, wf, mle_ok, wf_ok


def _collect(model_name, prior_name, theta0, n, replicates, seed, base=0):
    """Fit all replicates into index-addressed arrays (parallel or serial)."""
    model = get_model(model_name)
    d = model.dim
    mle = np.empty((replicates, d))
    wf = np.empty((replicates, d))
    mle_ok = np.empty(replicates, dtype=bool)
    wf_ok = np.empty(replicates, dtype=bool)
    blocks = [
        (r0, min(r0 + BLOCK, replicates)) for r0 in range(0, replicates, BLOCK)
    ]
    workers = worker_count(replicates * n)
    if workers == 1 or len(blocks) == 1:
        results = (
            _replicate_block(model_name, prior_name, theta0, n, seed, base, r0, r1)
            for r0, r1 in blocks
        )
        for r0, mb, wb, mo, wo in results:
            span = slice(r0, r0 + mb.shape[0])
            mle[span], wf[span], mle_ok[span], wf_ok[span] = mb, wb, mo, wo
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _replicate_block,
                    model_name, prior_name, theta0, n, seed, base, r0, r1,
                )
                for r0, r1 in blocks
            ]
            for future in futures:
                r0, mb, wb, mo, wo = future.result()
                span = slice(r0, r0 + mb.shape[0])
                mle[span], wf[span], mle_ok[span], wf_ok[span] = mb, wb, mo, wo
    return mle, wf, mle_ok, wf_ok


def _estimator_stats(estimates, ok, theta0_vals, n, theory_bias):
    kept = estimates[ok]
    m = kept.shape[0]
    mean = kept.mean(axis=0)
    se = kept.std(axis=0, ddof=1) / np.sqrt(m)
    bias = mean - theta0_vals
    dev = np.sqrt(n) * (kept - theta0_vals)
    cov = np.atleast_2d(np.cov(dev, rowvar=False, ddof=1))
    z = _safe_z(bias - theory_bias, se)
    return {
        "mean": mean.tolist(),
        "bias": bias.tolist(),
        "se": se.tolist(),
        "cov": cov.tolist(),
        "theory_bias": np.asarray(theory_bias, dtype=float).tolist(),
        "z": z.tolist(),
        "converged": int(m),
        "failures": int((~ok).sum()),
    }


def _safe_z(dev, se):
    dev = np.asarray(dev, dtype=float)
    se = np.asarray(se, dtype=float)
    z = np.empty_like(dev)
    for i in range(dev.size):
        if se.flat[i] > 0.0:
            z.flat[i] = dev.flat[i] / se.flat[i]
        else:
            z.flat[i] = 0.0 if dev.flat[i] == 0.0 else np.inf
    return z


@dataclass
class SimReport:
    """Aggregated Monte Carlo statistics with standard errors.

    estimators maps 'mle'/'wf' to mean, bias, SE, covariance of
    sqrt(n)(theta_hat - theta0), the matching first-order theory values, and
    z-scores; shift holds the mean pairwise WF - ML difference over the
    replicates where both fits converged.
    """

    model: str
    prior: str
    theta0: list
    n: int
    replicates: int
    seed: int
    coord_names: list
    estimators: dict
    shift: dict
    failures: int

    def to_json(self) -> str:
        payload = {
            "model": self.model,
            "prior": self.prior,
            "theta0": self.theta0,
            "n": self.n,
            "replicates": self.replicates,
            "seed": self.seed,
            "coord_names": self.coord_names,
            "estimators": self.estimators,
            "shift": self.shift,
            "failures": self.failures,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SimReport":
        payload = json.loads(text)
        return cls(**payload)

    def csv_rows(self):
        """One row per estimator x coordinate, plus the pairwise shift rows."""
        rows = []
        for name in ("mle", "wf"):
            stats = self.estimators[name]
            for c, coord in enumerate(self.coord_names):
                rows.append(
                    {
                        "estimator": name,
                        "coordinate": coord,
                        "estimate_mean": stats["mean"][c],
                        "bias": stats["bias"][c],
                        "se": stats["se"][c],
                        "theory_value": stats["theory_bias"][c],
                        "z_score": stats["z"][c],
                    }
                )
        for c, coord in enumerate(self.coord_names):
            rows.append(
                {
                    "estimator": "shift",
                    "coordinate": coord,
                    "estimate_mean": self.shift["mean"][c],
                    "bias": self.shift["mean"][c],
                    "se": self.shift["se"][c],
                    "theory_value": self.shift["theory"][c],
                    "z_score": self.shift["z"][c],
                }
            )
        return rows

    def to_csv(self) -> str:
        return render_csv(self.csv_rows())


CSV_FIELDS = (
    "estimator",
    "coordinate",
    "estimate_mean",
    "bias",
    "se",
    "theory_value",
    "z_score",
)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return f"{value:.9g}"


def render_csv(rows, fields=CSV_FIELDS) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    return buffer.getvalue()


def parse_csv(text: str):
    """Inverse of render_csv: numeric fields back to floats."""
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for raw in reader:
        row = {}
        for key, value in raw.items():
            if value is None or value == "":
                row[key] = value
                continue
            try:
                row[key] = float(value)
            except ValueError:
                row[key] = value
        rows.append(row)
    return rows


def run_sim(cfg: SimConfig) -> SimReport:
    """Fit both estimators over all replicates and aggregate.

    Raises TooManyFailures when more than 1% of replicates fail to produce a
    converged estimator pair.
    """
    model = cfg.validate()
    prior = get_prior(cfg.prior, model)
    theta0_vals = np.asarray(cfg.theta0, dtype=float)

    mle, wf, mle_ok, wf_ok = _collect(
        cfg.model, cfg.prior, tuple(cfg.theta0), cfg.n, cfg.replicates, cfg.seed
    )
    both_ok = mle_ok & wf_ok
    failures = int((~both_ok).sum())
    if failures > FAILURE_BUDGET * cfg.replicates:
        raise TooManyFailures(
            f"run_sim: {failures} of {cfg.replicates} replicates failed to converge"
        )

    cumulants = compute_cumulants(model, theta0_vals)
    theory_mle = cox_snell_bias(model, theta0_vals, cfg.n, cumulants=cumulants)
    theory_wf = wf_bias(model, prior, theta0_vals, cfg.n, cumulants=cumulants)
    theory_shift = predicted_shift(model, prior, theta0_vals, cfg.n)

    stats = {
        "mle": _estimator_stats(mle, mle_ok, theta0_vals, cfg.n, theory_mle),
        "wf": _estimator_stats(wf, wf_ok, theta0_vals, cfg.n, theory_wf),
    }

    diffs = (wf - mle)[both_ok]
    pairs = diffs.shape[0]
    shift_mean = diffs.mean(axis=0)
    shift_se = diffs.std(axis=0, ddof=1) / np.sqrt(pairs)
    shift = {
        "mean": shift_mean.tolist(),
        "se": shift_se.tolist(),
        "theory": np.asarray(theory_shift, dtype=float).tolist(),
        "z": _safe_z(shift_mean - theory_shift, shift_se).tolist(),
        "pairs": pairs,
    }

    return SimReport(
        model=cfg.model,
        prior=cfg.prior,
        theta0=theta0_vals.tolist(),
        n=cfg.n,
        replicates=cfg.replicates,
        seed=cfg.seed,
        coord_names=list(model.coord_names),
        estimators=stats,
        shift=shift,
        failures=failures,
    )


def _per_grid_replicates(replicates, count):
    if np.isscalar(replicates):
        values = [int(replicates)] * count
    else:
        values = [int(r) for r in replicates]
        if len(values) != count:
            raise ConfigError(
                f"replicates list length {len(values)} does not match grid size {count}"
            )
    for value in values:
        if value < 100:
            raise ConfigError("replicates must be >= 100 for any bias claim")
    return values


@dataclass
class SweepResult:
    """consistency_sweep output: per-n RMSE and fitted log-log slopes."""

    model: str
    prior: str
    theta0: list
    seed: int
    coord_names: list
    rows: list = field(default_factory=list)  # dicts: n, rmse_mle, rmse_wf, ...
    slopes: dict = field(default_factory=dict)

    def csv_rows(self):
        out = []
        for row in self.rows:
            for name in ("mle", "wf"):
                for c, coord in enumerate(self.coord_names):
                    out.append(
                        {
                            "estimator": name,
                            "coordinate": coord,
                            "n": row["n"],
                            "rmse": row[f"rmse_{name}"][c],
                            "bias_times_n": row[f"bias_{name}"][c] * row["n"],
                            "failures": row["failures"],
                        }
                    )
        return out

    def to_csv(self) -> str:
        return render_csv(
            self.csv_rows(),
            fields=("estimator", "coordinate", "n", "rmse", "bias_times_n", "failures"),
        )


def consistency_sweep(
    model_name, prior_name, theta0, n_grid, replicates, seed
) -> SweepResult:
    """RMSE against n with fitted log-log slopes (root-n rate check).

    Grid point g uses streams g * GRID_STREAM_STRIDE + r, so draws are
    independent across the grid as well as across replicates.
    """
    model = get_model(model_name)
    theta0_vals = np.asarray(theta0, dtype=float)
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigError("consistency_sweep: n_grid must be strictly increasing")
    per_grid = _per_grid_replicates(replicates, len(n_grid))

    result = SweepResult(
        model=model_name,
        prior=prior_name,
        theta0=theta0_vals.tolist(),
        seed=seed,
        coord_names=list(model.coord_names),
    )
    for g, (n, reps) in enumerate(zip(n_grid, per_grid)):
        mle, wf, mle_ok, wf_ok = _collect(
            model_name, prior_name, tuple(theta0_vals), n, reps, seed,
            base=g * GRID_STREAM_STRIDE,
        )
        both = mle_ok & wf_ok
        failures = int((~both).sum())
        if failures > FAILURE_BUDGET * reps:
            raise TooManyFailures(
                f"consistency_sweep: {failures} of {reps} replicates failed at n={n}"
            )
        rmse_mle = np.sqrt(((mle[both] - theta0_vals) ** 2).mean(axis=0))
        rmse_wf = np.sqrt(((wf[both] - theta0_vals) ** 2).mean(axis=0))
        result.rows.append(
            {
                "n": n,
                "rmse_mle": rmse_mle.tolist(),
                "rmse_wf": rmse_wf.tolist(),
                "bias_mle": (mle[both].mean(axis=0) - theta0_vals).tolist(),
                "bias_wf": (wf[both].mean(axis=0) - theta0_vals).tolist(),
                "failures": failures,
            }
        )
    log_n = np.log(np.asarray(n_grid, dtype=float))
    slopes = {}
    for name in ("mle", "wf"):
        per_coord = []
        for c in range(model.dim):
            log_rmse = np.log([row[f"rmse_{name}"][c] for row in result.rows])
            per_coord.append(float(np.polyfit(log_n, log_rmse, 1)[0]))
        slopes[name] = per_coord
    result.slopes = slopes
    return result


@dataclass
class ShiftScalingResult:
    """shift_scaling_check output: n * mean shift against I^-1 a per grid n."""

    model: str
    prior: str
    theta0: list
    seed: int
    coord_names: list
    theory: list  # I^-1 a at theta0 (n-free)
    rows: list = field(default_factory=list)

    def csv_rows(self):
        out = []
        for row in self.rows:
            for c, coord in enumerate(self.coord_names):
                out.append(
                    {
                        "coordinate": coord,
                        "n": row["n"],
                        "n_times_mean_shift": row["scaled_mean"][c],
                        "se": row["scaled_se"][c],
                        "theory_value": self.theory[c],
                        "z_score": row["z"][c],
                    }
                )
        return out

    def to_csv(self) -> str:
        return render_csv(
            self.csv_rows(),
            fields=(
                "coordinate", "n", "n_times_mean_shift", "se", "theory_value",
                "z_score",
            ),
        )


def shift_scaling_check(
    model_name, prior_name, theta0, n_grid, replicates, seed
) -> ShiftScalingResult:
    """Mean pairwise shift times n against the n-free prediction I^-1 a."""
    model = get_model(model_name)
    prior = get_prior(prior_name, model)
    theta0_vals = np.asarray(theta0, dtype=float)
    n_grid = [int(n) for n in n_grid]
    per_grid = _per_grid_replicates(replicates, len(n_grid))

    theory = solve_spd(
        model.fisher(theta0_vals), penalty_gradient_a(model, prior, theta0_vals)
    )

    result = ShiftScalingResult(
        model=model_name,
        prior=prior_name,
        theta0=theta0_vals.tolist(),
        seed=seed,
        coord_names=list(model.coord_names),
        theory=theory.tolist(),
    )
    for g, (n, reps) in enumerate(zip(n_grid, per_grid)):
        mle, wf, mle_ok, wf_ok = _collect(
            model_name, prior_name, tuple(theta0_vals), n, reps, seed,
            base=g * GRID_STREAM_STRIDE,
        )
        both = mle_ok & wf_ok
        failures = int((~both).sum())
        if failures > FAILURE_BUDGET * reps:
            raise TooManyFailures(
                f"shift_scaling_check: {failures} of {reps} replicates failed at n={n}"
            )
        diffs = (wf - mle)[both]
        scaled_mean = n * diffs.mean(axis=0)
        scaled_se = n * diffs.std(axis=0, ddof=1) / np.sqrt(diffs.shape[0])
        result.rows.append(
            {
                "n": n,
                "scaled_mean": scaled_mean.tolist(),
                "scaled_se": scaled_se.tolist(),
                "z": _safe_z(scaled_mean - theory, scaled_se).tolist(),
                "failures": failures,
            }
        )
    return result
