"""Command-line surface: fit, bias-table, codelength, simulate, verify.

Configuration is a flat key=value text file ('#' comments allowed) merged
with command-line overrides; unknown keys are rejected per command so a typo
cannot silently fall back to a default. All numeric output is printed with 9
significant digits: stable enough for golden-file comparison at a relative
tolerance of 1e-7 without being bit-fragile across platforms.

Exit codes: 0 ok, 1 verification failure, 2 I/O or config error, 3 numerical
failure. When --out is given, report commands also render matplotlib figures
next to the delimited output; --no-figures suppresses that.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bias import compute_cumulants, cox_snell_bias, wf_bias
from .codelength import bic_gap_profile, message_length
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateData,
    DomainError,
    EstimError,
    NoConvergence,
    NonFiniteEvaluation,
    NotPositiveDefinite,
    QuadratureNotConverged,
    SymmetryViolation,
    TooManyFailures,
)
from .estimators import fit_mle, fit_wf, predicted_shift
from .models import (
    get_model,
    load_dataset,
    weibull_bias_ratio,
    weibull_mle_bias_closed,
    weibull_mml_bias_closed,
)
from .priors import get_prior
from .simulate import (
    SimConfig,
    consistency_sweep,
    render_csv,
    run_sim,
    shift_scaling_check,
)
from . import verify as verify_mod

CONFIG_KEYS = {
    "fit": {"model", "prior", "data", "init", "seed", "out", "format"},
    "bias-table": {"model", "prior", "ks", "lambdas", "ns", "out", "format"},
    "codelength": {
        "model", "prior", "data", "theta", "bits", "profile_ns", "out", "format",
    },
    "simulate": {
        "model", "prior", "mode", "theta0", "n", "replicates", "n_grid", "seed",
        "out", "format",
    },
    "verify": {"fast", "seed", "out", "format"},
}

NUMERICAL_ERRORS = (
    NoConvergence,
    NotPositiveDefinite,
    QuadratureNotConverged,
    NonFiniteEvaluation,
    DegenerateData,
    SymmetryViolation,
    TooManyFailures,
)

IO_ERRORS = (ConfigError, DataFormatError, DomainError, OSError)


def fmt(value) -> str:
    """9 significant digits for every number the CLI prints."""
    return f"{float(value):.9g}"


def load_config_file(path) -> dict:
    config = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected key=value, got {text!r}"
                )
            key, _, value = text.partition("=")
            config[key.strip()] = value.strip()
    return config


def merge_config(args) -> dict:
    config = {}
    if args.config:
        config.update(load_config_file(args.config))
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        config[key.strip()] = value.strip()
    # dedicated flags override file keys
    if getattr(args, "data", None):
        config["data"] = args.data
    if args.seed is not None:
        config["seed"] = str(args.seed)
    if args.out:
        config["out"] = args.out
    if args.format:
        config["format"] = args.format
    if getattr(args, "fast", False):
        config["fast"] = "true"
    if getattr(args, "bits", False):
        config["bits"] = "true"
    allowed = CONFIG_KEYS[args.command]
    unknown = sorted(set(config) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown config key(s) for {args.command}: {', '.join(unknown)} "
            f"(allowed: {', '.join(sorted(allowed))})"
        )
    return config


def _require(config, key, command):
    if key not in config or config[key] == "":
        raise ConfigError(f"{command}: required config field {key!r} is missing")
    return config[key]


def _get_int(config, key, default=None):
    if key not in config:
        return default
    try:
        return int(config[key])
    except ValueError:
        raise ConfigError(f"config field {key!r} must be an integer, got {config[key]!r}") from None


def _get_bool(config, key, default=False):
    if key not in config:
        return default
    text = config[key].lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"config field {key!r} must be boolean, got {config[key]!r}")


def _get_floats(config, key, default=None):
    if key not in config:
        return default
    try:
        return [float(part) for part in config[key].split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(
            f"config field {key!r} must be comma-separated numbers, got {config[key]!r}"
        ) from None


def _get_ints(config, key, default=None):
    floats = _get_floats(config, key, None)
    if floats is None:
        return default
    return [int(v) for v in floats]


def _model_prior(config, default_prior="half_cauchy_product"):
    model = get_model(config.get("model", "weibull"))
    prior = get_prior(config.get("prior", default_prior), model)
    return model, prior


def _write_out(config, text) -> Path:
    out = Path(config["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    return out


def _figures_enabled(args) -> bool:
    return not args.no_figures


def cmd_fit(args, config) -> int:
    model, prior = _model_prior(config)
    data = load_dataset(_require(config, "data", "fit"))
    init_vals = _get_floats(config, "init")
    init = model.make_point(init_vals) if init_vals is not None else None
    mle = fit_mle(model, data, init=init)
    wf = fit_wf(model, prior, data, init=mle.theta_hat)
    predicted = predicted_shift(model, prior, mle.theta_hat, data.n)
    observed = wf.theta_hat.values - mle.theta_hat.values

    coords = model.coord_names
    header = ["estimator"] + list(coords) + ["residual", "iterations"]
    lines = [
        f"n = {data.n}  model = {model.name}  prior = {prior.kind}",
        "  ".join(f"{h:>15}" for h in header),
    ]
    for name, result in (("mle", mle), ("wf", wf)):
        cells = [name] + [fmt(v) for v in result.theta_hat.values]
        cells += [fmt(result.residual), str(result.iterations)]
        lines.append("  ".join(f"{c:>15}" for c in cells))
    for label, vector in (("predicted_shift", predicted), ("observed_shift", observed)):
        cells = [label] + [fmt(v) for v in vector] + ["", ""]
        lines.append("  ".join(f"{c:>15}" for c in cells))
    print("\n".join(lines))

    payload = {
        "model": model.name,
        "prior": prior.kind,
        "n": data.n,
        "coord_names": list(coords),
        "mle": {
            "theta": [float(v) for v in mle.theta_hat.values],
            "residual": mle.residual,
            "iterations": mle.iterations,
            "objective": mle.objective,
        },
        "wf": {
            "theta": [float(v) for v in wf.theta_hat.values],
            "residual": wf.residual,
            "iterations": wf.iterations,
            "objective": wf.objective,
        },
        "predicted_shift": [float(v) for v in predicted],
        "observed_shift": [float(v) for v in observed],
    }
    if "out" in config:
        if config.get("format", "json") == "csv":
            rows = []
            for name in ("mle", "wf"):
                for coord, value in zip(coords, payload[name]["theta"]):
                    rows.append(
                        {"section": name, "field": coord, "value": value}
                    )
                rows.append(
                    {"section": name, "field": "residual", "value": payload[name]["residual"]}
                )
            for section in ("predicted_shift", "observed_shift"):
                for coord, value in zip(coords, payload[section]):
                    rows.append({"section": section, "field": coord, "value": value})
            _write_out(config, render_csv(rows, fields=("section", "field", "value")))
        else:
            _write_out(config, json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_bias_table(args, config) -> int:
    model, prior = _model_prior(config)
    if model.name != "weibull":
        raise ConfigError("bias-table: closed-form columns exist for the weibull model only")
    ks = _get_floats(config, "ks", [0.5, 1.0, 2.0])
    lambdas = _get_floats(config, "lambdas", [0.5, 1.0, 2.0])
    ns = _get_ints(config, "ns", [100])
    rows = []
    worst = 0.0
    for k in ks:
        for lam in lambdas:
            theta = np.array([k, lam])
            cumulants = compute_cumulants(model, theta)
            for n in ns:
                closed_mle = weibull_mle_bias_closed(theta, n)
                closed_wf = weibull_mml_bias_closed(theta, n)
                generic_mle = cox_snell_bias(model, theta, n, cumulants=cumulants)
                generic_wf = wf_bias(model, prior, theta, n, cumulants=cumulants)
                pairs = np.concatenate([closed_mle, closed_wf]), np.concatenate(
                    [generic_mle, generic_wf]
                )
                discrepancy = float(
                    np.max(np.abs(pairs[0] - pairs[1]) / np.abs(pairs[0]))
                )
                worst = max(worst, discrepancy)
                rows.append(
                    {
                        "k": k,
                        "lambda": lam,
                        "n": n,
                        "mle_bias_k": closed_mle[0],
                        "mle_bias_lambda": closed_mle[1],
                        "wf_bias_k": closed_wf[0],
                        "wf_bias_lambda": closed_wf[1],
                        "ratio_R": weibull_bias_ratio(k) if lam == 1.0 else "",
                        "mle_bias_k_generic": generic_mle[0],
                        "mle_bias_lambda_generic": generic_mle[1],
                        "wf_bias_k_generic": generic_wf[0],
                        "wf_bias_lambda_generic": generic_wf[1],
                        "max_rel_discrepancy": discrepancy,
                    }
                )
    fields = (
        "k", "lambda", "n",
        "mle_bias_k", "mle_bias_lambda", "wf_bias_k", "wf_bias_lambda", "ratio_R",
        "mle_bias_k_generic", "mle_bias_lambda_generic",
        "wf_bias_k_generic", "wf_bias_lambda_generic",
        "max_rel_discrepancy",
    )
    text = render_csv(rows, fields=fields)
    print(text, end="")
    if "out" in config:
        out = _write_out(config, text)
        if _figures_enabled(args):
            from . import figures

            figures.render_bias_table_figure(
                rows, out.with_name(out.stem + "_ratio.png")
            )
    if worst > 1e-5:
        print(
            f"oracle mismatch: closed-form vs generic discrepancy {worst:.3e} "
            "exceeds 1e-5",
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_codelength(args, config) -> int:
    model, prior = _model_prior(config)
    data = load_dataset(_require(config, "data", "codelength"))
    theta_vals = _get_floats(config, "theta")
    if theta_vals is not None:
        theta = model.make_point(theta_vals)
    else:
        theta = fit_wf(model, prior, data).theta_hat
    report = message_length(model, prior, data, theta)
    if _get_bool(config, "bits"):
        report = report.in_bits()
    payload = report.as_dict()
    profile = None
    profile_ns = _get_ints(config, "profile_ns")
    if profile_ns:
        profile = bic_gap_profile(model, prior, data, profile_ns)
        payload = {"report": report.as_dict(), "profile": [[n, g] for n, g in profile]}

    if config.get("format", "json") == "csv":
        flat = report.as_dict()
        rows = [
            {"field": key, "value": value}
            for key, value in flat.items()
            if key not in ("units", "improper")
        ]
        rows.append({"field": "units", "value": flat["units"]})
        text = render_csv(rows, fields=("field", "value"))
    else:
        text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if "out" in config:
        out = _write_out(config, text)
        if _figures_enabled(args):
            from . import figures

            figures.render_parts_figure(
                report.as_dict(), out.with_name(out.stem + "_parts.png")
            )
            if profile:
                figures.render_gap_profile_figure(
                    profile, out.with_name(out.stem + "_gap.png")
                )
    return 0


def cmd_simulate(args, config) -> int:
    mode = config.get("mode", "bias")
    model_name = config.get("model", "weibull")
    prior_name = config.get("prior", "half_cauchy_product")
    theta0 = tuple(_get_floats(config, "theta0", [2.0, 1.0]))
    seed = _get_int(config, "seed", 0)
    replicates = _get_int(config, "replicates", 1000)
    out_path = None
    figure_renderer = None
    if mode == "bias":
        cfg = SimConfig(
            model=model_name,
            prior=prior_name,
            theta0=theta0,
            n=_get_int(config, "n", 100),
            replicates=replicates,
            seed=seed,
        )
        report = run_sim(cfg)
        text = report.to_csv() if config.get("format", "json") == "csv" else report.to_json()
        print(text, end="" if text.endswith("\n") else "\n")
        if "out" in config:
            out_path = _write_out(config, text)
            from . import figures

            figure_renderer = lambda: figures.render_sim_figure(
                report, out_path.with_name(out_path.stem + "_bias.png")
            )
    elif mode == "sweep":
        n_grid = _get_ints(config, "n_grid", [100, 400, 1600])
        sweep = consistency_sweep(
            model_name, prior_name, theta0, n_grid, replicates, seed
        )
        if config.get("format", "json") == "csv":
            text = sweep.to_csv()
        else:
            text = json.dumps(
                {
                    "rows": sweep.rows,
                    "slopes": sweep.slopes,
                    "coord_names": sweep.coord_names,
                },
                indent=2,
                sort_keys=True,
            )
        print(text, end="" if text.endswith("\n") else "\n")
        if "out" in config:
            out_path = _write_out(config, text)
            from . import figures

            figure_renderer = lambda: figures.render_sweep_figure(
                sweep, out_path.with_name(out_path.stem + "_rmse.png")
            )
    elif mode == "shift":
        n_grid = _get_ints(config, "n_grid", [200, 800])
        result = shift_scaling_check(
            model_name, prior_name, theta0, n_grid, replicates, seed
        )
        if config.get("format", "json") == "csv":
            text = result.to_csv()
        else:
            text = json.dumps(
                {
                    "rows": result.rows,
                    "theory": result.theory,
                    "coord_names": result.coord_names,
                },
                indent=2,
                sort_keys=True,
            )
        print(text, end="" if text.endswith("\n") else "\n")
        if "out" in config:
            out_path = _write_out(config, text)
            from . import figures

            figure_renderer = lambda: figures.render_shift_figure(
                result, out_path.with_name(out_path.stem + "_shift.png")
            )
    else:
        raise ConfigError(f"simulate: unknown mode {mode!r} (bias, sweep, shift)")
    if figure_renderer is not None and _figures_enabled(args):
        figure_renderer()
    return 0


def cmd_verify(args, config) -> int:
    fast = _get_bool(config, "fast", False)
    seed = _get_int(config, "seed", 0)
    results = verify_mod.run_all(fast=fast, seed=seed)
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    if "out" in config:
        payload = {
            "fast": fast,
            "seed": seed,
            "criteria": [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "detail": r.detail,
                    "seconds": r.seconds,
                }
                for r in results
            ],
            "passed": not failed,
        }
        out = _write_out(config, json.dumps(payload, indent=2, sort_keys=True))
        if _figures_enabled(args):
            from . import figures

            figures.render_verify_figure(
                results, out.with_name(out.stem + "_criteria.png")
            )
    if failed:
        print(
            "verification failed: " + ", ".join(r.name for r in failed),
            file=sys.stderr,
        )
        return 1
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "bias-table": cmd_bias_table,
    "codelength": cmd_codelength,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mml-estim",
        description=(
            "Penalised (Wallace-Freeman) and maximum-likelihood estimation "
            "with bias tables, codelengths, and Monte Carlo verification."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="write the report to this path")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument(
            "--set", action="append", metavar="KEY=VALUE",
            help="override a single config key (repeatable)",
        )
        p.add_argument(
            "--no-figures", action="store_true",
            help="skip figure rendering next to --out",
        )
        if command in ("fit", "codelength"):
            p.add_argument("--data", help="data file, one observation per line")
        if command == "codelength":
            p.add_argument("--bits", action="store_true", help="report in bits")
        if command == "verify":
            p.add_argument(
                "--fast", action="store_true",
                help="reduced replicates and wider statistical bands",
            )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = merge_config(args)
        return COMMANDS[args.command](args, config)
    except IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except EstimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
