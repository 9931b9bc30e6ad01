"""Figure rendering for the report paths.

Every renderer takes report data plus a target path, draws with the Agg
backend (no display needed), writes a PNG, and returns the path. The CLI
drops these files next to the delimited output unless asked not to.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def render_sim_figure(report, path):
    """Empirical bias with 3 SE bars against first-order theory."""
    coords = report.coord_names
    fig, axes = plt.subplots(1, len(coords), figsize=(4.2 * len(coords), 3.4))
    axes = np.atleast_1d(axes)
    width = 0.35
    for c, (axis, coord) in enumerate(zip(axes, coords)):
        for offset, name, color in ((0.0, "mle", "tab:blue"), (width, "wf", "tab:orange")):
            stats = report.estimators[name]
            axis.bar(
                offset, stats["bias"][c], width=width,
                yerr=3.0 * stats["se"][c], capsize=4,
                label=name.upper(), color=color, alpha=0.8,
            )
            axis.plot(
                [offset - width / 2, offset + width / 2],
                [stats["theory_bias"][c]] * 2,
                color="black", linewidth=1.4,
            )
        axis.axhline(0.0, color="gray", linewidth=0.6)
        axis.set_xticks([0.0, width])
        axis.set_xticklabels(["MLE", "WF"])
        axis.set_title(f"bias of {coord} (n={report.n})")
        axis.set_ylabel("empirical bias, 3 SE bars; black = theory")
    return _finish(fig, path)


def render_sweep_figure(sweep, path):
    """log-log RMSE against n with the fitted slopes in the legend."""
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ns = [row["n"] for row in sweep.rows]
    for name, marker in (("mle", "o"), ("wf", "s")):
        for c, coord in enumerate(sweep.coord_names):
            rmse = [row[f"rmse_{name}"][c] for row in sweep.rows]
            ax.loglog(
                ns, rmse, marker=marker,
                label=f"{name.upper()} {coord} (slope {sweep.slopes[name][c]:.3f})",
            )
    ax.set_xlabel("n")
    ax.set_ylabel("RMSE")
    ax.set_title("root-n convergence")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def render_shift_figure(result, path):
    """n * mean shift per grid point with 3 SE bars against I^-1 a."""
    fig, axes = plt.subplots(
        1, len(result.coord_names), figsize=(4.2 * len(result.coord_names), 3.4)
    )
    axes = np.atleast_1d(axes)
    ns = [row["n"] for row in result.rows]
    for c, (axis, coord) in enumerate(zip(axes, result.coord_names)):
        means = [row["scaled_mean"][c] for row in result.rows]
        errs = [3.0 * row["scaled_se"][c] for row in result.rows]
        axis.errorbar(ns, means, yerr=errs, fmt="o", capsize=4, label="n * mean shift")
        axis.axhline(result.theory[c], color="black", linewidth=1.2, label="theory")
        axis.set_xscale("log")
        axis.set_xlabel("n")
        axis.set_title(f"shift scaling: {coord}")
        axis.legend(fontsize=8)
    return _finish(fig, path)


def render_bias_table_figure(rows, path):
    """Shape-bias magnitudes and their ratio along the lam = 1 slice."""
    slice_rows = sorted(
        (r for r in rows if r["lambda"] == 1.0), key=lambda r: r["k"]
    )
    fig, (left, right) = plt.subplots(1, 2, figsize=(8.4, 3.4))
    if slice_rows:
        ks = [r["k"] for r in slice_rows]
        n = slice_rows[0]["n"]
        left.plot(ks, [abs(r["mle_bias_k"]) for r in slice_rows], "o-", label="|ML bias|")
        left.plot(ks, [abs(r["wf_bias_k"]) for r in slice_rows], "s-", label="|WF bias|")
        left.set_xlabel("k")
        left.set_ylabel(f"|shape bias| at n={n}")
        left.legend(fontsize=8)
        right.plot(ks, [r["ratio_R"] for r in slice_rows], "o-")
        right.axhline(1.0, color="gray", linewidth=0.8)
        right.set_xlabel("k")
        right.set_ylabel("bias ratio R(k, 1)")
    fig.suptitle("first-order shape bias, lam = 1 slice")
    return _finish(fig, path)


def render_parts_figure(report_dict, path):
    """Assertion/detail decomposition next to the BIC form."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    units = report_dict.get("units", "nats")
    assertion = report_dict["assertion"]
    detail = report_dict["detail"]
    ax.bar(0, assertion, width=0.5, label="assertion", color="tab:blue")
    ax.bar(0, detail, width=0.5, bottom=assertion, label="detail", color="tab:orange")
    ax.bar(1, report_dict["bic_form"], width=0.5, label="BIC form", color="tab:gray")
    ax.set_xticks([0, 1])
    ax.set_xticklabels(["two-part", "BIC"])
    ax.set_ylabel(units)
    ax.set_title(f"message length (gap {report_dict['gap']:.3f} {units})")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def render_gap_profile_figure(profile, path):
    """Gap against n: the O(1) residual after removing the BIC growth."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ns = [n for n, _ in profile]
    gaps = [g for _, g in profile]
    ax.plot(ns, gaps, "o-")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("gap (nats)")
    ax.set_title("two-part length minus BIC form")
    return _finish(fig, path)


def render_verify_figure(results, path):
    """One horizontal bar per criterion, green for pass, red for fail."""
    fig, ax = plt.subplots(figsize=(6.4, 0.42 * len(results) + 1.2))
    names = [r.name for r in results]
    times = [r.seconds for r in results]
    colors = ["tab:green" if r.passed else "tab:red" for r in results]
    positions = np.arange(len(results))
    ax.barh(positions, times, color=colors, alpha=0.85)
    ax.set_yticks(positions)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("seconds")
    passed = sum(r.passed for r in results)
    ax.set_title(f"acceptance criteria: {passed}/{len(results)} passed")
    return _finish(fig, path)
