"""Minimal SVG figure writers for the experiment results.

Everything here is presentation-only convenience for the CLI report path;
no numerical behavior depends on it. Figures are rendered headless through
the Agg backend and written as SVG with a fixed hash salt and no embedded
creation date, so rerunning a command reproduces the same bytes.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .empirical import EmpiricalRisk  # noqa: E402
from .experiments import (ConvergenceStudy, GramStudy, GridResult,  # noqa: E402
                          LambdaStudy, PhaseResult, ResolventErrorStudy)

plt.rcParams["svg.hashsalt"] = "rmt-repr"
plt.rcParams["figure.figsize"] = (6.0, 4.0)
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3

_SAVE_OPTS = {"format": "svg", "metadata": {"Date": None},
              "bbox_inches": "tight"}


def _finite(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr[np.isfinite(arr)]


def sweep_figure(result: GridResult, path: str,
                 title: Optional[str] = None) -> str:
    """Theory curve with simulation error bars along one sweep."""
    axis = [p.axis for p in result.points]
    theory = [p.theory.total if (p.theory and not p.divergent)
              else np.nan for p in result.points]
    fig, ax = plt.subplots()
    ax.plot(axis, theory, "-o", ms=3, label="theory", color="#1f77b4")
    has_emp = any(p.empirical is not None for p in result.points)
    if has_emp:
        emp = [p.empirical.mean if p.empirical else np.nan
               for p in result.points]
        err = [p.empirical.std_error if p.empirical else np.nan
               for p in result.points]
        ax.errorbar(axis, emp, yerr=err, fmt="s", ms=4, capsize=3,
                    label="simulation", color="#d62728")
    for p in result.points:
        if p.divergent:
            ax.axvline(p.axis, color="gray", ls=":", lw=1)
    finite_vals = _finite(theory)
    if finite_vals.size and finite_vals.max() > 20 * max(finite_vals.min(),
                                                         1e-300):
        ax.set_yscale("log")
    ax.set_xlabel(result.variable)
    ax.set_ylabel("total risk")
    ax.set_title(title or f"{result.map_kind}: risk vs {result.variable}")
    ax.legend()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def phase_figure(result: PhaseResult, path: str) -> str:
    """Winner map over (N, rho) with the theory frontier overlaid."""
    nN, nr = len(result.N_grid), len(result.rho_grid)
    gap = np.array([np.log10(c.theory_esn / c.theory_ridge)
                    for c in result.cells]).reshape(nN, nr)
    fig, ax = plt.subplots()
    lim = max(abs(gap).max(), 1e-12)
    im = ax.imshow(gap, origin="lower", aspect="auto", cmap="RdBu",
                   vmin=-lim, vmax=lim,
                   extent=(-0.5, nr - 0.5, -0.5, nN - 0.5))
    ax.set_xticks(range(nr), [f"{r:g}" for r in result.rho_grid])
    ax.set_yticks(range(nN), [str(n) for n in result.N_grid])
    ax.set_xlabel("teacher decay rho")
    ax.set_ylabel("training samples N")
    ax.set_title("log10(reservoir risk / ridge risk) at optimal penalties")
    ax.grid(False)
    fig.colorbar(im, ax=ax, label="log10 risk ratio (blue: reservoir wins)")
    if result.frontier_theory:
        ys, xs = [], []
        rho = np.asarray(result.rho_grid)
        for N, cross in result.frontier_theory:
            i = result.N_grid.index(N)
            xs.append(np.interp(cross, rho, np.arange(nr)))
            ys.append(i)
        ax.plot(xs, ys, "k--", lw=1.5, label="theory frontier")
        ax.legend(loc="lower left")
    for idx, c in enumerate(result.cells):
        if c.empirical_winner is not None and c.significant:
            i, j = divmod(idx, nr)
            ax.text(j, i, "E" if c.empirical_winner == "esn" else "R",
                    ha="center", va="center", fontsize=7, color="black")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def gram_figure(study: GramStudy, path: str) -> str:
    """Log-log Gram deviation versus reservoir size with the fitted slope."""
    n = np.asarray(study.n_grid, dtype=float)
    dev = np.asarray(study.max_dev)
    fig, ax = plt.subplots()
    ax.loglog(n, dev, "o-", label="max entrywise deviation")
    anchor = dev[0] * (n / n[0]) ** study.slope
    ax.loglog(n, anchor, "--", color="gray",
              label=f"fitted slope {study.slope:.2f}")
    ref = dev[0] * (n / n[0]) ** -0.5
    ax.loglog(n, ref, ":", color="black", label="slope -1/2")
    ax.set_xlabel("reservoir size n")
    ax.set_ylabel("deviation from diagonal limit")
    ax.set_title(f"Gram concentration (T={study.T}, phi={study.phi:g})")
    ax.legend()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def convergence_figure(study: ConvergenceStudy, path: str) -> str:
    """Relative theory-vs-simulation gap at proportionally growing sizes."""
    fig, ax = plt.subplots()
    x = np.arange(len(study.rows))
    gaps = [r.rel_gap for r in study.rows]
    noise = [2 * r.emp_se / max(abs(r.theory), 1e-300) for r in study.rows]
    ax.semilogy(x, gaps, "o-", label="|theory - simulation| / theory")
    ax.semilogy(x, noise, "s--", label="2 std errors / theory")
    targets = [r.target for r in study.rows]
    if any(t is not None for t in targets):
        ax.semilogy(x, [t if t is not None else np.nan for t in targets],
                    "^:", color="gray", label="recorded target")
    ax.set_xticks(x, [r.label for r in study.rows])
    ax.set_xlabel("scenario size")
    ax.set_ylabel("relative gap")
    ax.set_title(f"proportional-size convergence ({study.kind})")
    ax.legend()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def resolvent_figure(study: ResolventErrorStudy, path: str) -> str:
    """Operator-norm error of averaged resolvents versus size."""
    n = np.asarray([r.n for r in study.rows], dtype=float)
    fig, ax = plt.subplots()
    ax.loglog(n, [r.err_resolvent for r in study.rows], "o-",
              label="resolvent mean")
    ax.loglog(n, [r.err_second_order for r in study.rows], "s-",
              label="second-order mean")
    ax.set_xlabel("feature dimension n (reps grow with n)")
    ax.set_ylabel("operator-norm error")
    ax.set_title(f"deterministic-equivalent errors (gamma={study.gamma:g}, "
                 f"lambda={study.lam:g})")
    ax.legend()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def lambda_figure(study: LambdaStudy, path: str) -> str:
    """Search result versus dense-grid argmin for every random scenario."""
    fig, ax = plt.subplots()
    xs = [s.grid_argmin for s in study.scenarios]
    ys = [s.lambda_star for s in study.scenarios]
    ax.loglog(xs, ys, "o", label="scenarios")
    lims = (min(min(xs), min(ys)) / 3, max(max(xs), max(ys)) * 3)
    ax.loglog(lims, lims, "--", color="gray", label="exact agreement")
    ax.set_xlabel("dense-grid argmin of lambda")
    ax.set_ylabel("golden-section lambda*")
    ax.set_title("penalty search vs 200-point grid")
    ax.legend()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def breakdown_figure(parts: dict, path: str, title: str) -> str:
    """Bar chart of one risk decomposition (bias^2 / variance / noise)."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    names = list(parts)
    vals = [parts[k] for k in names]
    ax.bar(names, vals, color=["#1f77b4", "#ff7f0e", "#2ca02c",
                               "#d62728"][:len(names)])
    ax.set_ylabel("risk contribution")
    ax.set_title(title)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def trials_figure(result: EmpiricalRisk, path: str, title: str) -> str:
    """Histogram of per-trial risks from one simulation run."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.hist(result.per_trial, bins=min(40, max(10, result.trials // 5)),
            color="#1f77b4", alpha=0.8)
    ax.axvline(result.mean, color="#d62728", lw=2,
               label=f"mean = {result.mean:.4g}")
    ax.set_xlabel("per-trial risk")
    ax.set_ylabel("count")
    ax.set_title(title)
    ax.legend()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path
