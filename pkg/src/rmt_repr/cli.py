"""Command-line entry point.

Five subcommands, each driven by a TOML scenario file:

- ``risk``      — closed-form risk of one scenario (no simulation).
- ``simulate``  — Monte Carlo risk of one scenario, with the theory value
                  alongside for comparison.
- ``sweep``     — theory + simulation along one swept variable.
- ``phase``     — reservoir-vs-ridge winner map over (samples, decay).
- ``validate``  — the internal consistency battery (Gram concentration,
                  proportional-size convergence, penalty search, averaged
                  resolvents).

Exit codes: 0 success; 2 configuration problem (unknown keys are reported
with their line number); 3 numerical failure inside a computation.

Outputs are CSV files (UTF-8, ``%.12g`` floats, ``inf`` sentinel for
divergent theory points) plus optional SVG figures, all carrying the
16-hex-digit SHA-256 prefix of the raw config file so any table can be
traced to its scenario. Nothing in the output depends on wall-clock time or
thread count: rerunning a command with the same config and seed reproduces
every CSV byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

try:                                    # 3.11+ standard library
    import tomllib
except ModuleNotFoundError:             # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .covariance import CovarianceSpec, build_covariance, generate_theta
from .empirical import empirical_risk_mc
from .errors import ConfigError, RmtError
from .experiments import (ScenarioConfig, SweepSpec, _theory_and_spectrum,
                          convergence_study, gram_concentration_study,
                          optimal_lambda_study, phase_diagram,
                          resolvent_error_study, run_sweep)
from .rmt_core import solve_fixed_point_spectral
from .rng import NS_POINT, NS_SCENARIO, child_seed

COMMANDS = ("risk", "simulate", "sweep", "phase", "validate")

_SCHEMA = {
    "model": {"T", "sigma_noise", "q", "sigma_u", "theta"},
    "model.sigma_u": {"kind", "decay", "values"},
    "model.theta": {"kind", "rho", "scale", "unit_norm"},
    "map": {"kind", "n_features", "phi", "normalization", "variance",
            "activation"},
    "experiment": {"N", "lam", "trials", "test_size", "exact_test",
                   "resample_map", "seed", "threads", "variable", "grid",
                   "N_grid", "rho_grid", "lam_fixed", "theory_only",
                   "checks", "arms"},
    "output": {"dir", "svg"},
}


# ---------------------------------------------------------------------------
# config loading and validation
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Everything one command invocation needs."""

    command: str
    scenario: Optional[ScenarioConfig]
    experiment: Dict[str, object]
    output_dir: Path
    seed: int
    emit_svg: bool
    threads: Optional[object]
    config_hash: str
    raw_config: bytes
    config_path: str


def _line_of(raw_text: str, key: str) -> Optional[int]:
    """1-based line of the first assignment to (or table headed by) key."""
    pat_assign = re.compile(rf"^\s*(?:\"{re.escape(key)}\"|{re.escape(key)})\s*=")
    pat_table = re.compile(rf"^\s*\[[^\]]*\b{re.escape(key)}\b[^\]]*\]")
    for i, line in enumerate(raw_text.splitlines(), start=1):
        if pat_assign.match(line) or pat_table.match(line):
            return i
    return None


def _check_keys(parsed: dict, raw_text: str) -> None:
    for section, content in parsed.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]",
                              line=_line_of(raw_text, section))
        if not isinstance(content, dict):
            raise ConfigError(f"top-level entry {section!r} must be a table",
                              line=_line_of(raw_text, section))
        allowed = _SCHEMA[section]
        for key, value in content.items():
            if key not in allowed:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]",
                    line=_line_of(raw_text, key))
            sub = f"{section}.{key}"
            if sub in _SCHEMA:
                if not isinstance(value, dict):
                    raise ConfigError(f"{sub} must be a table",
                                      line=_line_of(raw_text, key))
                for k2 in value:
                    if k2 not in _SCHEMA[sub]:
                        raise ConfigError(
                            f"unknown key {k2!r} in [{sub}]",
                            line=_line_of(raw_text, k2))


def _require(cond: bool, message: str, raw_text: str,
             key: Optional[str] = None) -> None:
    if not cond:
        raise ConfigError(message,
                          line=_line_of(raw_text, key) if key else None)


def _load_config(path: str):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = p.read_bytes()
    try:
        parsed = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    return raw, parsed


def _materialize_scenario(parsed: dict, raw_text: str, seed: int,
                          command: str) -> ScenarioConfig:
    """Build the concrete scenario record from [model]/[map]/[experiment]."""
    model = parsed.get("model", {})
    map_ = parsed.get("map", {})
    exp = parsed.get("experiment", {})

    _require("T" in model, "[model] needs T (input dimension)", raw_text,
             "model")
    T = model["T"]
    _require(isinstance(T, int) and T >= 1, "model.T must be an integer >= 1",
             raw_text, "T")
    sigma_noise = model.get("sigma_noise", 0.0)
    _require(isinstance(sigma_noise, (int, float)) and sigma_noise >= 0,
             "model.sigma_noise must be >= 0", raw_text, "sigma_noise")
    q = model.get("q", 1)
    _require(isinstance(q, int) and q >= 1, "model.q must be an integer >= 1",
             raw_text, "q")

    su = model.get("sigma_u", {"kind": "identity"})
    try:
        sigma_u = build_covariance(CovarianceSpec(
            kind=su.get("kind", "identity"), dim_T=T, decay=su.get("decay"),
            values=(np.asarray(su["values"], dtype=float)
                    if "values" in su else None)))
    except RmtError as exc:
        raise ConfigError(f"bad [model.sigma_u]: {exc}",
                          line=_line_of(raw_text, "sigma_u")) from exc

    th = model.get("theta", {"kind": "unit_rows"})
    kind = th.get("kind", "unit_rows")
    try:
        if kind == "decay":
            theta = generate_theta("decay", T, q=q, rho=th.get("rho"),
                                   scale=th.get("scale", 1.0))
        elif kind == "unit_rows":
            theta = generate_theta("unit_rows", T, q=q,
                                   scale=th.get("scale", 1.0),
                                   seed=child_seed(seed, NS_SCENARIO, 0))
        else:
            raise ConfigError(
                f"model.theta.kind must be 'decay' or 'unit_rows', "
                f"got {kind!r}", line=_line_of(raw_text, "kind"))
    except RmtError as exc:
        raise ConfigError(f"bad [model.theta]: {exc}",
                          line=_line_of(raw_text, "theta")) from exc
    if th.get("unit_norm", False):
        theta = theta / np.linalg.norm(theta)

    map_kind = map_.get("kind", "identity")
    _require(map_kind in ("identity", "random_projection", "linear_esn"),
             "map.kind must be identity, random_projection, or linear_esn",
             raw_text, "kind")
    phi = map_.get("phi")
    if map_kind == "linear_esn":
        _require(isinstance(phi, (int, float)) and 0 < phi < 1,
                 "map.phi must lie in (0, 1)", raw_text, "phi")
    n_features = map_.get("n_features")
    if n_features is not None:
        _require(isinstance(n_features, int) and n_features >= 1,
                 "map.n_features must be an integer >= 1", raw_text,
                 "n_features")
    if map_kind == "random_projection":
        _require(n_features is not None,
                 "random_projection needs map.n_features", raw_text, "map")
    normalization = map_.get("normalization", "asymptotic")
    _require(normalization in ("exact", "asymptotic"),
             "map.normalization must be 'exact' or 'asymptotic'", raw_text,
             "normalization")
    activation = map_.get("activation", "identity")
    _require(activation == "identity",
             "closed-form risks cover activation = 'identity' only",
             raw_text, "activation")
    variance = map_.get("variance")
    if variance is not None:
        _require(isinstance(variance, (int, float)) and variance > 0,
                 "map.variance must be positive", raw_text, "variance")

    sweep_var = exp.get("variable")
    _require("N" in exp, "[experiment] needs N (training samples)", raw_text,
             "experiment")
    N = exp["N"]
    _require(isinstance(N, int) and N >= 1,
             "experiment.N must be an integer >= 1", raw_text, "N")
    lam = exp.get("lam")
    if lam is None and sweep_var == "lambda":
        lam = 1.0                      # placeholder; the sweep replaces it
    _require(lam is not None, "[experiment] needs lam (ridge penalty)",
             raw_text, "experiment")
    _require(isinstance(lam, (int, float)) and lam > 0,
             "experiment.lam must be positive", raw_text, "lam")
    trials = exp.get("trials", 200)
    _require(isinstance(trials, int) and trials >= 1,
             "experiment.trials must be an integer >= 1", raw_text, "trials")
    test_size = exp.get("test_size", 2000)
    _require(isinstance(test_size, int) and test_size >= 1,
             "experiment.test_size must be an integer >= 1", raw_text,
             "test_size")

    needs_concrete = command == "simulate" or (
        command == "sweep" and not exp.get("theory_only", False)
        and sweep_var != "ratio_n_over_N")
    if map_kind == "linear_esn" and needs_concrete:
        _require(n_features is not None,
                 "simulating a reservoir needs map.n_features", raw_text,
                 "map")

    try:
        return ScenarioConfig(
            sigma_u=sigma_u, theta=theta, sigma_noise=float(sigma_noise),
            N=N, lam=float(lam), map_kind=map_kind, n_features=n_features,
            phi=None if phi is None else float(phi),
            normalization=normalization,
            projection_variance=None if variance is None else float(variance),
            theta_rho=th.get("rho"),
            theta_unit_norm=bool(th.get("unit_norm", False)),
            trials=trials, test_size=test_size,
            exact_test=bool(exp.get("exact_test", True)),
            resample_map=exp.get("resample_map"))
    except RmtError as exc:
        raise ConfigError(f"bad scenario: {exc}") from exc


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if np.isnan(f):
            return "nan"
        if np.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f"{f:.12g}"
    return str(v)


def _write_csv(path: Path, run: RunConfig, columns: Sequence[str],
               rows: Sequence[Sequence], extra_header: Sequence[str] = ()
               ) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# config_hash={run.config_hash}\n")
        f.write(f"# command={run.command} seed={run.seed}\n")
        for line in extra_header:
            f.write(f"# {line}\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _stamp_svg(path: Path, run: RunConfig) -> None:
    with open(path, "a", encoding="utf-8") as f:
        f.write(f"<!-- config_hash={run.config_hash} -->\n")


def _echo_config(run: RunConfig) -> None:
    (run.output_dir / "config_echo.toml").write_bytes(run.raw_config)


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------

def _theory_row(cfg: ScenarioConfig, seed: int):
    """Theory risk plus fixed-point quantities for one scenario."""
    theory, divergent, mu, _ = _theory_and_spectrum(
        cfg, child_seed(seed, NS_POINT, 0, 0))
    if divergent or theory is None:
        delta = kappa = alpha = float("nan")
        parts = dict(bias_sq=float("inf"), variance=float("inf"),
                     noise=cfg.sigma_noise ** 2, total=float("inf"))
    else:
        sol = solve_fixed_point_spectral(mu, cfg.lam, cfg.N)
        delta, kappa, alpha = sol.delta, sol.kappa, sol.alpha
        parts = dict(bias_sq=theory.bias_sq, variance=theory.variance,
                     noise=theory.noise, total=theory.total)
    return parts, delta, kappa, alpha, divergent


def _cmd_risk(run: RunConfig) -> None:
    cfg = run.scenario
    parts, delta, kappa, alpha, divergent = _theory_row(cfg, run.seed)
    columns = ["map_kind", "T", "n_features", "N", "lambda", "delta",
               "kappa", "alpha", "bias_sq", "variance", "noise", "total",
               "divergent"]
    row = [cfg.map_kind, cfg.T, cfg.n_features, cfg.N, cfg.lam, delta, kappa,
           alpha, parts["bias_sq"], parts["variance"], parts["noise"],
           parts["total"], divergent]
    out = _write_csv(run.output_dir / "risk.csv", run, columns, [row])
    print(f"wrote {out}")
    print(f"total risk = {_fmt(parts['total'])}  (bias^2 "
          f"{_fmt(parts['bias_sq'])}, variance {_fmt(parts['variance'])}, "
          f"noise {_fmt(parts['noise'])})")
    if run.emit_svg:
        from .plotting import breakdown_figure
        p = breakdown_figure(
            {k: parts[k] for k in ("bias_sq", "variance", "noise")},
            str(run.output_dir / "risk.svg"),
            f"{cfg.map_kind} risk decomposition")
        _stamp_svg(Path(p), run)
        print(f"wrote {p}")


def _cmd_simulate(run: RunConfig) -> None:
    cfg = run.scenario
    parts, _, _, _, divergent = _theory_row(cfg, run.seed)
    _, _, _, map_spec = _theory_and_spectrum(
        cfg, child_seed(run.seed, NS_POINT, 0, 0))
    emp = empirical_risk_mc(
        cfg.sigma_u, cfg.truth(), map_spec, cfg.N, cfg.lam,
        trials=cfg.trials, test_size=cfg.test_size,
        seed=child_seed(run.seed, NS_POINT, 0, 0),
        resample_reservoir=cfg.resample_default(),
        exact_test=cfg.exact_test, threads=run.threads)
    gap = abs(parts["total"] - emp.mean)
    flagged = bool(np.isfinite(parts["total"])
                   and gap > 4 * emp.std_error)
    columns = ["map_kind", "T", "n_features", "N", "lambda", "trials",
               "test_size", "exact_test", "resample_map", "emp_mean",
               "emp_se", "theory_total", "abs_gap", "flagged"]
    row = [cfg.map_kind, cfg.T, cfg.n_features, cfg.N, cfg.lam, cfg.trials,
           cfg.test_size, cfg.exact_test, cfg.resample_default(), emp.mean,
           emp.std_error, parts["total"], gap, flagged]
    out = _write_csv(run.output_dir / "simulate.csv", run, columns, [row])
    trials_out = _write_csv(
        run.output_dir / "simulate_trials.csv", run, ["trial", "risk"],
        [[t, r] for t, r in enumerate(emp.per_trial)])
    print(f"wrote {out}")
    print(f"wrote {trials_out}")
    print(f"simulated risk = {emp.mean:.6g} +/- {emp.std_error:.2g} "
          f"(theory {_fmt(parts['total'])}, "
          f"{'flagged' if flagged else 'consistent'})")
    if run.emit_svg:
        from .plotting import trials_figure
        p = trials_figure(emp, str(run.output_dir / "simulate.svg"),
                          f"{cfg.map_kind}: {cfg.trials} trials")
        _stamp_svg(Path(p), run)
        print(f"wrote {p}")


_SWEEP_COLUMNS = ["variable", "axis", "map_kind", "n_features", "N",
                  "lambda", "theory_bias_sq", "theory_variance",
                  "theory_noise", "theory_total", "divergent", "emp_mean",
                  "emp_se", "trials", "alpha", "alpha_small_lambda",
                  "active_modes", "rank_effective", "flagged"]


def _sweep_rows(result) -> List[List]:
    rows = []
    for p in result.points:
        inf = float("inf")
        if p.theory is None or p.divergent:
            tb = tv = tt = inf
            tn = np.nan
        else:
            tb, tv, tn, tt = (p.theory.bias_sq, p.theory.variance,
                              p.theory.noise, p.theory.total)
        rows.append([
            result.variable, p.axis, result.map_kind, p.n_features, p.N,
            p.lam, tb, tv, tn, tt, p.divergent,
            p.empirical.mean if p.empirical else None,
            p.empirical.std_error if p.empirical else None,
            p.empirical.trials if p.empirical else None,
            p.alpha, p.alpha_small_lambda, p.active_modes, p.rank_eff,
            p.flagged])
    return rows


def _cmd_sweep(run: RunConfig) -> None:
    exp = run.experiment
    variable = exp.get("variable")
    grid = exp.get("grid")
    if variable is None or grid is None:
        raise ConfigError("[experiment] needs 'variable' and 'grid' for "
                          "the sweep command")
    try:
        spec = SweepSpec(variable=str(variable),
                         grid=[float(g) for g in grid], base=run.scenario)
        spec.validate()
    except (RmtError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad sweep: {exc}") from exc
    result = run_sweep(spec, seed=run.seed, threads=run.threads,
                       theory_only=bool(exp.get("theory_only", False)))
    out = _write_csv(run.output_dir / "sweep.csv", run, _SWEEP_COLUMNS,
                     _sweep_rows(result))
    flags = sum(p.flagged for p in result.points)
    print(f"wrote {out}")
    print(f"{len(result.points)} grid points, {flags} flagged")
    if run.emit_svg:
        from .plotting import sweep_figure
        p = sweep_figure(result, str(run.output_dir / "sweep.svg"))
        _stamp_svg(Path(p), run)
        print(f"wrote {p}")


def _cmd_phase(run: RunConfig) -> None:
    parsed_model = run.experiment.get("_model", {})
    parsed_map = run.experiment.get("_map", {})
    exp = run.experiment
    T = parsed_model.get("T", 25)
    sigma = parsed_model.get("sigma_noise", 0.3)
    phi = parsed_map.get("phi", 0.5)
    reservoir = parsed_map.get("n_features", 400)
    result = phase_diagram(
        N_grid=[int(v) for v in exp.get("N_grid",
                                        (25, 50, 100, 200, 400, 800))],
        rho_grid=[float(v) for v in exp.get("rho_grid",
                                            (0.2, 0.35, 0.5, 0.65, 0.8,
                                             0.95))],
        T=int(T), phi=float(phi), sigma=float(sigma),
        reservoir_size=int(reservoir), trials=int(exp.get("trials", 100)),
        seed=run.seed, threads=run.threads,
        lam_fixed=exp.get("lam_fixed"),
        theory_only=bool(exp.get("theory_only", False)))
    columns = ["N", "rho", "lam_esn", "lam_ridge", "theory_esn",
               "theory_ridge", "theory_winner", "emp_esn_mean", "emp_esn_se",
               "emp_ridge_mean", "emp_ridge_se", "emp_gap", "emp_gap_se",
               "significant", "empirical_winner", "agree"]
    rows = []
    for c in result.cells:
        rows.append([
            c.N, c.rho, c.lam_esn, c.lam_ridge, c.theory_esn, c.theory_ridge,
            c.theory_winner,
            c.emp_esn.mean if c.emp_esn else None,
            c.emp_esn.std_error if c.emp_esn else None,
            c.emp_ridge.mean if c.emp_ridge else None,
            c.emp_ridge.std_error if c.emp_ridge else None,
            c.emp_gap, c.emp_gap_se, c.significant, c.empirical_winner,
            c.agree])
    out = _write_csv(run.output_dir / "phase.csv", run, columns, rows)
    frontier_rows = ([["theory", N, r] for N, r in result.frontier_theory]
                     + [["empirical", N, r]
                        for N, r in result.frontier_empirical])
    f_out = _write_csv(run.output_dir / "phase_frontier.csv", run,
                       ["map", "N", "rho_cross"], frontier_rows)
    sig = [c for c in result.cells if c.significant]
    agree = sum(1 for c in sig if c.agree)
    print(f"wrote {out}")
    print(f"wrote {f_out}")
    print(f"{len(result.cells)} cells; theory corners: "
          f"small-(N,rho) -> {result.cells[0].theory_winner}, "
          f"large-(N,rho) -> {result.cells[-1].theory_winner}; "
          f"winner agreement {agree}/{len(sig)} significant cells")
    if run.emit_svg:
        from .plotting import phase_figure
        p = phase_figure(result, str(run.output_dir / "phase.svg"))
        _stamp_svg(Path(p), run)
        print(f"wrote {p}")


_ALL_CHECKS = ("gram", "convergence", "lambda", "resolvent")


def _cmd_validate(run: RunConfig) -> None:
    checks = run.experiment.get("checks", list(_ALL_CHECKS))
    if not isinstance(checks, (list, tuple)) or not checks:
        raise ConfigError("experiment.checks must be a nonempty list")
    for c in checks:
        if c not in _ALL_CHECKS:
            raise ConfigError(f"unknown check {c!r}; choose from "
                              f"{_ALL_CHECKS}")
    svg_jobs = []
    if "gram" in checks:
        gs = gram_concentration_study(seed=run.seed)
        columns = (["n", "max_dev", "offdiag_12", "last_diag"]
                   + [f"mean_diag_{i + 1}" for i in range(gs.T)])
        rows = []
        for i, n in enumerate(gs.n_grid):
            diag = np.diag(gs.mean_grams[i])
            rows.append([n, gs.max_dev[i], gs.offdiag_12[i], gs.last_diag[i]]
                        + list(diag))
        out = _write_csv(
            run.output_dir / "gram.csv", run, columns, rows,
            extra_header=[f"fitted_slope={_fmt(gs.slope)}",
                          "limit_diag=" + ",".join(_fmt(v)
                                                   for v in gs.limit_diag)])
        print(f"wrote {out}")
        print(f"gram concentration: slope {gs.slope:.3f} "
              f"(expected about -0.5)")
        if run.emit_svg:
            from .plotting import gram_figure
            svg_jobs.append(gram_figure(
                gs, str(run.output_dir / "gram.svg")))
    if "convergence" in checks:
        rows = []
        verdicts = []
        for kind in ("ridge_identity", "linear_esn"):
            cs = convergence_study(kind, seed=run.seed, threads=run.threads)
            verdicts.append(f"{kind}: "
                            f"{'ok' if cs.shrinks_or_plateaus else 'VIOLATED'}")
            for r in cs.rows:
                rows.append([kind, r.label, r.theory, r.emp_mean, r.emp_se,
                             r.rel_gap, r.target, r.within_noise])
            if run.emit_svg:
                from .plotting import convergence_figure
                svg_jobs.append(convergence_figure(
                    cs, str(run.output_dir / f"convergence_{kind}.svg")))
        out = _write_csv(
            run.output_dir / "convergence.csv", run,
            ["kind", "size", "theory", "emp_mean", "emp_se", "rel_gap",
             "target", "within_noise"], rows)
        print(f"wrote {out}")
        print("convergence: " + "; ".join(verdicts))
    if "lambda" in checks:
        ls = optimal_lambda_study(seed=run.seed)
        out = _write_csv(
            run.output_dir / "lambda_search.csv", run,
            ["scenario", "lambda_star", "grid_argmin", "same_cell",
             "used_grid_fallback"],
            [[s.description, s.lambda_star, s.grid_argmin, s.same_cell,
              s.used_grid_fallback] for s in ls.scenarios])
        o_out = _write_csv(
            run.output_dir / "lambda_orientation.csv", run,
            ["gamma", "snr", "lambda_star", "gamma_over_snr",
             "gamma_times_snr", "matched"],
            [[r.gamma, r.snr, r.lambda_star, r.candidate_over_snr,
              r.candidate_times_snr, r.matched] for r in ls.orientation],
            extra_header=[ls.orientation_conclusion])
        print(f"wrote {out}")
        print(f"wrote {o_out}")
        print(f"penalty search: "
              f"{sum(s.same_cell for s in ls.scenarios)}/"
              f"{len(ls.scenarios)} scenarios within one grid cell; "
              f"{ls.orientation_conclusion}")
        if run.emit_svg:
            from .plotting import lambda_figure
            svg_jobs.append(lambda_figure(
                ls, str(run.output_dir / "lambda_search.svg")))
    if "resolvent" in checks:
        rs = resolvent_error_study(seed=run.seed)
        out = _write_csv(
            run.output_dir / "resolvent.csv", run,
            ["n", "reps", "err_resolvent", "err_second_order"],
            [[r.n, r.reps, r.err_resolvent, r.err_second_order]
             for r in rs.rows])
        print(f"wrote {out}")
        errs = ", ".join(f"n={r.n}: {r.err_resolvent:.4f}" for r in rs.rows)
        print(f"resolvent equivalents: {errs}")
        if run.emit_svg:
            from .plotting import resolvent_figure
            svg_jobs.append(resolvent_figure(
                rs, str(run.output_dir / "resolvent.svg")))
    for p in svg_jobs:
        _stamp_svg(Path(p), run)
        print(f"wrote {p}")


_HANDLERS = {
    "risk": _cmd_risk,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "phase": _cmd_phase,
    "validate": _cmd_validate,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmt-repr",
        description="Asymptotic risk of ridge readouts on random "
                    "representations: theory, simulation, and experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "risk": "closed-form risk of one scenario",
        "simulate": "Monte Carlo risk of one scenario",
        "sweep": "theory and simulation along one swept variable",
        "phase": "reservoir-vs-ridge winner map over (samples, decay)",
        "validate": "internal consistency battery",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True,
                       help="TOML scenario file")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (overrides experiment.seed)")
        p.add_argument("--out", default=None,
                       help="output directory (overrides output.dir)")
        p.add_argument("--svg", action="store_true",
                       help="also render SVG figures")
        p.add_argument("--threads", default=None,
                       help="worker threads (integer or 'auto'; overrides "
                            "RMT_REPR_THREADS)")
    return parser


def _resolve_run(args: argparse.Namespace) -> RunConfig:
    raw, parsed = _load_config(args.config)
    raw_text = raw.decode("utf-8")
    _check_keys(parsed, raw_text)
    exp = dict(parsed.get("experiment", {}))

    seed = args.seed if args.seed is not None else exp.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer",
                          line=_line_of(raw_text, "seed"))
    threads = args.threads if args.threads is not None \
        else exp.get("threads")
    if isinstance(threads, str) and threads != "auto":
        try:
            threads = int(threads)
        except ValueError:
            raise ConfigError("threads must be an integer or 'auto'",
                              line=_line_of(raw_text, "threads")) from None

    output = parsed.get("output", {})
    out_dir = Path(args.out if args.out is not None
                   else output.get("dir", "out"))
    emit_svg = bool(args.svg or output.get("svg", False))

    scenario = None
    if args.command in ("risk", "simulate", "sweep"):
        scenario = _materialize_scenario(parsed, raw_text, seed,
                                         args.command)
    if args.command == "phase":
        exp["_model"] = parsed.get("model", {})
        exp["_map"] = parsed.get("map", {})

    out_dir.mkdir(parents=True, exist_ok=True)
    return RunConfig(
        command=args.command, scenario=scenario, experiment=exp,
        output_dir=out_dir, seed=int(seed), emit_svg=emit_svg,
        threads=threads,
        config_hash=hashlib.sha256(raw).hexdigest()[:16], raw_config=raw,
        config_path=args.config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        run = _resolve_run(args)
        _echo_config(run)
        _HANDLERS[args.command](run)
        return 0
    except ConfigError as exc:
        loc = f"{args.config}:{exc.line}: " if exc.line else f"{args.config}: "
        print(f"config error: {loc}{exc}", file=sys.stderr)
        return 2
    except RmtError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":                   # pragma: no cover
    sys.exit(main())
