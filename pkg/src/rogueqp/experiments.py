"""Verification suites behind the CLI subcommands.

Each ``run_*`` function takes a resolved ``RunConfig`` and an output
directory, writes its artifacts, and returns ``(summary, artifact_paths)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
from scipy import stats

from . import io
from .config import RunConfig
from .lattice import TruncationBox, coefficient_grid
from .linear_ldp import (
    chernoff_bound,
    point_values,
    remainder_constant,
    remainder_exponent,
    xi_statistic,
)
from .random_field import (
    SeedSpec,
    exceptional_indicator,
    make_initial_state,
    sample_field,
    sample_fields,
)
from .solver import (
    decay_check,
    dump_state,
    duhamel_gap,
    integrate,
    picard_iterate,
    write_trajectory_csv,
)
from .tails import CSV_COLUMNS, TailProblem, UpperSpec, ldp_curve
from .trees import horizon, tree_report

PILOT_OFFSET = 1 << 40


def _seed(cfg: RunConfig) -> SeedSpec:
    return SeedSpec(cfg.sampling.root_seed)


def ks_critical(n: int, alpha: float = 0.01) -> float:
    """Two-sided one-sample KS critical value at level ``alpha``."""
    return float(stats.kstwo.ppf(1 - alpha, n))


def run_dist_check(cfg: RunConfig, out: Path, threads: int = 1):
    """``|u_lin(t, x)|^2`` against ``Exp`` with mean ``sum |c|^2`` (box), and ``|g_0|^2`` against ``Exp(1)``."""
    omega, p = cfg.model.frequency_matrix(), cfg.model.profile()
    box = TruncationBox(cfg.sampling.N, omega.nu)
    x = cfg.sampling.x if cfg.sampling.x is not None else [0.0] * omega.d
    n, chunk = cfg.sampling.n_samples, cfg.sampling.chunk
    seed = _seed(cfg)
    c = coefficient_grid(box, p)
    s = math.fsum(c.ravel() ** 2)
    mod2, g0 = [], []
    for start in range(0, n, chunk):
        g = sample_fields(seed, box, start, min(chunk, n - start))
        mod2.append(np.abs(point_values(c * g, box, omega, cfg.regime.t, x)) ** 2)
        g0.append(np.abs(g[(slice(None),) + (box.N,) * box.nu]) ** 2)
    mod2, g0 = np.concatenate(mod2), np.concatenate(g0)
    ks_u = stats.kstest(mod2, "expon", args=(0, s))
    ks_g = stats.kstest(g0, "expon")
    crit = ks_critical(n)
    summary = {
        "n_samples": n, "N": box.N, "nu": box.nu, "t": cfg.regime.t, "x": list(x),
        "sigma2_times2": s, "critical_value_0.01": crit,
        "field_ks": float(ks_u.statistic), "field_pvalue": float(ks_u.pvalue),
        "mode_ks": float(ks_g.statistic), "mode_pvalue": float(ks_g.pvalue),
        "field_mean": float(mod2.mean()), "mode_mean": float(g0.mean()),
    }
    summary["pass"] = summary["field_ks"] < crit and summary["mode_ks"] < crit
    return summary, [io.write_json(out / "dist_check.json", summary)]


CHERNOFF_COLUMNS = ("N", "nu", "x", "lambda_star", "bound", "mc_p", "mc_se", "chi2_sf", "dominated")


def chernoff_table(N_values, nu_values, n_x, x_max_factor, n_samples, seed: SeedSpec,
                   chunk: int = 20000):
    rows = []
    for N in N_values:
        for nu in nu_values:
            box = TruncationBox(N, nu)
            m = box.size
            xs = 2 * m + (x_max_factor - 2) * m * np.arange(1, n_x + 1) / n_x
            counts = np.zeros(n_x, dtype=np.int64)
            for start in range(0, n_samples, chunk):
                xi = xi_statistic(sample_fields(seed, box, start, min(chunk, n_samples - start)), nu)
                counts += (xi[:, None] > xs[None, :]).sum(axis=0)
            for x, k in zip(xs, counts):
                rep = chernoff_bound(N, nu, float(x))
                ph = k / n_samples
                rows.append({
                    "N": N, "nu": nu, "x": float(x), "lambda_star": rep.lambda_star,
                    "bound": rep.bound, "mc_p": ph, "mc_se": math.sqrt(ph * (1 - ph) / n_samples),
                    "chi2_sf": float(stats.chi2.sf(x, 2 * m)), "dominated": bool(ph <= rep.bound),
                })
    return rows


def run_chernoff(cfg: RunConfig, out: Path, threads: int = 1):
    ch = cfg.chernoff
    rows = chernoff_table(ch.N_values, ch.nu_values, ch.n_x, ch.x_max_factor, ch.n_samples, _seed(cfg))
    ref = chernoff_bound(1, 1, 12.0)
    summary = {
        "all_dominated": all(r["dominated"] for r in rows),
        "rows": len(rows),
        "reference_N1_nu1_x12": {"lambda_star": ref.lambda_star, "bound": ref.bound,
                                 "chi2_sf": float(stats.chi2.sf(12.0, 6))},
    }
    arts = [io.write_csv(out / "chernoff.csv", CHERNOFF_COLUMNS, rows),
            io.write_json(out / "chernoff.json", summary)]
    return summary, arts


def run_tree_check(cfg: RunConfig, out: Path, k: int = 3, threads: int = 1):
    rep = tree_report(k)
    return rep, [io.write_json(out / "tree_check.json", rep)]


def _problem(cfg: RunConfig, evolution: str = "linear") -> TailProblem:
    s, r = cfg.sampling, cfg.regime
    return TailProblem(cfg.model.frequency_matrix(), cfg.model.profile(), s.N, r.eps_list[0], r.z0,
                       r.t, evolution, s.event, s.grid, r.eta, cfg.solver.dt)


def pilot_C_rem(cfg: RunConfig, n_pilot: int = 10000) -> tuple[float, float]:
    """``(C_rem, eta')`` from the 99.9% quantile of the tail remainder over pilot samples."""
    p, r = cfg.model.profile(), cfg.regime
    nu = p.nu
    etap = remainder_exponent(r.eta, r.mu, p, nu)
    if r.C_rem is not None:
        return float(r.C_rem), etap
    box = TruncationBox(cfg.sampling.N, nu)
    g = sample_fields(_seed(cfg), box, PILOT_OFFSET, n_pilot)
    C = max(remainder_constant(g, p, box, eps, r.mu, etap) for eps in r.eps_list)
    return C, etap


def _curve_rows(curve):
    out = []
    for row in curve.rows:
        d = asdict(row)
        out.append(d)
    return out


def run_linear_ldp(cfg: RunConfig, out: Path, threads: int = 1):
    C, etap = pilot_C_rem(cfg)
    curve = ldp_curve(cfg.regime.eps_list, _problem(cfg), cfg.sampling.n_samples, _seed(cfg),
                      upper=UpperSpec(cfg.regime.mu, C, etap), method=cfg.sampling.method,
                      tilt_mode=cfg.sampling.tilt_mode, threads=threads)
    rows = _curve_rows(curve)
    cols = CSV_COLUMNS + ("band_lo", "band_hi", "lower_value", "t")
    summary = {"neg_rate": curve.neg_rate, "C_rem": C, "etaprime": etap,
               "diagnostics": curve.diagnostics, "rows": rows}
    return summary, [io.write_csv(out / "linear_ldp.csv", cols, rows),
                     io.write_json(out / "linear_ldp.json", summary)]


def bands_overlap(a, b) -> bool:
    return max(a.ci_lo, b.ci_lo) <= min(a.ci_hi, b.ci_hi)


def run_nonlinear_ldp(cfg: RunConfig, out: Path, threads: int = 1):
    r = cfg.regime
    frac = 0.5 if r.t_fraction is None else r.t_fraction
    seed = _seed(cfg)
    curves = {}
    for evo in ("linear", "nonlinear"):
        curves[evo] = ldp_curve(r.eps_list, _problem(cfg, evo), cfg.sampling.n_samples, seed,
                                t_fraction=frac, method=cfg.sampling.method,
                                tilt_mode=cfg.sampling.tilt_mode, threads=threads)
    rows = []
    for evo, curve in curves.items():
        for row in _curve_rows(curve):
            row["evolution"] = evo
            rows.append(row)
    overlap = [bands_overlap(a, b) for a, b in zip(curves["linear"].estimates,
                                                   curves["nonlinear"].estimates)]
    cols = ("evolution",) + CSV_COLUMNS + ("band_lo", "band_hi", "t")
    summary = {"neg_rate": curves["linear"].neg_rate, "t_fraction": frac,
               "bands_overlap": overlap, "all_overlap": all(overlap), "rows": rows}
    return summary, [io.write_csv(out / "nonlinear_ldp.csv", cols, rows),
                     io.write_json(out / "nonlinear_ldp.json", summary)]


def run_simulate(cfg: RunConfig, out: Path, threads: int = 1):
    omega, p, r = cfg.model.frequency_matrix(), cfg.model.profile(), cfg.regime
    hz = horizon(r.epsilon, r.eta, p, omega.nu)
    T = hz.T_eps * r.t_fraction if r.t_fraction is not None else r.t
    box = TruncationBox(cfg.sampling.N, omega.nu)
    field = sample_field(_seed(cfg), box, 0)
    s0 = make_initial_state(p, field, r.epsilon)
    scfg = cfg.solver.solver_config()
    traj = integrate(s0, T, scfg, omega, r.epsilon, cfg.solver.n_snapshots, horizon_T=hz.T_eps)
    delta = r.epsilon ** (1 - r.eta)
    dec = decay_check(traj, p, r.epsilon, r.eta)
    gap = duhamel_gap(traj, s0, omega, r.epsilon, r.eta)
    summary = {
        "epsilon": r.epsilon, "eta": r.eta, "T": T, "T_eps": hz.T_eps, "B": hz.B,
        "dt": traj.dt, "dt_converged": traj.converged,
        "mass_drift": float(abs(traj.mass[-1] - traj.mass[0]) / traj.mass[0]),
        "exceptional": exceptional_indicator(field, delta, p.kappa),
        "C_hat": dec.C_hat, "C_hat_time": dec.time, "C_hat_index": list(dec.index),
        "gap_l1": gap.l1, "gap_sup": gap.sup, "gap_normalized": gap.normalized,
    }
    if scfg.scheme == "picard":
        pic = picard_iterate(s0, T, scfg.k_max, scfg, omega, r.epsilon)
        summary["picard_vs_rk4"] = float(np.max(np.abs(pic.amps - traj.states[-1].amps)))
    arts = []
    if "csv" in cfg.output.formats:
        path = out / "trajectory.csv"
        write_trajectory_csv(path, traj)
        arts.append(path)
    if "bin" in cfg.output.formats:
        path = out / "state.bin"
        dump_state(path, traj.states[-1])
        arts.append(path)
    arts.append(io.write_json(out / "simulate.json", summary))
    return summary, arts


RUNNERS = {
    "dist-check": run_dist_check,
    "linear-ldp": run_linear_ldp,
    "chernoff": run_chernoff,
    "tree-check": run_tree_check,
    "simulate": run_simulate,
    "nonlinear-ldp": run_nonlinear_ldp,
}
