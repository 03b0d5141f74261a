"""Acceptance criteria AC1-AC10, each reporting one PASS/FAIL line."""

import math
import time

import numpy as np
from scipy import stats

from rogueqp.config import default_for
from rogueqp.experiments import chernoff_table, run_dist_check, run_linear_ldp, run_nonlinear_ldp
from rogueqp.lattice import DecayProfile, FrequencyMatrix, TruncationBox
from rogueqp.linear_ldp import chernoff_bound, pointwise_tail_exact
from rogueqp.random_field import SeedSpec, exceptional_mask, make_initial_state, sample_field, sample_fields
from rogueqp.solver import (
    SolverConfig,
    cubic_term,
    cubic_term_bruteforce,
    duhamel_gap,
    integrate,
    picard_iterate,
)
from rogueqp.tails import HIT_FLOOR, TailProblem, TiltSpec, direct_tail, tilted_tail
from rogueqp.trees import (
    count_branches,
    domain_dim,
    ell,
    enumerate_branches,
    horizon,
    majorant_exhaustive,
    majorant_series,
    sigma,
)

OM1 = FrequencyMatrix([[1.0]])


def test_ac1_linear_law(tmp_path, acceptance):
    t0 = time.perf_counter()
    s, _ = run_dist_check(default_for("dist-check"), tmp_path)
    dt = time.perf_counter() - t0
    ok = s["n_samples"] == 100000 and s["nu"] == 2 and s["field_ks"] < s["critical_value_0.01"] and dt < 60
    acceptance("AC1", ok, f"KS={s['field_ks']:.5f} < crit={s['critical_value_0.01']:.5f}, "
                          f"2sigma^2={s['sigma2_times2']:.6f}, {dt:.1f}s")


def test_ac2_pointwise_tail(acceptance):
    prob = TailProblem(OM1, DecayProfile([3.0], [1.0]), 16, 0.1, 1.0, event="point")
    s = prob.box_sum_sq()
    q = pointwise_tail_exact(1.0, 0.1, s)
    tilted = tilted_tail(prob, 20000, TiltSpec.for_problem(prob, "phase"), SeedSpec(21))
    direct = direct_tail(prob, 100000, SeedSpec(21))
    z = abs(tilted.p_hat - q) / tilted.se
    ok = z <= 3 and direct.n_hits < HIT_FLOOR
    acceptance("AC2", ok, f"2sigma^2={s:.6f}, exact={q:.4e}, tilted={tilted.p_hat:.4e} ({z:.2f} SE), "
                          f"direct hits={direct.n_hits}/100000")


def test_ac3_chernoff(acceptance):
    rows = chernoff_table([1, 2], [1, 2], 10, 10.0, 1_000_000, SeedSpec(11))
    ref = chernoff_bound(1, 1, 12.0)
    chi = stats.chi2.sf(12.0, 6)
    ok = (len(rows) == 40 and all(r["dominated"] for r in rows)
          and abs(ref.bound - 8 * math.exp(-3)) < 1e-14 and abs(chi - 0.0620) < 5e-4)
    worst = max(r["mc_p"] / r["bound"] for r in rows)
    acceptance("AC3", ok, f"40/40 rows dominated={all(r['dominated'] for r in rows)}, "
                          f"max mc/bound={worst:.3f}, bound(1,1,12)={ref.bound:.6f}, chi2={chi:.4f}")


def test_ac4_linear_ldp(tmp_path, acceptance):
    t0 = time.perf_counter()
    s, _ = run_linear_ldp(default_for("linear-ldp"), tmp_path)
    dt = time.perf_counter() - t0
    rows = s["rows"]
    gaps = s["diagnostics"]["gaps"]
    within = all(r["band_hi"] >= r["lower_value"] and r["band_lo"] <= r["upper_bound"] for r in rows)
    ok = [r["epsilon"] for r in rows] == [0.4, 0.2, 0.1, 0.05] and gaps[-1] < gaps[0] and within and dt < 1200
    acceptance("AC4", ok, f"gap {gaps[0]:.4f} -> {gaps[-1]:.4f}, sandwiched={within}, {dt:.1f}s")


def test_ac5_tree_identities(acceptance):
    t0 = time.perf_counter()
    branches = list(enumerate_branches(3))
    bad = sum(sigma(b) != ell(b) + 0.5 or domain_dim(b) != 2 * sigma(b) for b in branches)
    dt = time.perf_counter() - t0
    ok = (bad == 0 and len(branches) == 730 == count_branches(3) and len(list(enumerate_branches(2))) == 9
          and len(set(branches)) == 730 and dt < 1.0)
    acceptance("AC5", ok, f"|G2|={count_branches(2)}, |G3|={len(branches)}, exceptions={bad}, {dt:.3f}s")


def test_ac6_majorant(acceptance):
    z = 4 / 27
    vals = [majorant_series(k, z) for k in range(1, 13)]
    agree = max(abs(majorant_exhaustive(k, z) - majorant_series(k, z)) for k in range(1, 4))
    ok = max(vals) <= 1.1926 and agree <= 1e-12
    acceptance("AC6", ok, f"max_k<=12 M_k(4/27)={max(vals):.7f}, exhaustive vs functional={agree:.1e}")


def test_ac7_solver_oracles(acceptance):
    p = DecayProfile([5.0], [1.0])
    eps = 0.1
    T = 0.5 * horizon(eps, 0.5, p, 1).T_eps
    s0 = make_initial_state(p, sample_field(SeedSpec(3), TruncationBox(2, 1), 0), eps)
    traj = integrate(s0, T, SolverConfig(), OM1, eps, n_snapshots=10)
    pic = picard_iterate(s0, T, 6, SolverConfig(scheme="picard", k_max=6), OM1, eps)
    diff = float(np.max(np.abs(pic.amps - traj.states[-1].amps)))
    drift = float(np.max(np.abs(traj.mass - traj.mass[0])) / traj.mass[0])
    rng = np.random.default_rng(0)
    conv = 0.0
    for N, nu in ((1, 1), (2, 1), (1, 2), (2, 2)):
        box = TruncationBox(N, nu)
        a = rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
        conv = max(conv, float(np.max(np.abs(cubic_term(a, nu, 4 * N + 1) - cubic_term_bruteforce(a, box)))))
    ok = diff <= 1e-6 and drift <= 1e-8 and conv <= 1e-12
    acceptance("AC7", ok, f"picard vs rk4={diff:.1e}, mass drift={drift:.1e}, conv vs brute={conv:.1e}")


def test_ac8_duhamel_scaling(acceptance):
    p = DecayProfile([5.0], [1.0])
    box = TruncationBox(2, 1)
    scaled = []
    for eps in (0.2, 0.1, 0.05):
        T = 0.5 * horizon(eps, 0.5, p, 1).T_eps
        s0 = make_initial_state(p, sample_field(SeedSpec(3), box, 0), eps)
        traj = integrate(s0, T, SolverConfig(), OM1, eps, n_snapshots=4)
        scaled.append(float(duhamel_gap(traj, s0, OM1, eps, 0.5).sup[-1]) * eps ** 0.5)
    ok = scaled[0] > scaled[1] > scaled[2]
    acceptance("AC8", ok, "gap*eps^1/2 = " + ", ".join(f"{v:.3e}" for v in scaled))


def test_ac9_nonlinear_transfer(tmp_path, acceptance):
    s, _ = run_nonlinear_ldp(default_for("nonlinear-ldp"), tmp_path)
    ok = s["all_overlap"] and len(s["bands_overlap"]) == 3
    acceptance("AC9", ok, f"bands overlap at eps=(0.3, 0.2, 0.1): {s['bands_overlap']}")


def test_ac10_exceptional_set(acceptance):
    box = TruncationBox(8, 2)
    kappa = [1.0, 1.0]
    n, chunk = 100000, 10000
    ks = []
    for delta in (0.5, 0.33, 0.25):
        hits = sum(int(exceptional_mask(sample_fields(SeedSpec(77), box, s, chunk), box, delta, kappa).sum())
                   for s in range(0, n, chunk))
        ks.append(hits / n * math.exp(1 / delta))
    ok = max(ks) <= 3
    acceptance("AC10", ok, "p*e^(1/delta) = " + ", ".join(f"{k:.3f}" for k in ks) + f", K={max(ks):.3f}")
