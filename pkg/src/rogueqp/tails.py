"""Direct and importance-sampled estimates of the rogue-wave probability.

The event is ``sup_y |F(t, y)| > z0 eps^{-1/2}`` on the torus grid (``event="sup"``)
or ``|F(t, y0)| > z0 eps^{-1/2}`` at a single reference point (``event="point"``).

The tilted estimator samples ``g = m + Z`` with ``Z`` standard complex
Gaussian and ``m_n = theta e^{i psi} conj(a_n(y)) / s``, where
``a_n(y) = c(n) e^{-itQ(n)} e^{i<n, y>}`` and ``s = sum |c(n)|^2``, so the shifted
linear field at ``y`` has mean ``theta e^{i psi}``.  In the default ``grid``
mode ``psi`` is uniform and ``y`` is a uniform grid point; averaging the
Gaussian density ratio over both gives the exact weight

    w = exp(theta^2 / s) / mean_y I0(2 theta |F_lin(y)| / s),

which stays bounded on the event.  ``phase`` mode fixes ``y = y0`` and
``fixed`` mode also fixes ``psi = 0`` (a plain mean shift).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import i0e, logsumexp
from scipy.stats import norm

from . import rng
from .errors import DomainError
from .lattice import (
    DecayProfile,
    FrequencyMatrix,
    TruncationBox,
    coefficient_grid,
    dispersion_grid,
    sum_sq_coefficients,
)
from .linear_ldp import grid_sups, pointwise_tail_exact, torus_values, upper_bound_eps_log
from .random_field import SeedSpec
from .solver import integrate_batch
from .trees import horizon

log = logging.getLogger(__name__)

Z99 = float(norm.ppf(0.995))
HIT_FLOOR = 50
ESS_WARN = 100
TILT_MODES = ("grid", "phase", "fixed")


@dataclass(frozen=True)
class TailProblem:
    omega: FrequencyMatrix
    profile: DecayProfile
    N: int
    epsilon: float
    z0: float
    t: float = 0.0
    evolution: str = "linear"
    event: str = "sup"
    grid: int | None = None
    eta: float = 0.5
    dt: float | None = None
    y0: tuple | None = None

    def __post_init__(self):
        if self.evolution not in ("linear", "nonlinear"):
            raise DomainError(f"unknown evolution {self.evolution!r}")
        if self.event not in ("sup", "point"):
            raise DomainError(f"unknown event {self.event!r}")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.z0 < 0:
            raise DomainError("z0 must be non-negative")
        if self.profile.nu != self.omega.nu:
            raise DomainError("profile and frequency matrix disagree on nu")

    @property
    def box(self) -> TruncationBox:
        return TruncationBox(self.N, self.omega.nu)

    @property
    def sup_grid(self) -> int:
        return 4 * self.N + 1 if self.grid is None else max(int(self.grid), 2 * self.N + 1)

    @property
    def threshold(self) -> float:
        return self.z0 * self.epsilon ** -0.5

    @property
    def reference(self) -> np.ndarray:
        return np.zeros(self.omega.nu) if self.y0 is None else np.asarray(self.y0, float)

    def check_horizon(self) -> None:
        if self.evolution == "nonlinear":
            h = horizon(min(self.epsilon, 1 - 1e-12), self.eta, self.profile, self.omega.nu)
            if self.t > h.T_eps * (1 + 1e-12):
                raise DomainError(f"t={self.t:.6g} exceeds the horizon T_eps={h.T_eps:.6g}")

    def linear_profile(self) -> np.ndarray:
        """``c(n) e^{-itQ(n)}`` on the box."""
        box = self.box
        return coefficient_grid(box, self.profile) * np.exp(-1j * self.t * dispersion_grid(box, self.omega))

    def box_sum_sq(self) -> float:
        return math.fsum(coefficient_grid(self.box, self.profile).ravel() ** 2)


@dataclass(frozen=True)
class TiltSpec:
    theta: float
    mode: str = "grid"

    def __post_init__(self):
        if self.theta < 0:
            raise DomainError("theta must be non-negative")
        if self.mode not in TILT_MODES:
            raise DomainError(f"tilt mode must be one of {TILT_MODES}")

    @classmethod
    def for_problem(cls, problem: TailProblem, mode: str = "grid") -> "TiltSpec":
        return cls(problem.threshold, mode)

    def direction(self, problem: TailProblem, psi: float = 0.0, y=None) -> np.ndarray:
        """Mean shift ``m_n`` for phase ``psi`` and torus point ``y``."""
        y = problem.reference if y is None else np.asarray(y, float)
        a = problem.linear_profile() * _plane_wave(problem.box, y)
        return self.theta * np.exp(1j * psi) * np.conj(a) / problem.box_sum_sq()


@dataclass(frozen=True)
class TailEstimate:
    epsilon: float
    z0: float
    p_hat: float
    ci_lo: float
    ci_hi: float
    n_samples: int
    n_hits: int
    eps_log_p: float
    method: str
    ess: float = math.nan
    se: float = math.nan
    mean_weight: float = math.nan

    @property
    def defined(self) -> bool:
        return self.p_hat > 0


def _plane_wave(box: TruncationBox, y) -> np.ndarray:
    ph = sum(c * yi for c, yi in zip(box.coords(), y))
    return np.exp(1j * ph)


def wilson_interval(p: float, n: float, z: float = Z99) -> tuple[float, float]:
    """Two-sided Wilson score interval for a proportion ``p`` observed over ``n`` trials."""
    if n <= 0:
        return 0.0, 1.0
    p = min(max(p, 0.0), 1.0)
    z2n = z * z / n
    centre = (p + z2n / 2) / (1 + z2n)
    half = z / (1 + z2n) * math.sqrt(p * (1 - p) / n + z2n / (4 * n))
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


def _field_statistic(problem: TailProblem, g: np.ndarray) -> np.ndarray:
    """The evolved field's grid sup (or modulus at ``y0``) for a batch of Gaussians."""
    box = problem.box
    amps0 = coefficient_grid(box, problem.profile) * g
    if problem.evolution == "linear":
        amps = amps0 * np.exp(-1j * problem.t * dispersion_grid(box, problem.omega))
    else:
        amps = integrate_batch(amps0, box, problem.t, problem.omega, problem.epsilon, problem.dt)
    if problem.event == "sup":
        return grid_sups(amps, box.nu, problem.sup_grid)
    axes = tuple(range(-box.nu, 0))
    return np.abs(np.sum(amps * _plane_wave(box, problem.reference), axis=axes))


def _chunks(n_samples: int, start: int, chunk: int):
    return [(s, min(chunk, start + n_samples - s)) for s in range(start, start + n_samples, chunk)]


def _map(fn, jobs, threads: int):
    if threads <= 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda j: fn(*j), jobs))


def _finish(problem, contrib, n_hits, method, ess=math.nan, mean_weight=math.nan):
    n = contrib.size
    p_hat = math.fsum(contrib) / n
    if method == "direct":
        se = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / n)
        lo, hi = wilson_interval(p_hat, n)
    else:
        var = math.fsum((contrib - p_hat) ** 2) / max(n - 1, 1)
        se = math.sqrt(var / n)
        if se > 0 and 0 < p_hat < 1:
            lo, hi = wilson_interval(p_hat, p_hat * (1 - p_hat) / se ** 2)
        else:
            lo, hi = wilson_interval(p_hat, n)
    eps_log_p = problem.epsilon * math.log(p_hat) if p_hat > 0 else math.nan
    return TailEstimate(problem.epsilon, problem.z0, p_hat, lo, hi, n, int(n_hits), eps_log_p,
                        method, ess, se, mean_weight)


def direct_tail(problem: TailProblem, n_samples: int, seed: SeedSpec, start: int = 0,
                chunk: int = 4096, threads: int = 1) -> TailEstimate:
    """Plain Monte Carlo frequency of the event."""
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    problem.check_horizon()

    def work(s, c):
        g = seed.gaussians(problem.box, np.arange(s, s + c, dtype=np.uint64))
        return _field_statistic(problem, g) > problem.threshold

    hits = np.concatenate(_map(work, _chunks(n_samples, start, chunk), threads))
    return _finish(problem, hits.astype(float), hits.sum(), "direct")


def _log_weights(problem, tilt, g, psi, k):
    box = problem.box
    s = problem.box_sum_sq()
    th = tilt.theta
    a = problem.linear_profile()
    axes = tuple(range(-box.nu, 0))
    if tilt.mode == "grid":
        vals = np.abs(torus_values(a * g, box.nu, problem.sup_grid))
        x = 2 * th * vals.reshape(vals.shape[0], -1) / s
        return th * th / s - (logsumexp(np.log(i0e(x)) + x, axis=1) - math.log(x.shape[1]))
    f = np.sum(a * _plane_wave(box, problem.reference) * g, axis=axes)
    if tilt.mode == "phase":
        x = 2 * th * np.abs(f) / s
        return th * th / s - (np.log(i0e(x)) + x)
    return th * th / s - 2 * th * np.real(f) / s


def tilted_tail(problem: TailProblem, n_samples: int, tilt: TiltSpec, seed: SeedSpec,
                start: int = 0, chunk: int = 2048, threads: int = 1) -> TailEstimate:
    """Importance-sampled event probability with exact likelihood-ratio weights."""
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    problem.check_horizon()
    box = problem.box
    G = problem.sup_grid
    npts = G ** box.nu
    a = problem.linear_profile()
    s = problem.box_sum_sq()

    def work(s0, c):
        idx = np.arange(s0, s0 + c, dtype=np.uint64)
        z = seed.gaussians(box, idx)
        u1, u2 = rng.uniform_pair(seed.root_seed, rng.AUX, idx, np.uint64(0))
        if tilt.mode == "grid":
            k = np.minimum((u1 * npts).astype(np.int64), npts - 1)
            y = 2 * np.pi * np.stack(np.unravel_index(k, (G,) * box.nu), axis=1) / G
        else:
            y = np.broadcast_to(problem.reference, (c, box.nu))
        psi = np.zeros(c) if tilt.mode == "fixed" else 2 * np.pi * u2
        ph = sum(co[None] * y[(slice(None),) + (i,) + (None,) * box.nu]
                 for i, co in enumerate(box.coords()))
        m = tilt.theta * np.exp(1j * psi).reshape((-1,) + (1,) * box.nu) * np.conj(a * np.exp(1j * ph)) / s
        g = m + z
        hit = _field_statistic(problem, g) > problem.threshold
        logw = _log_weights(problem, tilt, g, psi, None)
        return hit, np.exp(logw)

    parts = _map(work, _chunks(n_samples, start, chunk), threads)
    hits = np.concatenate([p[0] for p in parts])
    w = np.concatenate([p[1] for p in parts])
    contrib = np.where(hits, w, 0.0)
    sq = math.fsum(contrib ** 2)
    ess = math.fsum(contrib) ** 2 / sq if sq > 0 else 0.0
    if ess < ESS_WARN:
        log.warning("tilted estimate at eps=%.3g has ESS %.1f < %d; treat as unreliable",
                    problem.epsilon, ess, ESS_WARN)
    return _finish(problem, contrib, hits.sum(), "tilted", ess, math.fsum(w) / w.size)


def choose_method(problem: TailProblem, n_samples: int) -> str:
    """``direct`` when the pointwise lower bound predicts at least ``HIT_FLOOR`` hits."""
    if problem.z0 == 0:
        return "direct"
    p_low = pointwise_tail_exact(problem.z0, problem.epsilon, problem.box_sum_sq())
    return "direct" if n_samples * p_low >= HIT_FLOOR else "tilted"


def estimate(problem: TailProblem, n_samples: int, seed: SeedSpec, method: str = "auto",
             tilt_mode: str = "grid", threads: int = 1) -> TailEstimate:
    if method == "auto":
        method = choose_method(problem, n_samples)
    if method == "direct":
        return direct_tail(problem, n_samples, seed, threads=threads)
    if method == "tilted":
        return tilted_tail(problem, n_samples, TiltSpec.for_problem(problem, tilt_mode), seed,
                           threads=threads)
    raise DomainError(f"unknown method {method!r}")


# eps log P curves ------------------------------------------------------------

@dataclass(frozen=True)
class UpperSpec:
    """Parameters of the assembled upper bound."""

    mu: float
    C_rem: float
    etaprime: float


@dataclass(frozen=True)
class CurveRow:
    epsilon: float
    method: str
    n_samples: int
    n_hits_or_ess: float
    p_hat: float
    ci_lo: float
    ci_hi: float
    eps_log_p: float
    band_lo: float
    band_hi: float
    rate: float
    lower_value: float
    upper_bound: float
    t: float


CSV_COLUMNS = ("epsilon", "method", "n_samples", "n_hits_or_ess", "p_hat", "ci_lo", "ci_hi",
               "eps_log_p", "rate", "upper_bound")


@dataclass(frozen=True)
class LdpCurve:
    rows: list
    estimates: list
    neg_rate: float
    diagnostics: dict = field(default_factory=dict)


def _eps_log(eps, p):
    return eps * math.log(p) if p > 0 else -math.inf


def ldp_curve(eps_list, problem: TailProblem, n_samples: int, seed: SeedSpec,
              t_fraction: float | None = None, upper: UpperSpec | None = None,
              method: str = "auto", tilt_mode: str = "grid", threads: int = 1) -> LdpCurve:
    """``eps log P`` against ``-z0^2 / sum |c|^2`` over a decreasing list of ``eps``."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must be strictly decreasing")
    total = sum_sq_coefficients(problem.profile)
    neg_rate = -problem.z0 ** 2 / total
    rows, ests = [], []
    for eps in eps_list:
        t = problem.t
        if t_fraction is not None:
            t = t_fraction * horizon(eps, problem.eta, problem.profile, problem.omega.nu).T_eps
        prob = replace(problem, epsilon=eps, t=t)
        est = estimate(prob, n_samples, seed, method, tilt_mode, threads)
        ub = math.nan
        if upper is not None:
            try:
                ub = upper_bound_eps_log(eps, problem.z0, upper.mu, upper.C_rem, upper.etaprime,
                                         problem.profile, problem.omega.nu, total)
            except DomainError:
                ub = math.nan
        lower = _eps_log(eps, pointwise_tail_exact(problem.z0, eps, total)) if problem.z0 > 0 else 0.0
        ests.append(est)
        rows.append(CurveRow(
            eps, est.method, est.n_samples,
            est.n_hits if est.method == "direct" else est.ess,
            est.p_hat, est.ci_lo, est.ci_hi, est.eps_log_p,
            _eps_log(eps, est.ci_lo), _eps_log(eps, est.ci_hi),
            neg_rate, lower, ub, t,
        ))
    gaps = [abs(r.eps_log_p - neg_rate) for r in rows]
    diag = {
        "gaps": gaps,
        "monotone_approach": all(b < a for a, b in zip(gaps, gaps[1:])),
        "last_two_decreasing": len(gaps) < 2 or gaps[-1] < gaps[-2],
        "final_gap_ratio": gaps[-1] / gaps[0] if gaps and gaps[0] > 0 else math.nan,
    }
    return LdpCurve(rows, ests, neg_rate, diag)
