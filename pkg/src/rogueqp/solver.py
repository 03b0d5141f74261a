"""Galerkin-truncated cubic lattice system, Picard iteration and a reference integrator.

On the box ``Lambda_N`` the system reads

    d/dt c(n) = -i Q(n) c(n) + i eps^2 sum_{n1 - n2 + n3 = n} c(n1) conj(c(n2)) c(n3).

The cubic sum is the Fourier transform of ``|F|^2 F`` with ``F`` the torus
generating function, so it is evaluated by zero-padded FFT on a ``G^nu``
grid.  ``G >= 4N + 1`` keeps every aliased image out of the box.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import legendre

from .errors import AccuracyError, ConfigError, DivergenceError, StructuralError
from .lattice import (
    DecayProfile,
    FourierState,
    FrequencyMatrix,
    TruncationBox,
    dispersion_grid,
    weighted_norm_grid,
)
from .linear_ldp import _embed, grid_sups

log = logging.getLogger(__name__)

SCHEMES = ("picard", "interaction_rk4")
RTOL_DT = 1e-8
QUAD_TOL = 1e-10
QUAD_FAIL = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    dt: float | None = None
    scheme: str = "interaction_rk4"
    k_max: int = 6
    quad_nodes: int = 16
    dealias_grid: int | None = None
    max_halvings: int = 8

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError("solver.scheme", f"must be one of {SCHEMES}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("solver.dt", "must be positive")
        if self.k_max < 1:
            raise ConfigError("solver.k_max", "must be >= 1")
        if self.quad_nodes < 2:
            raise ConfigError("solver.quad_nodes", "must be >= 2")

    def grid_for(self, box: TruncationBox) -> int:
        need = 4 * box.N + 1
        if self.dealias_grid is None:
            return need
        if self.dealias_grid < need:
            raise ConfigError("solver.dealias_grid",
                              f"G={self.dealias_grid} < 4N+1={need}; the cubic term would alias")
        return int(self.dealias_grid)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    states: list
    mass: np.ndarray
    sup: np.ndarray
    gap: np.ndarray
    dt: float = math.nan
    converged: bool = True
    meta: dict = field(default_factory=dict)


def default_dt(box: TruncationBox, omega: FrequencyMatrix) -> float:
    qmax = float(dispersion_grid(box, omega).max())
    return 0.01 if qmax <= 0 else min(0.01, 0.1 / qmax)


# cubic term ----------------------------------------------------------------

def cubic_term(amps: np.ndarray, nu: int, grid: int) -> np.ndarray:
    """``sum_{n1-n2+n3=n} c(n1) conj(c(n2)) c(n3)`` restricted to the box, batched over leading axes."""
    side = amps.shape[-1]
    N = (side - 1) // 2
    axes = tuple(range(-nu, 0))
    f = np.fft.ifftn(_embed(amps, nu, grid), axes=axes)
    # ifftn carries 1/G^nu; three factors in, one fftn out leaves G^{2 nu}
    prod = (f * f.conj()) * f
    g = np.fft.fftn(prod, axes=axes) * float(grid) ** (2 * nu)
    pos = np.arange(-N, N + 1) % grid
    return g[(...,) + np.ix_(*([pos] * nu))]


def cubic_term_bruteforce(amps: np.ndarray, box: TruncationBox) -> np.ndarray:
    """Direct triple sum; O(|box|^3), for testing only."""
    out = np.zeros(box.shape, dtype=complex)
    idx = [tuple(r) for r in box.indices()]
    for n1, n2, n3 in itertools.product(idx, repeat=3):
        n = tuple(a - b + c for a, b, c in zip(n1, n2, n3))
        if box.contains(n):
            out[box.position(n)] += (amps[box.position(n1)] * np.conj(amps[box.position(n2)])
                                     * amps[box.position(n3)])
    return out


def nonlinear_rhs(s: FourierState, omega: FrequencyMatrix, epsilon: float,
                  dealias_grid: int | None = None) -> np.ndarray:
    grid = SolverConfig(dealias_grid=dealias_grid).grid_for(s.box)
    q = dispersion_grid(s.box, omega)
    return -1j * q * s.amps + 1j * epsilon ** 2 * cubic_term(s.amps, s.box.nu, grid)


# interaction-picture RK4 -----------------------------------------------------

class _Stepper:
    """RK4 on ``a = e^{iQt} c``: ``a' = i eps^2 e^{iQt} C[e^{-iQt} a]``."""

    def __init__(self, box, omega, epsilon, grid):
        self.q = dispersion_grid(box, omega)
        self.nu = box.nu
        self.eps2 = epsilon ** 2
        self.grid = grid

    def f(self, t, a):
        ph = np.exp(-1j * self.q * t)
        return 1j * self.eps2 * ph.conj() * cubic_term(ph * a, self.nu, self.grid)

    def step(self, t, a, h):
        k1 = self.f(t, a)
        k2 = self.f(t + h / 2, a + h / 2 * k1)
        k3 = self.f(t + h / 2, a + h / 2 * k2)
        k4 = self.f(t + h, a + h * k3)
        return a + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    def advance(self, t0, a, t1, dt, step_offset=0):
        """Move ``a`` from ``t0`` to ``t1`` in equal steps no longer than ``dt``."""
        span = t1 - t0
        n = max(1, math.ceil(abs(span) / dt - 1e-12))
        h = span / n
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(n):
                a = self.step(t0 + i * h, a, h)
                if not np.all(np.isfinite(a)):
                    raise DivergenceError(step_offset + i + 1, t0 + (i + 1) * h)
        return a, step_offset + n

    def to_c(self, a, t):
        return np.exp(-1j * self.q * t) * a


def _run(s0, times, omega, epsilon, dt, grid):
    st = _Stepper(s0.box, omega, epsilon, grid)
    a = s0.amps.copy()
    t, steps, out = s0.time, 0, []
    for tk in times:
        if tk != t:
            # the interaction variable is referenced to s0.time
            a, steps = st.advance(t - s0.time, a, tk - s0.time, dt, steps)
            t = tk
        out.append(st.to_c(a, tk - s0.time))
    return out


def _rel_change(x, y, mass):
    return float(np.sqrt(np.sum(np.abs(x - y) ** 2) / max(mass, 1e-300)))


def integrate(s0: FourierState, T: float, cfg: SolverConfig, omega: FrequencyMatrix,
              epsilon: float, n_snapshots: int = 10, horizon_T: float | None = None,
              rtol: float = RTOL_DT) -> TrajectoryRecord:
    """Reference trajectory on ``[s0.time, s0.time + T]`` (``T`` may be negative).

    The step halves until the terminal state moves by less than ``rtol``
    relative to ``sqrt(mass)``.
    """
    if horizon_T is not None and abs(T) > horizon_T:
        log.warning("integration time %.6g exceeds the admissible horizon %.6g", T, horizon_T)
    grid = cfg.grid_for(s0.box)
    dt = cfg.dt if cfg.dt is not None else default_dt(s0.box, omega)
    times = s0.time + np.linspace(0.0, T, n_snapshots + 1)
    mass0 = s0.mass
    snaps = _run(s0, times, omega, epsilon, dt, grid)
    converged = epsilon == 0
    for _ in range(cfg.max_halvings):
        if converged:
            break
        finer = _run(s0, times, omega, epsilon, dt / 2, grid)
        change = _rel_change(finer[-1], snaps[-1], mass0)
        snaps, dt = finer, dt / 2
        converged = change < rtol
    if not converged:
        log.warning("dt refinement stopped at dt=%.3g without reaching rtol=%.1e", dt, rtol)
    states = [s0.replace(amps=c, time=float(tk), epsilon=epsilon) for c, tk in zip(snaps, times)]
    return _record(s0, states, times, omega, grid, dt, converged)


def _record(s0, states, times, omega, grid, dt, converged):
    amps = np.stack([s.amps for s in states])
    q = dispersion_grid(s0.box, omega)
    lin = s0.amps[None] * np.exp(-1j * q[None] * (times - s0.time).reshape((-1,) + (1,) * s0.box.nu))
    axes = tuple(range(1, amps.ndim))
    mass = np.array([math.fsum(np.abs(a).ravel() ** 2) for a in amps])
    sup = grid_sups(amps, s0.box.nu, grid)
    gap = np.sum(np.abs(amps - lin), axis=axes)
    return TrajectoryRecord(np.asarray(times, float), states, mass, sup, gap, dt, converged)


def integrate_batch(amps: np.ndarray, box: TruncationBox, T: float, omega: FrequencyMatrix,
                    epsilon: float, dt: float | None = None, grid: int | None = None) -> np.ndarray:
    """Terminal amplitudes at time ``T`` for a batch ``(S, *box.shape)`` with a fixed step."""
    grid = SolverConfig(dealias_grid=grid).grid_for(box)
    dt = default_dt(box, omega) if dt is None else dt
    if epsilon == 0 or T == 0:
        return amps * np.exp(-1j * dispersion_grid(box, omega) * T)
    st = _Stepper(box, omega, epsilon, grid)
    a, _ = st.advance(0.0, np.asarray(amps, complex), T, dt)
    return st.to_c(a, T)


# Picard iteration ----------------------------------------------------------

def spectral_integration(q: int):
    """Gauss-Legendre nodes ``x``, weights ``w`` and ``S[i, j] = int_{-1}^{x_i} l_j``.

    ``l_j`` is the Lagrange basis on the nodes, expanded in Legendre
    polynomials via the discrete orthogonality of the rule.
    """
    x, w = legendre.leggauss(q)
    m = np.arange(q)
    vx = legendre.legvander(x, q)               # P_0..P_q at the nodes
    ints = np.empty((q, q))
    ints[:, 0] = x + 1.0
    ints[:, 1:] = (vx[:, 2:] - vx[:, :-2]) / (2 * m[1:] + 1)
    coef = (m + 0.5)[:, None] * vx[:, :q].T * w[None, :]   # coef[m, j]
    return x, w, ints @ coef


def _picard_nodes(a0, t, k_max, q, stepper):
    x, w, S = spectral_integration(q)
    s = 0.5 * t * (x + 1.0)
    S = 0.5 * t * S
    w = 0.5 * t * w
    a = np.broadcast_to(a0, (q,) + a0.shape).copy()
    final = a0.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(k_max):
            f = np.stack([stepper.f(si, ai) for si, ai in zip(s, a)])
            final = a0 + np.tensordot(w, f, axes=1)
            a = a0[None] + np.tensordot(S, f, axes=1)
            if not np.all(np.isfinite(a)):
                raise DivergenceError(k + 1, t, "Picard iterate became non-finite")
    return final


def picard_iterate(s0: FourierState, t: float, k_max: int, cfg: SolverConfig,
                   omega: FrequencyMatrix, epsilon: float, max_doublings: int = 6) -> FourierState:
    """``c_{k_max}(t)`` from ``c_k = c_0 + i eps^2 int_0^t e^{-iQ(t-s)} C[c_{k-1}(s)] ds``.

    All levels share one Gauss-Legendre rule, so each level costs ``q`` cubic
    evaluations (memoized nesting) instead of ``q^k``.  Nodes double until
    the result moves by less than 1e-10.
    """
    if k_max < 1:
        raise ConfigError("solver.k_max", "must be >= 1")
    grid = cfg.grid_for(s0.box)
    st = _Stepper(s0.box, omega, epsilon, grid)
    a0 = np.asarray(s0.amps, complex)
    if epsilon == 0 or t == 0:
        return s0.replace(amps=st.to_c(a0, t), time=s0.time + t, epsilon=epsilon)
    q = cfg.quad_nodes
    prev = _picard_nodes(a0, t, k_max, q, st)
    scale = max(float(np.max(np.abs(a0))), 1e-300)
    change = math.inf
    for _ in range(max_doublings):
        q *= 2
        cur = _picard_nodes(a0, t, k_max, q, st)
        change = float(np.max(np.abs(cur - prev))) / scale
        prev = cur
        if change < QUAD_TOL:
            break
    if change > QUAD_FAIL:
        raise AccuracyError(f"quadrature did not converge: change {change:.3g} at {q} nodes")
    return s0.replace(amps=st.to_c(prev, t), time=s0.time + t, epsilon=epsilon)


# diagnostics -----------------------------------------------------------------

@dataclass(frozen=True)
class DecayReport:
    C_hat: float
    time: float
    index: tuple
    scale: float


def decay_check(traj: TrajectoryRecord, p: DecayProfile, epsilon: float, eta: float) -> DecayReport:
    """Smallest ``C`` with ``|c(t,n)| <= C eps^{-1/2+eta/2} <<n>>_{-(rho-kappa)/2}`` over the record."""
    box = traj.states[0].box
    scale = epsilon ** (-0.5 + eta / 2)
    env = scale * weighted_norm_grid(box, p.gap / 2.0)
    ratios = np.stack([np.abs(s.amps) / env for s in traj.states])
    flat = int(np.argmax(ratios))
    k, *pos = np.unravel_index(flat, ratios.shape)
    index = tuple(int(v) - box.N for v in pos)
    return DecayReport(float(ratios.max()), float(traj.times[k]), index, scale)


@dataclass(frozen=True)
class DuhamelGap:
    times: np.ndarray
    l1: np.ndarray
    sup: np.ndarray
    normalized: np.ndarray


def duhamel_gap(traj: TrajectoryRecord, s0: FourierState, omega: FrequencyMatrix,
                epsilon: float, eta: float = 0.5, grid: int | None = None) -> DuhamelGap:
    """``sum_n |c(t,n) - c_0(t,n)|`` and the torus sup of the difference field."""
    box = s0.box
    grid = 4 * box.N + 1 if grid is None else grid
    q = dispersion_grid(box, omega)
    diffs = np.stack([s.amps - s0.amps * np.exp(-1j * q * (s.time - s0.time)) for s in traj.states])
    axes = tuple(range(1, diffs.ndim))
    l1 = np.sum(np.abs(diffs), axis=axes)
    sup = grid_sups(diffs, box.nu, grid)
    return DuhamelGap(np.asarray(traj.times), l1, sup, l1 * epsilon ** (0.5 - eta / 2))


# export ----------------------------------------------------------------------

def write_trajectory_csv(path, traj: TrajectoryRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "mass", "sup", "gap"])
        for row in zip(traj.times, traj.mass, traj.sup, traj.gap):
            w.writerow([f"{v:.17g}" for v in row])


_HEADER = struct.Struct("<IIdd")


def dump_state(path, s: FourierState) -> None:
    """Little-endian ``(uint32 nu, uint32 N, f64 t, f64 eps)`` then re/im pairs in lexicographic order."""
    data = np.empty(2 * s.box.size, dtype="<f8")
    flat = s.amps.ravel()
    data[0::2] = flat.real
    data[1::2] = flat.imag
    Path(path).write_bytes(_HEADER.pack(s.box.nu, s.box.N, s.time, s.epsilon) + data.tobytes())


def load_state(path) -> FourierState:
    raw = Path(path).read_bytes()
    nu, N, t, eps = _HEADER.unpack_from(raw)
    box = TruncationBox(N, nu)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != 2 * box.size:
        raise StructuralError(f"dump holds {data.size} floats, expected {2 * box.size}")
    return FourierState(box, (data[0::2] + 1j * data[1::2]).reshape(box.shape), t, eps)
