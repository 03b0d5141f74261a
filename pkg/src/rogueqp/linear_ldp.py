"""Exact linear flow, torus sup-norm, and the linear tail bounds.

The spatial sup over R^d of a quasi-periodic field equals the sup of its
generating function over the torus T^nu (the orbit ``x Omega^T mod 2 pi`` is
dense), so every sup below is taken on a uniform torus grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError
from .lattice import (
    DecayProfile,
    FourierState,
    FrequencyMatrix,
    TruncationBox,
    coefficient_grid,
    dispersion_grid,
    sum_sq_coefficients,
    truncation_parameter,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateReport:
    rate: float
    sigma2_times2: float
    z0: float


@dataclass(frozen=True)
class ChernoffReport:
    N: int
    nu: int
    x: float
    lambda_star: float
    log_bound: float

    @property
    def bound(self) -> float:
        return math.exp(self.log_bound)


@dataclass(frozen=True)
class SupResult:
    sup: float
    l1_bound: float
    grid: int
    argmax: tuple[int, ...]
    undersampled: bool = False


def evolve_linear(s: FourierState, t: float, omega: FrequencyMatrix) -> FourierState:
    """``c(t, n) = e^{-i t Q(n)} c(0, n)``; composes additively with ``s.time``."""
    q = dispersion_grid(s.box, omega)
    return s.replace(amps=s.amps * np.exp(-1j * t * q), time=s.time + t)


def _embed(amps: np.ndarray, nu: int, grid: int) -> np.ndarray:
    """Place box amplitudes at FFT positions ``n mod grid`` (trailing ``nu`` axes)."""
    side = amps.shape[-1]
    N = (side - 1) // 2
    if grid < side:
        raise StructuralError(f"grid {grid} cannot hold {side} modes per axis")
    lead = amps.shape[:-nu]
    out = np.zeros(lead + (grid,) * nu, dtype=complex)
    pos = np.arange(-N, N + 1) % grid
    out[(...,) + np.ix_(*([pos] * nu))] = amps
    return out


def torus_values(amps: np.ndarray, nu: int, grid: int) -> np.ndarray:
    """``F(y) = sum_n c(n) e^{i<n, y>}`` at ``y = 2 pi k / grid`` for every grid point."""
    axes = tuple(range(-nu, 0))
    return np.fft.ifftn(_embed(amps, nu, grid), axes=axes) * grid ** nu


def grid_sups(amps: np.ndarray, nu: int, grid: int) -> np.ndarray:
    """Grid sup ``max_y |F(y)|`` for a batch of amplitude arrays."""
    vals = np.abs(torus_values(amps, nu, grid))
    return vals.reshape(vals.shape[:-nu] + (-1,)).max(axis=-1)


def torus_sup_norm(s: FourierState, grid_per_dim: int | None = None, refine: bool = False,
                   rtol: float = 1e-3, max_grid: int = 4096) -> SupResult:
    """Max of ``|F|`` over the uniform torus grid and the bound ``sum |c(n)|``.

    With ``refine`` the grid doubles until the sup changes by less than ``rtol``.
    """
    box = s.box
    recommended = 4 * box.N + 1
    grid = recommended if grid_per_dim is None else int(grid_per_dim)
    grid = max(grid, box.side)
    l1 = math.fsum(np.abs(s.amps).ravel())
    vals = np.abs(torus_values(s.amps, box.nu, grid))
    sup = float(vals.max())
    if refine:
        while grid * 2 <= max_grid and grid ** box.nu * 2 ** box.nu <= 2 ** 24:
            finer = np.abs(torus_values(s.amps, box.nu, grid * 2))
            new = float(finer.max())
            grid *= 2
            vals = finer
            done = abs(new - sup) <= rtol * max(new, 1e-300)
            sup = new
            if done:
                break
    argmax = tuple(int(i) for i in np.unravel_index(int(vals.argmax()), vals.shape))
    return SupResult(sup, l1, grid, argmax, undersampled=grid < recommended)


def phase_at(box: TruncationBox, omega: FrequencyMatrix, x) -> np.ndarray:
    """``<n Omega, x>`` over the box for a physical point ``x`` in R^d."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != omega.d:
        raise StructuralError(f"point has dimension {x.size}, expected d={omega.d}")
    coords = box.coords()
    out = np.zeros(box.shape)
    for i in range(box.nu):
        out = out + coords[i] * omega.flat[i] * x[omega.block_of[i]]
    return out


def point_values(amps: np.ndarray, box: TruncationBox, omega: FrequencyMatrix, t: float, x) -> np.ndarray:
    """``u_linear(t, x)`` for a batch of initial amplitude arrays."""
    kernel = np.exp(1j * (phase_at(box, omega, x) - t * dispersion_grid(box, omega)))
    axes = tuple(range(-box.nu, 0))
    return np.sum(amps * kernel, axis=axes)


def pointwise_tail_exact(z0: float, epsilon: float, sigma2_times2: float) -> float:
    """``P(|u(t,x)| >= z0 eps^{-1/2}) = exp(-z0^2 / (2 sigma^2 eps))``."""
    if epsilon <= 0 or sigma2_times2 <= 0 or z0 < 0:
        raise DomainError("pointwise tail needs z0 >= 0 and positive epsilon, variance")
    return math.exp(-z0 * z0 / (sigma2_times2 * epsilon))


def chernoff_bound(N: int, nu: int, x: float) -> ChernoffReport:
    """Optimized Chernoff bound on ``P(xi_N > x)`` with ``xi_N ~ chi^2_{2 (2N+1)^nu}``."""
    m = (2 * N + 1) ** nu
    if not x > 2 * m:
        raise DomainError(f"x={x} must exceed 2(2N+1)^nu = {2 * m}")
    lam = 0.5 * (1.0 - 2.0 * m / x)
    log_bound = -m * math.log1p(-2.0 * lam) - lam * x
    return ChernoffReport(N, nu, float(x), lam, log_bound)


def xi_statistic(values: np.ndarray, nu: int) -> np.ndarray:
    """``xi_N = sum_n 2 r_n^2`` over the trailing ``nu`` axes."""
    axes = tuple(range(-nu, 0))
    return np.sum(2.0 * np.abs(values) ** 2, axis=axes)


def remainder_exponent(eta: float, mu: float, p: DecayProfile, nu: int) -> float:
    """``eta' = eta/2 + (1/nu - mu) sum (rho - kappa - 1)``."""
    if p.nu != nu:
        raise StructuralError(f"profile has nu={p.nu}, expected {nu}")
    p.require_gap(1.0, "the remainder estimate")
    if not 0 <= eta < 1:
        raise DomainError(f"eta must lie in [0, 1), got {eta}")
    if not 0 < mu < 1.0 / nu:
        raise DomainError(f"mu must lie in (0, 1/nu), got {mu}")
    return eta / 2.0 + (1.0 / nu - mu) * float(np.sum(p.gap - 1.0))


def upper_bound_eps_log(epsilon: float, z0: float, mu: float, C_rem: float, etaprime: float,
                        p: DecayProfile, nu: int, sum_sq: float | None = None) -> float:
    """Assembled upper bound on ``eps log P(A_eps)``.

    ``-I/2 + M eps - M eps log(2 M eps / I)`` with ``M = (2N+1)^nu`` and
    ``I = (z0 - C_rem eps^eta')^2 / (sum|c|^2 / 2)``.  When ``2 M eps >= I``
    the optimal Chernoff parameter leaves ``(0, 1/2)`` and only the trivial
    bound 0 holds, which is returned instead.
    """
    shift = C_rem * epsilon ** etaprime
    if not z0 > shift:
        raise DomainError(f"z0={z0} <= C_rem eps^eta' = {shift:g}: bound is vacuous")
    total = sum_sq_coefficients(p) if sum_sq is None else sum_sq
    big_i = (z0 - shift) ** 2 / (0.5 * total)
    m = (2 * truncation_parameter(epsilon, mu, nu) + 1) ** nu
    me = m * epsilon
    if 2.0 * me >= big_i:
        return 0.0
    return -0.5 * big_i + me - me * math.log(2.0 * me / big_i)


def rate_function(z0: float, p: DecayProfile, sum_sq: float | None = None) -> RateReport:
    if not z0 > 0:
        raise DomainError("z0 must be positive")
    total = sum_sq_coefficients(p) if sum_sq is None else sum_sq
    return RateReport(z0 * z0 / total, total, z0)


def remainder_samples(values: np.ndarray, p: DecayProfile, sim_box: TruncationBox, N: int) -> np.ndarray:
    """``R_N = sum_{N < |n| <= N_sim} |c(n)| r_n`` for a batch of fields on ``sim_box``."""
    if N >= sim_box.N:
        return np.zeros(values.shape[0])
    weights = coefficient_grid(sim_box, p).copy()
    inner = tuple([slice(sim_box.N - N, sim_box.N + N + 1)] * sim_box.nu)
    weights[inner] = 0.0
    axes = tuple(range(-sim_box.nu, 0))
    return np.sum(weights * np.abs(values), axis=axes)


def remainder_constant(values: np.ndarray, p: DecayProfile, sim_box: TruncationBox,
                       epsilon: float, mu: float, etaprime: float, quantile: float = 0.999) -> float:
    """Pilot estimate of ``C`` in ``R_N <= C eps^{-1/2 + eta'}``."""
    N = truncation_parameter(epsilon, mu, sim_box.nu)
    r = remainder_samples(values, p, sim_box, N)
    return float(np.quantile(r, quantile)) * epsilon ** (0.5 - etaprime)
