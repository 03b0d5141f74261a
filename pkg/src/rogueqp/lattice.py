"""Frequency data, lattice geometry and the deterministic coefficient profile.

A multi-index ``n`` in Z^nu is a plain tuple (or 1-D int array) of length
``nu``; the first ``nu_1`` entries belong to spatial direction 1, the next
``nu_2`` to direction 2, and so on.  Arrays over a truncation box use axis
``i`` for coordinate ``i`` with array position ``n_i + N``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DomainError, StructuralError

log = logging.getLogger(__name__)

M_CHECK = 8
TAU_INDEP = 1e-9
# 17**5 combinations; larger blocks skip the heuristic check
_MAX_INDEP_COMBOS = 1_500_000


@dataclass(frozen=True)
class FrequencyMatrix:
    """Block-diagonal frequency data ``diag(omega_1^T, ..., omega_d^T)``."""

    omegas: tuple[tuple[float, ...], ...]
    check_independence: bool = field(default=True, compare=False)

    def __post_init__(self):
        omegas = tuple(tuple(float(w) for w in block) for block in self.omegas)
        object.__setattr__(self, "omegas", omegas)
        if not omegas:
            raise StructuralError("at least one spatial direction is required")
        for j, block in enumerate(omegas):
            if len(block) < 1:
                raise StructuralError(f"direction {j} has no frequencies")
            if not all(math.isfinite(w) for w in block):
                raise DomainError(f"direction {j} has non-finite frequencies")
        if self.check_independence:
            bad = find_rational_relation(self)
            if bad is not None:
                j, n = bad
                raise DomainError(
                    f"frequencies of direction {j} look rationally dependent: "
                    f"<{n}, {omegas[j]}> = 0 within {TAU_INDEP}"
                )

    @property
    def d(self) -> int:
        return len(self.omegas)

    @property
    def nu_blocks(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.omegas)

    @property
    def nu(self) -> int:
        return sum(self.nu_blocks)

    @cached_property
    def flat(self) -> np.ndarray:
        """All frequencies concatenated, length ``nu``."""
        return np.array([w for block in self.omegas for w in block])

    @cached_property
    def block_of(self) -> np.ndarray:
        """Direction index ``j`` of every flat coordinate."""
        return np.repeat(np.arange(self.d), self.nu_blocks)

    def matrix(self) -> np.ndarray:
        """Block-diagonal ``d x nu`` matrix ``diag(omega_1^T, ..., omega_d^T)``."""
        out = np.zeros((self.d, self.nu))
        out[self.block_of, np.arange(self.nu)] = self.flat
        return out

    def split(self, n: Sequence[int]) -> list[tuple[int, ...]]:
        """Block view ``(n_1, ..., n_d)`` of a flat multi-index."""
        n = tuple(int(v) for v in n)
        if len(n) != self.nu:
            raise StructuralError(f"multi-index has length {len(n)}, expected nu={self.nu}")
        out, start = [], 0
        for size in self.nu_blocks:
            out.append(n[start:start + size])
            start += size
        return out


def find_rational_relation(omega: FrequencyMatrix, m_check: int = M_CHECK,
                           tol: float = TAU_INDEP):
    """Search for an integer relation ``<n_j, omega_j> ~ 0`` with ``0 < |n_j| <= m_check``.

    Returns ``(j, n_j)`` for the first relation found, else ``None``.  This is
    a heuristic: passing it does not prove rational independence.
    """
    for j, block in enumerate(omega.omegas):
        w = np.asarray(block)
        k = len(w)
        if (2 * m_check + 1) ** k > _MAX_INDEP_COMBOS:
            log.warning("direction %d has %d frequencies; independence check skipped", j, k)
            continue
        axis = np.arange(-m_check, m_check + 1)
        combos = np.array(list(itertools.product(axis, repeat=k)))
        combos = combos[np.any(combos != 0, axis=1)]
        vals = np.abs(combos @ w)
        hit = np.flatnonzero(vals <= tol * max(1.0, float(np.max(np.abs(w)))))
        if hit.size:
            # report the relation of smallest sup-norm
            best = hit[np.argmin(np.max(np.abs(combos[hit]), axis=1))]
            return j, tuple(int(v) for v in combos[best])
    return None


@dataclass(frozen=True)
class DecayProfile:
    """Coefficient profile ``c(n) = amplitude * prod (1+|n_i|)^(-rho_i)``.

    ``kappa`` are the exponents of the exceptional-set envelope.  ``rho`` may
    contain ``inf``, which pins that coordinate to zero (single-mode limit).
    """

    rho: tuple[float, ...]
    kappa: tuple[float, ...]
    amplitude: float = 1.0

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        kappa = tuple(float(k) for k in self.kappa)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "kappa", kappa)
        if len(rho) != len(kappa):
            raise StructuralError("rho and kappa must have the same length")
        if not rho:
            raise StructuralError("empty profile")
        if any(not (r > 0.5) for r in rho):
            raise DomainError(f"all rho must exceed 1/2 for finite variance, got {rho}")
        if any(not (k > 0) or not math.isfinite(k) for k in kappa):
            raise DomainError(f"all kappa must be positive and finite, got {kappa}")
        if not (self.amplitude > 0 and math.isfinite(self.amplitude)):
            raise DomainError("amplitude must be positive")

    @classmethod
    def uniform(cls, nu: int, rho: float, kappa: float = 1.0, amplitude: float = 1.0):
        return cls((rho,) * nu, (kappa,) * nu, amplitude)

    @property
    def nu(self) -> int:
        return len(self.rho)

    @property
    def gap(self) -> np.ndarray:
        """Componentwise ``rho - kappa``."""
        return np.asarray(self.rho) - np.asarray(self.kappa)

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gap))

    def require_gap(self, bound: float, what: str = "") -> None:
        if not self.min_gap > bound:
            raise DomainError(
                f"min(rho - kappa) = {self.min_gap:g} must exceed {bound:g}"
                + (f" for {what}" if what else "")
            )


@dataclass(frozen=True)
class TruncationBox:
    """The cube ``Lambda_N = {n in Z^nu : |n_i| <= N}``."""

    N: int
    nu: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise DomainError(f"box radius must be a non-negative integer, got {self.N}")
        if int(self.nu) != self.nu or self.nu < 1:
            raise DomainError(f"nu must be a positive integer, got {self.nu}")

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.nu

    @property
    def size(self) -> int:
        return self.side ** self.nu

    def axis(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def indices(self) -> np.ndarray:
        """All members in lexicographic order, shape ``(size, nu)``."""
        grids = np.meshgrid(*([self.axis()] * self.nu), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays ``n_i`` over the box."""
        a = self.axis()
        out = []
        for i in range(self.nu):
            shape = [1] * self.nu
            shape[i] = self.side
            out.append(a.reshape(shape))
        return out

    def contains(self, n: Sequence[int]) -> bool:
        return len(n) == self.nu and max((abs(int(v)) for v in n), default=0) <= self.N

    def position(self, n: Sequence[int]) -> tuple[int, ...]:
        """Array position of multi-index ``n``."""
        if not self.contains(n):
            raise StructuralError(f"{tuple(n)} is not in the box of radius {self.N}")
        return tuple(int(v) + self.N for v in n)


@dataclass(frozen=True, eq=False)
class FourierState:
    """Complex amplitudes ``c(t, n)`` on a truncation box."""

    box: TruncationBox
    amps: np.ndarray
    time: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != self.box.shape:
            raise StructuralError(f"amplitudes have shape {amps.shape}, box needs {self.box.shape}")
        if not np.all(np.isfinite(amps)):
            raise DomainError("amplitudes must be finite")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @property
    def mass(self) -> float:
        return math.fsum(np.abs(self.amps).ravel() ** 2)

    def at(self, n: Sequence[int]) -> complex:
        return complex(self.amps[self.box.position(n)])

    def replace(self, **kw) -> "FourierState":
        args = dict(box=self.box, amps=self.amps, time=self.time, epsilon=self.epsilon)
        args.update(kw)
        return FourierState(**args)


def _as_index(n, nu=None) -> np.ndarray:
    n = np.asarray(n, dtype=np.int64)
    if n.ndim != 1:
        raise StructuralError("multi-index must be one-dimensional")
    if nu is not None and n.size != nu:
        raise StructuralError(f"multi-index has length {n.size}, expected {nu}")
    return n


def dispersion(n: Sequence[int], omega: FrequencyMatrix) -> float:
    """``Q(n) = sum_j <n_j, omega_j>^2``."""
    n = _as_index(n, omega.nu)
    proj = np.bincount(omega.block_of, weights=n * omega.flat, minlength=omega.d)
    return float(np.sum(proj ** 2))


def dispersion_grid(box: TruncationBox, omega: FrequencyMatrix) -> np.ndarray:
    """``Q(n)`` for every member of the box, shaped like the box."""
    if box.nu != omega.nu:
        raise StructuralError(f"box has nu={box.nu}, frequencies have nu={omega.nu}")
    coords = box.coords()
    q = np.zeros(box.shape)
    for j in range(omega.d):
        proj = 0.0
        for i in np.flatnonzero(omega.block_of == j):
            proj = proj + coords[i] * omega.flat[i]
        q = q + proj ** 2
    return q


def weighted_norm(n: Sequence[int], exps: Sequence[float]) -> float:
    """``prod_i (1 + |n_i|)^(-e_i)``.  Negative exponents give the growing weight."""
    n = _as_index(n, len(exps))
    return float(np.prod((1.0 + np.abs(n)) ** (-np.asarray(exps, dtype=float))))


def weighted_norm_grid(box: TruncationBox, exps: Sequence[float]) -> np.ndarray:
    exps = np.asarray(exps, dtype=float)
    if exps.size != box.nu:
        raise StructuralError("exponent vector does not match the box dimension")
    out = np.ones(box.shape)
    for i, c in enumerate(box.coords()):
        out = out * (1.0 + np.abs(c)) ** (-exps[i])
    return out


def coefficient(n: Sequence[int], p: DecayProfile) -> float:
    return p.amplitude * weighted_norm(n, p.rho)


def coefficient_grid(box: TruncationBox, p: DecayProfile) -> np.ndarray:
    if p.nu != box.nu:
        raise StructuralError(f"profile has nu={p.nu}, box has nu={box.nu}")
    return p.amplitude * weighted_norm_grid(box, p.rho)


def truncation_parameter(epsilon: float, mu: float, nu: int) -> int:
    """Lattice radius ``max(1, floor(eps^(mu - 1/nu)))``."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < mu < 1.0 / nu:
        raise DomainError(f"mu must lie in (0, 1/nu) = (0, {1.0 / nu:g}), got {mu}")
    x = epsilon ** (mu - 1.0 / nu)
    # absorb round-off such as 0.01**-0.5 = 9.999999999999998
    return max(1, math.floor(x * (1 + 1e-12)))


def _tail_radius(rho: float, tail_tol: float, cap: int = 10_000_000) -> int:
    """Smallest N with 2 (1+N)^(1-2rho) / (2rho-1) <= tail_tol."""
    a = 2.0 * rho - 1.0
    guess = (a * tail_tol / 2.0) ** (-1.0 / a) - 1.0
    if guess > cap:
        raise DomainError(f"rho={rho} needs ~{guess:.3g} terms for tail_tol={tail_tol}; loosen tolerance")
    n = max(math.ceil(guess), 0)
    while 2.0 * (1.0 + n) ** (-a) / a > tail_tol:
        n += 1
    while n > 0 and 2.0 * float(n) ** (-a) / a <= tail_tol:
        n -= 1
    return n


def sum_sq_radius(p: DecayProfile, tail_tol: float = 1e-13) -> list[int]:
    """Per-coordinate partial-sum radius ``N*`` used by :func:`sum_sq_coefficients`."""
    return [0 if math.isinf(r) else _tail_radius(r, tail_tol) for r in p.rho]


def sum_sq_coefficients(p: DecayProfile, tail_tol: float = 1e-13) -> float:
    """``sum_{n in Z^nu} |c(n)|^2`` as a product of one-dimensional sums.

    Each factor ``sum_m (1+|m|)^(-2 rho)`` is summed exactly to ``N*`` and
    the neglected two-sided tail is below ``tail_tol``.
    """
    total = p.amplitude ** 2
    for rho, n_star in zip(p.rho, sum_sq_radius(p, tail_tol)):
        if math.isinf(rho):
            continue
        m = np.arange(n_star, 0, -1, dtype=float)
        total *= 1.0 + 2.0 * math.fsum((1.0 + m) ** (-2.0 * rho))
    return total
