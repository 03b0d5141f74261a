"""I.i.d. standard complex Gaussian coefficients and randomized initial data."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .lattice import (
    DecayProfile,
    FourierState,
    TruncationBox,
    coefficient_grid,
    weighted_norm_grid,
)
from .errors import DomainError, StructuralError


@dataclass(frozen=True)
class SeedSpec:
    """Root of all randomness.  ``g_n`` for sample ``s`` depends only on ``(root_seed, s, n)``."""

    root_seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.root_seed) < 2 ** 64:
            raise DomainError("root_seed must be an unsigned 64-bit integer")

    def gaussians(self, box: TruncationBox, samples, stream: int = rng.FIELD) -> np.ndarray:
        """Array of shape ``(len(samples), *box.shape)``; ``samples`` are sample indices."""
        samples = np.atleast_1d(np.asarray(samples, dtype=np.uint64))
        keys = rng.lattice_keys(box.indices()).reshape(box.shape)
        s = samples.reshape((-1,) + (1,) * box.nu)
        return rng.complex_normals(self.root_seed, stream, s, keys[None])


@dataclass(frozen=True, eq=False)
class GaussianField:
    box: TruncationBox
    values: np.ndarray
    seed: SeedSpec | None = None
    sample_index: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.box.shape:
            raise StructuralError(f"field has shape {values.shape}, box needs {self.box.shape}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def sample_field(seed: SeedSpec, box: TruncationBox, sample_index: int = 0) -> GaussianField:
    values = seed.gaussians(box, [sample_index])[0]
    return GaussianField(box, values, seed, sample_index)


def sample_fields(seed: SeedSpec, box: TruncationBox, start: int, count: int) -> np.ndarray:
    """Batch of ``count`` consecutive samples starting at index ``start``."""
    return seed.gaussians(box, np.arange(start, start + count, dtype=np.uint64))


def polar_decompose(g):
    """``g = r e^{i theta}`` with ``r >= 0`` and ``theta`` in ``[0, 2 pi)``; ``theta(0) = 0``."""
    r = np.abs(g)
    theta = np.mod(np.angle(g), 2 * np.pi)
    # mod can return 2pi for tiny negative angles
    theta = np.where(theta >= 2 * np.pi, 0.0, theta)
    if np.ndim(g) == 0:
        return float(r), float(theta)
    return r, theta


def exceptional_threshold(box: TruncationBox, delta: float, kappa) -> np.ndarray:
    """Envelope ``delta^{-1/2} <<n>>_kappa`` over the box."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa <= 0):
        raise DomainError("kappa must be positive")
    return delta ** -0.5 * weighted_norm_grid(box, -kappa)


def exceptional_mask(values: np.ndarray, box: TruncationBox, delta: float, kappa) -> np.ndarray:
    """Per-sample indicator for a batch ``values`` of shape ``(S, *box.shape)``."""
    thr = exceptional_threshold(box, delta, kappa)
    axes = tuple(range(values.ndim - box.nu, values.ndim))
    return np.any(np.abs(values) > thr, axis=axes)


def exceptional_indicator(field: GaussianField, delta: float, kappa) -> bool:
    """True iff some ``|g_n|`` in the box exceeds ``delta^{-1/2} <<n>>_kappa``."""
    return bool(exceptional_mask(field.values[None], field.box, delta, kappa)[0])


def _one_dim_sum(kappa: float, delta: float, start: int) -> float:
    """``sum_{|m| >= start} exp(-(1+|m|)^{2 kappa} / delta)`` (both signs)."""
    total, m = 0.0, start
    while True:
        term = math.exp(-((1.0 + m) ** (2 * kappa)) / delta)
        total += term if m == 0 else 2 * term
        if term < 1e-300 or (m > start and term < 1e-18 * total):
            return total
        m += 1


def exceptional_tail_bound(box: TruncationBox, delta: float, kappa) -> float:
    """Upper bound on ``P(|g_n| > envelope for some n outside the box)``.

    Uses ``prod a_i >= sum a_i - (nu - 1)`` for ``a_i >= 1`` to factorize
    ``sum_{n not in box} exp(-<<n>>_kappa^2 / delta)``.  The sum over the
    complement is split by the first coordinate leaving the box, which
    avoids cancellation.
    """
    kappa = [float(k) for k in kappa]
    tail = [_one_dim_sum(k, delta, box.N + 1) for k in kappa]
    full = [_one_dim_sum(k, delta, 0) for k in kappa]
    inner = [f - t for f, t in zip(full, tail)]
    outside = math.fsum(tail[i] * math.prod(inner[:i]) * math.prod(full[i + 1:])
                        for i in range(len(kappa)))
    return min(1.0, math.exp((len(kappa) - 1) / delta) * outside)


def make_initial_state(p: DecayProfile, field: GaussianField, epsilon: float = 0.0) -> FourierState:
    """``c(0, n) = c(n) g_n``."""
    if p.nu != field.box.nu:
        raise StructuralError(f"profile has nu={p.nu}, field box has nu={field.box.nu}")
    amps = coefficient_grid(field.box, p) * field.values
    return FourierState(field.box, amps, 0.0, epsilon)
