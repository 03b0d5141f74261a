"""Counter-based random numbers keyed by (root seed, sample, lattice index).

Every variate is a pure function of its key, so results do not depend on
evaluation order, chunking or thread count.  The bijection is Philox4x32-10,
vectorised over numpy arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

# stream tags occupy the top 4 bits of the 64-bit lattice key
FIELD = 0
TILT = 1
AUX = 2

_KEY_BITS = 10
_MAX_NU = 60 // _KEY_BITS


def philox4x32(ctr, key, rounds: int = 10):
    """Apply Philox4x32 to counters ``ctr = (c0, c1, c2, c3)`` (uint32 values in arrays)."""
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK for c in ctr)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _S32) ^ c1 ^ np.uint64(k0),
            p1 & _MASK,
            (p0 >> _S32) ^ c3 ^ np.uint64(k1),
            p0 & _MASK,
        )
    return c0, c1, c2, c3


def lattice_keys(indices: np.ndarray) -> np.ndarray:
    """Injective map from multi-indices (rows) to 60-bit integers, independent of box size."""
    indices = np.asarray(indices, dtype=np.int64)
    nu = indices.shape[-1]
    if nu > _MAX_NU:
        raise DomainError(f"counter keys support nu <= {_MAX_NU}, got {nu}")
    if indices.size and np.max(np.abs(indices)) >= 2 ** (_KEY_BITS - 1):
        raise DomainError("lattice coordinates must satisfy |n_i| < 512")
    zig = np.where(indices >= 0, 2 * indices, -2 * indices - 1).astype(np.uint64)
    key = np.zeros(indices.shape[:-1], dtype=np.uint64)
    for i in range(nu):
        key |= zig[..., i] << np.uint64(_KEY_BITS * i)
    return key


def _split_seed(seed: int) -> tuple[int, int]:
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise DomainError("root seed must be an unsigned 64-bit integer")
    return seed & 0xFFFFFFFF, seed >> 32


def uniform_pair(seed: int, stream: int, samples, keys):
    """Two independent U[0,1) arrays for every (sample, key) combination.

    ``samples`` and ``keys`` broadcast against each other.
    """
    samples = np.asarray(samples, dtype=np.uint64)
    keys = np.asarray(keys, dtype=np.uint64) | (np.uint64(stream & 0xF) << np.uint64(60))
    samples, keys = np.broadcast_arrays(samples, keys)
    out = philox4x32(
        (samples & _MASK, samples >> _S32, keys & _MASK, keys >> _S32), _split_seed(seed)
    )
    scale = 2.0 ** -53
    u1 = ((out[0] << np.uint64(21)) | (out[1] >> np.uint64(11))).astype(np.float64) * scale
    u2 = ((out[2] << np.uint64(21)) | (out[3] >> np.uint64(11))).astype(np.float64) * scale
    return u1, u2


def complex_normals(seed: int, stream: int, samples, keys) -> np.ndarray:
    """Standard complex Gaussians: ``|g|^2 ~ Exp(1)`` and uniform phase."""
    u1, u2 = uniform_pair(seed, stream, samples, keys)
    return np.sqrt(-np.log1p(-u1)) * np.exp(2j * np.pi * u2)
