"""Branch sets of the Picard expansion and their counting data.

A branch is ``0`` (linear leaf), ``1`` (cubic node, depth 1 only) or a
3-tuple of branches one level shallower.  Plain ints and tuples give
structural equality and hashing for free.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Union

import numpy as np

from .errors import DomainError
from .lattice import DecayProfile

Branch = Union[int, tuple]

LEAF = 0
CUBIC = 1
# Gamma^(k) is kept in memory up to this depth (|Gamma^(3)| = 730)
MATERIALIZE_MAX = 3
HORIZON_PREFACTOR = Fraction(4, 27)


def is_valid(b: Branch, k: int) -> bool:
    if b == LEAF and not isinstance(b, tuple):
        return True
    if b == CUBIC and not isinstance(b, tuple):
        return k == 1
    return (isinstance(b, tuple) and len(b) == 3 and k >= 2
            and all(is_valid(c, k - 1) for c in b))


def count_branches(k: int) -> int:
    """``|Gamma^(1)| = 2``, ``|Gamma^(k)| = 1 + |Gamma^(k-1)|^3``."""
    if k < 1:
        raise DomainError("branch depth must be >= 1")
    n = 2
    for _ in range(k - 1):
        n = 1 + n ** 3
    return n


@lru_cache(maxsize=None)
def _materialized(k: int) -> tuple:
    return tuple(enumerate_branches(k))


def enumerate_branches(k: int) -> Iterator[Branch]:
    """Yield every element of ``Gamma^(k)`` exactly once.

    Depths above ``MATERIALIZE_MAX + 1`` are produced by nested generators,
    never held in memory.
    """
    if k < 1:
        raise DomainError("branch depth must be >= 1")
    if k == 1:
        yield LEAF
        yield CUBIC
        return
    yield LEAF
    if k - 1 <= MATERIALIZE_MAX:
        yield from itertools.product(_materialized(k - 1), repeat=3)
        return
    for a in enumerate_branches(k - 1):
        for b in enumerate_branches(k - 1):
            for c in enumerate_branches(k - 1):
                yield (a, b, c)


@lru_cache(maxsize=None)
def sigma(b: Branch) -> Fraction:
    if isinstance(b, tuple):
        return sum((sigma(c) for c in b), Fraction(0))
    return Fraction(1, 2) if b == LEAF else Fraction(3, 2)


@lru_cache(maxsize=None)
def ell(b: Branch) -> int:
    if isinstance(b, tuple):
        return 1 + sum(ell(c) for c in b)
    return 0 if b == LEAF else 1


@lru_cache(maxsize=None)
def denom(b: Branch) -> int:
    if isinstance(b, tuple):
        return ell(b) * math.prod(denom(c) for c in b)
    return 1


def domain_dim(b: Branch) -> int:
    """Number of Z^nu slots of the summation domain, by structural recursion."""
    if isinstance(b, tuple):
        return sum(domain_dim(c) for c in b)
    return 1 if b == LEAF else 3


def random_branch(k: int, rnd: random.Random, p_leaf: float = 0.45) -> Branch:
    """A random valid branch of depth ``k``."""
    if k == 1:
        return LEAF if rnd.random() < p_leaf else CUBIC
    if rnd.random() < p_leaf:
        return LEAF
    return tuple(random_branch(k - 1, rnd, p_leaf) for _ in range(3))


# majorant series -----------------------------------------------------------

def majorant_exhaustive(k: int, z: float) -> float:
    """``M_k(z) = sum_{gamma in Gamma^(k)} z^ell / D`` by enumeration."""
    if k > MATERIALIZE_MAX:
        raise DomainError(f"exhaustive majorant is limited to k <= {MATERIALIZE_MAX}")
    return math.fsum(z ** ell(b) / denom(b) for b in _materialized(k))


def _cube_truncated(c: np.ndarray, max_degree: int | None) -> np.ndarray:
    sq = np.convolve(c, c)
    if max_degree is not None:
        sq = sq[:max_degree + 1]
    cube = np.convolve(sq, c)
    if max_degree is not None:
        cube = cube[:max_degree + 1]
    return cube


def majorant_coefficients(k: int, max_degree: int | None = None, exact: bool = False):
    """Power-series coefficients of ``M_k`` from ``M_k = 1 + int_0^z M_{k-1}^3``.

    The recursion follows from ``D(node) = ell(node) * prod D(children)``.
    ``exact`` uses ``Fraction`` arithmetic (small ``k`` only).
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    if exact:
        poly = [Fraction(1), Fraction(1)]
        for _ in range(k - 1):
            sq = _fraction_mul(poly, poly)
            cube = _fraction_mul(sq, poly)
            if max_degree is not None:
                cube = cube[:max_degree]
            poly = [Fraction(1)] + [a / (i + 1) for i, a in enumerate(cube)]
        return poly
    c = np.array([1.0, 1.0])
    for _ in range(k - 1):
        cube = _cube_truncated(c, None if max_degree is None else max_degree - 1)
        c = np.concatenate([[1.0], cube / np.arange(1, cube.size + 1)])
    if max_degree is not None:
        c = c[:max_degree + 1]
    return c


def _fraction_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def majorant_degree(k: int) -> int:
    deg = 1
    for _ in range(k - 1):
        deg = 3 * deg + 1
    return deg


def majorant_limit(z: float) -> float:
    """Fixed point ``(1 - 2z)^{-1/2}`` of the recursion; dominates every ``M_k`` coefficientwise."""
    if not 0 <= z < 0.5:
        raise DomainError("the limit series converges only for 0 <= z < 1/2")
    return (1.0 - 2.0 * z) ** -0.5


def majorant_series(k: int, z: float, mode: str = "functional", tol: float = 1e-17) -> float:
    """Evaluate ``M_k(z)``.

    ``functional`` integrates the polynomial recursion.  Past degree 2000 the
    series is truncated at the degree where the dominating tail
    ``sum_{d > D} (2z)^d`` drops below ``tol`` (needs ``0 <= z < 1/2``).
    """
    if mode == "exhaustive":
        return majorant_exhaustive(k, z)
    if mode != "functional":
        raise ValueError(f"unknown mode {mode!r}")
    if z < 0:
        raise DomainError("majorant is evaluated for z >= 0")
    if z == 0:
        return 1.0
    deg = majorant_degree(k)
    max_degree = None
    if deg > 2000:
        if not z < 0.5:
            raise DomainError("high-depth majorant needs z < 1/2")
        d = math.ceil(math.log(tol * (1 - 2 * z)) / math.log(2 * z))
        max_degree = max(1, min(deg, d))
    c = majorant_coefficients(k, max_degree)
    return float(np.polynomial.polynomial.polyval(z, c))


# time horizon --------------------------------------------------------------

@dataclass(frozen=True)
class HorizonReport:
    b: float
    B: float
    T_eps: float
    epsilon: float
    eta: float
    nu: int


def zeta_majorant(s: float) -> float:
    """``b(s) = s / (s - 1)``, an upper bound for ``zeta(s)`` on ``s > 1``."""
    if not s > 1:
        raise DomainError("b(s) needs s > 1")
    if math.isinf(s):
        return 1.0
    return s / (s - 1.0)


def horizon(epsilon: float, eta: float, p: DecayProfile, nu: int) -> HorizonReport:
    """``T_eps = (4/27) B^{-2 nu} eps^{-1-eta}`` with ``B = 1 + 2 b((rho-kappa)_min / 2)``."""
    p.require_gap(2.0, "the nonlinear time horizon")
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    if not 0 <= eta < 1:
        raise DomainError("eta must lie in [0, 1)")
    b = zeta_majorant(p.min_gap / 2.0)
    big_b = 1.0 + 2.0 * b
    t = float(HORIZON_PREFACTOR) * big_b ** (-2 * nu) * epsilon ** (-1.0 - eta)
    return HorizonReport(b, big_b, t, epsilon, eta, nu)


def tree_report(k: int, z_values=(0.0, 4 / 27)) -> dict:
    """Summary used by the ``tree-check`` subcommand."""
    count = count_branches(k)
    identity_ok = dim_ok = None
    if k <= MATERIALIZE_MAX:
        branches = _materialized(k)
        identity_ok = all(sigma(b) == ell(b) + Fraction(1, 2) for b in branches)
        dim_ok = all(domain_dim(b) == 2 * sigma(b) for b in branches)
    else:
        rnd = random.Random(k)
        sample = [random_branch(k, rnd) for _ in range(2000)]
        identity_ok = all(sigma(b) == ell(b) + Fraction(1, 2) for b in sample)
        dim_ok = all(domain_dim(b) == 2 * sigma(b) for b in sample)
    values = {f"{z:.17g}": majorant_series(k, z) for z in z_values}
    return {
        "k": k,
        "count": count,
        "sigma_ell_identity_ok": identity_ok,
        "dim_identity_ok": dim_ok,
        "exhaustive": k <= MATERIALIZE_MAX,
        "majorant_values": values,
    }
