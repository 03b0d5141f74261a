import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from rogueqp.errors import DomainError
from rogueqp.lattice import (
    DecayProfile,
    FourierState,
    FrequencyMatrix,
    TruncationBox,
    coefficient_grid,
    dispersion,
    sum_sq_coefficients,
)
from rogueqp.linear_ldp import (
    chernoff_bound,
    evolve_linear,
    point_values,
    pointwise_tail_exact,
    rate_function,
    remainder_constant,
    remainder_exponent,
    remainder_samples,
    torus_sup_norm,
    torus_values,
    upper_bound_eps_log,
    xi_statistic,
)
from rogueqp.random_field import SeedSpec, sample_fields

OM1 = FrequencyMatrix([[1.0]])
ZETA6 = float(2 * mpmath.zeta(6) - 1)

amps_1d = st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                   min_size=5, max_size=5)


def state(amps, N=2, nu=1):
    return FourierState(TruncationBox(N, nu), np.asarray(amps).reshape((2 * N + 1,) * nu))


class TestEvolve:
    def test_identity(self):
        s = state([1, 2, 3j, 4, 5])
        assert np.array_equal(evolve_linear(s, 0.0, OM1).amps, s.amps)

    def test_half_period(self):
        om = FrequencyMatrix([[1.0, math.sqrt(2)]])
        box = TruncationBox(1, 2)
        amps = np.zeros(box.shape, complex)
        amps[box.position((1, 1))] = 1
        q = dispersion((1, 1), om)
        out = evolve_linear(FourierState(box, amps), math.pi / q, om)
        assert out.at((1, 1)) == pytest.approx(-1, abs=1e-12)

    @given(amps_1d, st.floats(-50, 50))
    def test_unitary(self, amps, t):
        s = state(amps)
        e = evolve_linear(s, t, OM1)
        assert np.allclose(np.abs(e.amps), np.abs(s.amps), rtol=0, atol=1e-13)
        assert e.mass == pytest.approx(s.mass, rel=1e-14, abs=1e-300)

    def test_composes(self):
        s = state([1, 2, 3j, 4, 5])
        a = evolve_linear(evolve_linear(s, 0.3, OM1), 0.4, OM1)
        b = evolve_linear(s, 0.7, OM1)
        assert a.time == pytest.approx(0.7) and np.allclose(a.amps, b.amps, atol=1e-14)


class TestSup:
    def test_single_mode(self):
        s = state([0, 0, 0, 2 - 1j, 0])
        for g in (5, 9, 16):
            assert torus_sup_norm(s, g).sup == pytest.approx(abs(2 - 1j))

    def test_two_modes(self):
        s = state([0, 1, 0, 1, 0])
        r = torus_sup_norm(s, 8)
        assert r.sup == pytest.approx(2.0) and r.argmax == (0,)

    @given(amps_1d, st.integers(5, 40))
    def test_bounded_by_l1(self, amps, grid):
        r = torus_sup_norm(state(amps), grid)
        assert r.sup <= r.l1_bound * (1 + 1e-12) + 1e-12

    def test_matches_direct_synthesis(self):
        rng = np.random.default_rng(0)
        box = TruncationBox(2, 2)
        a = rng.normal(size=box.shape) + 1j * rng.normal(size=box.shape)
        G = 9
        vals = torus_values(a, 2, G)
        for k in [(0, 0), (3, 5), (8, 1)]:
            y = 2 * np.pi * np.array(k) / G
            direct = sum(a[box.position(n)] * np.exp(1j * np.dot(n, y)) for n in box.indices())
            assert vals[k] == pytest.approx(direct, abs=1e-12)

    def test_refine_converges(self):
        rng = np.random.default_rng(1)
        s = state(rng.normal(size=5) + 1j * rng.normal(size=5))
        coarse = torus_sup_norm(s, 9)
        fine = torus_sup_norm(s, 9, refine=True)
        assert fine.grid > coarse.grid and fine.sup >= coarse.sup - 1e-12

    def test_undersampled_flag(self):
        s = state([1, 2, 3, 4, 5])
        assert torus_sup_norm(s, 5).undersampled and not torus_sup_norm(s).undersampled

    def test_point_values_match_torus(self):
        """At x = 0 the physical field equals the torus value at y = 0."""
        box = TruncationBox(2, 1)
        a = np.arange(5) + 1j
        assert point_values(a[None], box, OM1, 0.0, [0.0])[0] == pytest.approx(a.sum())


class TestPointwise:
    def test_examples(self):
        assert pointwise_tail_exact(1, 0.1, 1.0) == pytest.approx(math.exp(-10))
        assert pointwise_tail_exact(1, 0.1, 1.0) == pytest.approx(4.5400e-5, rel=1e-4)
        assert pointwise_tail_exact(1e-9, 0.1, 1.0) == pytest.approx(1.0)

    def test_mc(self):
        p = DecayProfile([3.0], [1.0])
        box = TruncationBox(6, 1)
        g = sample_fields(SeedSpec(21), box, 0, 100_000)
        u = point_values(coefficient_grid(box, p) * g, box, OM1, 0.3, [0.7])
        s = float(np.sum(coefficient_grid(box, p) ** 2))
        eps, z0 = 0.5, 1.0
        q = pointwise_tail_exact(z0, eps, s)
        ph = np.mean(np.abs(u) > z0 * eps ** -0.5)
        assert abs(ph - q) < 3 * math.sqrt(q * (1 - q) / g.shape[0])


class TestChernoff:
    def test_reference(self):
        r = chernoff_bound(1, 1, 12.0)
        assert r.lambda_star == 0.25
        assert r.bound == pytest.approx(8 * math.exp(-3), rel=1e-14)
        assert r.bound == pytest.approx(0.398297, abs=1e-6)
        tail = stats.chi2.sf(12, 6)
        assert tail == pytest.approx(0.0620, abs=1e-4) and tail < r.bound

    @pytest.mark.parametrize("x", [6.0, 5.0, 0.0])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            chernoff_bound(1, 1, x)

    @given(st.integers(1, 3), st.integers(1, 2), st.floats(1.01, 50))
    def test_dominates_chi2(self, N, nu, f):
        m = (2 * N + 1) ** nu
        x = 2 * m * f
        r = chernoff_bound(N, nu, x)
        assert 0 < r.lambda_star < 0.5
        assert stats.chi2.logsf(x, 2 * m) <= r.log_bound + 1e-12

    def test_large_x(self):
        for x in (1e4, 1e6):
            r = chernoff_bound(1, 1, x)
            assert (r.log_bound + x / 2) / x < 1e-2

    def test_xi_is_chi2(self):
        box = TruncationBox(1, 1)
        xi = xi_statistic(sample_fields(SeedSpec(2), box, 0, 50_000), 1)
        assert stats.kstest(xi, "chi2", args=(6,)).pvalue > 0.01


class TestRemainderExponent:
    def test_examples(self):
        assert remainder_exponent(0.5, 0.1, DecayProfile([5.0], [1.0]), 1) == pytest.approx(2.95)
        assert remainder_exponent(0.0, 0.1, DecayProfile([3.5, 3.5], [1.0, 1.0]), 2) == pytest.approx(1.2)

    def test_boundary(self):
        v = remainder_exponent(0.0, 1 - 1e-9, DecayProfile([5.0], [1.0]), 1)
        assert 0 < v < 1e-8

    @pytest.mark.parametrize("eta,mu,rho", [(1.0, 0.1, 5.0), (0.5, 1.0, 5.0), (0.5, 0.1, 2.0)])
    def test_domain(self, eta, mu, rho):
        with pytest.raises(DomainError):
            remainder_exponent(eta, mu, DecayProfile([rho], [1.0]), 1)


class TestUpperBound:
    def test_three_term_example(self):
        p = DecayProfile([math.inf], [1.0])
        v = upper_bound_eps_log(0.01, 1.0, 0.5, 0.0, 2.95, p, 1)
        assert v == pytest.approx(-1 + 0.21 - 0.21 * math.log(0.21), rel=1e-12)
        assert v == pytest.approx(-0.4622, abs=1e-4)

    def test_limit_sequence(self):
        p = DecayProfile([3.0], [1.0])
        target = -1 / ZETA6
        vals = [upper_bound_eps_log(e, 1.0, 0.5, 1.0, 2.95, p, 1) for e in (1e-2, 1e-3, 1e-4)]
        gaps = [abs(v - target) for v in vals]
        assert gaps[0] > gaps[1] > gaps[2]
        assert all(v >= target for v in vals)
        assert abs(upper_bound_eps_log(1e-8, 1.0, 0.5, 1.0, 2.95, p, 1) - target) < 3e-3

    def test_vacuous_regime_returns_zero(self):
        p = DecayProfile([3.0], [1.0])
        assert upper_bound_eps_log(0.4, 1.0, 0.5, 0.0, 1.0, p, 1) == 0.0

    def test_shift_domain(self):
        with pytest.raises(DomainError):
            upper_bound_eps_log(0.1, 1.0, 0.5, 100.0, 0.5, DecayProfile([3.0], [1.0]), 1)

    @given(st.floats(0.1, 5), st.floats(1e-6, 0.3))
    def test_never_below_limit(self, z0, eps):
        """With C_rem = 0 the bound sits at or above -z0^2 / sum |c|^2."""
        p = DecayProfile([3.0], [1.0])
        v = upper_bound_eps_log(eps, z0, 0.5, 0.0, 1.0, p, 1)
        assert v >= -z0 ** 2 / ZETA6 - 1e-12


class TestRate:
    def test_examples(self):
        r = rate_function(2.0, DecayProfile([3.0], [1.0]))
        assert r.rate == pytest.approx(4 / ZETA6, rel=1e-12)
        assert r.rate == pytest.approx(3.86591, abs=1e-5)
        assert rate_function(1.0, DecayProfile([math.inf], [1.0])).rate == 1.0

    def test_homogeneity(self):
        a = rate_function(1.3, DecayProfile([3.0, 2.0], [1.0, 1.0]))
        b = rate_function(1.3, DecayProfile([3.0, 2.0], [1.0, 1.0], amplitude=2.0))
        assert a.rate == pytest.approx(4 * b.rate)

    def test_identity_with_upper_bound(self):
        p = DecayProfile([3.0], [1.0])
        total = sum_sq_coefficients(p)
        big_i = 1.5 ** 2 / (0.5 * total)
        assert -0.5 * big_i == pytest.approx(-rate_function(1.5, p).rate)


class TestRemainder:
    def test_zero_inside(self):
        box = TruncationBox(4, 1)
        g = np.ones((1,) + box.shape)
        assert remainder_samples(g, DecayProfile([3.0], [1.0]), box, 4)[0] == 0
        r = remainder_samples(g, DecayProfile([3.0], [1.0]), box, 3)[0]
        assert r == pytest.approx(2 * 5.0 ** -3)

    def test_constant_positive(self):
        box = TruncationBox(8, 1)
        g = sample_fields(SeedSpec(1), box, 0, 2000)
        c = remainder_constant(g, DecayProfile([3.0], [1.0]), box, 0.05, 0.5, 0.75)
        assert c > 0
