import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from rogueqp.lattice import DecayProfile, TruncationBox, coefficient_grid
from rogueqp.random_field import (
    GaussianField,
    SeedSpec,
    exceptional_indicator,
    exceptional_mask,
    exceptional_tail_bound,
    make_initial_state,
    polar_decompose,
    sample_field,
    sample_fields,
)

N_MC = 100_000


@pytest.fixture(scope="module")
def one_mode():
    box = TruncationBox(0, 1)
    return sample_fields(SeedSpec(123), box, 0, N_MC)[:, 0]


def test_determinism():
    box = TruncationBox(2, 2)
    a = sample_field(SeedSpec(9), box, 4)
    b = sample_field(SeedSpec(9), box, 4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, sample_field(SeedSpec(10), box, 4).values)


def test_chunking_independent():
    box = TruncationBox(1, 2)
    whole = sample_fields(SeedSpec(3), box, 0, 100)
    parts = np.concatenate([sample_fields(SeedSpec(3), box, s, 25) for s in range(0, 100, 25)])
    assert np.array_equal(whole, parts)


def test_box_growth_keeps_values():
    """A mode's value does not depend on the box it is sampled in."""
    small = sample_field(SeedSpec(4), TruncationBox(1, 2), 7).values
    big = sample_field(SeedSpec(4), TruncationBox(3, 2), 7).values
    assert np.array_equal(small, big[2:5, 2:5])


def test_moments(one_mode):
    g = one_mode
    assert abs(g.mean()) < 0.01
    assert abs(np.mean(np.abs(g) ** 2) - 1) < 0.01
    assert abs(np.var(g.real) - 0.5) < 0.01 and abs(np.var(g.imag) - 0.5) < 0.01


def test_modulus_exponential(one_mode):
    assert stats.kstest(np.abs(one_mode) ** 2, "expon").pvalue > 0.01


def test_phase_uniform(one_mode):
    _, th = polar_decompose(one_mode)
    assert stats.kstest(th / (2 * np.pi), "uniform").pvalue > 0.01


def test_two_r_squared_mean(one_mode):
    r, _ = polar_decompose(one_mode)
    x = 2 * r ** 2
    assert abs(x.mean() - 2) < 3 * x.std() / math.sqrt(x.size)


def test_cross_mode_uncorrelated():
    g = sample_fields(SeedSpec(77), TruncationBox(1, 1), 0, 20000)
    for i in range(3):
        for j in range(i + 1, 3):
            assert abs(np.mean(g[:, i] * np.conj(g[:, j]))) < 3 / math.sqrt(20000)


class TestPolar:
    def test_examples(self):
        assert polar_decompose(1.0) == (1.0, 0.0)
        r, th = polar_decompose(-2j)
        assert r == 2 and th == pytest.approx(3 * math.pi / 2)
        assert polar_decompose(0j) == (0.0, 0.0)

    @given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
    def test_reconstruction(self, g):
        r, th = polar_decompose(g)
        assert r >= 0 and 0 <= th < 2 * math.pi
        assert abs(r * np.exp(1j * th) - g) <= 1e-12 * max(1.0, abs(g))


class TestExceptional:
    def test_zero_field(self):
        box = TruncationBox(2, 1)
        assert not exceptional_indicator(GaussianField(box, np.zeros(5)), 0.1, [1.0])

    def test_threshold_hit(self):
        box = TruncationBox(1, 1)
        assert exceptional_indicator(GaussianField(box, [0, 3, 0]), 0.25, [1.0])
        assert not exceptional_indicator(GaussianField(box, [0, 1.9, 0]), 0.25, [1.0])

    @given(st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.integers(0, 200))
    def test_monotone_in_delta(self, d1, d2, sample):
        # the envelope delta^{-1/2} shrinks as delta grows, so the set grows with delta
        d1, d2 = sorted((d1, d2))
        f = sample_field(SeedSpec(1), TruncationBox(2, 2), sample)
        if exceptional_indicator(f, d1, [1.0, 1.0]):
            assert exceptional_indicator(f, d2, [1.0, 1.0])

    def test_single_mode_probability(self):
        """P(|g_0|^2 > 1/delta) = exp(-1/delta) exactly."""
        box = TruncationBox(0, 1)
        g = sample_fields(SeedSpec(8), box, 0, N_MC)
        p = exceptional_mask(g, box, 0.5, [1.0]).mean()
        q = math.exp(-2)
        assert abs(p - q) < 3 * math.sqrt(q * (1 - q) / N_MC)

    def test_tail_bound_dominates_direct_sum(self):
        box = TruncationBox(3, 2)
        delta, kappa = 0.5, [1.0, 1.0]
        m = np.arange(-60, 61)
        n1, n2 = np.meshgrid(m, m, indexing="ij")
        env = ((1 + abs(n1)) * (1 + abs(n2))) ** 2
        outside = (abs(n1) > 3) | (abs(n2) > 3)
        direct = np.sum(np.exp(-env[outside] / delta))
        assert exceptional_tail_bound(box, delta, kappa) >= direct


def test_initial_state():
    box = TruncationBox(2, 1)
    p = DecayProfile([3.0], [1.0])
    zero = make_initial_state(p, GaussianField(box, np.zeros(5)))
    assert zero.mass == 0 and zero.time == 0
    f = sample_field(SeedSpec(2), box)
    s = make_initial_state(p, f, 0.1)
    assert np.allclose(s.amps, coefficient_grid(box, p) * f.values)
    ones = GaussianField(box, [0, 0, 1, 0, 0])
    assert make_initial_state(p, ones).at((0,)) == 1


@pytest.mark.parametrize("sample", range(30))
def test_polynomial_decay_outside_exceptional(sample):
    box = TruncationBox(4, 2)
    p = DecayProfile([3.0, 3.5], [1.0, 1.2])
    delta = 0.3
    f = sample_field(SeedSpec(6), box, sample)
    if exceptional_indicator(f, delta, p.kappa):
        return
    s = make_initial_state(p, f)
    from rogueqp.lattice import weighted_norm_grid
    env = delta ** -0.5 * weighted_norm_grid(box, p.gap)
    assert np.all(np.abs(s.amps) <= env * (1 + 1e-12))
