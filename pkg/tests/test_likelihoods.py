import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from spectral_t.fourier_core import FourierCoefficients, FourierGrid, TimeSeries, dft, to_coefficients
from spectral_t.likelihoods import (
    LogLikelihood,
    log_jeffreys_marginal,
    log_known_spectrum_likelihood,
    log_mixed_marginal,
    log_normal_likelihood,
    log_studentt_marginal,
    studentt_terms,
)
from spectral_t.spectrum_model import InvChiSqParams, SpectrumDraw, SpectrumPrior, inv_chisq_log_density


def quad_marginal(power, kappa, nu, s2):
    """log of int N(coeffs | 0, sigma2) Inv-chi2(sigma2 | nu, s2) d sigma2, integrated over log sigma2."""
    p = InvChiSqParams(nu, s2)
    # centre on the posterior mode and rescale so the integrand peaks near 1
    centre = math.log((nu * s2 + power) / (nu + kappa))

    def log_integrand(u):
        v = math.exp(u + centre)
        return -kappa / 2 * math.log(2 * math.pi * v) - power / (2 * v) + inv_chisq_log_density(p, v) + u + centre

    ref = log_integrand(0.0)
    val, _ = integrate.quad(lambda u: math.exp(log_integrand(u) - ref), -60, 60, points=[0.0],
                            limit=400, epsabs=0, epsrel=1e-11)
    return math.log(val) + ref


class TestLogLikelihood:
    def test_flag_mismatch(self):
        a, b = LogLikelihood(-1.0, True), LogLikelihood(-2.0, False)
        with pytest.raises(TypeError):
            a + b
        with pytest.raises(TypeError):
            a < b
        with pytest.raises(TypeError):
            a - b

    def test_arithmetic(self):
        a, b = LogLikelihood(-1.0, False), LogLikelihood(-2.0, False)
        assert (a + b).value == -3.0
        assert a - b == 1.0
        assert b < a and a == LogLikelihood(-1.0, False)
        assert a != LogLikelihood(-1.0, True)

    def test_invalid_values(self):
        with pytest.raises(ValueError):
            LogLikelihood(float("nan"), True)
        with pytest.raises(ValueError):
            LogLikelihood(float("inf"), True)
        assert LogLikelihood(-math.inf, False).value == -math.inf


class TestNormalLikelihood:
    def test_matches_scipy_normals(self, rng):
        g = FourierGrid(10, 0.1)
        b = rng.normal(size=6)
        b[0] = b[-1] = 0
        fc = FourierCoefficients(rng.normal(size=6), b, g)
        s2 = rng.uniform(0.2, 3, size=6)
        ref = stats.norm.logpdf(fc.a, scale=np.sqrt(s2)).sum()
        ref += stats.norm.logpdf(fc.b[1:-1], scale=np.sqrt(s2[1:-1])).sum()
        val = log_normal_likelihood(fc, SpectrumDraw(s2, g))
        assert val.normalized and val.value == pytest.approx(ref, rel=1e-12)

    def test_proportional_drops_constant(self, random_series):
        fc = to_coefficients(random_series)
        draw = SpectrumDraw(np.full(51, 0.5), random_series.grid)
        full = log_normal_likelihood(fc, draw).value
        prop = log_normal_likelihood(fc, draw, normalized=False).value
        assert full - prop == pytest.approx(-50 * math.log(2 * math.pi))

    def test_time_domain_equivalence(self, rng):
        # with sigma_j^2 = kappa_j c the quadratic form is dt sum x^2 / (2c)
        g = FourierGrid(16, 0.5)
        x = rng.normal(size=16)
        fc = to_coefficients(TimeSeries(x, 0.5))
        val = log_known_spectrum_likelihood(fc, SpectrumDraw(0.7 * g.kappas, g)).value
        assert val == pytest.approx(-0.5 * np.sum(x**2) / (2 * 0.7))

    def test_zero_data_unit_variance(self):
        g = FourierGrid(4, 1.0)
        zero = FourierCoefficients(np.zeros(3), np.zeros(3), g)
        val = log_normal_likelihood(zero, SpectrumDraw(np.ones(3), g))
        assert val.value == pytest.approx(-2 * math.log(2 * math.pi))
        assert log_known_spectrum_likelihood(zero, SpectrumDraw(np.ones(3), g)).value == 0

    def test_known_spectrum_is_normal_minus_constants(self, rng, random_series):
        fc = to_coefficients(random_series)
        s2 = rng.uniform(0.1, 2, size=51)
        draw = SpectrumDraw(s2, random_series.grid)
        full = log_normal_likelihood(fc, draw).value
        const = np.sum(fc.kappas * 0.5 * np.log(s2)) + 50 * math.log(2 * math.pi)
        assert log_known_spectrum_likelihood(fc, draw).value == pytest.approx(full + const, rel=1e-12)

    def test_dft_route(self, rng, random_series):
        # |X_j|^2 route: a^2 + b^2 = kappa^2 (dt/N) |X_j|^2
        fc = to_coefficients(random_series)
        s2 = rng.uniform(0.1, 2, size=51)
        g = random_series.grid
        x2 = np.abs(dft(random_series)[:51]) ** 2
        via_dft = -np.sum(g.kappas**2 * g.dt / g.n * x2 / (2 * s2))
        val = log_known_spectrum_likelihood(fc, SpectrumDraw(s2, g)).value
        assert val == pytest.approx(via_dft, rel=1e-12)

    def test_doubling_variance(self, rng):
        g = FourierGrid(8, 0.1)
        b = rng.normal(size=5)
        b[0] = b[-1] = 0
        fc = FourierCoefficients(rng.normal(size=5), b, g)
        s2 = rng.uniform(0.5, 2, size=5)
        d = log_normal_likelihood(fc, SpectrumDraw(2 * s2, g)).value - log_normal_likelihood(fc, SpectrumDraw(s2, g)).value
        ref = np.sum(stats.norm.logpdf(fc.a, scale=np.sqrt(2 * s2)) - stats.norm.logpdf(fc.a, scale=np.sqrt(s2)))
        ref += np.sum(stats.norm.logpdf(fc.b[1:-1], scale=np.sqrt(2 * s2[1:-1]))
                      - stats.norm.logpdf(fc.b[1:-1], scale=np.sqrt(s2[1:-1])))
        assert d == pytest.approx(ref, rel=1e-12)
        quad_relief = np.sum(fc.power / (4 * s2))
        assert (d < 0) == (np.sum(fc.kappas) * math.log(math.sqrt(2)) > quad_relief)

    def test_grid_mismatch(self, random_series):
        fc = to_coefficients(random_series)
        with pytest.raises(ValueError):
            log_normal_likelihood(fc, SpectrumDraw(np.ones(6), FourierGrid(10, 0.01)))


class TestStudentT:
    @pytest.mark.parametrize("nu", [1, 3, 10])
    @pytest.mark.parametrize("kappa", [1, 2])
    @pytest.mark.parametrize("power", [1e-3, 0.7, 50.0])
    def test_matches_quadrature(self, nu, kappa, power):
        s2 = 0.4
        val = studentt_terms(np.array([power]), np.array([nu]), np.array([s2]), np.array([kappa]), True)[0]
        assert val == pytest.approx(quad_marginal(power, kappa, nu, s2), rel=1e-6)

    def test_proportional_differs_by_constant(self, rng):
        g = FourierGrid(20, 0.1)
        prior = SpectrumPrior.white(InvChiSqParams(4, 0.3), g)
        fcs = [to_coefficients(TimeSeries(rng.normal(size=20), 0.1)) for _ in range(3)]
        diffs = [log_studentt_marginal(fc, prior, True).value - log_studentt_marginal(fc, prior).value for fc in fcs]
        np.testing.assert_allclose(diffs, diffs[0], rtol=1e-12)

    def test_gaussian_limit(self, rng):
        g = FourierGrid(30, 0.1)
        s2 = 0.6
        prior = SpectrumPrior.white(InvChiSqParams(1e6, s2), g)
        draw = SpectrumDraw(np.full(16, s2), g)
        fc1 = to_coefficients(TimeSeries(rng.normal(size=30), 0.1))
        fc2 = to_coefficients(TimeSeries(rng.normal(size=30) * 1.3, 0.1))
        dt_ = log_studentt_marginal(fc1, prior) - log_studentt_marginal(fc2, prior)
        dn = log_known_spectrum_likelihood(fc1, draw) - log_known_spectrum_likelihood(fc2, draw)
        assert dt_ == pytest.approx(dn, abs=1e-3)

    def test_monotone_in_power(self):
        p = np.linspace(0, 10, 50)
        vals = studentt_terms(p, np.full(50, 3.0), np.full(50, 0.5), np.full(50, 2.0))
        assert np.all(np.diff(vals) < 0)

    def test_zero_residual(self, grid100):
        zero = FourierCoefficients(np.zeros(51), np.zeros(51), grid100)
        prior = SpectrumPrior.white(InvChiSqParams(3, 0.5), grid100)
        assert log_studentt_marginal(zero, prior).value == 0

    def test_heavy_tail_crossover(self):
        # normal term falls linearly in power, Student-t term only logarithmically
        nu, s2, k = 3.0, 1.0, 2.0
        p = np.geomspace(1e-2, 1e8, 200)
        t_terms = studentt_terms(p, np.full(200, nu), np.full(200, s2), np.full(200, k))
        n_terms = -p / (2 * s2)
        assert n_terms[0] > t_terms[0] and n_terms[-1] < t_terms[-1]
        slope = np.diff(t_terms[-20:]) / np.diff(np.log(p[-20:]))
        np.testing.assert_allclose(slope, -(nu + k) / 2, rtol=1e-3)

    def test_improper_rejected(self, random_series):
        fc = to_coefficients(random_series)
        with pytest.raises(ValueError, match="improper"):
            log_studentt_marginal(fc, SpectrumPrior.jeffreys(random_series.grid))

    def test_time_shift_invariance(self, rng):
        x = rng.normal(size=32)
        prior = SpectrumPrior.white(InvChiSqParams(3, 0.5), FourierGrid(32, 0.1))
        v1 = log_studentt_marginal(to_coefficients(TimeSeries(x, 0.1)), prior)
        v2 = log_studentt_marginal(to_coefficients(TimeSeries(np.roll(x, 7), 0.1)), prior)
        assert v1.value == pytest.approx(v2.value, rel=1e-10)


class TestJeffreys:
    @settings(max_examples=30, deadline=None)
    @given(c=st.floats(1e-3, 1e3), seed=st.integers(0, 10_000))
    def test_scale_homogeneity(self, c, seed):
        x = np.random.default_rng(seed).normal(size=12)
        v1 = log_jeffreys_marginal(to_coefficients(TimeSeries(x, 0.2))).value
        v2 = log_jeffreys_marginal(to_coefficients(TimeSeries(c * x, 0.2))).value
        # sum kappa/2 = N/2, so scaling by c shifts by -N log c
        assert v2 - v1 == pytest.approx(-12 * math.log(c), rel=1e-9, abs=1e-9)

    def test_zero_power_gives_minus_inf(self):
        fc = to_coefficients(TimeSeries(np.zeros(4), 1.0))
        assert log_jeffreys_marginal(fc).value == -math.inf

    def test_limit_of_studentt(self, random_series):
        # nu -> 0 proportional Student-t differs from Jeffreys by a data-independent constant
        fc = to_coefficients(random_series)
        g = random_series.grid
        nu, s2 = 1e-9, 1.0
        st_terms = studentt_terms(fc.power, np.full(51, nu), np.full(51, s2), g.kappas)
        shift = np.sum(g.kappas / 2 * math.log(nu * s2))
        assert np.sum(st_terms) - shift == pytest.approx(log_jeffreys_marginal(fc).value, rel=1e-6)


class TestMixed:
    def test_additivity(self, random_series):
        fc = to_coefficients(random_series)
        g = random_series.grid
        nu = np.full(51, 4.0)
        s2 = np.full(51, 0.3)
        nu[10:20] = 0
        s2[10:20] = 0
        val = log_mixed_marginal(fc, SpectrumPrior(nu, s2, g))
        proper = ~(nu == 0)
        ref = np.sum(studentt_terms(fc.power[proper], nu[proper], s2[proper], g.kappas[proper]))
        ref += np.sum(-g.kappas[10:20] / 2 * np.log(fc.power[10:20]))
        assert not val.normalized and val.value == pytest.approx(ref)

    def test_all_proper_equals_studentt(self, random_series):
        fc = to_coefficients(random_series)
        prior = SpectrumPrior.white(InvChiSqParams(3, 1.0), random_series.grid)
        assert log_mixed_marginal(fc, prior, True) == log_studentt_marginal(fc, prior, True)

    def test_all_jeffreys_equals_jeffreys(self, random_series):
        fc = to_coefficients(random_series)
        prior = SpectrumPrior.jeffreys(random_series.grid)
        assert log_mixed_marginal(fc, prior).value == pytest.approx(log_jeffreys_marginal(fc).value)

    def test_negative_nu_rejected(self, random_series):
        fc = to_coefficients(random_series)
        nu = np.full(51, 3.0)
        s2 = np.full(51, 1.0)
        nu[5], s2[5] = -2, 0
        with pytest.raises(ValueError, match="bin 5"):
            log_mixed_marginal(fc, SpectrumPrior(nu, s2, random_series.grid))
