"""Hitting-time law: closed forms against quadrature oracles, sampler exactness.

Frozen constants were computed with 40-digit mpmath evaluations of the
defining expressions; quadrature oracles integrate an independently written
copy of the density so the cdf's erfc path is never checked against itself.
"""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from molcomm.hitting_time import (
    ChannelParams,
    arrival_prob_interval,
    cdf,
    log_cdf,
    log_pdf,
    pdf,
    sample,
    survival,
)

# mpmath, 40 digits
PDF_AT_1 = 0.2419707245191433498
PDF_AT_2 = 0.10984782236693059926
CDF_AT_1 = 0.31731050786291410283
CDF_AT_1E6 = 0.99920211557217787483
PARR_2 = 0.16218961432403935949
MEDIAN = 2.198109338317732404
KS_CRIT_1PCT = 1.6276236115189504  # kstwobign.isf(0.01)


def oracle_pdf(t, d=1.0, s2=1.0):
    """Independent restatement of the density for quadrature oracles."""
    if t <= 0:
        return 0.0
    return d / math.sqrt(2.0 * math.pi * s2 * t**3) * math.exp(
        -d * d / (2.0 * s2 * t))


def oracle_quad(a, b, d=1.0, s2=1.0):
    val, _ = integrate.quad(lambda t: oracle_pdf(t, d, s2), a, b, limit=200)
    return val


class TestChannelParams:
    def test_defaults(self):
        p = ChannelParams()
        assert p.d == 1.0 and p.sigma2 == 1.0 and p.deadline is None

    @pytest.mark.parametrize("kwargs", [
        dict(d=0.0), dict(d=-1.0), dict(d=math.nan),
        dict(sigma2=0.0), dict(sigma2=-2.0),
        dict(deadline=0.0), dict(deadline=-1.0), dict(deadline=math.inf),
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            ChannelParams(**kwargs)


class TestPdf:
    def test_zero_left_of_origin(self):
        assert pdf(-1.0) == 0.0
        assert pdf(0.0) == 0.0

    def test_closed_form_value(self):
        assert pdf(1.0) == pytest.approx(PDF_AT_1, rel=1e-14)
        assert pdf(2.0) == pytest.approx(PDF_AT_2, rel=1e-14)

    def test_underflow_flushes_to_exact_zero(self):
        # exp(-5e5) dominates: log-density far below the -700 floor
        assert pdf(1e-6) == 0.0

    def test_non_finite_rejected(self):
        for bad in (math.nan, math.inf, -math.inf):
            with pytest.raises(ValueError):
                pdf(bad)

    def test_vectorized(self):
        t = np.array([-1.0, 0.0, 1.0, 2.0])
        out = pdf(t)
        assert out.shape == t.shape
        assert out[0] == out[1] == 0.0
        assert out[2] == pytest.approx(PDF_AT_1, rel=1e-14)

    def test_log_pdf_matches(self):
        t = np.array([0.3, 1.0, 7.0, 120.0])
        np.testing.assert_allclose(np.exp(log_pdf(t)), pdf(t), rtol=1e-14)
        assert log_pdf(-3.0) == -math.inf

    def test_general_params(self):
        p = ChannelParams(d=2.0, sigma2=0.5)
        assert pdf(3.0, p) == pytest.approx(oracle_pdf(3.0, 2.0, 0.5), rel=1e-13)

    def test_tail_decay_exponent(self):
        # f(t) ~ c * t^(-3/2) for large t: ratio across a decade is 10^(-1.5)
        ratio = pdf(1e7) / pdf(1e6)
        assert ratio == pytest.approx(10.0 ** -1.5, rel=1e-4)


class TestCdf:
    def test_zero_at_origin(self):
        assert cdf(0.0) == 0.0
        assert cdf(-5.0) == 0.0

    def test_against_quadrature_oracle(self):
        assert cdf(1.0) == pytest.approx(oracle_quad(0.0, 1.0), rel=1e-10)
        assert cdf(1.0) == pytest.approx(CDF_AT_1, rel=1e-14)
        # far tail: quadrature over dyadic segments
        segs = np.concatenate([[0.0], np.logspace(0, 6, 25)])
        total = sum(oracle_quad(a, b) for a, b in zip(segs[:-1], segs[1:]))
        assert cdf(1e6) == pytest.approx(total, rel=1e-9)
        assert cdf(1e6) == pytest.approx(CDF_AT_1E6, rel=1e-14)

    def test_monotone_to_one(self):
        t = np.logspace(-2, 10, 200)
        vals = cdf(t)
        assert np.all(np.diff(vals) >= 0)
        assert vals[-1] < 1.0 and vals[-1] > 0.99999

    def test_antiderivative_of_pdf(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            a, b = np.sort(rng.uniform(0.01, 50.0, 2))
            assert abs(cdf(b) - cdf(a) - oracle_quad(a, b)) < 1e-9

    def test_log_cdf_deep_left_tail(self):
        assert log_cdf(1.0) == pytest.approx(math.log(CDF_AT_1), rel=1e-13)
        # far below float underflow of cdf itself
        assert log_cdf(1e-4) == pytest.approx(
            math.log(2.0) + stats.norm.logcdf(-100.0), rel=1e-12)

    def test_survival_complements(self):
        t = np.array([0.5, 1.0, 100.0, 1e8])
        np.testing.assert_allclose(survival(t), 1.0 - cdf(t), rtol=0, atol=1e-15)


def test_normalization_quadrature():
    # mass on (0, 1e8] is already >= 0.9999; the remainder is Theta(t^(-1/2))
    segs = np.concatenate([[0.0], np.logspace(-1, 8, 40)])
    total = sum(oracle_quad(a, b) for a, b in zip(segs[:-1], segs[1:]))
    assert total >= 0.9999
    assert total <= 1.0 + 1e-9


class _StubNormals:
    """Stands in for a Generator: hands out scripted standard normals."""

    def __init__(self, values):
        self._values = list(values)

    def standard_normal(self, n):
        out = np.array([self._values.pop(0) for _ in range(n)])
        return out


class TestSample:
    def test_transform_is_inverse_square_normal(self):
        assert sample(rng=_StubNormals([1.0])) == 1.0
        assert sample(rng=_StubNormals([-2.0])) == 0.25

    def test_zero_draw_regenerated(self):
        assert sample(rng=_StubNormals([0.0, 2.0])) == 0.25

    def test_scale_parameterization(self):
        p = ChannelParams(d=3.0, sigma2=2.0)
        assert sample(p, rng=_StubNormals([1.0])) == pytest.approx(4.5)

    def test_median_large_sample(self):
        rng = np.random.default_rng(2024)
        draws = sample(rng=rng, size=1_000_000)
        assert abs(np.median(draws) - MEDIAN) < 0.02

    def test_ks_against_cdf(self):
        rng = np.random.default_rng(7)
        draws = sample(rng=rng, size=100_000)
        stat = stats.kstest(draws, lambda t: cdf(t)).statistic
        assert stat < KS_CRIT_1PCT / math.sqrt(100_000)

    def test_scale_law(self):
        # draws with (d, sigma2) are (d^2/sigma2) times standard draws in law
        p = ChannelParams(d=2.0, sigma2=0.5)
        rng = np.random.default_rng(11)
        draws = sample(p, rng=rng, size=100_000) / p.time_scale
        stat = stats.kstest(draws, lambda t: cdf(t)).statistic
        assert stat < KS_CRIT_1PCT / math.sqrt(100_000)

    def test_infinite_mean_signature(self):
        rng = np.random.default_rng(5)
        draws = sample(rng=rng, size=1_000_000)
        assert np.mean(draws) > 10.0
        assert np.all(draws > 0)


class TestArrivalProbInterval:
    def test_first_interval_is_cdf(self):
        assert arrival_prob_interval(1, 1.0) == pytest.approx(CDF_AT_1, rel=1e-13)
        assert arrival_prob_interval(1, 1.0) == pytest.approx(
            oracle_quad(0.0, 1.0), rel=1e-10)

    def test_second_interval(self):
        assert arrival_prob_interval(2, 1.0) == pytest.approx(PARR_2, rel=1e-13)
        assert arrival_prob_interval(2, 1.0) == pytest.approx(
            oracle_quad(1.0, 2.0), rel=1e-10)

    def test_partial_sums_monotone_to_one(self):
        k = np.arange(1, 20_001)
        probs = arrival_prob_interval(k, 1.0)
        sums = np.cumsum(probs)
        assert np.all(probs >= 0)
        assert np.all(np.diff(sums) >= 0)
        assert sums[-1] <= 1.0 + 1e-12
        assert sums[-1] > 0.99  # tail mass is Theta(k^(-1/2)); slow but monotone

    def test_matches_cdf_differences_deep(self):
        # large k: the erf form must not lose the tiny difference
        k = 10_000
        direct = cdf(k * 1.0) - cdf((k - 1) * 1.0)
        assert arrival_prob_interval(k, 1.0) == pytest.approx(direct, rel=1e-6)
        assert arrival_prob_interval(k, 1.0) > 0

    @pytest.mark.parametrize("k,tau", [(0, 1.0), (-1, 1.0), (1, 0.0), (1, -2.0)])
    def test_domain_errors(self, k, tau):
        with pytest.raises(ValueError):
            arrival_prob_interval(k, tau)

    def test_non_integral_k_rejected(self):
        with pytest.raises(ValueError):
            arrival_prob_interval(1.5, 1.0)
