import math

import numpy as np
import pytest
from scipy import integrate

from polartail.baselines import cmc_estimate
from polartail.copulas import ProblemSpec
from polartail.marginals import Exponential, Lognormal, Pareto
from polartail.oracle import (FIG1_SPEC, KINDS, brute_truth_2d, exp_angular_cdf, exp_angular_density,
                              exp_spec, exp_sum_density, exp_sum_tail, fig1_ratio, solve_gamma_2d,
                              sum_density_2d)
from polartail.polar import polar_joint_logpdf

S_GRID = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0]


class TestSumDensity:
    def test_independent_value(self):
        assert float(exp_sum_density("ind", 1.0)) == pytest.approx(math.exp(-1), rel=1e-15)

    @pytest.mark.parametrize("kind", KINDS)
    def test_integrates_to_one(self, kind):
        f = lambda s: float(exp_sum_density(kind, s))
        total = sum(integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
                    for a, b in [(0, 1), (1, 10), (10, np.inf)])
        assert total == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("s", S_GRID)
    def test_line_integral(self, kind, s):
        assert float(exp_sum_density(kind, s)) == pytest.approx(sum_density_2d(exp_spec(kind), s), rel=1e-8)

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("s", [1e-4, 1e-2, 0.3])
    def test_small_s(self, kind, s):
        ref = sum_density_2d(exp_spec(kind), s)
        assert float(exp_sum_density(kind, s)) == pytest.approx(ref, abs=1e-6, rel=1e-8)

    def test_clayton_branches_join(self):
        for edge in (0.5,):
            a = float(exp_sum_density("clayton", edge * (1 - 1e-12)))
            b = float(exp_sum_density("clayton", edge))
            assert a == pytest.approx(b, rel=1e-9)

    def test_clayton_closed_form(self):
        s = np.array([0.7, 3.0, 12.0])
        ref = (2 - 2 * np.cosh(s) + s * np.sinh(s)) / (np.cosh(s) - 1) ** 2
        np.testing.assert_allclose(exp_sum_density("clayton", s), ref, rtol=1e-10)

    def test_amh_closed_form(self):
        s = np.array([0.7, 3.0, 12.0])
        ref = 8 / np.sinh(s) ** 3 * np.sinh(s / 2) ** 4
        np.testing.assert_allclose(exp_sum_density("amh", s), ref, rtol=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("g", [0.2, 3.0, 30.0])
    def test_tail_is_integral_of_density(self, kind, g):
        f = lambda s: float(exp_sum_density(kind, s))
        ref = integrate.quad(f, g, np.inf, epsabs=1e-300, epsrel=1e-12)[0]
        assert float(exp_sum_tail(kind, g)) == pytest.approx(ref, rel=1e-9)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            exp_sum_density("ind", 0.0)
        with pytest.raises(ValueError):
            exp_sum_density("gauss", 1.0)


class TestAngularDensity:
    def test_independent_is_uniform(self):
        np.testing.assert_array_equal(exp_angular_density("ind", np.array([1.0, 9.0]), np.array([0.3, 0.8])), 1.0)

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("s", [0.01, 0.5, 5.0, 50.0])
    def test_integrates_to_one(self, kind, s):
        total = integrate.quad(lambda t: float(exp_angular_density(kind, s, t)), 0, 1,
                               epsabs=1e-14, epsrel=1e-13)[0]
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_clayton_asymptotic_independence(self):
        near = abs(float(exp_angular_density("clayton", 40.0, 0.5)) - 1)
        far = abs(float(exp_angular_density("clayton", 5.0, 0.5)) - 1)
        assert near < far

    @pytest.mark.parametrize("kind", KINDS)
    def test_product_is_polar_density(self, kind):
        spec = exp_spec(kind)
        s = np.repeat([0.5, 2.0, 7.0, 20.0], 5)
        t = np.tile([0.05, 0.3, 0.5, 0.8, 0.95], 4)
        joint = np.exp(polar_joint_logpdf(spec, s, np.column_stack([t, 1 - t])))
        prod = exp_angular_density(kind, s, t) * exp_sum_density(kind, s)
        np.testing.assert_allclose(prod, joint, rtol=1e-8)

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("s", [0.3, 4.0, 40.0])
    def test_cdf(self, kind, s):
        for t in (0.1, 0.5, 0.9):
            ref = integrate.quad(lambda u: float(exp_angular_density(kind, s, u)), 0, t, epsrel=1e-12)[0]
            assert float(exp_angular_cdf(kind, s, t)) == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_theta_out_of_range(self):
        with pytest.raises(ValueError):
            exp_angular_density("amh", 1.0, 1.5)


class TestQuadratureTruth:
    def test_exponential_pair(self):
        spec = ProblemSpec([Exponential(1.0)] * 2)
        assert brute_truth_2d(spec, 5.0) == pytest.approx(6 * math.exp(-5), rel=1e-10)

    def test_monotone(self):
        vals = [brute_truth_2d(FIG1_SPEC, g) for g in (5.0, 20.0, 80.0, 300.0)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_below_support(self):
        assert brute_truth_2d(ProblemSpec([Pareto(1, 1, 0)] * 2), -1.0) == 1.0

    def test_against_crude_monte_carlo(self):
        spec = ProblemSpec([Pareto(1, 1, 0), Lognormal(0, 1)])
        g = solve_gamma_2d(spec, 1e-2)
        res = cmc_estimate(spec, g, 200_000, seed=1)
        assert abs(res.estimate - 1e-2) < 4 * res.std / math.sqrt(res.R)

    def test_solve_gamma(self):
        g = solve_gamma_2d(ProblemSpec([Exponential(1.0)] * 2), 1e-3)
        assert (1 + g) * math.exp(-g) == pytest.approx(1e-3, rel=1e-9)

    def test_requires_two_dimensions(self):
        with pytest.raises(ValueError):
            brute_truth_2d(ProblemSpec([Exponential(1.0)] * 3), 1.0)


class TestFig1:
    @pytest.mark.parametrize("g", [3.0, 30.0, 300.0])
    def test_two_terms_above_one_term(self, g):
        assert fig1_ratio(g, "two") > fig1_ratio(g, "one")

    def test_inaccurate_at_one_in_a_million(self):
        g = solve_gamma_2d(FIG1_SPEC, 1e-6)
        assert fig1_ratio(g, "two") < 0.99

    def test_ratio_tends_to_one(self):
        ratios = [fig1_ratio(solve_gamma_2d(FIG1_SPEC, 10.0**-k)) for k in (4, 8, 12, 16)]
        assert all(a < b for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] > 0.99

    def test_unknown_terms(self):
        with pytest.raises(ValueError):
            fig1_ratio(10.0, "three")
