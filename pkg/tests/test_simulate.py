import math

import numpy as np
import pytest
from scipy.stats import binom

from mdpboot import (
    ComplexityError,
    EmpiricalMeasure,
    FiniteProbabilityMeasure,
    InfeasibleError,
    InputError,
    RngSpec,
    TailEstimate,
    TailModel,
    TestFunction,
    bootstrap_resample,
    draw_sample,
    exact_conditional_tail,
    gaussian_sandwich,
    heavy_tail_sum_mc,
    joint_tail_mc,
    mc_conditional_tail,
    tilted_conditional_tail,
)
from mdpboot.simulate import sandwich_envelope
from mdpboot.zones import SequenceFamily, instability_zone

from oracles import exact_joint_tail

HALF = FiniteProbabilityMeasure([0.0, 1.0], [0.5, 0.5])
X01 = TestFunction([0.0, 1.0])


class TestRngSpec:
    def test_reproducible(self):
        a = RngSpec(42, 7).generator().random(16)
        b = RngSpec(42, 7).generator().random(16)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngSpec(42, 0).generator().random(16)
        b = RngSpec(42, 1).generator().random(16)
        assert not np.array_equal(a, b)

    def test_blocks_differ(self):
        spec = RngSpec(42, 0)
        assert not np.array_equal(spec.generator(0).random(8), spec.generator(1).random(8))

    def test_validation(self):
        with pytest.raises(InputError):
            RngSpec(-1)
        with pytest.raises(InputError):
            RngSpec(2**64)


class TestTailEstimate:
    def test_exact_needs_zero_std_err(self):
        with pytest.raises(InputError):
            TailEstimate(p_hat=0.5, std_err=0.1, trials=0, method="exact")

    def test_negative_p_rejected(self):
        with pytest.raises(InputError):
            TailEstimate(p_hat=-0.1, std_err=0.0, trials=10, method="naive")


class TestDrawSample:
    def test_point_mass(self):
        P = FiniteProbabilityMeasure([3.0], [1.0])
        emp = draw_sample(P, 5, RngSpec(1))
        assert emp.counts == (5,)

    def test_determinism(self):
        a = draw_sample(HALF, 100, RngSpec(9, 3))
        b = draw_sample(HALF, 100, RngSpec(9, 3))
        assert a.counts == b.counts

    def test_frequencies_near_half(self):
        emp = draw_sample(HALF, 10**5, RngSpec(5))
        assert abs(emp.counts[0] / emp.n - 0.5) < 0.01

    def test_size_validation(self):
        with pytest.raises(InputError):
            draw_sample(HALF, 0, RngSpec(1))


class TestBootstrapResample:
    def test_point_mass_stays(self):
        emp = EmpiricalMeasure(HALF, [4, 0])
        boot = bootstrap_resample(emp, 7, RngSpec(2))
        assert boot.counts == (7, 0)

    def test_count_conservation_any_k(self):
        emp = EmpiricalMeasure(HALF, [3, 5])
        for k in (1, 2, 8, 33):
            assert bootstrap_resample(emp, k, RngSpec(3)).n == k

    def test_pair_distribution(self):
        # resampling (1,1) twice: counts (2,0)/(1,1)/(0,2) with probs 1/4, 1/2, 1/4
        emp = EmpiricalMeasure(HALF, [1, 1])
        trials = 10**5
        seen = {(2, 0): 0, (1, 1): 0, (0, 2): 0}
        for i in range(trials):
            boot = bootstrap_resample(emp, 2, RngSpec(11, i))
            seen[boot.counts] += 1
        for counts, p in (((2, 0), 0.25), ((1, 1), 0.5), ((0, 2), 0.25)):
            sigma = math.sqrt(p * (1 - p) / trials)
            assert abs(seen[counts] / trials - p) < 3 * sigma


class TestExactConditionalTail:
    def test_quarter_case(self):
        emp = EmpiricalMeasure(HALF, [1, 1])
        est = exact_conditional_tail(emp, X01, 0.4, 2)
        assert est.p_hat == pytest.approx(0.25, abs=1e-14)
        assert est.std_err == 0.0
        assert est.method == "exact"

    def test_certain_event(self):
        emp = EmpiricalMeasure(HALF, [1, 1])
        assert exact_conditional_tail(emp, X01, -1.0, 2).p_hat == pytest.approx(1.0)

    def test_impossible_event(self):
        emp = EmpiricalMeasure(HALF, [1, 1])
        assert exact_conditional_tail(emp, X01, 2.0, 2).p_hat == 0.0

    def test_budget_guard(self):
        base = FiniteProbabilityMeasure(np.arange(8.0), [0.125] * 8)
        emp = EmpiricalMeasure(base, [5] * 8)
        f = TestFunction(np.arange(8.0))
        with pytest.raises(ComplexityError):
            exact_conditional_tail(emp, f, 0.5, 200)

    def test_binomial_cross_check(self):
        # two atoms: the resampled count of atom 1 is Binomial(k, q1)
        emp = EmpiricalMeasure(HALF, [3, 7])
        k, theta = 12, 0.13
        est = exact_conditional_tail(emp, X01, theta, k)
        # event: c1/k - 0.7 > theta  <=>  c1 > k (0.7 + theta)
        cut = math.floor(k * (0.7 + theta))
        expected = float(binom.sf(cut, k, 0.7))
        assert est.p_hat == pytest.approx(expected, abs=1e-12)


class TestMcConditionalTail:
    def test_agrees_with_exact(self):
        emp = EmpiricalMeasure(HALF, [1, 1])
        est = mc_conditional_tail(emp, X01, 0.4, 2, 10**5, RngSpec(7))
        assert abs(est.p_hat - 0.25) <= 3 * est.std_err

    def test_certain_event_is_exactly_one(self):
        emp = EmpiricalMeasure(HALF, [1, 1])
        est = mc_conditional_tail(emp, X01, -1.0, 2, 200, RngSpec(7))
        assert est.p_hat == 1.0

    def test_trials_floor(self):
        emp = EmpiricalMeasure(HALF, [1, 1])
        with pytest.raises(InputError):
            mc_conditional_tail(emp, X01, 0.4, 2, 50, RngSpec(7))

    def test_deterministic(self):
        emp = EmpiricalMeasure(HALF, [2, 3])
        a = mc_conditional_tail(emp, X01, 0.1, 9, 5000, RngSpec(1, 2))
        b = mc_conditional_tail(emp, X01, 0.1, 9, 5000, RngSpec(1, 2))
        assert a == b


class TestTiltedConditionalTail:
    def test_zero_tilt_matches_naive(self):
        emp = EmpiricalMeasure(HALF, [1, 1])
        naive = mc_conditional_tail(emp, X01, 0.0, 4, 20000, RngSpec(13))
        tilted = tilted_conditional_tail(emp, X01, 0.0, 4, 20000, RngSpec(13))
        sigma = math.hypot(naive.std_err, tilted.std_err)
        assert abs(naive.p_hat - tilted.p_hat) <= 3 * max(sigma, 1e-12)

    def test_quarter_case_and_variance_gain(self):
        emp = EmpiricalMeasure(HALF, [1, 1])
        trials = 10**5
        tilted = tilted_conditional_tail(emp, X01, 0.4, 2, trials, RngSpec(7))
        naive = mc_conditional_tail(emp, X01, 0.4, 2, trials, RngSpec(7))
        assert abs(tilted.p_hat - 0.25) <= 3 * tilted.std_err
        assert tilted.std_err < naive.std_err

    def test_deep_tail_where_naive_sees_nothing(self):
        base = FiniteProbabilityMeasure([0.0, 1.0], [0.5, 0.5])
        emp = EmpiricalMeasure(base, [50, 50])
        k, theta = 100, 0.45
        exact = exact_conditional_tail(emp, X01, theta, k)
        # independent route: Binomial(100, 1/2) needs more than 95 successes
        assert exact.p_hat == pytest.approx(float(binom.sf(95, 100, 0.5)), rel=1e-10)
        tilted = tilted_conditional_tail(emp, X01, theta, k, 20000, RngSpec(19))
        assert abs(tilted.p_hat - exact.p_hat) <= 3 * tilted.std_err
        naive = mc_conditional_tail(emp, X01, theta, k, 10**4, RngSpec(19))
        assert naive.p_hat == 0.0

    def test_unbiased_over_seeds(self):
        emp = EmpiricalMeasure(HALF, [2, 3])
        k, theta, trials = 6, 0.25, 2000
        exact = exact_conditional_tail(emp, X01, theta, k)
        estimates = [
            tilted_conditional_tail(emp, X01, theta, k, trials, RngSpec(101, s))
            for s in range(100)
        ]
        mean = float(np.mean([e.p_hat for e in estimates]))
        pooled = math.sqrt(float(np.mean([e.std_err**2 for e in estimates])) / len(estimates))
        assert abs(mean - exact.p_hat) <= 3 * pooled

    def test_theta_outside_range_infeasible(self):
        emp = EmpiricalMeasure(HALF, [1, 1])
        with pytest.raises(InfeasibleError):
            tilted_conditional_tail(emp, X01, 0.6, 2, 200, RngSpec(1))
        with pytest.raises(InfeasibleError):
            tilted_conditional_tail(emp, X01, -0.6, 2, 200, RngSpec(1))


class TestHeavyTailSumMc:
    def test_below_mean_probability_tends_to_one(self):
        tail = TailModel.stretched(0.5)  # mean 2
        ps = [
            heavy_tail_sum_mc(tail, n, 0.5, 400, RngSpec(3)).p_hat
            for n in (20, 80, 320)
        ]
        assert ps[-1] >= ps[0]
        assert ps[-1] > 0.95

    def test_infinite_threshold(self):
        est = heavy_tail_sum_mc(TailModel.stretched(0.5), 50, math.inf, 200, RngSpec(1))
        assert est.p_hat == 0.0

    def test_zone_event_not_exponentially_small(self):
        gamma, delta = 0.5, 0.2
        f = SequenceFamily(A=1.0, beta=0.0, mu=-2.0)
        _, e, valid = instability_zone(gamma, delta, f)
        assert valid
        n = 10**4
        e_n = e.value(n)
        est = heavy_tail_sum_mc(TailModel.stretched(gamma), n, e_n, 200, RngSpec(5))
        assert est.p_hat > math.exp(-0.1 * n * e_n * e_n)

    def test_power_tail_rejected(self):
        with pytest.raises(InputError):
            heavy_tail_sum_mc(TailModel.power(3.0), 10, 0.5, 200, RngSpec(1))

    def test_bounded_degenerates_to_light_tail(self):
        # uniform on [0,1]: mean 0.5; thresholds above it decay, the faster the higher
        tail = TailModel.bounded(1.0)
        n = 100
        normalized = []
        for e_n in (0.55, 0.58, 0.61):
            est = heavy_tail_sum_mc(tail, n, e_n, 20000, RngSpec(7))
            assert 0.0 < est.p_hat < 1.0
            normalized.append(math.log(est.p_hat) / (n * e_n * e_n))
        assert all(v < 0 for v in normalized)
        assert normalized[0] > normalized[1] > normalized[2]


class TestGaussianSandwich:
    def test_worked_bounds(self):
        L_low, L_high, err = gaussian_sandwich(600, 0.1, 20.0)
        assert L_low == -0.1
        assert L_high == pytest.approx(1.0 / 7.0, abs=1e-15)
        assert err > 0

    def test_limit_bounds_vanish(self):
        L_low, L_high, _ = gaussian_sandwich(600, 0.1, 1e9)
        assert L_low == pytest.approx(0.0, abs=1e-8)
        assert L_high == pytest.approx(0.0, abs=1e-8)

    def test_deep_regime_error_factor(self):
        _, _, err = gaussian_sandwich(10**6, 0.11, 17.0)
        assert err == 6.0

    def test_omega_must_exceed_one(self):
        with pytest.raises(InputError):
            gaussian_sandwich(100, 0.1, 1.0)

    def test_envelope_brackets_the_normal_tail(self):
        lo, hi = sandwich_envelope(400, 0.2, 50.0)
        x = math.sqrt(400) * 0.2
        base = 0.5 * math.erfc(x / math.sqrt(2))
        assert lo <= base <= hi


class TestJointTailMc:
    def test_sentinel_thresholds(self):
        est = joint_tail_mc(
            HALF, 4, 4, X01, X01, -math.inf, -math.inf, 500, RngSpec(3)
        )
        assert est.p_hat == 1.0

    def test_nested_enumeration_oracle(self):
        # hand value: only the balanced outer sample passes theta_emp = -0.1
        # with a further up-move resample, plus nothing from the (0, 2) branch
        theta = -0.1
        expected = exact_joint_tail([0.5, 0.5], 2, 2, [0.0, 1.0], [0.0, 1.0], 0.4, theta)
        assert expected == pytest.approx(1.0 / 8.0, abs=1e-12)
        est = joint_tail_mc(HALF, 2, 2, X01, X01, 0.4, theta, 10**5, RngSpec(23))
        assert abs(est.p_hat - expected) <= 3 * math.sqrt(expected * (1 - expected) / 10**5)

    def test_zero_probability_case(self):
        expected = exact_joint_tail([0.5, 0.5], 2, 2, [0.0, 1.0], [0.0, 1.0], 0.4, 0.4)
        assert expected == 0.0
        est = joint_tail_mc(HALF, 2, 2, X01, X01, 0.4, 0.4, 2000, RngSpec(29))
        assert est.p_hat == 0.0

    def test_asymptotic_factorization(self):
        # antisymmetric statistic on a symmetric law: the joint probability at
        # zero thresholds approximately factorizes for large n
        P = FiniteProbabilityMeasure([-1.0, 1.0], [0.5, 0.5])
        f = TestFunction([-1.0, 1.0])
        n = k = 400
        trials = 20000
        joint = joint_tail_mc(P, n, k, f, f, 0.0, 0.0, trials, RngSpec(31, 1))
        boot = joint_tail_mc(P, n, k, f, f, 0.0, -math.inf, trials, RngSpec(31, 2))
        emp = joint_tail_mc(P, n, k, f, f, -math.inf, 0.0, trials, RngSpec(31, 3))
        product = boot.p_hat * emp.p_hat
        sigma = math.sqrt(product * (1 - product) / trials)
        assert abs(joint.p_hat - product) <= 4 * sigma

    def test_deterministic(self):
        a = joint_tail_mc(HALF, 8, 8, X01, X01, 0.05, 0.05, 2000, RngSpec(5, 9))
        b = joint_tail_mc(HALF, 8, 8, X01, X01, 0.05, 0.05, 2000, RngSpec(5, 9))
        assert a == b
