"""Closed-form bound tests.

Expected values marked as frozen were computed beforehand with 50-digit
mpmath evaluations of the same closed forms (independent of the float
implementation under test).
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from martsafe.bounds import (
    PHI,
    BoundResult,
    CMart,
    DTCBF,
    General,
    SafetySpec,
    comparison_conditions,
    constructive_delta_sigma,
    dominance_gap,
    dominance_gap_dsigma2,
    freedman_bound,
    freedman_kernel,
    hlip_delta_sigma,
    issf_safe_level,
    issf_worst_case,
    lambda_threshold,
    lambert_w_minus1,
    log_freedman_kernel,
    psi,
    psi_threshold,
    santoyo_bound,
    stochastic_issf_bound,
    tightened_pqv,
    ville_bound,
)

# frozen high-precision oracle values
H_1_1 = 0.67957045711476131          # e/4
H_DTCBF_EXAMPLE = 0.69325740880981038  # H(0.99^100 * 5, 2)
H_4_2 = 0.21327402356696968
H_099_THIRD = 0.21535936829414312
VILLE_DTCBF = 0.81698382936338525    # 1 - 5*0.99^100/10
TPQV = 4.8354010337355558            # (1/9)(1-0.99^200)/(1-0.9801)
SANTOYO_NEG_C = 0.70063153038081055  # 1 - 0.5*(9.5/10)^10
W_M1_01 = -3.5771520639572972
PSI_THRESH_HALF = 3.5128624172523394
GAP_COND_TRUE = 0.35769742494345618
GAP_COND_FALSE = -0.93719391328579548
DGAP_DS2 = -2.4692405126093818


class TestFreedmanKernel:
    def test_identity_at_zero(self):
        for xi in (0.1, 1.0, 7.3, 10.0):
            assert freedman_kernel(0.0, xi) == 1.0

    def test_e_over_four(self):
        assert freedman_kernel(1.0, 1.0) == pytest.approx(math.e / 4.0, rel=1e-14)
        assert freedman_kernel(1.0, 1.0) == pytest.approx(H_1_1, rel=1e-14)

    def test_dtcbf_composition_point(self):
        lam = 0.99**100 * 5.0
        assert freedman_kernel(lam, 2.0) == pytest.approx(H_DTCBF_EXAMPLE, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            freedman_kernel(-0.1, 1.0)
        with pytest.raises(ValueError):
            freedman_kernel(1.0, 0.0)

    def test_no_overflow_large_arguments(self):
        # naive (xi^2/(lam+xi^2))^(lam+xi^2) underflows past ~700
        val = freedman_kernel(2000.0, 30.0)
        assert 0.0 <= val < 1.0
        assert math.isfinite(log_freedman_kernel(2000.0, 30.0))

    @given(
        lam=st.floats(0.0, 50.0),
        xi=st.floats(0.01, 20.0),
    )
    def test_range(self, lam, xi):
        val = freedman_kernel(lam, xi)
        assert 0.0 <= val <= 1.0

    @given(
        lam=st.floats(0.0, 20.0),
        dlam=st.floats(0.001, 5.0),
        xi=st.floats(0.1, 10.0),
    )
    def test_monotone_in_lambda(self, lam, dlam, xi):
        assert log_freedman_kernel(lam + dlam, xi) <= log_freedman_kernel(lam, xi) + 1e-12

    @given(
        lam=st.floats(0.01, 20.0),
        xi=st.floats(0.1, 10.0),
        dxi=st.floats(0.001, 5.0),
    )
    def test_monotone_in_xi(self, lam, xi, dxi):
        assert log_freedman_kernel(lam, xi + dxi) >= log_freedman_kernel(lam, xi) - 1e-12


class TestLambdaThreshold:
    def test_dtcbf_alpha_one(self):
        spec = SafetySpec(DTCBF(1.0), 50, 3.0, 1.0, 0.1)
        assert lambda_threshold(spec) == 3.0

    def test_cmart_zero_c(self):
        spec = SafetySpec(CMart(0.0), 50, 3.0, 1.0, 0.1)
        assert lambda_threshold(spec) == 3.0

    @given(
        c=st.floats(0.0, 2.0),
        K=st.integers(1, 300),
        h0=st.floats(-5.0, 20.0),
    )
    def test_general_at_alpha_one_matches_cmart(self, c, K, h0):
        g = SafetySpec(General(1.0, c), K, h0, 1.0, 0.1)
        m = SafetySpec(CMart(c), K, h0, 1.0, 0.1)
        assert lambda_threshold(g) == pytest.approx(lambda_threshold(m), rel=1e-12, abs=1e-12)

    def test_general_geometric_sum(self):
        # K=3, alpha=0.5: sum alpha^{K-i} for i=1..3 is 0.25+0.5+1 = 1.75
        spec = SafetySpec(General(0.5, 2.0), 3, 8.0, 1.0, 0.1)
        assert lambda_threshold(spec) == pytest.approx(0.125 * 8.0 - 2.0 * 1.75, rel=1e-14)


class TestVilleBound:
    def test_trivial_half(self):
        spec = SafetySpec(DTCBF(1.0), 1, 5.0, 1.0, 0.1, B=10.0)
        assert ville_bound(spec).raw == pytest.approx(0.5, rel=1e-15)

    def test_vacuous_cmart(self):
        spec = SafetySpec(CMart(0.1), 100, 5.0, 1.0, 0.1, B=10.0)
        res = ville_bound(spec)
        assert res.raw == pytest.approx(1.5, rel=1e-14)
        assert res.vacuous and res.clamped == 1.0

    def test_dtcbf_value(self):
        spec = SafetySpec(DTCBF(0.99), 100, 5.0, 1.0, 0.1, B=10.0)
        assert ville_bound(spec).raw == pytest.approx(VILLE_DTCBF, rel=1e-13)

    def test_requires_B(self):
        spec = SafetySpec(DTCBF(0.99), 100, 5.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            ville_bound(spec)


class TestFreedmanBound:
    def test_h0_zero_gives_one(self):
        spec = SafetySpec(DTCBF(1.0), 10, 0.0, 1.0, 0.1)
        assert freedman_bound(spec).raw == 1.0

    def test_dtcbf_value(self):
        spec = SafetySpec(DTCBF(0.99), 100, 5.0, 1.0, 0.2)
        assert freedman_bound(spec).raw == pytest.approx(H_DTCBF_EXAMPLE, rel=1e-12)

    def test_cmart_lambda_four(self):
        spec = SafetySpec(CMart(0.01), 100, 5.0, 1.0, 0.2)
        assert freedman_bound(spec).raw == pytest.approx(H_4_2, rel=1e-12)

    def test_negative_threshold_vacuous(self):
        spec = SafetySpec(CMart(1.0), 100, 5.0, 1.0, 0.2)
        res = freedman_bound(spec)
        assert res.raw == 1.0 and res.vacuous


class TestTightenedPqv:
    def test_single_step(self):
        for alpha in (0.2, 0.5, 0.99):
            assert tightened_pqv(alpha, 1, 0.3, 2.0) == pytest.approx(
                0.09 / 4.0, rel=1e-14
            )

    def test_paper_regime_value(self):
        assert tightened_pqv(0.99, 100, 1.0 / 3.0, 1.0) == pytest.approx(TPQV, rel=1e-13)

    def test_alpha_one_rejected(self):
        with pytest.raises(ValueError):
            tightened_pqv(1.0, 10, 0.3, 1.0)

    @given(
        alpha=st.floats(0.01, 0.999),
        K=st.integers(1, 400),
        sigma=st.floats(0.01, 3.0),
        delta=st.floats(0.1, 3.0),
    )
    def test_below_plain_sum(self, alpha, K, sigma, delta):
        assert tightened_pqv(alpha, K, sigma, delta) <= sigma**2 * K / delta**2 + 1e-12


class TestIssfWorstCase:
    def test_step_zero_is_h0(self):
        assert issf_worst_case(0.7, 1.0, 4.2, 0) == 4.2

    def test_alpha_zero_one_step(self):
        assert issf_worst_case(0.0, 1.0, 9.0, 1) == pytest.approx(-1.0)

    def test_small_decrement(self):
        assert issf_worst_case(0.99, 1.0, 1.0, 1) == pytest.approx(-0.01, abs=1e-14)

    @given(
        alpha=st.floats(0.0, 0.99),
        delta=st.floats(0.01, 2.0),
        h0=st.floats(0.0, 10.0),
        k=st.integers(0, 200),
    )
    def test_recursion(self, alpha, delta, h0, k):
        # floor(k+1) = alpha*floor(k) - delta
        f_k = issf_worst_case(alpha, delta, h0, k)
        f_k1 = issf_worst_case(alpha, delta, h0, k + 1)
        assert f_k1 == pytest.approx(alpha * f_k - delta, rel=1e-9, abs=1e-9)

    def test_safe_level(self):
        assert issf_safe_level(0.0, 1.0) == -1.0
        assert issf_safe_level(0.99, 1.0) == pytest.approx(-100.0, rel=1e-12)
        assert issf_safe_level(0.5, 2.0) == -4.0
        with pytest.raises(ValueError):
            issf_safe_level(1.0, 1.0)


class TestStochasticIssfBound:
    def test_indicator_off(self):
        # floor(1) = 0.99 - 1 = -0.01; -2 < -0.01 so the event is impossible
        res = stochastic_issf_bound(0.99, 1, 1.0, 1.0, 1.0 / 3.0, 2.0)
        assert res.raw == 0.0

    def test_indicator_on_value(self):
        res = stochastic_issf_bound(0.99, 1, 1.0, 1.0, 1.0 / 3.0, 0.0)
        assert res.raw == pytest.approx(H_099_THIRD, rel=1e-12)

    def test_large_epsilon_eventually_zero(self):
        vals = [
            stochastic_issf_bound(0.9, 50, 5.0, 1.0, 0.3, eps).raw
            for eps in (0.0, 5.0, 50.0, 500.0)
        ]
        assert vals[-1] == 0.0

    @given(
        alpha=st.floats(0.5, 0.999),
        K=st.integers(1, 200),
        h0=st.floats(0.0, 20.0),
        eps=st.floats(0.0, 50.0),
    )
    def test_result_in_unit_interval(self, alpha, K, h0, eps):
        res = stochastic_issf_bound(alpha, K, h0, 1.0, 1.0 / 3.0, eps)
        assert 0.0 <= res.clamped <= 1.0


class TestComparison:
    def test_phi_constant(self):
        assert PHI == pytest.approx(0.38629436111989062, rel=1e-15)

    def test_conditions_examples(self):
        assert comparison_conditions(6.0, 1.0, 0.2, 100, 10.0) == (True, True)
        assert comparison_conditions(6.0, 1.0, 0.5, 100, 10.0) == (False, True)
        c1, c2 = comparison_conditions(0.0, 1.0, 0.2, 100, 10.0)
        assert c1 is False  # 0 >= sigma^2 K fails for sigma > 0
        assert c2 is (10.0 >= 1.0 / PHI)

    def test_gap_values(self):
        assert dominance_gap(0.0, 10.0, 0.2, 100, 1.0) == 0.0
        assert dominance_gap(6.0, 10.0, 0.2, 100, 1.0) == pytest.approx(
            GAP_COND_TRUE, rel=1e-12
        )
        assert dominance_gap(9.9, 10.0, 3.0, 100, 1.0) == pytest.approx(
            GAP_COND_FALSE, rel=1e-12
        )

    def test_derivative_value_and_sign(self):
        val = dominance_gap_dsigma2(6.0, 10.0, 0.2, 100, 1.0)
        assert val == pytest.approx(DGAP_DS2, rel=1e-10)
        assert val <= 0.0

    @given(
        lam=st.floats(0.0, 10.0),
        sigma=st.floats(0.05, 3.0),
        K=st.integers(1, 300),
        delta=st.floats(0.1, 3.0),
    )
    def test_derivative_nonpositive(self, lam, sigma, K, delta):
        assert dominance_gap_dsigma2(lam, 10.0, sigma, K, delta) <= 0.0


class TestSantoyo:
    def test_negative_c_case(self):
        assert santoyo_bound(0.9, -0.5, 10, 5.0, 10.0).raw == pytest.approx(
            SANTOYO_NEG_C, rel=1e-13
        )

    @given(
        alpha=st.floats(0.05, 1.0),
        K=st.integers(1, 200),
        h0=st.floats(0.0, 9.0),
        B=st.floats(0.5, 20.0),
    )
    def test_c_zero_matches_ville_dtcbf(self, alpha, K, h0, B):
        s = santoyo_bound(alpha, 0.0, K, h0, B).raw
        v = ville_bound(SafetySpec(DTCBF(alpha), K, h0, 1.0, 1.0, B=B)).raw
        assert s == pytest.approx(v, rel=1e-14, abs=1e-14)

    @given(
        c=st.floats(0.0, 1.0),
        K=st.integers(1, 200),
        h0=st.floats(0.0, 9.0),
        B=st.floats(0.5, 20.0),
    )
    def test_alpha_one_matches_ville_cmart(self, c, K, h0, B):
        s = santoyo_bound(1.0, c, K, h0, B).raw
        v = ville_bound(SafetySpec(CMart(c), K, h0, 1.0, 1.0, B=B)).raw
        assert s == pytest.approx(v, rel=1e-14, abs=1e-14)


class TestConstructiveRecipes:
    def test_lipschitz_recipe(self):
        assert constructive_delta_sigma(0.0, 3.0) == (0.0, 0.0)
        assert constructive_delta_sigma(2.0, 0.5) == (2.0, 1.0)
        assert constructive_delta_sigma(1.0, 1.0) == (2.0, 1.0)

    def test_walker_recipe(self):
        assert hlip_delta_sigma(0.0) == (0.0, 0.0)
        d, s2 = hlip_delta_sigma(0.3)
        assert d == pytest.approx(0.5, rel=1e-15)
        assert s2 == pytest.approx(0.045, rel=1e-15)
        d, s2 = hlip_delta_sigma(0.06)
        assert d == pytest.approx(0.1, rel=1e-15)
        assert s2 == pytest.approx(0.0018, rel=1e-15)


class TestLambertW:
    def test_branch_point(self):
        assert lambert_w_minus1(-math.exp(-1.0)) == pytest.approx(-1.0, abs=1e-9)

    def test_known_value(self):
        assert lambert_w_minus1(-0.1) == pytest.approx(W_M1_01, rel=1e-12)

    def test_round_trip_grid(self):
        xs = [-math.exp(-1.0) * (1.0 - 1e-12)] + [
            -math.exp(-1.0) + (math.exp(-1.0) - 1e-9) * t / 99 for t in range(1, 100)
        ]
        for x in xs:
            w = lambert_w_minus1(x)
            assert w <= -1.0 + 1e-9
            assert abs(w * math.exp(w) - x) <= 1e-10

    def test_domain(self):
        with pytest.raises(ValueError):
            lambert_w_minus1(-1.0)
        with pytest.raises(ValueError):
            lambert_w_minus1(0.0)
        with pytest.raises(ValueError):
            lambert_w_minus1(0.5)


class TestPsiThreshold:
    def test_phi_minus_one(self):
        assert psi_threshold(-1.0) == pytest.approx(1.0, abs=1e-9)

    def test_threshold_is_zero_of_psi(self):
        for phi in (-0.5, -0.2, -0.9):
            t = psi_threshold(phi)
            assert abs(psi(phi, t)) <= 1e-9

    def test_value_at_half(self):
        assert psi_threshold(-0.5) == pytest.approx(PSI_THRESH_HALF, rel=1e-10)

    def test_nonnegative_beyond_threshold(self):
        t = psi_threshold(-0.5)
        for i in range(100):
            b = t * (1.0 + 0.1 * (i + 1))
            assert psi(-0.5, b) >= 0.0

    def test_domain(self):
        with pytest.raises(ValueError):
            psi_threshold(0.0)
        with pytest.raises(ValueError):
            psi_threshold(1.0)


class TestSpecValidation:
    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            SafetySpec(DTCBF(0.0), 10, 1.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            SafetySpec(DTCBF(1.5), 10, 1.0, 1.0, 0.1)

    def test_bad_c(self):
        with pytest.raises(ValueError):
            SafetySpec(CMart(-0.1), 10, 1.0, 1.0, 0.1)

    def test_bad_shape_params(self):
        with pytest.raises(ValueError):
            SafetySpec(DTCBF(0.9), 0, 1.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            SafetySpec(DTCBF(0.9), 10, 1.0, 0.0, 0.1)
        with pytest.raises(ValueError):
            SafetySpec(DTCBF(0.9), 10, 1.0, 1.0, -0.1)
        with pytest.raises(ValueError):
            SafetySpec(DTCBF(0.9), 10, 1.0, 1.0, 0.1, B=0.0)

    @given(raw=st.floats(-3.0, 3.0))
    def test_bound_result_invariants(self, raw):
        r = BoundResult.from_raw(raw)
        assert r.clamped == min(1.0, max(0.0, raw))
        assert r.vacuous == (raw >= 1.0)
