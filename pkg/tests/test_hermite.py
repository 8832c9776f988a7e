import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from guespec.hermite import (
    HermiteBasis,
    ScaledValue,
    christoffel_darboux,
    eval_orthonormal_sequence,
    hermite_derivative,
    hermite_functions,
    hermite_value,
    monic_hermite,
    orthonormal_table,
    plancherel_rotach_bulk,
    plancherel_rotach_edge,
    plancherel_rotach_outside,
)
from guespec.quadrature import gauss_hermite_scaled
from oracles import gauss_rule, hermite_integral_rep

# h~_10(0.7) at N=20 from the Gaussian integral representation (oracles.hermite_integral_rep)
H10_AT_07_N20 = 7.791095615377913


def relerr(a, b):
    return abs(a - b) / abs(b)


class TestScaledValue:
    @given(st.floats(min_value=-1e300, max_value=1e300, allow_nan=False))
    def test_round_trip(self, v):
        # exp(log|v|) carries the rounding of log|v|, amplified by |log|v||
        tol = 4e-16 * (1 + abs(math.log(abs(v)))) if v else 0.0
        assert ScaledValue.from_float(v).value == pytest.approx(v, rel=tol, abs=0)

    def test_zero_is_encoded_by_minus_infinity(self):
        z = ScaledValue.from_float(0.0)
        assert z.sign == 0 and z.log_magnitude == -math.inf and z.value == 0.0

    def test_huge_ratio(self):
        a = ScaledValue(1, 5000.0)
        b = ScaledValue(-1, 4999.0)
        assert a.ratio(b) == pytest.approx(-math.e)
        assert a.value == math.inf

    def test_rejects_bad_sign(self):
        with pytest.raises(ValueError):
            ScaledValue(2, 0.0)


class TestBasis:
    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            HermiteBasis(0, 3)
        with pytest.raises(ValueError):
            HermiteBasis(3, -1)

    def test_rejects_non_finite_x_and_negative_order(self):
        b = HermiteBasis(3, 5)
        with pytest.raises(ValueError):
            eval_orthonormal_sequence(math.nan, 3, b)
        with pytest.raises(ValueError):
            eval_orthonormal_sequence(0.1, -1, b)
        with pytest.raises(ValueError):
            eval_orthonormal_sequence(0.1, 6, b)


class TestOrthonormalSequence:
    def test_seed_value_n1(self):
        seq = eval_orthonormal_sequence(1.234, 0, HermiteBasis(1, 0))
        assert seq[0].value == pytest.approx((1 / (2 * math.pi)) ** 0.25, rel=1e-15)
        assert seq[0].value == pytest.approx(0.63162, abs=1e-5)

    def test_first_order(self):
        n, x = 5, 0.3
        seq = eval_orthonormal_sequence(x, 1, HermiteBasis(n, 1))
        assert seq[1].value == pytest.approx(x * math.sqrt(n) * seq[0].value, rel=1e-14)

    def test_matches_integral_representation(self):
        b = HermiteBasis(20, 10)
        value = eval_orthonormal_sequence(0.7, 10, b)[10].value
        oracle = hermite_integral_rep(0.7, 10, 20) / math.exp(b.log_norm(10))
        assert oracle == pytest.approx(H10_AT_07_N20, rel=1e-12)
        assert relerr(value, H10_AT_07_N20) <= 1e-8

    @pytest.mark.parametrize("n", [1, 7, 30])
    def test_recurrence_vs_integral_representation_grid(self, n):
        b = HermiteBasis(n, 30)
        for x in (-1.3, 0.2, 0.9, 2.4):
            seq = eval_orthonormal_sequence(x, 30, b)
            for k in range(31):
                oracle = hermite_integral_rep(x, k, n)
                exact = hermite_value(x, k, b).value
                assert exact == pytest.approx(oracle, rel=1e-8, abs=1e-8 * math.exp(b.log_norm(k)))
                assert seq[k].scale(b.log_norm(k)).value == exact

    def test_orthonormality_under_independent_gauss_hermite(self):
        for n in (1, 13, 50):
            x, w = gauss_rule(n, 40)
            mant, logs = orthonormal_table(x, 20, n)
            vals = mant * np.exp(logs)
            gram = (vals * w) @ vals.T
            assert np.max(np.abs(gram - np.eye(21))) <= 1e-8

    def test_orthonormality_under_package_rule(self):
        rule = gauss_hermite_scaled(40, 50)
        mant, logs = orthonormal_table(rule.nodes, 20, 50)
        vals = mant * np.exp(logs)
        gram = (vals * rule.weights) @ vals.T
        assert np.max(np.abs(gram - np.eye(21))) <= 1e-8

    def test_no_overflow_at_large_order(self):
        b = HermiteBasis(10_000, 10_000)
        seq = eval_orthonormal_sequence(1.0, 10_000, b)
        assert all(math.isfinite(v.log_magnitude) for v in seq[:10] + seq[-10:])
        assert hermite_value(1.0, 10_000, b).log_magnitude > 700

    def test_vectorized_table_matches_scalar(self):
        xs = np.linspace(-3, 3, 7)
        mant, logs = orthonormal_table(xs, 40, 9)
        b = HermiteBasis(9, 40)
        for i, x in enumerate(xs):
            seq = eval_orthonormal_sequence(x, 40, b)
            assert mant[40, i] * math.exp(logs[40, i]) == pytest.approx(seq[40].value, rel=1e-13)

    def test_weighted_functions_bounded(self):
        f = hermite_functions(np.linspace(-4, 4, 801), range(0, 201, 20), 200)
        assert np.max(np.abs(f)) < 2 * 200**0.25


class TestMonicAndDerivative:
    @pytest.mark.parametrize("n", [1, 3, 17])
    def test_monic_first_order_is_x(self, n):
        assert monic_hermite(0.37, 1, HermiteBasis(n, 2)).value == pytest.approx(0.37, rel=1e-14)

    def test_monic_second_order(self):
        assert monic_hermite(0.0, 2, HermiteBasis(1, 2)).value == pytest.approx(-1.0, rel=1e-14)
        assert monic_hermite(1.0, 2, HermiteBasis(4, 2)).value == pytest.approx(0.75, rel=1e-14)

    @given(st.integers(1, 40), st.integers(0, 30), st.floats(-3, 3, allow_subnormal=False))
    def test_monic_recurrence(self, n, k, x):
        b = HermiteBasis(n, k + 2)
        p = [monic_hermite(x, j, b).value for j in (k, k + 1, k + 2)]
        rhs = x * p[1] - (k + 1) / n * p[0]
        assert p[2] == pytest.approx(rhs, rel=1e-10, abs=1e-10 * (abs(x * p[1]) + abs((k + 1) / n * p[0])))

    @pytest.mark.parametrize("n", [1, 6])
    def test_derivative_first_order_is_n(self, n):
        b = HermiteBasis(n, 3)
        for x in (-1.0, 0.0, 2.5):
            assert hermite_derivative(x, 1, b).value == pytest.approx(n, rel=1e-14)

    def test_derivative_known_value(self):
        assert hermite_derivative(0.5, 2, HermiteBasis(1, 3)).value == pytest.approx(1.0, rel=1e-14)

    def test_derivative_zero_order(self):
        assert hermite_derivative(0.5, 0, HermiteBasis(1, 3)).value == 0.0

    def test_derivative_two_forms_agree(self):
        n, k, x = 10, 5, 1.1
        b = HermiteBasis(n, k + 1)
        first = hermite_derivative(x, k, b).value
        second = n * x * hermite_value(x, k, b).value - hermite_value(x, k + 1, b).value
        assert relerr(first, second) <= 1e-12

    def test_derivative_matches_finite_difference(self):
        b = HermiteBasis(3, 8)
        h = 1e-6
        fd = (hermite_value(0.4 + h, 8, b).value - hermite_value(0.4 - h, 8, b).value) / (2 * h)
        assert hermite_derivative(0.4, 8, b).value == pytest.approx(fd, rel=1e-7)

    @given(st.integers(1, 60), st.integers(0, 60), st.floats(0.01, 4))
    def test_parity(self, n, k, x):
        b = HermiteBasis(n, k)
        plus, minus = hermite_value(x, k, b), hermite_value(-x, k, b)
        assert minus.sign == (-1) ** k * plus.sign
        assert minus.log_magnitude == pytest.approx(plus.log_magnitude, rel=1e-12, abs=1e-12)


class TestChristoffelDarboux:
    def test_single_term(self):
        n = 7
        b = HermiteBasis(n, 2)
        assert christoffel_darboux(0.3, -1.2, 1, b) == pytest.approx(math.sqrt(n / (2 * math.pi)), rel=1e-14)

    def test_matches_direct_sum(self):
        b = HermiteBasis(8, 5)
        sx = eval_orthonormal_sequence(0.2, 4, b)
        sy = eval_orthonormal_sequence(0.9, 4, b)
        direct = sum(sx[k].value * sy[k].value for k in range(4))
        assert relerr(christoffel_darboux(0.2, 0.9, 4, b), direct) <= 1e-10

    def test_confluent_branch(self):
        b = HermiteBasis(8, 5)
        diag = christoffel_darboux(0.2, 0.2, 4, b)
        seq = eval_orthonormal_sequence(0.2, 4, b)
        assert relerr(diag, sum(v.value**2 for v in seq[:4])) <= 1e-12
        # the symmetric average cancels the O(h) slope, leaving O(h**2) plus roundoff
        h = 1e-6
        avg = 0.5 * (christoffel_darboux(0.2, 0.2 + h, 4, b) + christoffel_darboux(0.2, 0.2 - h, 4, b))
        assert relerr(avg, diag) <= 1e-8

    @given(st.integers(1, 50), st.integers(1, 50), st.floats(-2.5, 2.5), st.floats(-2.5, 2.5))
    def test_ratio_form_equals_direct_sum(self, N, n, x, y):
        if abs(x - y) < 1e-3:
            y = x + 0.1
        b = HermiteBasis(N, n)
        sx = eval_orthonormal_sequence(x, n, b)
        sy = eval_orthonormal_sequence(y, n, b)
        terms = [sx[k].value * sy[k].value for k in range(n)]
        direct = sum(terms)
        scale = sum(abs(t) for t in terms)
        assert abs(christoffel_darboux(x, y, n, b) - direct) <= 1e-10 * max(scale, abs(direct)) / min(1.0, abs(x - y))

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            christoffel_darboux(0.1, 0.2, 0, HermiteBasis(3, 3))


def exact(x, N, n=0):
    return hermite_value(x, N + n, HermiteBasis(N, N + abs(n)))


class TestPlancherelRotach:
    def test_bulk_at_origin(self):
        assert abs(plancherel_rotach_bulk(0.0, 100).ratio(exact(0.0, 100)) - 1) <= 0.02

    def test_bulk_improves_with_n(self):
        errs = [abs(plancherel_rotach_bulk(1.0, N).ratio(exact(1.0, N)) - 1) for N in (100, 200)]
        assert errs[1] < errs[0]

    def test_bulk_shifted_order(self):
        assert abs(plancherel_rotach_bulk(1.0, 100, 1).ratio(exact(1.0, 100, 1)) - 1) <= 0.02

    def test_bulk_domain(self):
        with pytest.raises(ValueError):
            plancherel_rotach_bulk(2.0, 100)
        with pytest.raises(ValueError):
            plancherel_rotach_bulk(0.5, 100, 11)

    def test_outside(self):
        assert abs(plancherel_rotach_outside(2.5, 100).ratio(exact(2.5, 100)) - 1) <= 0.02
        assert abs(plancherel_rotach_outside(2.5, 100, -1).ratio(exact(2.5, 100, -1)) - 1) <= 0.02

    def test_outside_improves_with_n(self):
        errs = [abs(plancherel_rotach_outside(3.0, N).ratio(exact(3.0, N)) - 1) for N in (50, 100)]
        assert errs[1] < errs[0]

    def test_outside_negative_side_by_parity(self):
        for n in (0, -1):
            approx = plancherel_rotach_outside(-2.5, 100, n)
            ex = exact(-2.5, 100, n)
            assert approx.sign == ex.sign
            assert abs(approx.ratio(ex) - 1) <= 0.02

    def test_outside_domain(self):
        with pytest.raises(ValueError):
            plancherel_rotach_outside(1.9, 100)

    def test_edge_uses_airy_at_zero(self):
        N = 100
        v = plancherel_rotach_edge(0.0, N)
        log_env = 0.5 * math.log(2 * math.pi) + math.log(N) / 6 + N * math.log(N) + N / 2
        assert v.scale(-log_env).value == pytest.approx(0.3550280539, rel=1e-9)

    @pytest.mark.parametrize("xi", [0.5, 1.0, 2.0])
    def test_edge_improves_with_n(self, xi):
        errs = [abs(plancherel_rotach_edge(xi, N).ratio(exact(2 - xi * N ** (-2 / 3), N)) - 1) for N in (50, 100, 200, 400)]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 0.07

    def test_edge_guard(self):
        with pytest.raises(ValueError):
            plancherel_rotach_edge(10.0, 100)


@pytest.mark.xfail(strict=True, reason="leading-order edge form is 5.1% off at N=100, xi=1")
def test_edge_within_five_percent_at_n100():
    N, xi = 100, 1.0
    assert abs(plancherel_rotach_edge(xi, N).ratio(exact(2 - xi * N ** (-2 / 3), N)) - 1) <= 0.05


@pytest.mark.xfail(strict=True, reason="edge and outside forms differ by a factor 0.53 at xi=-3, N=100")
def test_edge_matches_outside_at_minus_three():
    N, xi = 100, -3.0
    x = 2 - xi * N ** (-2 / 3)
    assert abs(plancherel_rotach_edge(xi, N).ratio(plancherel_rotach_outside(x, N)) - 1) <= 0.10


@pytest.mark.xfail(strict=True, reason="overlap windows at N=100 sit too close to the edge for leading-order matching")
def test_three_regime_consistency():
    N = 100
    for c in (1.0, 2.0, 3.0):
        d = c * N ** (-2 / 3)
        inside = plancherel_rotach_edge(c, N).ratio(plancherel_rotach_bulk(2 - d, N))
        outside = plancherel_rotach_edge(-c, N).ratio(plancherel_rotach_outside(2 + d, N))
        assert abs(inside - 1) <= 0.10 and abs(outside - 1) <= 0.10
