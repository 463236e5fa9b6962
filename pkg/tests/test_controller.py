import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_consensus.controller import (
    ControllerParams,
    compute_p_and_s,
    control_and_adaptation,
    decentralized_baseline,
    hurwitz_check,
    routh_hurwitz,
)
from adaptive_consensus.plant import plant_derivative, van_der_pol_fleet, van_der_pol_regressor


class TestHurwitz:
    def test_examples(self):
        assert hurwitz_check([1.0])
        assert hurwitz_check([1.0, 1.0])
        assert not hurwitz_check([-1.0, 1.0])
        assert hurwitz_check([])

    def test_third_order(self):
        # s^3 + a s^2 + b s + c is stable iff a, b, c > 0 and a b > c
        assert hurwitz_check([2.0, 3.0, 5.0])
        assert not hurwitz_check([1.0, 1.0, 5.0])
        assert not hurwitz_check([1.0, 1.0, 1.0])  # a b = c: roots on the axis

    def test_errors(self):
        with pytest.raises(ValueError):
            routh_hurwitz([0.0, 1.0])
        with pytest.raises(ValueError):
            routh_hurwitz([1.0, np.nan])
        with pytest.raises(ValueError):
            routh_hurwitz([])

    @settings(max_examples=300)
    @given(st.lists(st.floats(-3, 6), min_size=1, max_size=6))
    def test_matches_root_finding(self, beta):
        roots = np.roots([1.0, *beta])
        margin = np.abs(roots.real).min() if roots.size else 1.0
        if margin < 1e-6:
            return  # too close to the axis for a floating-point oracle
        assert hurwitz_check(beta) == bool(np.all(roots.real < 0))


class TestParams:
    def test_defaults(self):
        p = ControllerParams((1.0,), 3.0)
        assert p.r == 2
        np.testing.assert_array_equal(p.gain_matrix(2), np.eye(2))

    def test_small_gain(self):
        with pytest.raises(ValueError):
            ControllerParams((1.0,), 1.0)
        assert ControllerParams((1.0,), 1.0, allow_small_k=True).k == 1.0
        with pytest.raises(ValueError):
            ControllerParams((1.0,), 0.0, allow_small_k=True)

    def test_beta_checks(self):
        with pytest.raises(ValueError):
            ControllerParams((-1.0,), 3.0)
        with pytest.raises(ValueError):
            ControllerParams((1.0, 1.0, 5.0), 3.0)

    @pytest.mark.parametrize("lam", [np.zeros((2, 2)), [[1.0, 2.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, -1.0]]])
    def test_bad_lambda(self, lam):
        with pytest.raises(ValueError):
            ControllerParams((1.0,), 3.0, Lambda=lam)

    def test_lambda_inverse(self):
        lam = np.array([[2.0, 1.0], [1.0, 3.0]])
        p = ControllerParams((1.0,), 3.0, Lambda=lam)
        f = np.array([1.0, -2.0])
        np.testing.assert_allclose(lam @ p.adapt(f, 0.5), 0.5 * f)
        with pytest.raises(ValueError):
            p.gain_matrix(3)


class TestFilteredError:
    def test_example(self):
        fe = compute_p_and_s([1.0, 2.0], [0.0, 0.0], [0.0, 0.0], [1.0])
        assert fe.p == -1.0 and fe.s == 3.0
        # p_dot = xhat_dot_2 - beta (x_2 - xhat_dot_1)
        assert fe.p_dot == -2.0

    def test_perfect_tracking(self):
        x = [0.3, -1.2, 0.7]
        x_dot = [-1.2, 0.7, 4.0]
        fe = compute_p_and_s(x, x, x_dot, [2.0, 1.0])
        assert fe.s == 0.0
        assert fe.p_dot == 4.0

    def test_first_order(self):
        fe = compute_p_and_s([2.0], [0.5], [1.5], [])
        assert (fe.p, fe.p_dot, fe.s) == (0.5, 1.5, 1.5)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            compute_p_and_s([1.0, 2.0], [0.0], [0.0, 0.0], [1.0])

    @given(st.lists(st.floats(-5, 5), min_size=9, max_size=9), st.lists(st.floats(0.1, 3), min_size=2, max_size=2))
    def test_identity(self, vals, beta):
        x, xh, xhd = vals[:3], vals[3:6], vals[6:]
        fe = compute_p_and_s(x, xh, xhd, beta)
        lhs = x[2] + beta[0] * x[1] + beta[1] * x[0]
        rhs = fe.s + xh[2] + beta[0] * xh[1] + beta[1] * xh[0]
        assert lhs == pytest.approx(rhs, abs=1e-9)

    @given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.floats(0.1, 3))
    def test_p_dot_is_time_derivative(self, vals, beta):
        """p_dot equals the derivative of p along x' = chain, xhat' = given."""
        x, xh = np.array(vals[:2]), np.array(vals[2:4])
        xhd = np.array([vals[4], vals[5]])
        xd = np.array([x[1], -x[0]])
        h = 1e-6
        fwd = compute_p_and_s(x + h * xd, xh + h * xhd, xhd, [beta]).p
        bwd = compute_p_and_s(x - h * xd, xh - h * xhd, xhd, [beta]).p
        fe = compute_p_and_s(x, xh, xhd, [beta])
        assert (fwd - bwd) / (2 * h) == pytest.approx(fe.p_dot, abs=1e-6)


class TestLaw:
    def test_no_feedback(self):
        p = ControllerParams((1.0,), 3.0)
        u, th = control_and_adaptation([0.3, 0.4], 0.0, 0.0, 1.7, np.zeros(2), p)
        assert u == 1.7
        np.testing.assert_array_equal(th, [0.0, 0.0])

    def test_van_der_pol_example(self):
        agent = van_der_pol_fleet()[0]
        p = ControllerParams((1.0,), 3.0)
        f = van_der_pol_regressor(np.array([1.0, 2.0]), 0.0)
        u, th = control_and_adaptation(f, agent.disturbance(np.array([1.0, 1.0])), 2.0, 0.0,
                                       np.array([1.0, 1.0]), p)
        assert u == -6.0
        np.testing.assert_array_equal(th, [-2.0, 0.0])

    def test_identity_gain(self):
        _, th = control_and_adaptation([-1.0, 0.0], 0.0, 2.0, 0.0, np.zeros(2), ControllerParams((1.0,), 3.0))
        np.testing.assert_array_equal(th, [-2.0, 0.0])


class TestBaseline:
    def test_reference_formula(self):
        p = ControllerParams((1.0,), 3.0)
        agent = van_der_pol_fleet()[1]
        x, x0, x0d = [0.5, -1.0], [1.5, 2.0], [2.0, -1.5]
        _, _, fe = decentralized_baseline(x, x0, x0d, [0.1, 0.2], np.zeros(2), p,
                                          agent.regressor, agent.disturbance)
        assert fe.p == pytest.approx(2.0 - (0.5 - 1.5))

    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.integers(0, 3))
    def test_certainty_equivalence(self, vals, idx):
        """x = x0 and theta_hat = theta give s' = 0 under the baseline law."""
        agent = van_der_pol_fleet()[idx]
        p = ControllerParams((1.0,), 3.0)
        x0 = np.array(vals[:2])
        w = np.array(vals[2:])
        x0d = np.array([x0[1], -x0[0]])
        u, th_dot, fe = decentralized_baseline(x0, x0, x0d, w, agent.theta, p,
                                               agent.regressor, agent.disturbance)
        assert fe.s == 0.0
        dx = plant_derivative(agent, x0, u, w)
        # s' = x_r' - p_dot with p_dot = x0_dot_r - beta (x_r - x0_dot_(r-1))
        assert dx[1] - fe.p_dot == pytest.approx(0.0, abs=1e-9 * (1 + abs(u)))
        np.testing.assert_array_equal(th_dot, 0.0)
