import numpy as np
import pytest
from scipy import signal

from helpers import random_causal, random_pair
from serialcorr.covariance import yule_walker
from serialcorr.errors import InvalidInputError
from serialcorr.limits import (
    build_structural,
    compute_limits,
    exchange,
    lambda_recursion,
    limiting_T,
    limiting_T_covariance,
    limiting_T_sylvester,
    limiting_rho,
    sigma_rho0,
    sigma_T,
    upsilon,
)
from serialcorr.process import ArArModel, NoiseLaw, compose_beta


def structures(theta, rho, sigma2=1.0):
    comp = compose_beta(theta, rho)
    return build_structural(comp), yule_walker(comp, sigma2)


class TestStructural:
    def test_q1(self):
        theta, rho = np.array([0.3, -0.2, 0.4]), 0.5
        st = build_structural(compose_beta(theta, [rho]))
        assert np.array_equal(st.c_alpha, [[0.0]])
        assert st.c_gamma[0, 0] == pytest.approx(-0.4 * 0.5)
        assert np.allclose(st.d[:, 0], compose_beta(theta, [rho]).alpha)
        assert np.allclose(st.K, np.eye(3) + 0.4 * 0.5 * exchange(3))

    def test_null_noise(self):
        theta = np.array([0.3, -0.2, 0.4])
        st = build_structural(compose_beta(theta, [0.0, 0.0]))
        assert np.all(st.c_gamma == 0)
        assert np.allclose(st.K, np.kron(np.eye(2) - st.c_alpha, np.eye(3)))
        assert np.allclose(st.d[:, 0], theta)
        assert np.allclose(st.d[:, 1], [-0.2, 0.4, 0.0])

    def test_p_less_than_q_shapes(self):
        st = build_structural(compose_beta([0.5], [0.2, 0.1]))
        assert st.branch == "p<q"
        assert st.c_alpha.shape == (2, 2)
        assert st.c_gamma.shape == (2, 2)
        assert st.d.shape == (1, 2)
        assert st.K.shape == (2, 2)

    def test_tie_uses_p_ge_q(self):
        assert build_structural(compose_beta([0.5, 0.1], [0.2, 0.1])).branch == "p>=q"

    def test_requires_positive_orders(self):
        with pytest.raises(InvalidInputError):
            build_structural(compose_beta([0.5], []))


class TestLimitingT:
    def test_scalar_example(self):
        st, cov = structures([0.5], [0.3])
        _, theta_star = limiting_T(st, cov)
        assert theta_star[0] == pytest.approx(0.8 / 1.15, rel=1e-12)

    def test_null(self):
        theta = np.array([0.3, -0.2, 0.4])
        st, cov = structures(theta, [0.0])
        assert np.allclose(limiting_T(st, cov)[1], theta, atol=1e-10)

    def test_routes_agree_on_random_models(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            theta, rho = random_pair(rng)
            st, cov = structures(theta, rho)
            a = limiting_T_sylvester(st)
            b = limiting_T_covariance(cov, st.p, st.q)
            assert np.allclose(a, b, rtol=1e-8, atol=1e-10)

    def test_sylvester_residual(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            theta, rho = random_pair(rng)
            st, cov = structures(theta, rho)
            T, _ = limiting_T(st, cov)
            res = T @ (np.eye(st.q) - st.c_alpha.T) - exchange(st.p) @ T @ st.c_gamma - st.d
            assert np.max(np.abs(res)) < 1e-10


class TestSigmaT:
    def test_q1_closed_form(self):
        theta, rho = np.array([0.3, -0.2, 0.4]), 0.5
        st, cov = structures(theta, [rho], sigma2=1.7)
        _, sig_theta = sigma_T(st, cov)
        c = theta[-1] * rho
        # K = I + cJ, so K^{-1} = (I - cJ)/(1 - c^2); the sign was confirmed by
        # Monte Carlo (n Cov(theta_hat), n=4000, 3000 paths)
        M = np.eye(3) - c * exchange(3)
        expected = 1.7 * M @ np.linalg.inv(cov.delta(3)) @ M / ((1 - c) ** 2 * (1 + c) ** 2)
        assert np.allclose(sig_theta, expected, rtol=1e-10)

    def test_ar1_null(self):
        st, cov = structures([0.6], [0.0])
        _, sig_theta = sigma_T(st, cov)
        assert sig_theta[0, 0] == pytest.approx(1 - 0.36, rel=1e-12)

    def test_sigma2_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            theta, rho = random_pair(rng)
            a, _ = sigma_T(*structures(theta, rho, 1.0))
            b, _ = sigma_T(*structures(theta, rho, 2.0))
            assert np.allclose(a, b, rtol=1e-10, atol=1e-12)

    def test_symmetric_psd(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            sig, _ = sigma_T(*structures(*random_pair(rng)))
            assert np.allclose(sig, sig.T)
            assert np.linalg.eigvalsh(sig).min() > -1e-10


class TestLimitingRho:
    def test_q1_closed_form(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            theta = random_causal(rng, int(rng.integers(1, 5)))
            rho = random_causal(rng, 1)
            st, cov = structures(theta, rho)
            _, ts = limiting_T(st, cov)
            assert limiting_rho(ts, cov, 1)[0] == pytest.approx(theta[-1] * rho[0] * ts[-1], abs=1e-10)

    def test_scalar_example(self):
        lim = compute_limits(ArArModel([0.5], [0.3]))
        assert lim.rho_star[0] == pytest.approx(0.5 * 0.3 * 0.8 / 1.15, rel=1e-10)

    def test_null_gives_zero(self):
        rng = np.random.default_rng(10)
        for q in (1, 2, 3):
            theta = random_causal(rng, 3)
            lim = compute_limits(ArArModel(theta), q)
            assert np.allclose(lim.rho_star, 0, atol=1e-10)
            assert np.allclose(lim.theta_star, theta, atol=1e-10)

    def test_is_population_regression(self):
        # rho* regresses the limiting residual on its lags; check via covariances of
        # the residual process e_t = Y_t - theta*' Phi_{t-1}
        lim = compute_limits(ArArModel([0.3, -0.2, 0.4], [0.5, -0.3]), 2)
        cov, ts = lim.covariances, lim.theta_star
        a = np.r_[1.0, -ts]
        ell = cov.extend(10)

        def ce(h):
            return sum(a[i] * a[j] * ell[abs(h + i - j)] for i in range(4) for j in range(4))

        G = np.array([[ce(i - j) for j in range(2)] for i in range(2)])
        g = np.array([ce(1), ce(2)])
        assert np.allclose(lim.rho_star, np.linalg.solve(G, g), atol=1e-10)


class TestLambdaAndSigmaRho0:
    def test_examples(self):
        assert np.allclose(lambda_recursion([0.5], 2), [1, 0.5, 0.25])
        t1, t2 = 0.3, -0.2
        assert np.allclose(lambda_recursion([t1, t2], 2), [1, t1, t1**2 + t2])

    def test_impulse_response_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            theta = random_causal(rng, int(rng.integers(1, 6)))
            q = int(rng.integers(1, 8))
            impulse = np.zeros(q + 1)
            impulse[0] = 1
            oracle = signal.lfilter([1.0], np.r_[1.0, -theta], impulse)
            assert np.allclose(lambda_recursion(theta, q), oracle, atol=1e-14)

    def test_upsilon_q1(self):
        U = upsilon([0.3, -0.2, 0.4], 1, 2.0)
        assert np.array_equal(U, [[2.0, 0.0, 0.0]])

    def test_sigma_rho0_q1(self):
        assert sigma_rho0([0.5], 1)[0, 0] == pytest.approx(0.25, abs=1e-12)
        assert sigma_rho0([0.3, -0.2, 0.4], 1)[0, 0] == pytest.approx(0.16, abs=1e-12)

    def test_sigma2_invariance(self):
        theta = [1.7, -0.72]
        a = sigma_rho0(theta, 3, sigma2=1.0)
        b = sigma_rho0(theta, 3, sigma2=5.0)
        assert np.allclose(a, b, rtol=1e-10)

    def test_eigenvalues_in_unit_interval(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            theta = random_causal(rng, int(rng.integers(1, 5)))
            S = sigma_rho0(theta, int(rng.integers(1, 6)))
            assert np.allclose(S, S.T)
            ev = np.linalg.eigvalsh(S)
            assert ev.min() >= -1e-10 and ev.max() <= 1 + 1e-10

    def test_p_less_than_q(self):
        S = sigma_rho0([0.5], 3)
        assert S.shape == (3, 3)
        assert S[0, 0] == pytest.approx(0.25)


class TestComputeLimits:
    def test_to_dict_keys(self):
        d = compute_limits(ArArModel([0.3, -0.2, 0.4], [0.5], NoiseLaw.uniform(2.0))).to_dict()
        for key in ("theta_star", "T_star", "Sigma_theta", "rho_star", "Sigma_rho0", "lambda"):
            assert key in d

    def test_tested_order_above_noise_order(self):
        lim = compute_limits(ArArModel([0.5], [0.3]), q=3)
        assert lim.T_star.shape == (1, 3)
        assert lim.rho_star.shape == (3,)
        assert lim.theta_star[0] == pytest.approx(0.8 / 1.15)

    def test_bad_q(self):
        with pytest.raises(InvalidInputError):
            compute_limits(ArArModel([0.5]), q=0)
