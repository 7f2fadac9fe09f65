"""Closed-form asymptotics of the least-squares estimators under correlated noise.

The least-squares fit of an AR(p) to a process whose noise is AR(q) does
not converge to ``theta``. Its limit ``theta*`` (first column of ``T*``) is
obtained two ways: from the autocovariances (``T* = Delta_p^{-1} Pi_pq``)
and from a generalised Sylvester equation in ``theta`` and ``rho`` only
(``vec(T*) = K^{-1} vec(D)``). The module also provides the limit ``rho*``
of the residual serial-correlation estimator and its null covariance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .covariance import CovarianceStructure, yule_walker
from .errors import InvalidInputError, PathologicalModelError, SerialCorrError
from .process import ArArModel, ComposedAr, compose_beta

#: Condition-number ceiling for K and the rho* normal matrix.
COND_PATHOLOGICAL = 1e10
#: Relative agreement demanded between the two routes to T*.
ROUTE_RTOL = 1e-8


def exchange(n: int) -> np.ndarray:
    """Exchange matrix ``J_n`` (ones on the anti-diagonal)."""
    return np.fliplr(np.eye(n))


def _check_cond(M: np.ndarray, what: str) -> None:
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > COND_PATHOLOGICAL:
        raise PathologicalModelError(f"{what} is numerically singular (condition number {cond:.3g})")


@dataclass(frozen=True)
class StructuralMatrices:
    """Matrices of the Sylvester equation ``T (I - A') - J_p T C_gamma = D``.

    ``c_alpha`` is the strictly lower-triangular Toeplitz matrix (the
    ``G_alpha`` variant when ``p < q``), ``d`` the ``p x q`` Hankel right-hand
    side (``E`` when ``p < q``).
    """

    p: int
    q: int
    c_alpha: np.ndarray
    c_gamma: np.ndarray
    d: np.ndarray
    K: np.ndarray

    @property
    def branch(self) -> str:
        return "p>=q" if self.p >= self.q else "p<q"


def build_structural(composed: ComposedAr) -> StructuralMatrices:
    """Assemble ``C_alpha``/``G_alpha``, ``C_gamma``, ``D``/``E`` and ``K``.

    Both branches reduce to index formulas on ``beta``: the Toeplitz part is
    generated by ``(0, beta_1, ..., beta_{q-1})``, the Hankel right-hand side
    has entries ``beta_{i+j+1}`` and ``C_gamma`` has ``gamma_{i+j+1}`` above
    the anti-diagonal.
    """
    p, q = composed.p, composed.q
    if p < 1 or q < 1:
        raise InvalidInputError(f"build_structural needs p >= 1 and q >= 1, got p={p}, q={q}")
    beta, gamma = composed.beta, composed.gamma
    i = np.arange(q)[:, None]
    j = np.arange(q)[None, :]
    lag = i - j
    c_alpha = np.where(lag > 0, beta[np.clip(lag - 1, 0, None)], 0.0)
    s = i + j
    c_gamma = np.where(s < q, gamma[np.clip(s, 0, q - 1)], 0.0)
    d = beta[np.arange(p)[:, None] + np.arange(q)[None, :]]
    K = np.kron(np.eye(q) - c_alpha, np.eye(p)) - np.kron(c_gamma, exchange(p))
    return StructuralMatrices(p=p, q=q, c_alpha=c_alpha, c_gamma=c_gamma, d=d, K=K)


def _vec(M: np.ndarray) -> np.ndarray:
    return M.reshape(-1, order="F")


def _unvec(v: np.ndarray, p: int, q: int) -> np.ndarray:
    return v.reshape((p, q), order="F")


def limiting_T_sylvester(structural: StructuralMatrices) -> np.ndarray:
    """``T*`` from ``theta`` and ``rho`` alone: ``unvec(K^{-1} vec(D))``."""
    _check_cond(structural.K, "K")
    return _unvec(linalg.solve(structural.K, _vec(structural.d)), structural.p, structural.q)


def limiting_T_covariance(cov: CovarianceStructure, p: int, q: int) -> np.ndarray:
    """``T* = Delta_p^{-1} Pi_pq``."""
    return linalg.solve(cov.delta(p), cov.pi_pq(p, q), assume_a="pos")


def limiting_T(structural: StructuralMatrices, cov: CovarianceStructure):
    """Limit of ``T_n`` and of the least-squares estimator.

    Both routes are computed and must agree; the covariance route is returned.

    Returns
    -------
    (T_star, theta_star)
    """
    p, q = structural.p, structural.q
    t_syl = limiting_T_sylvester(structural)
    t_cov = limiting_T_covariance(cov, p, q)
    scale = max(1.0, np.max(np.abs(t_cov)))
    if np.max(np.abs(t_syl - t_cov)) > ROUTE_RTOL * scale:
        raise SerialCorrError(
            "Sylvester and covariance routes to T* disagree "
            f"(max abs diff {np.max(np.abs(t_syl - t_cov)):.3g})"
        )
    return t_cov, t_cov[:, 0].copy()


def sigma_T(structural: StructuralMatrices, cov: CovarianceStructure):
    """Asymptotic covariance of ``sqrt(n) vec(T_n)`` and its top-left ``p x p``
    block (covariance of the least-squares estimator).

    Returns
    -------
    (Sigma_T, Sigma_theta)
    """
    p, q = structural.p, structural.q
    _check_cond(structural.K, "K")
    delta_inv = linalg.inv(cov.delta(p))
    middle = np.kron(np.eye(q), delta_inv)
    inner = middle @ cov.gamma_pq(p, q) @ middle
    k_inv = linalg.inv(structural.K)
    sig = cov.sigma2 * k_inv @ inner @ k_inv.T
    sig = 0.5 * (sig + sig.T)
    return sig, sig[:p, :p].copy()


def limiting_rho(theta_star, cov: CovarianceStructure, q: int) -> np.ndarray:
    """Limit of the residual serial-correlation estimator of order ``q``.

    This is the population least-squares regression of the residual
    ``Y_t - theta*' Phi_{t-1}`` on its ``q`` lags, written through the
    autocovariances of ``Y``.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    p = theta_star.size
    L = np.empty((q, q))
    Dq = np.empty((q, q))
    for i in range(q):
        for j in range(q):
            L[i, j] = theta_star @ cov.lambda_vec(1 + i - j, p)
            Dq[i, j] = theta_star @ cov.gamma_block(i - j, p) @ theta_star
    Eq = np.array(
        [
            theta_star
            @ (cov.lambda_vec(h + 1, p) + cov.lambda_vec(1 - h, p) - cov.gamma_block(h, p) @ theta_star)
            for h in range(1, q + 1)
        ]
    )
    M = cov.delta(q) - (L + L.T) + Dq
    _check_cond(M, "residual-correlation normal matrix")
    return linalg.solve(M, cov.lambda_vec(1, q) - Eq)


def lambda_recursion(theta, q: int) -> np.ndarray:
    """``lambda_0..lambda_q``: MA(infinity) weights of ``1 / A(z)`` up to order q."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p = theta.size
    lam = np.zeros(q + 1)
    lam[0] = 1.0
    for k in range(1, q + 1):
        m = min(k, p)
        lam[k] = theta[:m] @ lam[k - 1 :: -1][:m]
    return lam


def upsilon(theta, q: int, sigma2: float) -> np.ndarray:
    """``q x p`` lower-trapezoidal matrix ``sigma2 * lambda_{i-j}`` (``i >= j``).

    The limit of ``P_n / n`` under the null.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p = theta.size
    lam = lambda_recursion(theta, q)
    lag = np.arange(q)[:, None] - np.arange(p)[None, :]
    return sigma2 * np.where(lag >= 0, lam[np.clip(lag, 0, q)], 0.0)


def sigma_rho0(theta, q: int, cov_null: Optional[CovarianceStructure] = None, sigma2: float = 1.0) -> np.ndarray:
    """Null asymptotic covariance ``I_q - U Delta_p^{-1} U' / sigma2`` of
    ``sqrt(n) rho_hat``, with ``U = upsilon(theta, q, sigma2)``.

    ``cov_null`` are the autocovariances of the AR(p) process with
    uncorrelated noise; they are computed from ``theta`` when omitted.
    The result does not depend on ``sigma2``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p = theta.size
    if cov_null is None:
        cov_null = yule_walker(theta, sigma2)
    s2 = cov_null.sigma2
    U = upsilon(theta, q, s2)
    out = np.eye(q) - U @ linalg.solve(cov_null.delta(p), U.T, assume_a="pos") / s2
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class LimitTheory:
    """Every closed-form asymptotic object for one model.

    ``T_star``/``Sigma_T`` use ``q_struct = max(q, model.q)`` columns, with
    ``rho`` zero-padded; ``rho_star``/``Sigma_rho0``/``upsilon`` use the
    tested order ``q``.
    """

    model: ArArModel
    q: int
    covariances: CovarianceStructure
    structural: StructuralMatrices
    T_star: np.ndarray
    theta_star: np.ndarray
    Sigma_T: np.ndarray
    Sigma_theta: np.ndarray
    rho_star: np.ndarray
    Sigma_rho0: np.ndarray
    upsilon: np.ndarray
    lambda_seq: np.ndarray

    def to_dict(self) -> dict:
        return {
            "schema": "serialcorr.limits/1",
            "p": self.model.p,
            "q": self.q,
            "theta_star": self.theta_star.tolist(),
            "T_star": self.T_star.tolist(),
            "Sigma_theta": self.Sigma_theta.tolist(),
            "Sigma_T": self.Sigma_T.tolist(),
            "rho_star": self.rho_star.tolist(),
            "Sigma_rho0": self.Sigma_rho0.tolist(),
            "lambda": self.lambda_seq.tolist(),
        }


def compute_limits(model: ArArModel, q: Optional[int] = None) -> LimitTheory:
    """Evaluate the full asymptotic picture for ``model`` at tested order ``q``
    (default: the noise order, or 1 for uncorrelated noise)."""
    if q is None:
        q = max(model.q, 1)
    if q < 1:
        raise InvalidInputError(f"q: must be >= 1, got {q}")
    q_struct = max(q, model.q)
    rho = np.zeros(q_struct)
    rho[: model.q] = model.rho
    composed = compose_beta(model.theta, rho)
    cov = yule_walker(composed, model.sigma2)
    structural = build_structural(composed)
    T_star, theta_star = limiting_T(structural, cov)
    Sig_T, Sig_theta = sigma_T(structural, cov)
    rho_star = limiting_rho(theta_star, cov, q)
    cov_null = yule_walker(model.theta, model.sigma2)
    return LimitTheory(
        model=model,
        q=q,
        covariances=cov,
        structural=structural,
        T_star=T_star,
        theta_star=theta_star,
        Sigma_T=Sig_T,
        Sigma_theta=Sig_theta,
        rho_star=rho_star,
        Sigma_rho0=sigma_rho0(model.theta, q, cov_null),
        upsilon=upsilon(model.theta, q, model.sigma2),
        lambda_seq=lambda_recursion(model.theta, q),
    )
