"""Least-squares estimators on an observed path and the residual
serial-correlation test statistic.

Every lag vector is zero-padded: ``Y_t = 0`` and ``Z_hat_t = 0`` for ``t <= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import DegenerateSampleError, InvalidInputError, SingularDesignError
from ._lags import lag_matrix
from .hypothesis_tests import box_pierce, breusch_godfrey, canonical_method, chi2_quantile, chi2_sf, ljung_box

#: Default relative ridge: S = ridge * mean(y^2) * I.
DEFAULT_RIDGE = 1e-8
_COND_MAX = 1e12


@dataclass(frozen=True)
class FitConfig:
    p: int
    q: int
    ridge_s: float = DEFAULT_RIDGE
    ridge_j: float = DEFAULT_RIDGE
    alpha_level: float = 0.05

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise InvalidInputError(f"p: must be an integer >= 1, got {self.p}")
        if int(self.q) != self.q or self.q < 1:
            raise InvalidInputError(f"q: must be an integer >= 1, got {self.q}")
        for name in ("ridge_s", "ridge_j"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise InvalidInputError(f"{name}: must be finite and >= 0, got {v}")
        if not 0 < self.alpha_level < 1:
            raise InvalidInputError(f"alpha: must lie in (0, 1), got {self.alpha_level}")


@dataclass(frozen=True)
class FitResult:
    theta_hat: np.ndarray
    residuals: np.ndarray
    rho_hat: np.ndarray
    sigma_hat2: float
    p_hat: np.ndarray
    t_stat: float
    p_value: float
    reject: bool
    n: int
    config: Optional[FitConfig] = None

    def to_dict(self) -> dict:
        return {
            "schema": "serialcorr.test/1",
            "method": "residual_ar",
            "n": self.n,
            "p": self.theta_hat.size,
            "q": self.rho_hat.size,
            "theta_hat": self.theta_hat.tolist(),
            "rho_hat": self.rho_hat.tolist(),
            "sigma2": self.sigma_hat2,
            "statistic": self.t_stat,
            "dof": self.rho_hat.size,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": None if self.config is None else self.config.alpha_level,
        }


def _as_series(y, name: str = "y") -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise InvalidInputError(f"{name}: series contains non-finite values")
    return y


def _ridge_solve(A: np.ndarray, b: np.ndarray, ridged: bool, what: str) -> np.ndarray:
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > _COND_MAX:
        if not ridged:
            raise SingularDesignError(f"{what} is singular; pass a positive ridge")
        raise DegenerateSampleError(f"{what} is numerically singular (condition {cond:.3g})")
    return linalg.solve(A, b, assume_a="pos")


def _ridge_matrix(x: np.ndarray, k: int, ridge: float) -> np.ndarray:
    return ridge * float(np.mean(x * x)) * np.eye(k)


def fit_theta(y, p: int, ridge_s: float = DEFAULT_RIDGE) -> np.ndarray:
    """Least-squares AR(p) coefficients ``S_{n-1}^{-1} sum_t Phi_{t-1} Y_t``.

    The regularising matrix is ``ridge_s * mean(y^2) * I_p``.
    """
    y = _as_series(y)
    if y.size <= p:
        raise DegenerateSampleError(f"need n > p, got n={y.size}, p={p}")
    X = lag_matrix(y, p)
    S = X.T @ X + _ridge_matrix(y, p, ridge_s)
    return _ridge_solve(S, X.T @ y, ridge_s > 0, "S_{n-1}")


def residuals(y, theta_hat, p: Optional[int] = None) -> np.ndarray:
    """``Z_hat_t = Y_t - theta_hat' Phi_{t-1}`` for ``t = 1..n``."""
    y = _as_series(y)
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    p = theta_hat.size if p is None else p
    return y - lag_matrix(y, p) @ theta_hat


def fit_rho(z_hat, q: int, ridge_j: float = DEFAULT_RIDGE) -> np.ndarray:
    """Least-squares AR(q) coefficients of the residuals,
    ``J_{n-1}^{-1} sum_t Psi_{t-1} Z_hat_t``."""
    z = _as_series(z_hat, "z_hat")
    if z.size <= q:
        raise DegenerateSampleError(f"need n > q, got n={z.size}, q={q}")
    W = lag_matrix(z, q)
    J = W.T @ W + _ridge_matrix(z, q, ridge_j)
    return _ridge_solve(J, W.T @ z, ridge_j > 0, "J_{n-1}")


def test_statistic(y, z_hat, rho_hat, p: int, ridge_s: float = DEFAULT_RIDGE, alpha: float = 0.05):
    """Studentised residual-correlation statistic.

    ``T = n rho' (I_q - P S_n^{-1} P' / (n sigma2))^{-1} rho`` where
    ``P = sum_t Psi_t Phi_t'`` (lags starting at 0) and ``S_n`` includes
    ``Phi_n``. Under no serial correlation ``T`` is asymptotically
    chi-square with ``q`` degrees of freedom; the absolute value is used
    for the p-value and the decision since ``T`` may be negative away from
    the null.

    Returns
    -------
    (t_stat, p_value, reject, sigma_hat2, p_hat)
        ``p_hat`` is ``P / n`` (``q x p``).
    """
    y = _as_series(y)
    z = _as_series(z_hat, "z_hat")
    rho_hat = np.atleast_1d(np.asarray(rho_hat, dtype=float))
    q = rho_hat.size
    n = y.size
    sigma_hat2 = float(np.mean(z * z))
    if not sigma_hat2 > 0:
        raise DegenerateSampleError("residual variance is zero; test is inconclusive")
    Yc = lag_matrix(y, p, first_lag=0)
    Zc = lag_matrix(z, q, first_lag=0)
    S_n = Yc.T @ Yc + _ridge_matrix(y, p, ridge_s)
    P = Zc.T @ Yc
    inner = np.eye(q) - P @ linalg.solve(S_n, P.T, assume_a="pos") / (n * sigma_hat2)
    cond = np.linalg.cond(inner)
    if not np.isfinite(cond) or cond > _COND_MAX:
        raise DegenerateSampleError(
            f"studentising matrix is singular (condition {cond:.3g}); test is inconclusive"
        )
    t_stat = float(n * rho_hat @ linalg.solve(inner, rho_hat))
    p_value = float(chi2_sf(abs(t_stat), q))
    reject = bool(abs(t_stat) > chi2_quantile(1.0 - alpha, q))
    return t_stat, p_value, reject, sigma_hat2, P / n


def fit(y, p: int, q: int, alpha: float = 0.05, ridge_s: float = DEFAULT_RIDGE, ridge_j: float = DEFAULT_RIDGE) -> FitResult:
    """Fit AR(p), estimate residual correlation of order q and test it."""
    config = FitConfig(p=p, q=q, ridge_s=ridge_s, ridge_j=ridge_j, alpha_level=alpha)
    y = _as_series(y)
    n = y.size
    if n <= p + q:
        raise DegenerateSampleError(f"need n > p + q, got n={n}, p={p}, q={q}")
    if np.ptp(y) == 0:
        raise DegenerateSampleError("series is constant")
    theta_hat = fit_theta(y, p, ridge_s)
    z = residuals(y, theta_hat, p)
    rho_hat = fit_rho(z, q, ridge_j)
    t_stat, p_value, reject, s2, p_hat = test_statistic(y, z, rho_hat, p, ridge_s, alpha)
    return FitResult(
        theta_hat=theta_hat,
        residuals=z,
        rho_hat=rho_hat,
        sigma_hat2=s2,
        p_hat=p_hat,
        t_stat=t_stat,
        p_value=p_value,
        reject=reject,
        n=n,
        config=config,
    )


def recursive_theta(y, p: int, ridge_s: float = DEFAULT_RIDGE) -> np.ndarray:
    """Least-squares estimates ``theta_hat_t`` for every ``t = 1..n``.

    Row ``t-1`` solves the normal equations built from ``Y_1..Y_t`` only;
    the ridge uses the full-sample scale so the sequence is a single
    regularised recursion.
    """
    y = _as_series(y)
    X = lag_matrix(y, p)
    outer = np.cumsum(X[:, :, None] * X[:, None, :], axis=0)
    outer += _ridge_matrix(y, p, ridge_s)
    rhs = np.cumsum(X * y[:, None], axis=0)
    return np.linalg.solve(outer, rhs[:, :, None])[:, :, 0]


def run_test(method: str, y, p: int, q: int, alpha: float = 0.05, ridge: float = DEFAULT_RIDGE,
             lb_model_df: int = 0) -> dict:
    """Fit AR(p) to ``y`` and run one serial-correlation test of order ``q``.

    Returns a JSON-ready report shared by all methods; ``rho_hat`` is only
    filled for the proposed test.
    """
    method = canonical_method(method)
    if method == "residual_ar":
        return fit(y, p, q, alpha=alpha, ridge_s=ridge, ridge_j=ridge).to_dict()
    FitConfig(p=p, q=q, ridge_s=ridge, ridge_j=ridge, alpha_level=alpha)
    y = _as_series(y)
    if np.ptp(y) == 0:
        raise DegenerateSampleError("series is constant")
    theta_hat = fit_theta(y, p, ridge)
    z = residuals(y, theta_hat, p)
    if method == "ljung_box":
        rep = ljung_box(z, q, alpha, lb_model_df)
    elif method == "box_pierce":
        rep = box_pierce(z, q, alpha, lb_model_df)
    else:
        rep = breusch_godfrey(y, z, p, q, alpha)
    return {
        "schema": "serialcorr.test/1",
        "method": method,
        "n": y.size,
        "p": p,
        "q": q,
        "theta_hat": theta_hat.tolist(),
        "rho_hat": None,
        "sigma2": float(np.mean(z * z)),
        "statistic": rep.statistic,
        "dof": rep.dof,
        "p_value": rep.p_value,
        "reject": rep.reject,
        "alpha": alpha,
    }
