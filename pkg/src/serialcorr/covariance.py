"""Stationary autocovariances of the composed AR(p+q) process and the
Toeplitz/Hankel blocks assembled from them."""
from __future__ import annotations

import threading
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import DegenerateModelError, InvalidInputError
from .process import ArArModel, ComposedAr

#: Yule-Walker systems worse conditioned than this are treated as unit-root.
COND_MAX = 1e12


def build_B(beta) -> np.ndarray:
    """Matrix of the Yule-Walker system ``B (l_0..l_m)' = (sigma2, 0..0)'``.

    Row ``h`` encodes ``l_h - sum_k beta_k l_{|h-k|}``; a lag ``k`` lands in
    column ``h - k`` when ``k <= h`` and is folded onto column ``k - h``
    otherwise.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float)).ravel()
    m = beta.size
    B = np.eye(m + 1)
    for h in range(m + 1):
        for k in range(1, m + 1):
            B[h, abs(h - k)] -= beta[k - 1]
    return B


class CovarianceStructure:
    """Autocovariances ``l_0, l_1, ...`` of a causal AR process.

    Lags beyond ``p + q`` are produced on demand from the linear recursion
    and memoised; extension is guarded by a lock so one instance can be
    shared between threads.
    """

    def __init__(self, beta, sigma2: float, p: int, q: int, ell: np.ndarray):
        self.beta = np.asarray(beta, dtype=float)
        self.sigma2 = float(sigma2)
        self.p = int(p)
        self.q = int(q)
        self._ell = np.asarray(ell, dtype=float)
        self._lock = threading.Lock()

    def __repr__(self):
        return f"CovarianceStructure(p={self.p}, q={self.q}, ell={self.ell})"

    @property
    def ell(self) -> np.ndarray:
        """``l_0 .. l_{p+q}``."""
        return self._ell[: self.beta.size + 1].copy()

    def extend(self, max_lag: int) -> np.ndarray:
        """Return ``l_0 .. l_max_lag``, extending the memo if needed."""
        if max_lag >= self._ell.size:
            with self._lock:
                ell = list(self._ell)
                m = self.beta.size
                while len(ell) <= max_lag:
                    h = len(ell)
                    ell.append(sum(self.beta[k - 1] * ell[abs(h - k)] for k in range(1, m + 1)))
                self._ell = np.asarray(ell)
        return self._ell[: max_lag + 1]

    def lag(self, h: int) -> float:
        h = abs(int(h))
        return float(self.extend(h)[h])

    def _lags(self, idx) -> np.ndarray:
        idx = np.abs(np.asarray(idx, dtype=int))
        ell = self.extend(int(idx.max()) if idx.size else 0)
        return ell[idx]

    def delta(self, h: int) -> np.ndarray:
        """Toeplitz covariance matrix of order ``h``."""
        if h < 1:
            raise InvalidInputError(f"h: order must be >= 1, got {h}")
        i = np.arange(h)
        return self._lags(i[:, None] - i[None, :])

    def gamma_block(self, d: int, p: Optional[int] = None) -> np.ndarray:
        """``p x p`` block with entries ``l_{d + r - c}``; ``gamma_block(0)`` is
        ``delta(p)`` and ``gamma_block(-d) == gamma_block(d).T``."""
        p = self.p if p is None else p
        i = np.arange(p)
        return self._lags(d + i[:, None] - i[None, :])

    def gamma_pq(self, p: Optional[int] = None, q: Optional[int] = None) -> np.ndarray:
        """Symmetric ``pq x pq`` matrix whose block ``(i, j)`` is ``gamma_block(i - j)``."""
        p = self.p if p is None else p
        q = self.q if q is None else q
        out = np.empty((p * q, p * q))
        for i in range(q):
            for j in range(q):
                out[i * p : (i + 1) * p, j * p : (j + 1) * p] = self.gamma_block(i - j, p)
        return out

    def pi_pq(self, p: Optional[int] = None, q: Optional[int] = None) -> np.ndarray:
        """``p x q`` Hankel matrix with entries ``l_{i + j + 1}``."""
        p = self.p if p is None else p
        q = self.q if q is None else q
        return self._lags(np.arange(p)[:, None] + np.arange(q)[None, :] + 1)

    def lambda_vec(self, h: int, k: int) -> np.ndarray:
        """``(l_h, l_{h+1}, ..., l_{h+k-1})`` with ``l_{-h} = l_h``."""
        return self._lags(h + np.arange(k))


def yule_walker(beta, sigma2: float, p: Optional[int] = None, q: int = 0) -> CovarianceStructure:
    """Solve the Yule-Walker system for ``l_0 .. l_{p+q}``.

    ``beta`` may be a coefficient vector or a :class:`ComposedAr`; in the
    latter case ``p`` and ``q`` are taken from it.
    """
    if isinstance(beta, ComposedAr):
        p, q, beta = beta.p, beta.q, beta.beta
    beta = np.atleast_1d(np.asarray(beta, dtype=float)).ravel()
    if p is None:
        p, q = beta.size, 0
    if not sigma2 > 0:
        raise InvalidInputError(f"sigma2: must be > 0, got {sigma2}")
    B = build_B(beta)
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise DegenerateModelError(
            f"Yule-Walker matrix is numerically singular (condition number {cond:.3g})"
        )
    rhs = np.zeros(beta.size + 1)
    rhs[0] = sigma2
    ell = linalg.solve(B, rhs)
    if not ell[0] > 0:
        raise DegenerateModelError(f"non-positive variance l_0 = {ell[0]:.6g}")
    return CovarianceStructure(beta, sigma2, p, q, ell)


def model_covariances(model: ArArModel) -> CovarianceStructure:
    return yule_walker(model.composed(), model.sigma2)
