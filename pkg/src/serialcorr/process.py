"""AR(p) process driven by AR(q) noise: model, composition and simulation.

The generating process is

    Y_t = theta_1 Y_{t-1} + ... + theta_p Y_{t-p} + Z_t
    Z_t = rho_1 Z_{t-1}   + ... + rho_q Z_{t-q}   + V_t

with (V_t) i.i.d. white noise. Everything before t = 1 is zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidInputError, NonCausalError

#: Margin required between the smallest root modulus and the unit circle.
TOL_ROOT = 1e-8

NOISE_FAMILIES = ("uniform", "gaussian")

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def _as_coeffs(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float)).ravel()
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: coefficients must be finite, got {arr}")
    return arr


def check_causal(coeffs, tol: float = TOL_ROOT) -> Tuple[bool, float]:
    """Check that ``1 - c_1 z - ... - c_k z^k`` has no root in the closed unit disk.

    Roots are the reciprocals of the companion-matrix eigenvalues, so the
    smallest root modulus is ``1 / max|eig|``.

    Returns
    -------
    (causal, min_modulus)
        ``causal`` is True iff every root modulus exceeds ``1 + tol``.
        ``min_modulus`` is ``inf`` for a constant polynomial.
    """
    c = _as_coeffs(coeffs, "coeffs") if np.size(coeffs) else np.zeros(0)
    # trailing zeros only add roots at infinity
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return True, float("inf")
    c = c[: nz[-1] + 1]
    k = c.size
    companion = np.zeros((k, k))
    companion[0, :] = c
    if k > 1:
        companion[1:, :-1] = np.eye(k - 1)
    spectral_radius = np.max(np.abs(np.linalg.eigvals(companion)))
    min_modulus = float("inf") if spectral_radius == 0 else 1.0 / spectral_radius
    return bool(min_modulus > 1.0 + tol), float(min_modulus)


@dataclass(frozen=True)
class ComposedAr:
    """AR(p+q) representation of the doubly autoregressive process."""

    beta: np.ndarray
    p: int
    q: int

    @property
    def alpha(self) -> np.ndarray:
        return self.beta[: self.p]

    @property
    def gamma(self) -> np.ndarray:
        return self.beta[self.p :]


def compose_beta(theta, rho) -> ComposedAr:
    """Coefficients of the AR(p+q) process obtained by multiplying the two
    characteristic polynomials.

    ``beta_k = rho_k - sum_{j<k} theta_j rho_{k-j} + theta_k`` with
    out-of-range coefficients read as zero.
    """
    theta = _as_coeffs(theta, "theta") if np.size(theta) else np.zeros(0)
    rho = _as_coeffs(rho, "rho") if np.size(rho) else np.zeros(0)
    p, q = theta.size, rho.size
    beta = np.zeros(p + q)
    for k in range(1, p + q + 1):
        b = (rho[k - 1] if k <= q else 0.0) + (theta[k - 1] if k <= p else 0.0)
        for j in range(1, k):
            if j <= p and k - j <= q:
                b -= theta[j - 1] * rho[k - j - 1]
        beta[k - 1] = b
    return ComposedAr(beta=beta, p=p, q=q)


@dataclass(frozen=True)
class NoiseLaw:
    """Distribution of the innovations ``V_t``.

    ``param`` is the half-width ``a`` for ``uniform`` (support ``[-a, a]``)
    and the variance for ``gaussian``.
    """

    family: str = "gaussian"
    param: float = 1.0

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise InvalidInputError(
                f"noise.family: expected one of {NOISE_FAMILIES}, got {self.family!r}"
            )
        if not (np.isfinite(self.param) and self.param > 0):
            raise InvalidInputError(
                f"noise.param: must be finite and > 0 (sigma2 > 0), got {self.param}"
            )

    @classmethod
    def uniform(cls, half_width: float) -> "NoiseLaw":
        return cls("uniform", float(half_width))

    @classmethod
    def gaussian(cls, variance: float) -> "NoiseLaw":
        return cls("gaussian", float(variance))

    @property
    def sigma2(self) -> float:
        if self.family == "uniform":
            return self.param**2 / 3.0
        return self.param

    @property
    def tau4(self) -> float:
        if self.family == "uniform":
            return self.param**4 / 5.0
        return 3.0 * self.param**2

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.family == "uniform":
            return rng.uniform(-self.param, self.param, size=n)
        return rng.normal(0.0, np.sqrt(self.param), size=n)

    def to_dict(self) -> dict:
        key = "half_width" if self.family == "uniform" else "variance"
        return {"family": self.family, key: self.param}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseLaw":
        family = d.get("family", "gaussian")
        key = "half_width" if family == "uniform" else "variance"
        if key not in d:
            raise InvalidInputError(f"noise.{key}: required for family {family!r}")
        return cls(family, float(d[key]))


@dataclass(frozen=True)
class ArArModel:
    """Stable AR(p) process whose driving noise is a stable AR(q) process.

    ``sigma2`` and ``tau4`` (second and fourth moments of the innovations)
    follow from ``noise``. ``tau4`` is kept for reference only; no formula
    here depends on it.
    """

    theta: np.ndarray
    rho: np.ndarray = field(default_factory=lambda: np.zeros(0))
    noise: NoiseLaw = field(default_factory=NoiseLaw)

    def __post_init__(self):
        theta = _as_coeffs(self.theta, "theta")
        rho = _as_coeffs(self.rho, "rho") if np.size(self.rho) else np.zeros(0)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "rho", rho)
        if theta.size == 0:
            raise InvalidInputError("theta: at least one coefficient is required (p >= 1)")
        if theta[-1] == 0.0:
            raise InvalidInputError("theta: last coefficient theta_p must be nonzero")
        for name, c in (("theta", theta), ("rho", rho)):
            ok, mod = check_causal(c)
            if not ok:
                raise NonCausalError(
                    f"{name}: polynomial is not causal (min root modulus {mod:.6g} <= 1)"
                )

    @property
    def p(self) -> int:
        return self.theta.size

    @property
    def q(self) -> int:
        return self.rho.size

    @property
    def sigma2(self) -> float:
        return self.noise.sigma2

    @property
    def tau4(self) -> float:
        return self.noise.tau4

    def composed(self) -> ComposedAr:
        return compose_beta(self.theta, self.rho)

    def null(self) -> "ArArModel":
        """Same model with uncorrelated driving noise."""
        return ArArModel(self.theta, np.zeros(0), self.noise)

    def to_dict(self) -> dict:
        return {
            "schema": "serialcorr.model/1",
            "theta": self.theta.tolist(),
            "rho": self.rho.tolist(),
            "noise": self.noise.to_dict(),
            "sigma2": self.sigma2,
            "tau4": self.tau4,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArArModel":
        if "theta" not in d:
            raise InvalidInputError("theta: required field missing from model spec")
        noise = NoiseLaw.from_dict(d.get("noise", {"family": "gaussian", "variance": 1.0}))
        return cls(np.asarray(d["theta"], dtype=float), np.asarray(d.get("rho", []), dtype=float), noise)


@dataclass(frozen=True)
class SimulatedPath:
    y: np.ndarray
    z: np.ndarray
    v: np.ndarray
    model: ArArModel
    seed: Optional[object] = None

    @property
    def n(self) -> int:
        return self.y.size


def filter_path(theta, rho, v) -> Tuple[np.ndarray, np.ndarray]:
    """Run the two-level recursion on innovations ``v`` from zero initial values."""
    theta = np.asarray(theta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    z = lfilter([1.0], np.r_[1.0, -rho], v) if rho.size else np.array(v, dtype=float)
    y = lfilter([1.0], np.r_[1.0, -theta], z)
    return y, z


def simulate(
    model: ArArModel,
    n: int,
    seed: SeedLike = None,
    innovations: Optional[Sequence[float]] = None,
) -> SimulatedPath:
    """Simulate ``Y_1..Y_n`` with zero initial values.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``. Passing
    ``innovations`` bypasses the noise law and uses the given ``V_t``.
    """
    if int(n) != n or n < 1:
        raise InvalidInputError(f"n: must be a positive integer, got {n}")
    n = int(n)
    if innovations is not None:
        v = _as_coeffs(innovations, "innovations")
        if v.size != n:
            raise InvalidInputError(f"innovations: expected length {n}, got {v.size}")
    else:
        v = model.noise.draw(np.random.default_rng(seed), n)
    y, z = filter_path(model.theta, model.rho, v)
    return SimulatedPath(y=y, z=z, v=v, model=model, seed=seed)
