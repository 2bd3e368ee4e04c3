"""Generators for conditionally heavy-tailed bivariate time series.

Four designs share the tail-index map ``gamma(x) = 3x(x-1) + 1`` by
default:

* conditional Frechet, ``Y = (-log U)**(-gamma(X))``, AR(1) drivers
* conditional Pareto, ``Y = U**(-gamma(X))``, AR(1) drivers
* CSGMS, a max over Poisson points modulated by log-Gaussian factors
  with squared-exponential covariance in time
* conditional Frechet driven by ARFIMA(1, d, 1) long-memory processes

Seeding
-------
Every stream is derived from the 64-bit seed with
``SeedSequence(seed, spawn_key=(stream,))``: stream 0 drives the
covariate, stream 1 the uniform driver, stream 2 the Poisson arrivals and
``(3, i)`` the i-th Gaussian path.  Changing the number of CSGMS points
therefore never perturbs the covariate draw.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve, lfilter
from scipy.special import ndtr

from .diagnostics import rank_to_uniform
from .errors import CholeskyFailure
from .series import PairedSeries

__all__ = [
    "Model",
    "SimSpec",
    "ConstantGamma",
    "gamma_default",
    "sim_ar1_uniform",
    "sim_cond_frechet",
    "sim_cond_pareto",
    "fracdiff_psi",
    "sim_arfima",
    "se_gaussian_paths",
    "sim_csgms",
    "build_sim",
    "stream",
]

STREAM_X = 0
STREAM_U = 1
STREAM_ARRIVALS = 2
STREAM_PATHS = 3

# above this length Gaussian paths use circulant embedding instead of Cholesky
CHOLESKY_MAX = 2000
JITTER = 1e-10

_MASK64 = (1 << 64) - 1
_U_LO = np.nextafter(0.0, 1.0)
_U_HI = np.nextafter(1.0, 0.0)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for sub-stream ``key`` of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed) & _MASK64, spawn_key=key))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.default_rng(int(seed) & _MASK64)
    return np.random.default_rng(seed)


def gamma_default(x):
    """Tail-index map ``3x(x-1) + 1`` (minimum 0.25 at ``x = 1/2``)."""
    return 3.0 * x * (x - 1.0) + 1.0


@dataclass(frozen=True)
class ConstantGamma:
    """Constant tail-index map (picklable, unlike a lambda)."""

    value: float

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)


def sim_ar1_uniform(n: int, phi: float, seed) -> np.ndarray:
    """Stationary Gaussian AR(1) mapped to uniform marginals.

    ``Z_t = phi Z_{t-1} + eps_t`` started from its stationary law, then
    ``U_t = Phi(Z_t sqrt(1 - phi**2))``.  Values are clipped into the open
    unit interval to guard against ``Phi`` rounding to 0 or 1.
    """
    if not abs(phi) < 1:
        raise ValueError(f"|phi| must be < 1, got {phi}")
    rng = _rng(seed)
    eps = rng.standard_normal(n)
    scale = math.sqrt(1.0 - phi * phi)
    eps[0] /= scale
    z = lfilter([1.0], [1.0, -phi], eps)
    return np.clip(ndtr(z * scale), _U_LO, _U_HI)


def _check_drivers(x, u):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != u.shape:
        raise ValueError("X and U must have the same length")
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("U must lie in (0, 1)")
    return x, u


def sim_cond_frechet(x, u, gamma: Callable = gamma_default) -> PairedSeries:
    """``Y_j = (-log U_j)**(-gamma(X_j))``: Frechet with index ``1/gamma(X_j)``."""
    x, u = _check_drivers(x, u)
    return PairedSeries(x, (-np.log(u)) ** (-np.asarray(gamma(x), dtype=float)))


def sim_cond_pareto(x, u, gamma: Callable = gamma_default) -> PairedSeries:
    """``Y_j = U_j**(-gamma(X_j))``: exact Pareto tail, no second-order term."""
    x, u = _check_drivers(x, u)
    return PairedSeries(x, u ** (-np.asarray(gamma(x), dtype=float)))


def fracdiff_psi(d: float, m: int) -> np.ndarray:
    """First ``m`` MA(inf) coefficients of ``(1 - B)**(-d)``."""
    psi = np.empty(m)
    psi[0] = 1.0
    for j in range(1, m):
        psi[j] = psi[j - 1] * (j - 1 + d) / j
    return psi


def sim_arfima(n: int, ar: float = 0.5, ma: float = 0.2, d: float = 0.1, seed=None,
               burn_in: int | None = None) -> np.ndarray:
    """ARFIMA(1, d, 1): ``(1 - ar B)(1 - B)**d X_t = (1 + ma B) eps_t``.

    Fractional noise comes from the MA(inf) expansion of ``(1-B)**(-d)``
    truncated at the full simulated length, applied to Gaussian
    innovations; the ARMA(1, 1) filter is applied after.  The first
    ``burn_in`` values (default ``max(10 n, 2000)``) are discarded.
    """
    if not abs(ar) < 1:
        raise ValueError(f"|ar| must be < 1, got {ar}")
    if not -0.5 < d < 0.5:
        raise ValueError(f"d must lie in (-0.5, 0.5), got {d}")
    if burn_in is None:
        burn_in = max(10 * n, 2000)
    total = n + burn_in
    rng = _rng(seed)
    eps = rng.standard_normal(total)
    if d == 0:
        w = eps
    else:
        w = fftconvolve(eps, fracdiff_psi(d, total))[:total]
    x = lfilter([1.0, ma], [1.0, -ar], w)
    return x[burn_in:]


def _se_cov(lags: np.ndarray, length_scale: float, sigma: float) -> np.ndarray:
    return sigma * sigma * np.exp(-0.5 * (lags / length_scale) ** 2)


def se_gaussian_paths(n: int, length_scale: float, sigma: float, rngs):
    """Yield centred stationary Gaussian paths with squared-exponential covariance.

    ``C(j, j') = sigma**2 exp(-(j - j')**2 / (2 l**2))`` on indices
    ``0..n-1`` with ``JITTER * sigma**2`` added to the diagonal.  One path
    is drawn from each generator in ``rngs``.  Short paths use a Cholesky
    factor; longer ones use the exact circulant embedding of the same
    covariance.
    """
    if not length_scale > 0:
        raise ValueError("length_scale must be positive")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    jitter = JITTER * sigma * sigma
    if n <= CHOLESKY_MAX:
        lags = np.arange(n, dtype=float)
        cov = _se_cov(np.abs(lags[:, None] - lags[None, :]), length_scale, sigma)
        cov[np.diag_indices(n)] += jitter
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise CholeskyFailure(f"covariance with l={length_scale} not positive definite") from exc
        for rng in rngs:
            yield chol @ rng.standard_normal(n)
        return
    m = 2 * (n - 1)
    row = _se_cov(np.minimum(np.arange(m), m - np.arange(m)).astype(float), length_scale, sigma)
    row[0] += jitter
    lam = np.fft.fft(row).real
    if lam.min() < -1e-8 * lam.max():
        raise CholeskyFailure(f"circulant embedding with l={length_scale} is not nonnegative definite")
    amp = np.sqrt(np.clip(lam, 0.0, None) / m)
    for rng in rngs:
        xi = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        yield np.fft.fft(amp * xi).real[:n]


def sim_csgms(n: int, x, gamma: Callable = gamma_default, length_scale: float = 0.5,
              sigma: float = 0.25, M: int = 100, seed: int = 0) -> PairedSeries:
    """Conditional subordinated Gaussian max-stable series, truncated at ``M`` points.

    ``Y_j = max_{i <= M} Gamma_{ij}**(-gamma(X_j)) exp(W_j^(i) - sigma**2 / (2 gamma(X_j)))``
    where ``Gamma_{ij}`` are arrival times of a unit-rate Poisson process
    drawn independently for each ``j`` and ``W^(i)`` are i.i.d. stationary
    Gaussian paths.  The lognormal factor has unit ``1/gamma`` moment, so
    the untruncated marginal given ``X_j = x`` is Frechet with index
    ``1/gamma(x)``.  Truncation error grows with ``sigma / gamma``; keep
    ``sigma`` near ``min gamma`` for ``M = 100``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    x = np.asarray(x, dtype=float).ravel()
    if x.size != n:
        raise ValueError("X must have length n")
    g = np.asarray(gamma(x), dtype=float)
    inv_g = 1.0 / g
    arrivals = stream(seed, STREAM_ARRIVALS)
    paths = se_gaussian_paths(n, length_scale, sigma, (stream(seed, STREAM_PATHS, i) for i in range(M)))
    shift = 0.5 * sigma * sigma * inv_g
    gam = np.zeros(n)
    logy = np.full(n, -np.inf)
    for w in paths:
        gam += arrivals.standard_exponential(n)
        np.maximum(logy, -g * np.log(gam) + w - shift, out=logy)
    return PairedSeries(x, np.exp(logy))


class Model(str, enum.Enum):
    COND_FRECHET = "frechet"
    COND_PARETO = "pareto"
    CSGMS = "csgms"
    COND_FRECHET_ARFIMA = "frechet-arfima"


_PRESETS = {
    "low": dict(phi_x=0.1, phi_u=0.1, length_scale=0.5, d=0.1),
    "high": dict(phi_x=0.9, phi_u=0.9, length_scale=2.0, d=0.45),
}


@dataclass(frozen=True)
class SimSpec:
    """Declarative description of one simulation design plus its seed."""

    model: Model
    n: int = 1000
    seed: int = 0
    phi_x: float = 0.1
    phi_u: float = 0.1
    length_scale: float = 0.5
    sigma: float = 0.25
    M: int = 100
    d: float = 0.1
    ar: float = 0.5
    ma: float = 0.2
    gamma: Callable = field(default=gamma_default, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (abs(self.phi_x) < 1 and abs(self.phi_u) < 1):
            raise ValueError("AR coefficients must satisfy |phi| < 1")
        if not -0.5 < self.d < 0.5:
            raise ValueError("d must lie in (-0.5, 0.5)")
        if not abs(self.ar) < 1:
            raise ValueError("|ar| must be < 1")
        if not (self.length_scale > 0 and self.sigma > 0):
            raise ValueError("length_scale and sigma must be positive")
        if self.M < 1:
            raise ValueError("M must be >= 1")

    @classmethod
    def preset(cls, model, dependence: str = "low", **kw) -> "SimSpec":
        """Low or high dependence preset, overridable by keyword."""
        return cls(model=Model(model), **{**_PRESETS[dependence], **kw})

    def with_seed(self, seed: int) -> "SimSpec":
        return replace(self, seed=int(seed))

    def describe(self) -> dict:
        out = {
            "model": self.model.value, "n": self.n, "seed": self.seed,
            "phi_x": self.phi_x, "phi_u": self.phi_u, "length_scale": self.length_scale,
            "sigma": self.sigma, "M": self.M, "d": self.d, "ar": self.ar, "ma": self.ma,
        }
        out["gamma"] = getattr(self.gamma, "__name__", repr(self.gamma))
        return out


def build_sim(spec: SimSpec) -> PairedSeries:
    """Draw the series described by ``spec``."""
    n, seed = spec.n, spec.seed
    m = spec.model
    if m is Model.CSGMS:
        x = stream(seed, STREAM_X).uniform(size=n)
        return sim_csgms(n, x, spec.gamma, spec.length_scale, spec.sigma, spec.M, seed)
    if m is Model.COND_FRECHET_ARFIMA:
        x = rank_to_uniform(sim_arfima(n, spec.ar, spec.ma, spec.d, stream(seed, STREAM_X)))
        u = rank_to_uniform(sim_arfima(n, spec.ar, spec.ma, spec.d, stream(seed, STREAM_U)))
        return sim_cond_frechet(x, u, spec.gamma)
    x = sim_ar1_uniform(n, spec.phi_x, stream(seed, STREAM_X))
    u = sim_ar1_uniform(n, spec.phi_u, stream(seed, STREAM_U))
    if m is Model.COND_FRECHET:
        return sim_cond_frechet(x, u, spec.gamma)
    return sim_cond_pareto(x, u, spec.gamma)
