"""Exploratory tools for a covariate / return pair before conditional fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateSeries, EmptySide, NonPositiveResponse
from .series import PairedSeries

__all__ = ["QQData", "rank_to_uniform", "split_signed", "pareto_qq", "acf", "pacf", "acf_pacf"]


def rank_to_uniform(x) -> np.ndarray:
    """Map a sample to ``rank / (n + 1)``, averaging ranks over ties."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1:
        raise ValueError("need at least one value")
    return rankdata(x, method="average") / (x.size + 1.0)


def split_signed(x, r) -> tuple[PairedSeries, PairedSeries]:
    """Split returns into a positive side and a sign-flipped negative side.

    Zero returns are dropped.

    Returns
    -------
    (positive, negative) : tuple of PairedSeries
    """
    x = np.asarray(x, dtype=float).ravel()
    r = np.asarray(r, dtype=float).ravel()
    if x.size != r.size:
        raise ValueError(f"length mismatch ({x.size} vs {r.size})")
    pos, neg = r > 0, r < 0
    for name, mask in (("positive", pos), ("negative", neg)):
        if mask.sum() < 2:
            raise EmptySide(f"{name} side has {int(mask.sum())} observation(s), need 2")
    return PairedSeries(x[pos], r[pos]), PairedSeries(x[neg], -r[neg])


@dataclass(frozen=True)
class QQData:
    theoretical: np.ndarray
    empirical: np.ndarray
    slope_hint: float


def pareto_qq(y, m: int) -> QQData:
    """Pareto quantile plot of the top ``m`` log-excesses.

    The empirical coordinates are ``log Y_(n-m+i) - log Y_(n-m)`` for
    ``i = 1..m`` against the exponential quantiles ``-log(1 - i/(m+1))``.
    ``slope_hint`` is the least-squares slope through the origin, a
    rough tail-index estimate.  Needs ``2 <= m < n`` since the threshold
    is the ``(m+1)``-th largest observation.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if not 2 <= m < n:
        raise ValueError(f"m must satisfy 2 <= m < n={n}, got {m}")
    ys = np.sort(y)
    used = ys[n - m - 1:]
    if used[0] <= 0:
        raise NonPositiveResponse("Pareto QQ needs strictly positive upper order statistics")
    logs = np.log(used)
    emp = logs[1:] - logs[0]
    i = np.arange(1, m + 1)
    theo = -np.log1p(-i / (m + 1.0))
    slope = float(np.dot(theo, emp) / np.dot(theo, theo))
    return QQData(theoretical=theo, empirical=emp, slope_hint=slope)


def acf(z, max_lag: int) -> np.ndarray:
    """Sample autocorrelation with the biased ``1/n`` autocovariance."""
    z = np.asarray(z, dtype=float).ravel()
    n = z.size
    if not 0 <= max_lag < n / 2:
        raise ValueError(f"max_lag must be below n/2 = {n / 2}, got {max_lag}")
    d = z - z.mean()
    c0 = float(np.dot(d, d)) / n
    if not c0 > 0:
        raise DegenerateSeries("sample variance is zero")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for lag in range(1, max_lag + 1):
        out[lag] = float(np.dot(d[:-lag], d[lag:])) / n / c0
    return out


def pacf(rho: np.ndarray) -> np.ndarray:
    """Partial autocorrelations from autocorrelations by Durbin-Levinson."""
    rho = np.asarray(rho, dtype=float)
    p = rho.size - 1
    out = np.empty(p + 1)
    out[0] = 1.0
    if p == 0:
        return out
    phi = np.zeros(p + 1)
    phi[1] = rho[1]
    out[1] = rho[1]
    v = 1.0 - rho[1] ** 2
    for m in range(2, p + 1):
        num = rho[m] - np.dot(phi[1:m], rho[m - 1:0:-1])
        a = num / v
        prev = phi[1:m].copy()
        phi[1:m] = prev - a * prev[::-1]
        phi[m] = a
        out[m] = a
        v *= 1.0 - a * a
    return out


def acf_pacf(z, max_lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample ACF and PACF up to ``max_lag`` (index 0 holds lag 0)."""
    r = acf(z, max_lag)
    return r, pacf(r)
