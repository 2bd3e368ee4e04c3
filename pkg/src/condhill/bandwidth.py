"""Bandwidth selectors for the conditional estimators.

Four rules are available behind :class:`BandwidthRule`:

* ``SHEATHER_JONES_GLOBAL``: Sheather-Jones plug-in on all covariates.
* ``SHEATHER_JONES_CONCOMITANT``: Sheather-Jones on the covariates paired
  with the ``k`` largest responses.
* ``CROSS_VALIDATION``: grid search of the leave-one-out, doubly smoothed
  Nadaraya-Watson survival criterion.
* ``FIXED_RULE``: the data-independent ``sqrt(log(k) / n)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import pdist
from scipy.special import ndtr

from .errors import DegenerateSample, NoRoot, SheatherJonesFallback, TooFewConcomitants
from .kernels import GAUSSIAN, Kernel, get_kernel
from .series import PairedSeries

__all__ = [
    "BandwidthVariant",
    "BandwidthRule",
    "CVObjectiveTrace",
    "bw_fixed",
    "normal_reference",
    "bw_sheather_jones",
    "concomitants",
    "bw_sj_concomitant",
    "default_cv_grid",
    "default_cv_smoothing",
    "cv_objective",
    "bw_cv_loo",
    "resolve",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
# above this many points pairwise sums are evaluated on binned data
EXACT_PAIRS_MAX = 3000
N_BINS = 1000


def bw_fixed(n: int, k: int) -> float:
    """Data-independent bandwidth ``sqrt(log(k) / n)``."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return math.sqrt(math.log(k) / n)


def normal_reference(x) -> float:
    """Normal-reference bandwidth ``1.06 * sd * n**(-1/5)``."""
    x = np.asarray(x, dtype=float)
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    if not sd > 0:
        raise DegenerateSample("sample variance is zero")
    return 1.06 * sd * x.size ** -0.2


class _PairSums:
    """Sums ``sum_{i,j} f((X_i - X_j) / h)`` over all ordered pairs, diagonal included."""

    def __init__(self, x: np.ndarray):
        self.n = x.size
        if self.n <= EXACT_PAIRS_MAX:
            self.dist = pdist(x[:, None])
            self.counts = None
        else:
            lo, hi = float(x.min()), float(x.max())
            width = (hi - lo) / (N_BINS - 1)
            idx = np.rint((x - lo) / width).astype(np.int64)
            c = np.bincount(idx, minlength=N_BINS).astype(float)
            full = np.correlate(c, c, mode="full")
            self.counts = full[N_BINS - 1:]
            self.dist = np.arange(N_BINS) * width

    def __call__(self, f, h: float) -> float:
        if self.counts is None:
            return 2.0 * float(np.sum(f(self.dist / h))) + self.n * float(f(0.0))
        vals = f(self.dist / h)
        return 2.0 * float(np.dot(self.counts[1:], vals[1:])) + self.counts[0] * float(f(0.0))


def _phi4(u):
    u2 = u * u
    return (u2 * u2 - 6.0 * u2 + 3.0) * np.exp(-0.5 * u2) / _SQRT_2PI


def _phi6(u):
    u2 = u * u
    return (u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0) * np.exp(-0.5 * u2) / _SQRT_2PI


def bw_sheather_jones(x, strict: bool = False) -> float:
    """Sheather-Jones "solve-the-equation" plug-in bandwidth.

    Two-stage construction for a Gaussian density kernel: the pilot
    functionals use normal-scale bandwidths built from
    ``min(sd, IQR / 1.349)``, and the fixed-point equation is solved by a
    bracketing root finder on an interval scaled from the normal-reference
    bandwidth.

    Parameters
    ----------
    x : array_like
        Sample, at least 10 points.
    strict : bool
        If True raise :class:`NoRoot` when the equation cannot be
        bracketed.  Otherwise warn with :class:`SheatherJonesFallback` and
        return the normal-reference bandwidth.

    Returns
    -------
    float
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 10:
        raise ValueError(f"Sheather-Jones needs at least 10 points, got {n}")
    sd = float(np.std(x, ddof=1))
    if not sd > 0:
        raise DegenerateSample("sample variance is zero")
    q75, q25 = np.percentile(x, [75, 25])
    iqr = (q75 - q25) / 1.349
    scale = min(sd, iqr) if iqr > 0 else sd

    sums = _PairSums(x)
    nn = n * (n - 1.0)

    def sd_hat(h):
        return sums(_phi4, h) / (nn * h ** 5)

    def td_hat(h):
        return -sums(_phi6, h) / (nn * h ** 7)

    a = 1.24 * scale * n ** (-1.0 / 7.0)
    b = 1.23 * scale * n ** (-1.0 / 9.0)
    c1 = 1.0 / (2.0 * math.sqrt(math.pi) * n)
    ratio = sd_hat(a) / td_hat(b)

    try:
        if not (ratio > 0 and math.isfinite(ratio)):
            raise NoRoot("pilot functional ratio is not positive")
        alpha2 = 1.357 * ratio ** (1.0 / 7.0)

        def fsd(h):
            s = sd_hat(alpha2 * h ** (5.0 / 7.0))
            if not s > 0:
                return -h
            return (c1 / s) ** 0.2 - h

        hmax = 1.144 * scale * n ** -0.2
        lower, upper = 0.1 * hmax, hmax
        flo, fup = fsd(lower), fsd(upper)
        tries = 1
        while flo * fup > 0:
            if tries > 99:
                raise NoRoot("no sign change in the bandwidth bracket")
            if tries % 2:
                upper *= 1.2
                fup = fsd(upper)
            else:
                lower /= 1.2
                flo = fsd(lower)
            tries += 1
        return float(brentq(fsd, lower, upper, xtol=1e-10 * hmax, rtol=1e-12))
    except NoRoot as exc:
        if strict:
            raise
        warnings.warn(f"Sheather-Jones failed ({exc}); using normal reference", SheatherJonesFallback)
        return normal_reference(x)


def concomitants(series: PairedSeries, k: int) -> np.ndarray:
    """Covariates paired with the ``k`` largest responses, in index order.

    Ties in the response are broken toward the smaller index.
    """
    if not 1 <= k <= series.n:
        raise ValueError(f"k must lie in [1, n], got {k}")
    top = np.argsort(-series.y, kind="stable")[:k]
    return series.x[np.sort(top)]


def bw_sj_concomitant(series: PairedSeries, k: int, strict: bool = False) -> float:
    """Sheather-Jones bandwidth of the covariates of the top-``k`` responses."""
    if k < 10:
        raise TooFewConcomitants(f"need k >= 10 concomitants, got {k}")
    return bw_sheather_jones(concomitants(series, k), strict=strict)


@dataclass(frozen=True)
class CVObjectiveTrace:
    h_grid: np.ndarray
    objective: np.ndarray
    argmin_h: float
    empty_windows: int = 0


def default_cv_grid(x, size: int = 20, bounds=(0.25, 4.0)) -> np.ndarray:
    """Log-spaced grid spanning ``bounds`` times the normal-reference bandwidth."""
    ref = normal_reference(x)
    return ref * np.geomspace(bounds[0], bounds[1], size)


def default_cv_smoothing(y) -> float:
    """Normal-reference bandwidth of the log responses."""
    return normal_reference(np.log(np.asarray(y, dtype=float)))


def cv_objective(series: PairedSeries, h: float, b: float, kernel: Kernel = GAUSSIAN,
                 log_scale: bool = True) -> tuple[float, int]:
    """Leave-one-out double-sum criterion at a single bandwidth.

    Returns ``(objective, n_empty)`` where ``n_empty`` counts the
    leave-one-out fits whose kernel weights were all zero; those fits
    predict 1/2.
    """
    kernel = get_kernel(kernel)
    x = series.x
    z = np.log(series.y) if log_scale else series.y
    # smoothed survival contributions S[l, j] = G((Y_l - Y_j) / b)
    S = ndtr((z[:, None] - z[None, :]) / b)
    ind = (series.y[:, None] > series.y[None, :]).astype(float)
    W = kernel((x[:, None] - x[None, :]) / h)
    np.fill_diagonal(W, 0.0)
    denom = W.sum(axis=1)
    empty = denom <= 0
    F = W @ S
    F[~empty] /= denom[~empty, None]
    F[empty] = 0.5
    resid = ind - F
    return float(np.sum(resid * resid)), int(empty.sum())


def bw_cv_loo(series: PairedSeries, h_grid=None, b: float | None = None,
              kernel: Kernel = GAUSSIAN, log_scale: bool = True) -> CVObjectiveTrace:
    """Cross-validated bandwidth by grid search.

    Minimises ``sum_i sum_j (1{Y_i > Y_j} - Fbar_{-i}^{X_i}(Y_j))**2`` where
    ``Fbar_{-i}`` is the leave-one-out Nadaraya-Watson survival estimate
    with the indicator replaced by a Gaussian CDF of bandwidth ``b``.  With
    ``log_scale`` the response smoothing acts on ``log Y``, which leaves
    the indicators unchanged.  Ties go to the smaller ``h``.

    Memory is O(n**2).
    """
    if series.n < 3:
        raise ValueError("cross-validation needs n >= 3")
    if h_grid is None:
        h_grid = default_cv_grid(series.x)
    h_grid = np.asarray(h_grid, dtype=float).ravel()
    if h_grid.size == 0 or not np.all(h_grid > 0):
        raise ValueError("h_grid must be a nonempty vector of positive values")
    if b is None:
        b = default_cv_smoothing(series.y) if log_scale else normal_reference(series.y)
    if not b > 0:
        raise ValueError(f"smoothing bandwidth must be positive, got {b}")
    obj = np.empty(h_grid.size)
    n_empty = 0
    for m, h in enumerate(h_grid):
        obj[m], e = cv_objective(series, h, b, kernel, log_scale)
        n_empty += e
    best = obj.min()
    cand = h_grid[obj == best]
    return CVObjectiveTrace(h_grid=h_grid, objective=obj, argmin_h=float(cand.min()),
                            empty_windows=n_empty)


class BandwidthVariant(str, enum.Enum):
    SHEATHER_JONES_GLOBAL = "sj-global"
    SHEATHER_JONES_CONCOMITANT = "sj-concomitant"
    CROSS_VALIDATION = "cv"
    FIXED_RULE = "fixed"


@dataclass(frozen=True)
class BandwidthRule:
    """Declarative bandwidth choice, resolved against a series and ``k``.

    ``h_grid``, ``grid_size``, ``grid_bounds`` and ``b`` only matter for
    cross-validation.
    """

    variant: BandwidthVariant = BandwidthVariant.FIXED_RULE
    h_grid: tuple | None = None
    grid_size: int = 20
    grid_bounds: tuple = (0.25, 4.0)
    b: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", BandwidthVariant(self.variant))
        if self.h_grid is not None:
            object.__setattr__(self, "h_grid", tuple(float(v) for v in self.h_grid))
            if not self.h_grid or min(self.h_grid) <= 0:
                raise ValueError("h_grid must contain positive values")
        if self.grid_size < 1:
            raise ValueError("grid_size must be >= 1")
        lo, hi = self.grid_bounds
        if not 0 < lo <= hi:
            raise ValueError("grid_bounds must satisfy 0 < lo <= hi")
        if self.b is not None and not self.b > 0:
            raise ValueError("b must be positive")

    @property
    def depends_on_k(self) -> bool:
        return self.variant in (BandwidthVariant.FIXED_RULE,
                                BandwidthVariant.SHEATHER_JONES_CONCOMITANT)

    @classmethod
    def parse(cls, text: str) -> "BandwidthRule":
        return cls(BandwidthVariant(text.strip().lower()))


def resolve(rule, series: PairedSeries, k: int) -> float:
    """Bandwidth for ``series`` at intermediate level ``k``.

    ``rule`` may also be a positive number, returned unchanged.
    """
    if not isinstance(rule, BandwidthRule):
        h = float(rule)
        if not (h > 0 and math.isfinite(h)):
            raise ValueError(f"bandwidth must be positive and finite, got {rule!r}")
        return h
    v = rule.variant
    if v is BandwidthVariant.FIXED_RULE:
        h = bw_fixed(series.n, k)
    elif v is BandwidthVariant.SHEATHER_JONES_GLOBAL:
        h = bw_sheather_jones(series.x)
    elif v is BandwidthVariant.SHEATHER_JONES_CONCOMITANT:
        h = bw_sj_concomitant(series, k)
    else:
        grid = rule.h_grid
        if grid is None:
            grid = default_cv_grid(series.x, rule.grid_size, rule.grid_bounds)
        h = bw_cv_loo(series, grid, rule.b).argmin_h
    return h
