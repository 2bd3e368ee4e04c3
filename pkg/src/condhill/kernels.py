"""Kernel functions and the Parzen-Rosenblatt covariate density estimator.

Every local estimator in the package weights observation ``j`` by
``K((x0 - X_j) / h)``.  Compact kernels live on the closed interval
``[-1, 1]``; the Gaussian kernel is admitted for bandwidth selection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelFamily",
    "Kernel",
    "DensityEstimate",
    "kernel_eval",
    "kernel_l2",
    "kernel_weights",
    "density_estimate",
    "get_kernel",
    "UNIFORM",
    "EPANECHNIKOV",
    "TRIANGULAR",
    "BIWEIGHT",
    "GAUSSIAN",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class KernelFamily(str, enum.Enum):
    UNIFORM = "uniform"
    EPANECHNIKOV = "epanechnikov"
    TRIANGULAR = "triangular"
    BIWEIGHT = "biweight"
    GAUSSIAN = "gaussian"


# closed-form integral of K^2 over the real line
_L2 = {
    KernelFamily.UNIFORM: 0.5,
    KernelFamily.EPANECHNIKOV: 0.6,
    KernelFamily.TRIANGULAR: 2.0 / 3.0,
    KernelFamily.BIWEIGHT: 5.0 / 7.0,
    KernelFamily.GAUSSIAN: 1.0 / (2.0 * math.sqrt(math.pi)),
}


@dataclass(frozen=True)
class Kernel:
    """A symmetric probability density used as smoothing kernel.

    Calling the kernel evaluates it elementwise.  Compact families return
    exactly zero for ``|u| > 1`` and use the closed-form expression at
    ``|u| == 1``.
    """

    family: KernelFamily

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))

    @property
    def support_radius(self) -> float:
        return math.inf if self.family is KernelFamily.GAUSSIAN else 1.0

    @property
    def compact(self) -> bool:
        return self.family is not KernelFamily.GAUSSIAN

    @property
    def l2(self) -> float:
        return _L2[self.family]

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        fam = self.family
        if fam is KernelFamily.GAUSSIAN:
            return np.exp(-0.5 * u * u) / _SQRT_2PI
        inside = a <= 1.0
        if fam is KernelFamily.UNIFORM:
            val = np.full_like(a, 0.5)
        elif fam is KernelFamily.EPANECHNIKOV:
            val = 0.75 * (1.0 - a * a)
        elif fam is KernelFamily.TRIANGULAR:
            val = 1.0 - a
        else:
            val = 0.9375 * (1.0 - a * a) ** 2
        return np.where(inside, val, 0.0)

    def __str__(self) -> str:
        return self.family.value


UNIFORM = Kernel(KernelFamily.UNIFORM)
EPANECHNIKOV = Kernel(KernelFamily.EPANECHNIKOV)
TRIANGULAR = Kernel(KernelFamily.TRIANGULAR)
BIWEIGHT = Kernel(KernelFamily.BIWEIGHT)
GAUSSIAN = Kernel(KernelFamily.GAUSSIAN)


def get_kernel(kernel) -> Kernel:
    """Coerce a family name, :class:`KernelFamily` or :class:`Kernel`."""
    if isinstance(kernel, Kernel):
        return kernel
    if isinstance(kernel, KernelFamily):
        return Kernel(kernel)
    return Kernel(KernelFamily(str(kernel).lower()))


def kernel_eval(kernel: Kernel, u: float) -> float:
    """Return ``K(u)`` as a Python float."""
    return float(get_kernel(kernel)(u))


def kernel_l2(kernel: Kernel) -> float:
    """Return the squared L2 norm ``int K(u)^2 du`` of the kernel."""
    return get_kernel(kernel).l2


def kernel_weights(X, x0: float, h: float, kernel: Kernel) -> np.ndarray:
    """Unnormalised weights ``K((x0 - X_j) / h)``."""
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h!r}")
    X = np.asarray(X, dtype=float)
    return get_kernel(kernel)((x0 - X) / h)


@dataclass(frozen=True)
class DensityEstimate:
    x: float
    value: float
    n: int
    bandwidth: float


def density_estimate(X, x: float, h: float, kernel: Kernel) -> DensityEstimate:
    """Parzen-Rosenblatt estimate ``(1/(n h)) sum_j K((x - X_j)/h)``.

    A zero value is legal output; callers decide whether it is fatal.
    """
    X = np.asarray(X, dtype=float)
    n = X.size
    if n < 1:
        raise ValueError("need at least one observation")
    w = kernel_weights(X, x, h, kernel)
    return DensityEstimate(x=float(x), value=float(w.sum() / (n * h)), n=n, bandwidth=float(h))
