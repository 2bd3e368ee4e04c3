"""Aligned covariate/response samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation

__all__ = ["PairedSeries"]


@dataclass(frozen=True, eq=False)
class PairedSeries:
    """Observed stretch ``{(X_j, Y_j)}`` of a bivariate time series.

    Responses must be strictly positive and everything must be finite;
    NaNs are rejected rather than dropped.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float, copy=True).ravel()
        y = np.array(self.y, dtype=float, copy=True).ravel()
        if x.size != y.size:
            raise InvariantViolation(f"x and y lengths differ ({x.size} vs {y.size})")
        if x.size < 1:
            raise InvariantViolation("series is empty")
        bad = ~np.isfinite(x) | ~np.isfinite(y)
        if bad.any():
            raise InvariantViolation(f"non-finite value at index {int(np.flatnonzero(bad)[0])}")
        if (y <= 0).any():
            raise InvariantViolation(f"non-positive response at index {int(np.flatnonzero(y <= 0)[0])}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def __len__(self) -> int:
        return self.x.size
