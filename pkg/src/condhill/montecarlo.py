"""Monte Carlo bias / MSE / coverage study of the conditional Hill estimator."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandwidth import BandwidthRule, resolve
from .csvio import write_table
from .errors import AllMissing, EmptyWindow
from .estimators import EstimatorConfig, cond_hill
from .kernels import EPANECHNIKOV, Kernel, get_kernel
from .simulate import SimSpec, build_sim

__all__ = [
    "DEFAULT_K_FRACS",
    "MCStudy",
    "MCResult",
    "replication_seed",
    "run_mc",
    "emit_mc_csv",
    "read_mc_csv",
    "MC_HEADER",
]

DEFAULT_K_FRACS = (0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5)
MC_HEADER = "k_frac,k,bias,mse,mean_se,coverage,n_missing"
_MASK64 = (1 << 64) - 1


def replication_seed(base_seed: int, r: int) -> int:
    """Seed of replication ``r``; depends only on ``(base_seed, r)``."""
    ss = np.random.SeedSequence([int(base_seed) & _MASK64, int(r)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class MCStudy:
    spec: SimSpec
    x0: float = 0.6
    k_fracs: tuple = DEFAULT_K_FRACS
    h_rule: BandwidthRule | float = field(default_factory=BandwidthRule)
    N: int = 200
    base_seed: int = 0
    kernel: Kernel = EPANECHNIKOV
    ci_level: float = 0.95

    def __post_init__(self):
        fr = tuple(float(f) for f in self.k_fracs)
        if not fr:
            raise ValueError("k_fracs must be nonempty")
        if any(not 0 < f <= 1 for f in fr):
            raise ValueError("k_fracs must lie in (0, 1]")
        if any(b < a for a, b in zip(fr, fr[1:])):
            raise ValueError("k_fracs must be sorted ascending")
        object.__setattr__(self, "k_fracs", fr)
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not 0 < self.ci_level < 1:
            raise ValueError("ci_level must lie in (0, 1)")

    @property
    def ks(self) -> np.ndarray:
        n = self.spec.n
        return np.array([min(max(int(math.floor(f * n)), 2), n) for f in self.k_fracs])

    @property
    def gamma_true(self) -> float:
        return float(self.spec.gamma(self.x0))


@dataclass(frozen=True, eq=False)
class MCResult:
    """Per-``k`` summaries; ``samples`` holds the raw estimates when available."""

    k_frac: np.ndarray
    k: np.ndarray
    bias: np.ndarray
    mse: np.ndarray
    mean_se: np.ndarray
    coverage: np.ndarray
    n_missing: np.ndarray
    samples: np.ndarray | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return self.k_frac.size


def _replicate(args):
    study, r = args
    series = build_sim(study.spec.with_seed(replication_seed(study.base_seed, r)))
    m = len(study.k_fracs)
    out = np.full((4, m), np.nan)
    for i, k in enumerate(study.ks):
        try:
            h = resolve(study.h_rule, series, int(k))
            est = cond_hill(series, EstimatorConfig(study.x0, int(k), h, study.kernel, study.ci_level))
        except EmptyWindow:
            continue
        out[:, i] = est.gamma_hat, est.std_error, est.ci_lo, est.ci_hi
    return out


def run_mc(study: MCStudy, workers: int = 1) -> MCResult:
    """Run ``study.N`` replications and aggregate per ``k``.

    Replication ``r`` (1-based) uses :func:`replication_seed`, and results
    are aggregated in replication order, so the output is bitwise
    identical for any ``workers``.  Missing estimates (empty window) are
    excluded from the moments and counted in ``n_missing``.
    """
    jobs = [(study, r) for r in range(1, study.N + 1)]
    if workers is None or workers <= 1:
        reps = [_replicate(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reps = list(pool.map(_replicate, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    arr = np.stack(reps)  # (N, 4, K)
    gam, se, lo, hi = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    g0 = study.gamma_true
    ok = np.isfinite(gam)
    n_missing = (~ok).sum(axis=0)
    if np.any(n_missing == study.N):
        bad = [study.k_fracs[i] for i in np.flatnonzero(n_missing == study.N)]
        raise AllMissing(f"every replication failed at k_frac in {bad}")
    K = gam.shape[1]
    bias = np.empty(K)
    mse = np.empty(K)
    mean_se = np.empty(K)
    cover = np.empty(K)
    for i in range(K):
        g = gam[ok[:, i], i]
        err = g - g0
        bias[i] = err.mean()
        mse[i] = np.mean(err * err)
        s = se[ok[:, i], i]
        have = np.isfinite(s)
        mean_se[i] = s[have].mean() if have.any() else math.nan
        inside = (lo[ok[:, i], i][have] <= g0) & (g0 <= hi[ok[:, i], i][have])
        cover[i] = inside.mean() if have.any() else math.nan
    return MCResult(
        k_frac=np.array(study.k_fracs), k=study.ks, bias=bias, mse=mse, mean_se=mean_se,
        coverage=cover, n_missing=n_missing.astype(int), samples=gam,
    )


_PLOT_SCRIPT = '''"""Plot bias and MSE against k/n from {csv_name}."""
import numpy as np
import matplotlib.pyplot as plt

data = np.genfromtxt({csv_name!r}, delimiter=",", names=True, comments="#")
fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(5, 6))
ax1.plot(data["k_frac"], data["bias"], "o-")
ax1.axhline(0.0, color="grey", lw=0.8)
ax1.set_ylabel("bias")
ax2.plot(data["k_frac"], data["mse"], "o-")
ax2.set_ylabel("MSE")
ax2.set_xlabel("k / n")
fig.tight_layout()
fig.savefig({png_name!r}, dpi=150)
'''


def emit_mc_csv(result: MCResult, path, comments=(), plot_script: bool = True) -> Path:
    """Write one row per ``k_frac`` (17 significant digits) plus a plot sidecar.

    ``comments`` are written first as ``# ``-prefixed lines.  The sidecar
    ``<stem>_plot.py`` reads only the CSV.
    """
    path = Path(path)
    if len(result) == 0:
        raise ValueError("empty result")
    rows = zip(result.k_frac.astype(float), result.k.astype(int), result.bias, result.mse,
               result.mean_se, result.coverage, result.n_missing.astype(int))
    write_table(path, MC_HEADER, rows, comments)
    if plot_script:
        script = path.with_name(path.stem + "_plot.py")
        script.write_text(_PLOT_SCRIPT.format(csv_name=path.name, png_name=path.stem + ".png"))
    return path


def read_mc_csv(path) -> MCResult:
    """Parse a file written by :func:`emit_mc_csv`."""
    rows = []
    header_seen = False
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != MC_HEADER:
                raise ValueError(f"unexpected header {line!r}")
            header_seen = True
            continue
        rows.append(line.split(","))
    if not rows:
        raise ValueError("no data rows")
    cols = list(zip(*rows))
    return MCResult(
        k_frac=np.array(cols[0], dtype=float), k=np.array(cols[1], dtype=int),
        bias=np.array(cols[2], dtype=float), mse=np.array(cols[3], dtype=float),
        mean_se=np.array(cols[4], dtype=float), coverage=np.array(cols[5], dtype=float),
        n_missing=np.array(cols[6], dtype=int),
    )
