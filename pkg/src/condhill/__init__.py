"""Kernel-weighted conditional Hill estimation for dependent heavy-tailed series."""

__version__ = "0.1.0"

from .bandwidth import (
    BandwidthRule, BandwidthVariant, CVObjectiveTrace, bw_cv_loo, bw_fixed, bw_sheather_jones,
    bw_sj_concomitant, resolve,
)
from .csvio import ingest_csv, read_xy
from .diagnostics import QQData, acf, acf_pacf, pacf, pareto_qq, rank_to_uniform, split_signed
from .errors import *  # noqa: F401,F403
from .estimators import (
    EstimatorConfig, HillEstimate, LevelMode, TailCurve, cond_hill, cond_quantile, cond_survival,
    hill_trace, risk_profile, tail_curve, tail_functional,
)
from .kernels import (
    BIWEIGHT, EPANECHNIKOV, GAUSSIAN, TRIANGULAR, UNIFORM, Kernel, KernelFamily, get_kernel,
    kernel_weights,
)
from .montecarlo import MCResult, MCStudy, emit_mc_csv, read_mc_csv, run_mc
from .series import PairedSeries
from .simulate import Model, SimSpec, build_sim, gamma_default
