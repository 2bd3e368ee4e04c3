"""Command-line interface: ``condhill <command> [options]``.

Settings are resolved in three layers: built-in defaults, then a flat
``key = value`` file given by ``--config``, then explicit flags.  Every
table written carries the resolved settings as ``#`` comment lines, and
reruns with the same settings produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import BandwidthRule, BandwidthVariant, resolve
from .csvio import fmt, ingest_csv, read_xy, write_table
from .diagnostics import acf_pacf, pareto_qq, rank_to_uniform, split_signed
from .errors import (
    AllMissing, CholeskyFailure, CondHillError, DegenerateSample, DegenerateSeries, EmptySide,
    EmptyWindow, InvariantViolation, NonPositiveResponse, NoRoot, ParseError, TooFewConcomitants,
)
from .estimators import EstimatorConfig, cond_hill, hill_trace, risk_profile
from .kernels import KernelFamily
from .montecarlo import DEFAULT_K_FRACS, MCStudy, emit_mc_csv, run_mc
from .simulate import Model, SimSpec, build_sim

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_EMPTY_WINDOW = 3
EXIT_INPUT = 4
EXIT_NUMERIC = 5
EXIT_ALL_MISSING = 6

EXIT_TABLE = """exit codes:
  0  success
  1  unexpected failure (I/O and similar)
  2  invalid configuration or arguments
  3  empty kernel window at the conditioning point
  4  malformed input file or invariant violation in the data
  5  degenerate data or numerical failure (zero variance, no
     Sheather-Jones root, too few concomitants, covariance not
     positive definite, too few observations on one side)
  6  every Monte Carlo replication failed at some k
errors are reported on stderr as one JSON object."""


class ConfigError(CondHillError):
    """Invalid command configuration."""


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Opt:
    name: str
    type: object
    default: object
    help: str
    choices: tuple | None = None


_KERNELS = tuple(f.value for f in KernelFamily)
_MODELS = tuple(m.value for m in Model)
_BW_HELP = "bandwidth rule (" + ", ".join(v.value for v in BandwidthVariant) + ") or a positive number"

_ESTIMATOR_OPTS = [
    Opt("kernel", str, "epanechnikov", "kernel family", _KERNELS),
    Opt("bandwidth", str, "fixed", _BW_HELP),
    Opt("ci_level", float, 0.95, "confidence level of the plug-in interval"),
]
_SIM_OPTS = [
    Opt("model", str, "pareto", "simulation design", _MODELS),
    Opt("dependence", str, "low", "preset dependence level", ("low", "high")),
    Opt("n", int, 1000, "series length"),
    Opt("phi_x", float, None, "AR(1) coefficient of the covariate driver (overrides preset)"),
    Opt("phi_u", float, None, "AR(1) coefficient of the uniform driver (overrides preset)"),
    Opt("length_scale", float, None, "CSGMS length scale (overrides preset)"),
    Opt("sigma", float, 0.25, "CSGMS Gaussian standard deviation"),
    Opt("M", int, 100, "CSGMS number of Poisson points"),
    Opt("d", float, None, "ARFIMA fractional order (overrides preset)"),
]

COMMANDS = {
    "simulate": ("draw a simulated x,y series", _SIM_OPTS + [
        Opt("seed", int, 0, "random seed"),
    ]),
    "estimate": ("conditional Hill estimate at one point", [
        Opt("input", str, None, "x,y CSV file"),
        Opt("x0", float, None, "conditioning point"),
        Opt("k", int, None, "intermediate level k"),
        Opt("format", str, None, "report format (default from the output suffix, else json)",
            ("json", "csv")),
    ] + _ESTIMATOR_OPTS),
    "hill-trace": ("conditional Hill estimates over a range of k", [
        Opt("input", str, None, "x,y CSV file"),
        Opt("x0", float, None, "conditioning point"),
        Opt("k_min", int, 2, "smallest k"),
        Opt("k_max", int, None, "largest k (default n)"),
        Opt("k_step", int, 1, "step between k values"),
    ] + _ESTIMATOR_OPTS),
    "profile": ("risk profile: estimates over a grid of conditioning points", [
        Opt("input", str, None, "x,y CSV file"),
        Opt("k", int, None, "intermediate level k"),
        Opt("x_grid", str, "0.01:0.99:99", "lo:hi:num or comma-separated values"),
    ] + _ESTIMATOR_OPTS),
    "mc": ("Monte Carlo bias / MSE study", _SIM_OPTS + [
        Opt("N", int, 200, "number of replications"),
        Opt("x0", float, 0.6, "conditioning point"),
        Opt("k_fracs", str, ",".join(str(f) for f in DEFAULT_K_FRACS), "comma-separated k/n values"),
        Opt("base_seed", int, 0, "base random seed"),
        Opt("workers", int, 1, "worker processes (results do not depend on it)"),
    ] + _ESTIMATOR_OPTS),
    "diagnose": ("QQ and ACF/PACF diagnostics for signed returns", [
        Opt("input", str, None, "x,y CSV file with y the (signed) returns"),
        Opt("uniformize", _bool, True, "rank-transform x to uniform margins"),
        Opt("qq_windows", str, "0.01:0.03,0.49:0.51,0.96:0.98", "covariate windows lo:hi,..."),
        Opt("qq_frac", float, 0.5, "fraction of each window subsample used in the QQ plot"),
        Opt("max_lag", int, 40, "largest ACF/PACF lag"),
    ]),
}

# settings that do not change what is computed
_NOT_ECHOED = {"config", "output", "workers"}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condhill", description="Conditional extreme-value estimation for dependent series.",
        epilog=EXIT_TABLE, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, (desc, opts) in COMMANDS.items():
        p = sub.add_parser(cmd, help=desc, description=desc, epilog=EXIT_TABLE,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value settings file")
        p.add_argument("-o", "--output", default=argparse.SUPPRESS,
                       help="output file (directory for diagnose); stdout if omitted")
        for o in opts:
            kw = dict(dest=o.name, default=argparse.SUPPRESS,
                      help=f"{o.help} (default: {o.default})")
            if o.type is _bool:
                kw["action"] = argparse.BooleanOptionalAction
            else:
                kw["type"] = o.type
                if o.choices:
                    kw["choices"] = o.choices
            p.add_argument(_flag(o.name), **kw)
    return parser


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment line."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def resolve_settings(command: str, cli: dict) -> dict:
    """Merge defaults, config file and explicit flags (in increasing priority)."""
    opts = {o.name: o for o in COMMANDS[command][1]}
    settings = {name: o.default for name, o in opts.items()}
    settings["output"] = None
    if "config" in cli:
        for key, val in read_config(cli["config"]).items():
            if key == "output":
                settings["output"] = val
                continue
            if key not in opts:
                raise ConfigError(f"unknown setting {key!r} for {command}")
            o = opts[key]
            try:
                conv = o.type(val)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
            if o.choices and conv not in o.choices:
                raise ConfigError(f"{key} must be one of {o.choices}")
            settings[key] = conv
    settings.update(cli)
    settings["command"] = command
    return settings


def _comments(settings: dict) -> list[str]:
    lines = [f"condhill {__version__} {settings['command']}"]
    for key in sorted(settings):
        if key in _NOT_ECHOED or key == "command":
            continue
        lines.append(f"{key}={settings[key]}")
    return lines


def _require(settings, *names):
    for name in names:
        if settings.get(name) is None:
            raise ConfigError(f"missing required setting {_flag(name)}")


def _bandwidth_rule(text):
    try:
        return BandwidthRule.parse(text)
    except ValueError:
        pass
    try:
        h = float(text)
    except ValueError:
        raise ConfigError(f"unknown bandwidth {text!r}; {_BW_HELP}") from None
    if not (h > 0 and math.isfinite(h)):
        raise ConfigError("numeric bandwidth must be positive and finite")
    return h


def _check_estimator(s):
    if not 0 < s["ci_level"] < 1:
        raise ConfigError(f"ci-level must lie in (0, 1), got {s['ci_level']}")
    return _bandwidth_rule(s["bandwidth"])


def _sim_spec(s, seed: int) -> SimSpec:
    over = {key: s[key] for key in ("phi_x", "phi_u", "length_scale", "d") if s.get(key) is not None}
    try:
        spec = SimSpec.preset(s["model"], s["dependence"], n=s["n"], seed=seed,
                              sigma=s["sigma"], M=s["M"], **over)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    # echo the values the preset filled in
    for key in ("phi_x", "phi_u", "length_scale", "d"):
        s[key] = getattr(spec, key)
    return spec


def _parse_grid(text: str) -> np.ndarray:
    try:
        if ":" in text:
            lo, hi, num = text.split(":")
            return np.linspace(float(lo), float(hi), int(num))
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r}") from None


def _emit(settings, header, rows):
    out = settings.get("output")
    if out is None:
        sys.stdout.write("\n".join([f"# {c}" for c in _comments(settings)] + [header]
                                   + [",".join(fmt(v) for v in r) for r in rows]) + "\n")
    else:
        write_table(out, header, rows, _comments(settings))


def cmd_simulate(s):
    if s["n"] < 1:
        raise ConfigError("n must be >= 1")
    series = build_sim(_sim_spec(s, s["seed"]))
    _emit(s, "x,y", zip(series.x, series.y))


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else None


def cmd_estimate(s):
    _require(s, "input", "x0", "k")
    rule = _check_estimator(s)
    if s["k"] < 2:
        raise ConfigError("k must be >= 2")
    series = ingest_csv(s["input"])
    if s["k"] > series.n:
        raise ConfigError(f"k={s['k']} exceeds n={series.n}")
    h = resolve(rule, series, s["k"])
    est = cond_hill(series, EstimatorConfig(s["x0"], s["k"], h, s["kernel"], s["ci_level"]))
    report = {key: _json_value(v) for key, v in asdict(est).items()}
    report["n"] = series.n
    out = s.get("output")
    fmt_ = s.get("format") or ("csv" if out and str(out).endswith(".csv") else "json")
    if fmt_ == "csv":
        fields = list(report)
        _emit(s, ",".join(fields), [[report[f] for f in fields]])
        return
    payload = {"result": report, "config": {k: v for k, v in sorted(s.items()) if k not in _NOT_ECHOED}}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


TRACE_HEADER = "k,h,gamma_hat,std_error,ci_lo,ci_hi,q_hat,g_hat,window_count"
PROFILE_HEADER = "x,gamma_hat,std_error,ci_lo,ci_hi"


def cmd_hill_trace(s):
    _require(s, "input", "x0")
    rule = _check_estimator(s)
    series = ingest_csv(s["input"])
    k_max = series.n if s["k_max"] is None else s["k_max"]
    if s["k_step"] < 1 or s["k_min"] < 2 or k_max > series.n or s["k_min"] > k_max:
        raise ConfigError(f"need 2 <= k-min <= k-max <= n={series.n} and k-step >= 1")
    ks = list(range(s["k_min"], k_max + 1, s["k_step"]))
    trace = hill_trace(series, s["x0"], s["kernel"], ks, rule, s["ci_level"])
    rows = []
    for k, e in zip(ks, trace):
        if e is None:
            rows.append([k] + [None] * 8)
        else:
            rows.append([k, e.h, e.gamma_hat, e.std_error, e.ci_lo, e.ci_hi, e.q_hat, e.g_hat,
                         e.window_count])
    _emit(s, TRACE_HEADER, rows)


def cmd_profile(s):
    _require(s, "input", "k")
    rule = _check_estimator(s)
    series = ingest_csv(s["input"])
    if not 2 <= s["k"] <= series.n:
        raise ConfigError(f"k must lie in [2, n={series.n}]")
    grid = _parse_grid(s["x_grid"])
    prof = risk_profile(series, grid, s["k"], s["kernel"], rule, s["ci_level"])
    rows = [[x] + ([None] * 4 if e is None else [e.gamma_hat, e.std_error, e.ci_lo, e.ci_hi])
            for x, e in zip(grid, prof)]
    _emit(s, PROFILE_HEADER, rows)


def cmd_mc(s):
    rule = _check_estimator(s)
    try:
        fracs = tuple(float(v) for v in s["k_fracs"].split(",") if v.strip())
        study = MCStudy(spec=_sim_spec(s, 0), x0=s["x0"], k_fracs=fracs, h_rule=rule, N=s["N"],
                        base_seed=s["base_seed"], kernel=s["kernel"], ci_level=s["ci_level"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = run_mc(study, workers=s["workers"])
    out = s.get("output")
    if out is None:
        rows = zip(res.k_frac, res.k, res.bias, res.mse, res.mean_se, res.coverage, res.n_missing)
        _emit(s, "k_frac,k,bias,mse,mean_se,coverage,n_missing", rows)
    else:
        emit_mc_csv(res, out, _comments(s))


def _parse_windows(text):
    out = []
    for part in text.split(","):
        try:
            lo, hi = (float(v) for v in part.split(":"))
        except ValueError:
            raise ConfigError(f"cannot parse window {part!r}") from None
        if lo > hi:
            raise ConfigError(f"window {part!r} has lo > hi")
        out.append((lo, hi))
    return out


def cmd_diagnose(s):
    _require(s, "input", "output")
    if not 0 < s["qq_frac"] <= 1:
        raise ConfigError("qq-frac must lie in (0, 1]")
    if s["max_lag"] < 1:
        raise ConfigError("max-lag must be >= 1")
    windows = _parse_windows(s["qq_windows"])
    x, r = read_xy(s["input"], require_positive=False)
    if s["uniformize"]:
        x = rank_to_uniform(x)
    pos, neg = split_signed(x, r)
    outdir = Path(s["output"])
    outdir.mkdir(parents=True, exist_ok=True)
    comments = _comments(s)

    qq_rows, summary = [], []
    for side, ser in (("positive", pos), ("negative", neg)):
        for lo, hi in windows:
            y = ser.y[(ser.x >= lo) & (ser.x <= hi)]
            m = min(max(int(math.floor(s["qq_frac"] * y.size)), 2), y.size - 1)
            if y.size < 3:
                summary.append([side, lo, hi, y.size, 0, None])
                continue
            qq = pareto_qq(y, m)
            summary.append([side, lo, hi, y.size, m, qq.slope_hint])
            qq_rows.extend([side, lo, hi, i + 1, t, e]
                           for i, (t, e) in enumerate(zip(qq.theoretical, qq.empirical)))
    write_table(outdir / "qq.csv", "side,window_lo,window_hi,i,theoretical,empirical", qq_rows, comments)
    write_table(outdir / "qq_summary.csv", "side,window_lo,window_hi,count,m,slope_hint", summary, comments)

    acf_rows = []
    for name, z in (("x_positive", pos.x), ("x_negative", neg.x), ("y_positive", pos.y), ("y_negative", neg.y)):
        lag = min(s["max_lag"], (z.size - 1) // 2)
        if lag < 1:
            continue
        a, p = acf_pacf(z, lag)
        acf_rows.extend([name, i, a[i], p[i]] for i in range(lag + 1))
    write_table(outdir / "acf.csv", "series,lag,acf,pacf", acf_rows, comments)


HANDLERS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "hill-trace": cmd_hill_trace,
    "profile": cmd_profile,
    "mc": cmd_mc,
    "diagnose": cmd_diagnose,
}

_EXIT_MAP = [
    (ConfigError, EXIT_CONFIG),
    (EmptyWindow, EXIT_EMPTY_WINDOW),
    ((ParseError, InvariantViolation), EXIT_INPUT),
    ((DegenerateSample, NoRoot, TooFewConcomitants, CholeskyFailure, DegenerateSeries,
      NonPositiveResponse, EmptySide), EXIT_NUMERIC),
    (AllMissing, EXIT_ALL_MISSING),
    (ValueError, EXIT_CONFIG),
]


def _report_error(exc: BaseException, code: int, command: str | None) -> None:
    rep = {"error": type(exc).__name__, "message": str(exc), "exit_code": code, "command": command}
    for attr in ("x0", "h", "line", "column", "reason"):
        if hasattr(exc, attr):
            rep[attr] = getattr(exc, attr)
    sys.stderr.write(json.dumps(rep, sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    try:
        settings = resolve_settings(command, args)
        HANDLERS[command](settings)
    except Exception as exc:  # mapped to documented exit codes
        for cls, code in _EXIT_MAP:
            if isinstance(exc, cls):
                break
        else:
            code = EXIT_INTERNAL
        _report_error(exc, code, command)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
