import hashlib
import json
import math

import numpy as np
import pytest

from condhill.cli import main
from condhill.csvio import ingest_csv, read_xy
from condhill.errors import InvariantViolation, ParseError
from condhill.montecarlo import read_mc_csv


def _run(argv):
    return main([str(a) for a in argv])


def _rows(path):
    return [l for l in path.read_text().splitlines() if l and not l.startswith("#")]


@pytest.fixture
def sim_csv(tmp_path):
    p = tmp_path / "sim.csv"
    assert _run(["simulate", "--model", "frechet", "--n", 600, "--seed", 2, "-o", p]) == 0
    return p


@pytest.fixture
def returns_csv(tmp_path):
    rng = np.random.default_rng(0)
    n = 3000
    p = tmp_path / "ret.csv"
    x, r = rng.lognormal(size=n), rng.standard_t(3, n)
    p.write_text("x,y\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(x, r)) + "\n")
    return p


@pytest.fixture
def hand_csv(tmp_path):
    p = tmp_path / "hand.csv"
    e = math.e
    p.write_text(f"x,y\n0,{e!r}\n0,{e!r}\n0,{e ** 2!r}\n0,{e ** 4!r}\n")
    return p


# --- ingestion ------------------------------------------------------------------

def test_ingest_two_rows(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("x,y\n0.1,2.0\n0.9,5.0")
    s = ingest_csv(p)
    assert s.n == 2 and np.array_equal(s.y, [2.0, 5.0])


def test_ingest_nonpositive_line_number(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("x,y\n0.1,-1.0\n")
    with pytest.raises(InvariantViolation) as err:
        ingest_csv(p)
    assert err.value.line == 2


def test_ingest_crlf_equals_lf(tmp_path):
    a, b = tmp_path / "lf.csv", tmp_path / "crlf.csv"
    body = ["# comment", "Y,extra,X", "2.5,a,0.1", "", "3.5,b,0.7"]
    a.write_bytes("\n".join(body).encode())
    b.write_bytes("\r\n".join(body).encode() + b"\r\n")
    xa, ya = read_xy(a)
    xb, yb = read_xy(b)
    assert np.array_equal(xa, xb) and np.array_equal(ya, yb)
    assert np.array_equal(xa, [0.1, 0.7]) and np.array_equal(ya, [2.5, 3.5])


@pytest.mark.parametrize("text,line,col", [
    ("a,b\n1,2\n", 1, None),
    ("x,y\n0.1,abc\n", 2, "y"),
    ("x,y\n0.1,2\nnan,3\n", 3, "x"),
    ("x,y\n0.1\n", 2, None),
    ("x,y\n", 1, None),
])
def test_ingest_parse_errors(tmp_path, text, line, col):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ParseError) as err:
        ingest_csv(p)
    assert err.value.line == line and err.value.column == col


# --- commands -----------------------------------------------------------------

def test_estimate_hand_example(hand_csv, tmp_path, capsys):
    assert _run(["estimate", "--input", hand_csv, "--x0", 0, "--k", 2, "--bandwidth", 1,
                 "--kernel", "uniform"]) == 0
    rep = json.loads(capsys.readouterr().out)["result"]
    assert rep["gamma_hat"] == pytest.approx(2.0, abs=1e-14)
    assert rep["q_hat"] == math.e and rep["k"] == 2 and rep["h"] == 1.0
    for key in ("g_hat", "std_error", "ci_lo", "ci_hi", "effective_mass", "window_count"):
        assert key in rep
    out = tmp_path / "est.csv"
    assert _run(["estimate", "--input", hand_csv, "--x0", 0, "--k", 2, "--bandwidth", 1,
                 "--kernel", "uniform", "-o", out]) == 0
    header = _rows(out)[0].split(",")
    vals = dict(zip(header, _rows(out)[1].split(",")))
    assert float(vals["gamma_hat"]) == pytest.approx(2.0, abs=1e-14)


def test_hill_trace_schema(sim_csv, tmp_path):
    out = tmp_path / "trace.csv"
    assert _run(["hill-trace", "--input", sim_csv, "--x0", 0.5, "--k-min", 2, "--k-max", 120,
                 "-o", out]) == 0
    rows = _rows(out)
    assert rows[0] == "k,h,gamma_hat,std_error,ci_lo,ci_hi,q_hat,g_hat,window_count"
    ks = [int(r.split(",")[0]) for r in rows[1:]]
    assert ks == list(range(2, 121))
    assert "# x0=0.5" in out.read_text().splitlines()


def test_trace_missing_rows_are_nan(sim_csv, tmp_path):
    out = tmp_path / "trace.csv"
    assert _run(["hill-trace", "--input", sim_csv, "--x0", 3.0, "--k-max", 4, "--bandwidth", 0.1,
                 "-o", out]) == 0
    assert _rows(out)[1:] == ["2," + ",".join(["nan"] * 8), "3," + ",".join(["nan"] * 8),
                              "4," + ",".join(["nan"] * 8)]


def test_profile_schema(sim_csv, tmp_path):
    out = tmp_path / "prof.csv"
    assert _run(["profile", "--input", sim_csv, "--k", 60, "--x-grid", "0.1:0.9:9", "-o", out]) == 0
    rows = _rows(out)
    assert rows[0] == "x,gamma_hat,std_error,ci_lo,ci_hi"
    assert len(rows) == 10


def test_diagnose_outputs(returns_csv, tmp_path):
    outdir = tmp_path / "diag"
    assert _run(["diagnose", "--input", returns_csv, "-o", outdir, "--qq-windows", "0:0.3,0.4:0.6",
                 "--max-lag", 10]) == 0
    qq = _rows(outdir / "qq.csv")
    assert qq[0] == "side,window_lo,window_hi,i,theoretical,empirical"
    summ = _rows(outdir / "qq_summary.csv")
    assert len(summ) == 1 + 4
    acf_rows = _rows(outdir / "acf.csv")
    assert len(acf_rows) == 1 + 4 * 11


@pytest.mark.slow
def test_mc_default_config_round_trip(tmp_path):
    out = tmp_path / "mc.csv"
    assert _run(["mc", "-o", out, "--workers", 2]) == 0
    res = read_mc_csv(out)
    assert np.all(res.mse >= res.bias ** 2 - 1e-12)
    assert np.all((res.coverage >= 0) & (res.coverage <= 1))
    assert (tmp_path / "mc_plot.py").exists()
    assert "# N=200" in out.read_text() and "# n=1000" in out.read_text()


# --- config precedence ------------------------------------------------------------

def test_three_layer_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nn = 300\nseed = 5\nmodel = frechet\n")
    out = tmp_path / "s.csv"
    assert _run(["simulate", "--config", cfg, "--n", 200, "-o", out]) == 0
    text = out.read_text().splitlines()
    assert "# n=200" in text  # flag beats file
    assert "# seed=5" in text and "# model=frechet" in text  # file beats default
    assert "# M=100" in text  # default survives
    assert len(_rows(out)) == 201


def test_config_output_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    out = tmp_path / "viafile.csv"
    cfg.write_text(f"output = {out}\nn = 20\n")
    assert _run(["simulate", "--config", cfg]) == 0
    assert len(_rows(out)) == 21


# --- exit codes -------------------------------------------------------------------

def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_exit_empty_window(sim_csv, capsys):
    assert _run(["estimate", "--input", sim_csv, "--x0", 7.5, "--k", 50]) == 3
    rep = _err(capsys)
    assert rep["error"] == "EmptyWindow" and rep["x0"] == 7.5 and rep["exit_code"] == 3


@pytest.mark.parametrize("level", [0, 1, 1.5, -0.2])
def test_exit_bad_ci_level(sim_csv, capsys, level, monkeypatch):
    import condhill.cli as cli
    monkeypatch.setattr(cli, "ingest_csv", lambda p: pytest.fail("computation started"))
    assert _run(["estimate", "--input", sim_csv, "--x0", 0.5, "--k", 50, "--ci-level", level]) == 2
    assert _err(capsys)["exit_code"] == 2


def test_exit_config_problems(tmp_path, sim_csv, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("bogus = 1\n")
    assert _run(["simulate", "--config", cfg]) == 2
    cfg.write_text("no equals sign\n")
    assert _run(["simulate", "--config", cfg]) == 2
    cfg.write_text("n = ten\n")
    assert _run(["simulate", "--config", cfg]) == 2
    assert _run(["estimate", "--input", sim_csv, "--k", 5]) == 2
    assert _run(["estimate", "--input", sim_csv, "--x0", 0.5, "--k", 5, "--bandwidth", "wide"]) == 2
    assert _run(["estimate", "--input", sim_csv, "--x0", 0.5, "--k", 5000]) == 2
    assert _run(["simulate", "--phi-x", 1.2]) == 2
    with pytest.raises(SystemExit) as err:
        _run(["simulate", "--model", "gumbel"])
    assert err.value.code == 2


def test_exit_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0.1,oops\n")
    assert _run(["estimate", "--input", bad, "--x0", 0.1, "--k", 2]) == 4
    rep = _err(capsys)
    assert rep["line"] == 2 and rep["column"] == "y"
    bad.write_text("x,y\n0.1,1\n0.2,0\n")
    assert _run(["estimate", "--input", bad, "--x0", 0.1, "--k", 2]) == 4
    assert _run(["estimate", "--input", tmp_path / "missing.csv", "--x0", 0.1, "--k", 2]) == 1


def test_exit_numeric(tmp_path, capsys):
    p = tmp_path / "flat.csv"
    p.write_text("x,y\n" + "\n".join(f"0.5,{i + 1}" for i in range(30)) + "\n")
    assert _run(["estimate", "--input", p, "--x0", 0.5, "--k", 10, "--bandwidth", "sj-global"]) == 5
    assert _err(capsys)["error"] == "DegenerateSample"
    assert _run(["estimate", "--input", p, "--x0", 0.5, "--k", 5, "--bandwidth", "sj-concomitant"]) == 5
    r = tmp_path / "ret.csv"
    r.write_text("x,y\n0.1,1\n0.2,2\n0.3,-1\n")
    assert _run(["diagnose", "--input", r, "-o", tmp_path / "d"]) == 5
    assert _err(capsys)["error"] == "EmptySide"


def test_exit_all_missing(capsys):
    assert _run(["mc", "--n", 200, "--N", 2, "--x0", 40, "--k-fracs", "0.1"]) == 6
    assert _err(capsys)["error"] == "AllMissing"


def test_help_documents_exit_codes(capsys):
    with pytest.raises(SystemExit):
        main(["estimate", "--help"])
    out = capsys.readouterr().out
    assert "exit codes" in out and "6  every Monte Carlo" in out


# --- determinism ------------------------------------------------------------------

def _digest(path):
    if path.is_dir():
        return {p.name: p.read_bytes() for p in sorted(path.iterdir())}
    return path.read_bytes()


@pytest.mark.parametrize("argv", [
    ["simulate", "--model", "csgms", "--n", 300, "--seed", 9],
    ["estimate", "--x0", 0.4, "--k", 60, "--bandwidth", "cv"],
    ["estimate", "--x0", 0.4, "--k", 60, "--format", "csv"],
    ["hill-trace", "--x0", 0.4, "--k-max", 80, "--bandwidth", "sj-concomitant", "--k-min", 10],
    ["profile", "--k", 60, "--bandwidth", "sj-global"],
    ["mc", "--n", 300, "--N", 6, "--k-fracs", "0.05,0.2"],
    ["diagnose"],
])
def test_reruns_are_byte_identical(argv, sim_csv, returns_csv, tmp_path):
    if argv[0] == "diagnose":
        sim_csv = returns_csv
    before = hashlib.sha256(sim_csv.read_bytes()).hexdigest()
    extra = [] if argv[0] in ("simulate", "mc") else ["--input", sim_csv]
    outs = []
    for i in (1, 2):
        out = tmp_path / (f"out{i}" if argv[0] == "diagnose" else f"out{i}.csv")
        assert _run(argv + extra + ["-o", out]) == 0
        outs.append(_digest(out))
    assert outs[0] == outs[1]
    assert hashlib.sha256(sim_csv.read_bytes()).hexdigest() == before


def test_mc_workers_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["mc", "--n", 300, "--N", 8, "--k-fracs", "0.1,0.3"]
    assert _run(common + ["--workers", 1, "-o", a]) == 0
    assert _run(common + ["--workers", 3, "-o", b]) == 0
    assert a.read_bytes() == b.read_bytes()
