import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamperturb.cli import DEFAULTS, ConfigError, main, parse_config
from hamperturb.models import nonconvex_d1
from hamperturb.normalform import build_normal_form

BASIC = """\
[model]
name = nonconvex_d1
x0 = [0.0, 0.0, 1.0, 0.5]

[task]
name = sigma-scan
duration = 2.0   ; seconds of flow

[output]
seed = 7
"""


def write(tmp_path, text, name="task.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_tsv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    return lines, np.array([[float(v) for v in ln.split("\t")] for ln in lines if not ln.startswith("#")])


def test_parse_basic_config():
    cfg = parse_config(BASIC)
    assert cfg.model == "nonconvex_d1" and cfg.task == "sigma-scan"
    assert cfg.options == {"duration": 2.0}
    assert cfg.x0.tolist() == [0.0, 0.0, 1.0, 0.5]
    assert cfg.seed == 7 and cfg.out == "out"
    assert cfg.tolerances == DEFAULTS


def test_tolerance_scaling():
    cfg = parse_config(BASIC + "\n[tolerances]\nrel_tol = 1e-10\n")
    cfg.tol_scale = 10.0
    assert cfg.tol("rel_tol") == pytest.approx(1e-9)
    assert cfg.flow_config().abs_tol == pytest.approx(1e-11)


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("[model]\nname = harmonic\nx0 = [0, 0,, 1]\n", 3, "x0"),
        ("name = harmonic\n", 1, "section"),
        ("[model]\nname = harmonic\n[extra]\na = 1\n", 3, "unknown section"),
        ("[model]\nname = nowhere\nx0 = [0, 0, 1, 0]\n", 2, "unknown model"),
        ("[model]\nname = harmonic\n\n[task]\nname = fly\n", 5, "unknown task"),
        ("[model]\nname = harmonic\n[tolerances]\nnewton = -1\n", 4, "positive"),
        ("[model]\nname = harmonic\n[tolerances]\nspeed = 1\n", 4, "unknown tolerance"),
        ("[model]\nname = harmonic\n[output]\nseed = 1.5\n", 4, "integer"),
        ("[model]\nname = harmonic\nparams = [1]\n", 3, "dict"),
        ("[model]\nname = harmonic\nparams = {'speed': 2}\n", 3, "bad model parameters"),
        ("[model]\nname = harmonic_detuned\nparams = {'omega': 2}\n", 2, "unknown model"),
        ("[model]\nname = curved_quadratic\n", 2, "needs x0"),
    ],
)
def test_config_errors_name_the_line(text, line, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line
    assert fragment in str(err.value)
    assert str(err.value).startswith(f"line {line}: ")


@settings(max_examples=25, deadline=None)
@given(junk=st.text(alphabet="[]=;,xyz019 .-", min_size=1, max_size=30))
def test_garbage_values_never_escape_as_other_errors(junk):
    text = f"[model]\nname = harmonic\nx0 = {junk}\n"
    try:
        parse_config(text)
    except ConfigError as exc:
        assert exc.line in (None, 3)


def test_sigma_scan_report_and_matrix(tmp_path):
    out = tmp_path / "run"
    status = main(["--config", write(tmp_path, BASIC), "--out", str(out)])
    assert status == 0
    report = (out / "report.txt").read_text().splitlines()
    assert report[:3] == ["task = sigma-scan", "model = nonconvex_d1", "seed = 7"]
    assert report[-1] == "exit_status = 0"
    assert "events = 1" in report
    lines, M = read_tsv(out / "matrices" / "sigma_events.tsv")
    assert lines[0] == "# sigma_events 1x5"
    assert lines[1] == "# t\tt_lo\tt_hi\tdet_lo\tdet_hi"
    assert M[0, 0] == pytest.approx(np.arccosh(2.0), abs=1e-9)
    manifest = (out / "manifest.txt").read_text().splitlines()
    assert manifest[0].startswith("program = hamperturb ")
    assert "tol.rel_tol = 1e-11" in manifest
    assert manifest[-1] == "files = report.txt, matrices/sigma_events.tsv"


def test_runs_are_deterministic(tmp_path):
    cfg = write(tmp_path, BASIC)
    for name in ("a", "b"):
        assert main(["--config", cfg, "--out", str(tmp_path / name)]) == 0
    for rel in ("report.txt", "manifest.txt", "matrices/sigma_events.tsv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_matrix_values_round_trip_exactly(tmp_path):
    out = tmp_path / "run"
    assert main(["--config", write(tmp_path, BASIC), "--task", "controllability", "--out", str(out)]) == 0
    _, K0 = read_tsv(out / "matrices" / "K0.tsv")
    cfg = parse_config(BASIC)
    nf = build_normal_form(nonconvex_d1(), cfg.x0, 0.5)
    # %.17g text reproduces the double exactly
    assert K0[0, 0] == nf.K(0.0)[0, 0]
    lines, _ = read_tsv(out / "matrices" / "brackets.tsv")
    assert lines[0] == "# brackets 4x6"
    report = (out / "report.txt").read_text()
    assert "PASS  bracket span is all of sp(2d)" in report


def test_hypothesis_violation_exit_code(tmp_path):
    text = "[model]\nname = libration\n\n[task]\nname = analyze-orbit\n"
    out = tmp_path / "lib"
    assert main(["--config", write(tmp_path, text), "--out", str(out)]) == 2
    report = (out / "report.txt").read_text()
    assert "hypothesis violated: no neat time on the orbit" in report
    assert report.endswith("exit_status = 2\n")


def test_degenerate_start_point_exit_code(tmp_path):
    text = "[model]\nname = null_torus\n\n[task]\nname = normal-form\n"
    out = tmp_path / "nt"
    assert main(["--config", write(tmp_path, text), "--out", str(out)]) == 2
    assert "not fiberwise iso-energetically non-degenerate" in (out / "report.txt").read_text()


def test_numerical_failure_exit_code(tmp_path):
    # a shooting tolerance below round-off cannot be met
    text = (
        "[model]\nname = pendulum\nx0 = [0.0, 0.0, 2.5, 0.0]\nperiod = 3.2\n\n"
        "[task]\nname = analyze-orbit\n\n[tolerances]\nnewton = 1e-30\n"
    )
    out = tmp_path / "pend"
    assert main(["--config", write(tmp_path, text), "--out", str(out)]) == 1
    assert "numerical failure: ConvergenceError" in (out / "report.txt").read_text()


def test_config_errors_exit_three(tmp_path, capsys):
    path = write(tmp_path, "[model]\nname = harmonic\nx0 = [0, 0,, 1]\n[task]\nname = verify\n")
    assert main(["--config", path]) == 3
    assert "line 3:" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.ini")]) == 3
    assert main(["--config", write(tmp_path, "[model]\nname = harmonic\n", "notask.ini")]) == 3
    assert main(["--config", write(tmp_path, BASIC), "--tol-scale", "0"]) == 3


def test_randomized_tasks_need_a_seed(tmp_path, capsys):
    path = write(tmp_path, "[model]\nname = nonconvex_d1\n\n[task]\nname = verify\n")
    assert main(["--config", path, "--out", str(tmp_path / "v")]) == 3
    assert "seed" in capsys.readouterr().err
    assert not (tmp_path / "v").exists()
    # deterministic tasks fall back to seed 0
    cfg = write(tmp_path, "[model]\nname = nonconvex_d1\n\n[task]\nname = sigma-scan\nduration = 1.0\n", "s.ini")
    assert main(["--config", cfg, "--out", str(tmp_path / "s")]) == 0
    assert "seed = 0" in (tmp_path / "s" / "manifest.txt").read_text()


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, BASIC)
    proc = subprocess.run(
        [sys.executable, "-m", "hamperturb.cli", "--config", cfg, "--out", str(tmp_path / "sub"), "--seed", "3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "seed = 3" in (tmp_path / "sub" / "manifest.txt").read_text()
