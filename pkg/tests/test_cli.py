import json
import subprocess
import sys

import pytest

from stokes_fdm import cli
from stokes_fdm import geometry as geo
from stokes_fdm import solver


def run(argv):
    return cli.main([str(a) for a in argv])


def test_study_csv_is_byte_identical_across_runs(tmp_path, capsys):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert run(["study", "--example", 1, "--levels", "2..4", "--nu", "1,1e-3", "--out", out]) == cli.EXIT_OK
        outs.append((out / "example1.csv").read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert "2.8524E-05" in text
    header = text.splitlines()[0]
    assert "err_gradp_nu=0.001" in header and "runtime" not in header
    assert (tmp_path / "r0" / "example1_timings.csv").exists()
    assert "| level" in capsys.readouterr().out


def test_run_with_domain_file_dumps_fields(tmp_path):
    dom = tmp_path / "lshape.json"
    dom.write_text(geo.dump_domain(geo.lshape_domain()))
    code = run(["run", "--domain", dom, "--example", 3, "--level", 4, "--dump-fields", tmp_path / "f",
                "--format", "csv,md,json", "--out", tmp_path, "--split-components"])
    assert code == cli.EXIT_OK
    lines = (tmp_path / "f" / "example3_level4_fields.csv").read_text().splitlines()
    assert lines[0] == "x,y,u1,u2,px,py,err_u1,err_u2"
    assert len(lines) == 1 + 33 * 33 - 16 * 16
    data = json.loads((tmp_path / "example3_level4.json").read_text())
    assert data["rows"][0]["dropped"] > 0
    assert (tmp_path / "example3_level4.md").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["study", "--levels", "4..2"],
        ["study", "--levels", "3", "--nu", "-1"],
        ["study", "--levels", "2,3", "--format", "xlsx"],
        ["run", "--example", 2, "--level", 3],  # holes too close at h = 1/8
        ["run", "--example", 2, "--pressure", "cubic", "--level", 4],
        ["run", "--level", 2, "--domain", "missing.json"],
        ["run", "--level", 2, "--order", 5],
        ["run"],
    ],
)
def test_configuration_errors_exit_2(argv, tmp_path):
    err = tmp_path / "err.json"
    code = run(argv + ["--error-json", err] if argv != ["run"] else argv)
    assert code == cli.EXIT_CONFIG
    if argv != ["run"]:
        msg = json.loads(err.read_text())
        assert msg["exit_code"] == 2 and msg["error"]


def test_numerical_failure_exits_3_with_error_json(tmp_path, monkeypatch):
    def singular(*a, **k):
        raise solver.SingularMatrix("forced")

    monkeypatch.setattr(solver, "factor", singular)
    err = tmp_path / "e.json"
    assert run(["run", "--level", 2, "--error-json", err, "--out", tmp_path]) == cli.EXIT_NUMERIC
    assert json.loads(err.read_text())["error"] == "SingularMatrix"
    assert run(["study", "--levels", "2,3", "--error-json", err, "--out", tmp_path]) == cli.EXIT_NUMERIC


def test_dump_grid_and_export_matrix(tmp_path, capsys):
    assert run(["dump-grid", "--example", 3, "--level", 2, "--out", tmp_path]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["special"] == 2 and info["corner-adj"] == 8
    assert run(["export-matrix", "--level", 2, "--out", tmp_path]) == 0
    import scipy.io

    A = scipy.io.mmread(str(tmp_path / "A1_level2.mtx"))
    assert A.shape == (49, 49)


def test_thread_cap_and_console_script(tmp_path, monkeypatch):
    monkeypatch.setenv("STOKES_FDM_THREADS", "many")
    assert run(["dump-grid", "--level", 2, "--out", tmp_path]) == cli.EXIT_CONFIG
    monkeypatch.setenv("STOKES_FDM_THREADS", "1")
    assert run(["dump-grid", "--level", 2, "--out", tmp_path]) == 0
    proc = subprocess.run([sys.executable, "-m", "stokes_fdm.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "study" in proc.stdout


def test_level_parsing():
    assert cli.parse_levels("2..5") == [2, 3, 4, 5]
    assert cli.parse_levels("3,5") == [3, 5]
    for bad in ("5..2", "3,3", "0..2", ""):
        with pytest.raises(cli.ConfigError):
            cli.parse_levels(bad)
