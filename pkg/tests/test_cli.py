import json
import math
import subprocess
import sys

import numpy as np
import pytest

from timeops.cli import (
    EXIT_CONFIG,
    EXIT_MISMATCH,
    EXIT_OK,
    ConfigError,
    MatrixFormatError,
    RunConfig,
    build_config,
    dump_matrix,
    emit_plotdata,
    load_matrix,
    main,
    read_config_file,
    write_table_csv,
)
from timeops.operators import Basis, OperatorMatrix
from timeops.report import CheckReport
from timeops.su11_fock import ModelParams, verify_similarity_19


def test_defaults_and_precedence(tmp_path):
    cfg = build_config(env={})
    assert cfg.out == "timeops-out" and cfg.g == 2.0 and cfg.N == 64
    path = tmp_path / "run.cfg"
    path.write_text("# comment\ng = 8\nN = 32\nbranch = principal, positive\n")
    file_values = read_config_file(path)
    cfg = build_config(file_values, {"N": "48", "g": None}, env={"TIMEOPS_DEFAULT_OUT": "/x"})
    assert (cfg.g, cfg.N, cfg.out) == (8.0, 48, "/x")
    assert cfg.branch == ("principal", "positive")
    assert build_config({"out": "a"}, {"out": "b"}, env={"TIMEOPS_DEFAULT_OUT": "c"}).out == "b"


@pytest.mark.parametrize(
    "values,field",
    [
        ({"suite": "nope"}, "suite"),
        ({"omega": "-1"}, "omega"),
        ({"g": "abc"}, "g"),
        ({"N": "4"}, "N"),
        ({"branch": "upper"}, "branch"),
        ({"prefactor": "x"}, "prefactor"),
        ({"parallel": "maybe"}, "parallel"),
        ({"colour": "red"}, "colour"),
    ],
)
def test_invalid_config_names_field(values, field):
    with pytest.raises(ConfigError) as exc:
        build_config(values, env={})
    assert exc.value.field == field


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("g 2\n")
    with pytest.raises(ConfigError):
        read_config_file(bad)
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.cfg")


def test_all_expands_to_every_suite():
    assert build_config({"suite": "all"}, env={}).suites == RunConfig().suites


def _random_matrix(n=7):
    rng = np.random.default_rng(3)
    a = rng.standard_normal((n, n)) * 10.0 ** rng.integers(-300, 300, (n, n))
    b = rng.standard_normal((n, n))
    a[0, 0], b[0, 0] = -0.0, math.pi
    return OperatorMatrix(a + 1j * b, Basis("fock", (1.25,)))


def test_dump_load_bit_identical(tmp_path):
    m = _random_matrix()
    path = dump_matrix(m, tmp_path / "m.txt", 1.25, 1.0)
    header = path.read_text().splitlines()[0]
    assert header == "# basis=fock dim=7 k=1.25 omega=1.0"
    back, meta = load_matrix(path)
    assert back.entries.tobytes() == m.entries.tobytes()
    assert meta["k"] == 1.25 and back.basis == m.basis


def test_truncated_matrix_file(tmp_path):
    path = dump_matrix(_random_matrix(), tmp_path / "m.txt", 1.25, 1.0)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(MatrixFormatError) as exc:
        load_matrix(path)
    assert "expected 7 rows" in str(exc.value)
    path.write_text("\n".join([lines[0]] + [l.rsplit(" ", 1)[0] for l in lines[1:]]) + "\n")
    with pytest.raises(MatrixFormatError):
        load_matrix(path)


def test_plotdata(tmp_path):
    rep = verify_similarity_19(ModelParams())
    (csv,) = emit_plotdata(rep, tmp_path)
    rows = csv.read_text().splitlines()
    assert rows[0] == "resolution,residual"
    assert [float(r.split(",")[0]) for r in rows[1:]] == [32.0, 64.0, 96.0, 128.0]
    empty = write_table_csv([], tmp_path / "empty.csv")
    assert empty.read_text() == "resolution,residual\n"
    assert emit_plotdata(CheckReport("none"), tmp_path) == []


def test_algebra_suite_exit_and_casimir(tmp_path, capsys):
    assert main(["run", "--suite", "algebra", "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "algebra.json").read_text())
    rows = {r["label"]: r for rep in doc["reports"] for r in rep["residuals"]}
    assert rows["casimir interior value"]["value"] == pytest.approx(0.3125, abs=1e-12)
    assert (tmp_path / "summary.txt").read_text().rstrip().endswith("exit status 0")


def test_mismatch_exit_code(tmp_path):
    # the exp(omega K) similarity guard was frozen at g = 2; g = 8 exceeds it
    assert main(["run", "--suite", "algebra", "--g", "8", "--out", str(tmp_path)]) == EXIT_MISMATCH


def test_config_exit_code(tmp_path, capsys):
    assert main(["run", "--suite", "bogus", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "suite" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["run", "--no-such-flag"])
    assert exc.value.code == EXIT_CONFIG


def test_timeop_both_branches(tmp_path):
    code = main(["run", "--suite", "timeop", "--branch", "principal,positive", "--out", str(tmp_path)])
    assert code == EXIT_OK
    mats = sorted(p.name for p in (tmp_path / "matrices").iterdir())
    assert mats == ["T_positive_as-written.txt", "T_principal_as-written.txt"]
    table = tmp_path / "plotdata" / "timeop__branch_difference__diagonal_difference.csv"
    assert len(table.read_text().splitlines()) == 17


def test_dump_t_command(tmp_path):
    assert main(["dump-t", "--g", "2", "--out", str(tmp_path)]) == EXIT_OK
    m, meta = load_matrix(tmp_path / "T_principal_as-written.txt")
    assert meta["k"] == 1.25 and m.dim == 16
    assert m.entries[0, 1] == pytest.approx(-0.1342j, abs=5e-5)


def test_sweep(tmp_path):
    code = main(["sweep", "--suite", "coherent", "--param", "g", "--values", "0.5,2", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "g_0.5" / "coherent.json").exists()
    assert (tmp_path / "sweep.txt").read_text().count("exit status 0") == 2
    assert main(["sweep", "--param", "branch", "--values", "a", "--out", str(tmp_path)]) == EXIT_CONFIG


def _tree(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_determinism_with_parallel(tmp_path):
    args = ["run", "--suite", "algebra,coherent,timeop", "--branch", "principal,positive"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b"), "--parallel"]) == EXIT_OK
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_console_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "timeops.cli", "run", "--suite", "coherent", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
    assert "resolution_of_identity" in out.stdout
