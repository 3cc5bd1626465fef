import json
import subprocess
import sys

import pytest

from copocert.cli import EXIT_INDETERMINATE, EXIT_INPUT, EXIT_NOT_FOUND, EXIT_OK, EXIT_VERIFY, main
from copocert.copositive import horn
from copocert.graphs import complete, cycle, write_graph
from copocert.symmat import SymmetricMatrix, write_matrix


@pytest.fixture
def horn_file(tmp_path):
    p = tmp_path / "horn.txt"
    write_matrix(p, horn())
    return p


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_certify_horn_exact_and_fresh_verify(tmp_path, horn_file, capsys):
    cert = tmp_path / "horn.cert"
    code, out, _ = run(capsys, "certify", str(horn_file), "--exact", "--out", str(cert))
    assert code == EXIT_OK
    assert "Level 1" in out and "exact: verified r=1" in out
    proc = subprocess.run(
        [sys.executable, "-m", "copocert.cli", "verify", str(cert)], capture_output=True, text=True
    )
    assert proc.returncode == EXIT_OK, proc.stderr
    assert "verified" in proc.stdout


def test_certify_identity_level_zero(tmp_path, capsys):
    p = tmp_path / "eye.txt"
    write_matrix(p, SymmetricMatrix.identity(3))
    code, out, _ = run(capsys, "certify", str(p), "--r-max", "1")
    assert code == EXIT_OK and "Level 0" in out


def test_certify_not_found(tmp_path, capsys):
    p = tmp_path / "neg.txt"
    write_matrix(p, SymmetricMatrix.identity(2).scaled(-1))
    code, out, _ = run(capsys, "certify", str(p), "--r-max", "1")
    assert code == EXIT_NOT_FOUND and "NotFoundUpTo 1" in out


def test_tampered_certificate(tmp_path, horn_file, capsys):
    cert = tmp_path / "horn.cert"
    assert run(capsys, "certify", str(horn_file), "--exact", "--out", str(cert))[0] == EXIT_OK
    lines = cert.read_text().splitlines()
    k = next(i for i, ln in enumerate(lines) if " ; " in ln)
    lines[k] = "7 ; " + lines[k].split(" ; ", 1)[1]
    cert.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "verify", str(cert))
    assert code == EXIT_VERIFY and "FAILED" in out


def test_malformed_inputs(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n3\n")
    assert run(capsys, "certify", str(bad))[0] == EXIT_INPUT
    assert run(capsys, "verify", str(bad))[0] == EXIT_INPUT
    assert run(capsys, "verify", str(tmp_path / "missing.cert"))[0] == EXIT_INPUT
    assert run(capsys, "theta", str(bad), "--r", "1")[0] == EXIT_INPUT
    assert run(capsys, "horn", "--d", "1,1,0,1,1")[0] == EXIT_INPUT
    assert run(capsys, "horn", "--d", "1,1,1")[0] == EXIT_INPUT
    assert run(capsys, "horn", "--d", "1,x,1,1,1")[0] == EXIT_INPUT
    assert run(capsys, "sweep", "--random", "5,3")[0] == EXIT_INPUT
    assert run(capsys, "bogus")[0] == EXIT_INPUT


def test_horn_condition_true(tmp_path, capsys):
    out_path = tmp_path / "h.cert"
    code, out, _ = run(capsys, "horn", "--d", "1,2,1,1,1", "--out", str(out_path))
    assert code == EXIT_OK and "9 squares" in out
    assert run(capsys, "verify", str(out_path))[0] == EXIT_OK


def test_horn_condition_false_searches(capsys):
    code, out, _ = run(capsys, "horn", "--d", "1,3,1,1,1", "--r-max", "1")
    assert code == EXIT_NOT_FOUND
    assert "cyclic condition fails at i = [2]" in out


def test_theta(tmp_path, capsys):
    p = tmp_path / "c5.g"
    write_graph(cycle(5), p)
    code, out, _ = run(capsys, "theta", str(p), "--r", "1")
    assert code == EXIT_OK and "alpha = 2" in out
    code, out, _ = run(capsys, "theta", str(p), "--r", "0")
    assert code == EXIT_NOT_FOUND and "differ" in out


def test_sweep_directory(tmp_path, capsys):
    d = tmp_path / "graphs"
    d.mkdir()
    write_graph(cycle(5), d / "c5.g")
    write_graph(complete(3), d / "k3.g")
    code, out, _ = run(capsys, "--no-timings", "sweep", "--graphs", str(d), "--r-max", "1")
    assert code == EXIT_OK
    assert "2 graphs, 0 candidates" in out
    assert out.index("graph=c5.g") < out.index("graph=k3.g")


def test_sweep_empty_directory(tmp_path, capsys):
    (tmp_path / "none").mkdir()
    code, out, _ = run(capsys, "sweep", "--graphs", str(tmp_path / "none"))
    assert code == EXIT_OK and "0 graphs" in out


def test_reports_are_deterministic(capsys):
    argv = ["--no-timings", "--json", "sweep", "--random", "4,5,3", "--r-max", "1"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
    doc = json.loads(first[1])
    assert doc["seed"] == 3 and "timings" not in doc and len(doc["rows"]) == 5


def test_parallel_sweep_matches_serial(capsys):
    base = ["--no-timings", "sweep", "--random", "5,4,11", "--r-max", "1"]
    serial = run(capsys, *base)[1].splitlines()
    parallel = run(capsys, *base, "--jobs", "2")[1].splitlines()
    assert serial[1:] == parallel[1:]


def test_indeterminate_exit_is_distinct():
    assert len({EXIT_OK, EXIT_INPUT, EXIT_NOT_FOUND, EXIT_INDETERMINATE, EXIT_VERIFY}) == 5


def test_horn_condition_false_exact_level_two(tmp_path, capsys):
    out_path = tmp_path / "h2.cert"
    code, out, _ = run(capsys, "horn", "--d", "1,3,1,1,1", "--r-max", "3", "--exact", "--out", str(out_path))
    assert code == EXIT_OK and "level: Level 2" in out
    assert run(capsys, "verify", str(out_path))[0] == EXIT_OK
