import json
import shutil
import subprocess

import pytest

from delos.cli import corpus_text, main
from delos.report import validate_report
from delos.sysfile import parse_system


@pytest.fixture
def corpus(tmp_path):
    def write(name):
        p = tmp_path / name
        p.write_text(corpus_text(name), encoding="utf-8")
        return str(p)
    return write


def test_cc_reports_single_row(corpus, capsys):
    assert main(["cc", corpus("killing-n2.sys")]) == 0
    out = capsys.readouterr().out
    assert "cc_rows: 1" in out
    assert "1/2*e1[2,2] - e2[1,2] + 1/2*e3[1,1]" in out


def test_adjoint_detects_self_adjointness(corpus, capsys):
    assert main(["adjoint", corpus("einstein-n4.sys")]) == 0
    assert "self_adjoint: yes" in capsys.readouterr().out


def test_partest_exit_codes(corpus, capsys):
    assert main(["partest", corpus("pendulum.sys"), "--stages", "ext1+ext2",
                 "--expect", "parametrizable"]) == 0
    capsys.readouterr()
    assert main(["partest", corpus("pendulum-equal.sys"),
                 "--expect", "parametrizable"]) == 2
    out = capsys.readouterr().out
    assert "th1 - th2 annihilated by l*d1*d1 + g" in out
    assert "parametrizable: no" in out


def test_dims_chain(corpus, capsys):
    assert main(["dims", corpus("killing-n3.sys")]) == 0
    out = capsys.readouterr().out
    assert "chain: 3 6 6 3" in out
    assert "diff_rank: 3" in out


def test_involution_and_expect_mismatch(corpus, capsys):
    assert main(["involution", corpus("contact-n3.sys")]) == 0
    assert "involutive: yes" in capsys.readouterr().out
    assert main(["involution", corpus("contact-n3-r1.sys"),
                 "--expect", "involutive"]) == 2


def test_complete_traces_added_equation(corpus, capsys):
    assert main(["complete", corpus("contact-n3-r1.sys")]) == 0
    out = capsys.readouterr().out
    assert "added_equations: 1" in out
    assert "-xi1[1] + 2*x3*xi2[1] + xi2[2] + xi3[3]" in out
    assert "involutive: yes" in out


def test_geom_outputs_parse_back(capsys):
    assert main(["geom", "killing", "--metric", "euclidean", "--n", "3"]) == 0
    text = capsys.readouterr().out
    sys = parse_system(text)
    assert sys.matrix.rows == 6
    assert main(["geom", "contact", "--omega", "1,-x3,0"]) == 0
    out = capsys.readouterr().out
    assert "# vessiot: 1" in out
    assert parse_system(out).m == 3


def test_geom_weyl_split(tmp_path, capsys):
    n = 3
    t = [[[["0"] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for l in range(n):
            if k == l:
                continue
            for i in range(n):
                for j in range(i + 1, n):
                    v = (k - l) * (i + j + 1)
                    t[k][l][i][j] = str(v)
                    t[k][l][j][i] = str(-v)
    path = tmp_path / "rho.json"
    path.write_text(json.dumps(t), encoding="utf-8")
    assert main(["geom", "weyl-split", "--n", "3", "--input", str(path)]) == 0
    out = capsys.readouterr().out
    assert "sigma_trace_free: yes" in out


def test_selftest_filter(capsys):
    assert main(["selftest", "--filter", "killing"]) == 0
    out = capsys.readouterr().out
    assert "killing-n2.sys" in out and "PASS" in out
    assert "failed: 0" in out


def test_json_report_is_schema_valid_and_deterministic(corpus, capsys,
                                                       tmp_path):
    path = corpus("curl-n3.sys")
    rp = tmp_path / "r.json"
    assert main(["cc", path, "--format", "json", "--report", str(rp)]) == 0
    first = json.loads(capsys.readouterr().out)
    validate_report(first)
    on_disk = json.loads(rp.read_text(encoding="utf-8"))
    validate_report(on_disk)
    assert main(["cc", path, "--format", "json"]) == 0
    second = json.loads(capsys.readouterr().out)
    first.pop("timing"), second.pop("timing"), on_disk.pop("timing")
    assert first == second == on_disk


def test_errors_exit_one(capsys, tmp_path):
    assert main(["cc", str(tmp_path / "missing.sys")]) == 1
    bad = tmp_path / "bad.sys"
    bad.write_text("coords: x1\nunknowns: u\nequations:\n  u[2] = 0\n",
                   encoding="utf-8")
    assert main(["cc", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "line 4" in err


def test_console_script_installed():
    exe = shutil.which("delos")
    assert exe, "console entry point not on PATH"
    res = subprocess.run([exe, "selftest", "--filter", "grad"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0
    assert "PASS" in res.stdout
