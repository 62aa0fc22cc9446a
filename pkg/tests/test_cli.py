import json

from qslab.cli import main


def test_local(capsys):
    assert main(["local", "--p", "3", "--m", "2", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["#X(Z/p^2)"] == 1080 and out["sigma_p"] == "40/39"


def test_count(capsys):
    assert main(["count", "--B", "8"]) == 0
    assert "count: 1000" in capsys.readouterr().out
    assert main(["count", "--B", "8", "--condition", "3:1:x0_nonzero"]) == 0
    assert "count: 742" in capsys.readouterr().out


def test_expsum_and_sieve(capsys):
    assert main(["expsum", "--series", "--json"]) == 0
    assert abs(float(json.loads(capsys.readouterr().out)["singular_series"]) - 0.7404175) < 1e-6
    assert main(["expsum", "--q", "4", "--c", "1,0,0,0,0", "--mode", "exact"]) == 0
    assert main(["sieve", "--B", "8", "--xi", "6", "--condition", "3:1:alternate",
                 "--condition", "5:1:alternate"]) == 0
    assert "majorant" in capsys.readouterr().out


def test_exit_codes(tmp_path, capsys):
    assert main(["local", "--form", "diag:1,1", "--p", "3"]) == 2
    assert main(["count", "--B", "3000", "--budget", "1000"]) == 3
    assert main(["count", "--B", "3", "--condition", "2:1:all"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"scenario": "baseline", "B": [8, 4]}))
    assert main(["experiment", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_experiment(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"schema_version": 1, "scenario": "thin1", "B": [4, 8, 16, 32],
                                "divisor": ["x0"]}))
    assert main(["experiment", "--config", str(conf), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "report.json").exists()


def test_expsum_exact_prints_integer(capsys):
    # S_4(0)/4^5 = -1/4 for the default form
    assert main(["expsum", "--q", "4", "--mode", "exact", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == "-256"
