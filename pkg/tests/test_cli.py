import json

import pytest

from pluridyn import __version__
from pluridyn.cli import main
from pluridyn.endomorphism import perturbed_power_map
from pluridyn.regions import region_to_text, torus_complement


def _summary(out, name):
    return json.loads((out / f"{name}.json").read_text())


def test_validate_map_ok(tmp_path):
    assert main(["validate-map", "--nodes", "200", "--out", str(tmp_path)]) == 0
    s = _summary(tmp_path, "validate_map")
    assert s["status"] == "ok" and s["ok"] and s["d"] == 2


def test_map_file_is_read(tmp_path):
    mp = tmp_path / "f.map"
    mp.write_text(perturbed_power_map(0.1).to_text())
    assert main(["green", "--map", str(mp), "--n", "4", "--nodes", "50", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "green.json").exists()


def test_bad_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["green", "--bogus"])
    assert e.value.code == 1
    assert capsys.readouterr().err.startswith("ERROR cli usage")


def test_malformed_map_file(tmp_path, capsys):
    mp = tmp_path / "bad.map"
    mp.write_text("pmap k=2 d=2\nnot a monomial\n")
    assert main(["validate-map", "--map", str(mp), "--out", str(tmp_path)]) == 1
    assert "MapFormatError" in capsys.readouterr().err


def test_malformed_region_file(tmp_path, capsys):
    rp = tmp_path / "bad.region"
    rp.write_text("region nope\n")
    assert main(["check-region", "--region", str(rp), "--out", str(tmp_path)]) == 1
    assert "RegionFormatError" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["green", "--map", str(tmp_path / "absent.map"), "--out", str(tmp_path)]) == 1


def test_torus_region_fails_star_shape(tmp_path, capsys):
    rp = tmp_path / "torus.region"
    rp.write_text(region_to_text(torus_complement(2.0)))
    assert main(["check-region", "--region", str(rp), "--nodes", "200", "--out", str(tmp_path)]) == 2
    assert "ERROR attractor" in capsys.readouterr().err
    s = _summary(tmp_path, "check_region")
    assert s["status"] == "hypothesis_failed" and s["star_shaped"] is False


def test_resultant_overflow_exit_three(tmp_path, capsys):
    assert main(["nu", "--mode", "exact", "--n", "5", "--nodes", "2", "--out", str(tmp_path)]) == 3
    assert "ResultantOverflow" in capsys.readouterr().err


def test_report_collects_runs(tmp_path):
    main(["validate-map", "--nodes", "100", "--out", str(tmp_path)])
    main(["green", "--n", "3", "--nodes", "40", "--out", str(tmp_path)])
    assert main(["report", "--out", str(tmp_path)]) == 0
    s = _summary(tmp_path, "report")
    assert s["runs"] == ["green", "validate_map"]
    assert (tmp_path / "report.csv").read_text().startswith("run,quantity,value")


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
    assert __version__ in capsys.readouterr().out
