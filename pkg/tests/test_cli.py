import json

import numpy as np
import pytest

from wlab import cli, ingest


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = cli.main(["--out", str(out), *argv])
    return code, out


def test_local_exit_ok_and_byte_stable(tmp_path):
    code, a = run(tmp_path, "local", "--p", "3", "--v-range=-3,0", name="a.json")
    assert code == cli.EXIT_OK
    code, b = run(tmp_path, "local", "--p", "3", "--v-range=-3,0", name="b.json")
    ja, jb = json.loads(a.read_text()), json.loads(b.read_text())
    assert ja["summary"]["mismatches"] == 0
    # only the output path differs between the two configs
    ja["header"]["config"]["out"] = jb["header"]["config"]["out"] = None
    ja["header"].pop("config_hash"), jb["header"].pop("config_hash")
    assert ja == jb


def test_identical_invocations_identical_bytes(tmp_path):
    out = tmp_path / "r.csv"
    cli.main(["--out", str(out), "h-table", "--p", "3", "--c", "2"])
    first = out.read_bytes()
    cli.main(["--out", str(out), "h-table", "--p", "3", "--c", "2"])
    assert out.read_bytes() == first
    assert first.startswith(b"# {")


def test_check_failure_exit_code(tmp_path):
    # a negative tolerance makes every comparison disagree
    code, out = run(tmp_path, "h-table", "--p", "3", "--c", "2", "--tol", "-1")
    assert code == cli.EXIT_CHECK_FAILED
    assert json.loads(out.read_text())["summary"]["disagreements"] > 0


def test_validation_blocked_exit_code(data_dir, tmp_path):
    ff = ingest.loads((data_dir / "form_25_4_0_0.txt").read_text())
    ff.coefficients = np.array(ff.coefficients)
    ff.coefficients[5] += 1e-3
    bad = tmp_path / "bad.txt"
    ingest.save(ff, bad)
    code, _ = run(tmp_path, "global", "eval", "--form", str(bad))
    assert code == cli.EXIT_VALIDATION


def test_global_eval_records_inputs(data_dir, tmp_path):
    form = data_dir / "form_25_4_0_0.txt"
    code, out = run(tmp_path, "global", "eval", "--form", str(form))
    assert code == cli.EXIT_OK
    doc = json.loads(out.read_text())
    assert ingest.file_digest(form) in doc["header"]["inputs"].values()
    assert doc["summary"]["difference"] < 1e-8


def test_config_file_merge(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# h table run\np = \"3\"\nc = \"2\"\n")
    code, out = run(tmp_path, "--config", str(cfg), "h-table")
    assert code == cli.EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["header"]["config"]["params"]["c"] == "2"
    assert {r["c"] for r in doc["rows"]} == {2}
    # explicit flags win over the file
    code, out = run(tmp_path, "--config", str(cfg), "h-table", "--c", "3", name="o2.json")
    assert {r["c"] for r in json.loads(out.read_text())["rows"]} == {3}


def test_arch_discrete(tmp_path):
    code, out = run(tmp_path, "arch", "--series", "discrete", "--grid", "2", "1000", "6")
    assert code == cli.EXIT_OK
    rows = json.loads(out.read_text())["rows"]
    assert rows[0]["parameter"] == 2


def test_mvalue_and_certify(tmp_path, data_dir):
    code, out = run(tmp_path, "mvalue", "--level", "25", "--chi", "4", "--data", str(data_dir))
    assert code == cli.EXIT_OK
    code, out = run(tmp_path, "certify", "--data", str(data_dir), "--level", "25", name="c.json")
    assert code == cli.EXIT_OK
    assert json.loads(out.read_text())["summary"]["failed"] == 0


def test_fetch_offline_without_cache_fails(tmp_path, monkeypatch):
    monkeypatch.setenv("WLAB_CACHE_DIR", str(tmp_path / "cache"))
    with pytest.raises(ingest.FetchError):
        cli.main(["fetch", "--level", "25", "--char-orbit", "4", "--offline", "--data", str(tmp_path / "d")])
