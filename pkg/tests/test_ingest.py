import json
import urllib.error

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wlab import ingest
from wlab.characters import DirichletChar
from wlab.ingest import (
    ContentCache,
    FetchError,
    FormFile,
    FormFormatError,
    SchemaDrift,
    ValidationBlocked,
    arithmetic_to_normalized,
    dumps,
    fetch_remote,
    loads,
    normalized_to_arithmetic,
    save,
    validate,
)

CHI25 = DirichletChar.from_conrey(5, 2, 4)


def formfile_from(path) -> FormFile:
    return loads(path.read_text())


def test_round_trip_bit_identical(data_dir, tmp_path):
    src = data_dir / "form_25_4_0_0.txt"
    ff = formfile_from(src)
    out = tmp_path / "copy.txt"
    save(ff, out)
    assert out.read_bytes() == src.read_bytes()
    again = loads(out.read_text())
    assert np.array_equal(again.coefficients, ff.coefficients)


def test_all_shipped_files_validate(data_dir):
    for path in sorted(data_dir.glob("form_*.txt")):
        f = ingest.load(path)
        assert f.metadata["validation"].ok, path.name


def test_manifest_lists_every_file(data_dir):
    man = ingest.manifest(data_dir)
    listed = {n for s in man["spaces"] for n in s["files"]}
    assert listed == {p.name for p in data_dir.glob("form_*.txt")}
    for s in man["spaces"]:
        assert len(s["files"]) == s["dimension"]
    # level 9 has no primitive even newforms of weight 2: recorded as an empty space
    assert any(s["level"] == 9 and s["dimension"] == 0 for s in man["spaces"])


def test_a1_near_one_warns(data_dir, tmp_path):
    ff = formfile_from(data_dir / "form_25_4_0_0.txt")
    ff.coefficients = np.array(ff.coefficients)
    ff.coefficients[0] = 0.999999
    save(ff, tmp_path / "a1.txt")
    f = ingest.load(tmp_path / "a1.txt")
    rep = f.metadata["validation"]
    assert rep.ok
    assert any(c.name.startswith("a1") for c in rep.warnings)


def test_multiplicativity_violation_blocks(data_dir, tmp_path):
    ff = formfile_from(data_dir / "form_25_4_0_0.txt")
    ff.coefficients = np.array(ff.coefficients)
    ff.coefficients[5] += 1e-4  # a_6
    save(ff, tmp_path / "bad.txt")
    with pytest.raises(ValidationBlocked) as exc:
        ingest.load(tmp_path / "bad.txt")
    assert "multiplicativity" in [c.name for c in exc.value.report.failures]
    f = ingest.load(tmp_path / "bad.txt", strict=False)
    assert not f.metadata["validation"].ok


def test_ramified_unit_check(data_dir, tmp_path):
    ff = formfile_from(data_dir / "form_25_4_0_0.txt")
    ff.coefficients = np.array(ff.coefficients)
    ff.coefficients[4::5] *= 1.01  # a_5 and every multiple
    save(ff, tmp_path / "ram.txt")
    with pytest.raises(ValidationBlocked):
        ingest.load(tmp_path / "ram.txt")


def test_checksum_tamper(data_dir):
    text = (data_dir / "form_25_4_0_0.txt").read_text()
    tampered = text.replace("\n2 ", "\n2 0", 1)
    with pytest.raises(FormFormatError):
        loads(tampered)
    with pytest.raises(FormFormatError):
        loads(text.replace("#wlab-form v1", "#wlab-form v9"))


def test_rows_must_be_contiguous():
    ff = FormFile(25, 2, CHI25.to_dict(), 0, [1.0, 0.5])
    text = dumps(ff)
    lines = text.splitlines()
    lines[-1] = "3 0.5 0.0"
    # re-sign so that only the row check can fail
    body = [ln for ln in lines if not ln.startswith("checksum")]
    digest = ingest._digest(body)
    lines = [f"checksum: sha256:{digest}" if ln.startswith("checksum") else ln for ln in lines]
    with pytest.raises(FormFormatError):
        loads("\n".join(lines) + "\n")


@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), min_size=1, max_size=200))
def test_conversion_involution(vals):
    a = np.array(vals, dtype=complex)
    back = arithmetic_to_normalized(normalized_to_arithmetic(a))
    assert np.allclose(back, a, rtol=1e-15, atol=0)


def test_validate_report_fields(form25):
    rep = validate(form25)
    names = {c.name for c in rep.checks}
    assert {"a1", "multiplicativity", "hecke_recursion", "ramified_power", "deligne", "ramified_unit"} <= names
    json.dumps(rep.to_dict())


# ---------------------------------------------------------------------------
# remote client against an in-process fake


class FakeServer:
    def __init__(self, coeffs, fail_first=0, orbit_records=None, field="an_normalized"):
        self.coeffs = coeffs
        self.fail_first = fail_first
        self.calls = []
        self.field = field
        self.orbits = orbit_records if orbit_records is not None else [
            {"label": "25.2.d.a", "char_labels": [4, 9, 14, 19], "dim": 8, "hecke_orbit_code": 123}]

    def __call__(self, url):
        self.calls.append(url)
        if self.fail_first:
            self.fail_first -= 1
            raise urllib.error.URLError("temporary")
        if "/mf_newforms/" in url:
            return json.dumps({"data": self.orbits}).encode()
        vals = self.coeffs if self.field == "an_normalized" else normalized_to_arithmetic(self.coeffs)
        rec = {self.field: [[c.real, c.imag] for c in vals], "lfunction_label": "x"}
        return json.dumps({"data": [rec]}).encode()


def test_fetch_and_cache(form25, tmp_path):
    server = FakeServer(form25.coefficients)
    cache = ContentCache(tmp_path / "cache")
    got = fetch_remote(25, 2, CHI25, cache=cache, opener=server, endpoint="http://fake")
    assert len(got) == 1 and got[0].coefficients.size >= 2000
    assert np.allclose(got[0].coefficients, form25.coefficients)
    n = len(server.calls)
    again = fetch_remote(25, 2, CHI25, cache=cache, opener=server, endpoint="http://fake")
    assert len(server.calls) == n
    assert np.array_equal(again[0].coefficients, got[0].coefficients)
    offline = fetch_remote(25, 2, CHI25, cache=cache, offline=True, endpoint="http://fake")
    assert len(offline) == 1


def test_fetch_converts_arithmetic_field(form25, tmp_path):
    server = FakeServer(form25.coefficients, field="an")
    got = fetch_remote(25, 2, CHI25, cache=ContentCache(tmp_path), opener=server, endpoint="http://fake")
    assert np.allclose(got[0].coefficients, form25.coefficients, rtol=1e-13)


def test_fetch_retries_then_succeeds(form25, tmp_path):
    sleeps = []
    server = FakeServer(form25.coefficients, fail_first=2)
    got = fetch_remote(25, 2, CHI25, cache=ContentCache(tmp_path), opener=server, sleep=sleeps.append,
                       endpoint="http://fake")
    assert len(got) == 1
    assert sleeps == [1.0, 2.0]


def test_fetch_gives_up_after_three(tmp_path):
    server = FakeServer(np.ones(3), fail_first=10)
    with pytest.raises(FetchError):
        fetch_remote(25, 2, CHI25, cache=ContentCache(tmp_path), opener=server, sleep=lambda s: None,
                     endpoint="http://fake")
    assert len(server.calls) == 3


def test_fetch_offline_uncached(tmp_path):
    with pytest.raises(FetchError):
        fetch_remote(25, 2, CHI25, cache=ContentCache(tmp_path), offline=True, endpoint="http://fake")


def test_fetch_empty_space(tmp_path):
    server = FakeServer(np.ones(3), orbit_records=[])
    chi9 = DirichletChar.from_conrey(3, 2, 4)
    assert fetch_remote(9, 2, chi9, cache=ContentCache(tmp_path), opener=server, endpoint="http://fake") == []


def test_fetch_schema_drift(tmp_path):
    server = FakeServer(np.ones(3), orbit_records=[{"name": "no label"}])
    server.orbits = [{"char_labels": [4], "dim": 2}]
    with pytest.raises(SchemaDrift):
        fetch_remote(25, 2, CHI25, cache=ContentCache(tmp_path), opener=server, endpoint="http://fake")
    bad = FakeServer(np.ones(3), field="coefficients")
    with pytest.raises(SchemaDrift):
        fetch_remote(25, 2, CHI25, cache=ContentCache(tmp_path / "b"), opener=bad, endpoint="http://fake")


def test_cache_detects_corruption(tmp_path):
    cache = ContentCache(tmp_path)
    sha = cache.put("k", b"payload")
    (tmp_path / "objects" / sha).write_bytes(b"tampered")
    with pytest.raises(FetchError):
        cache.get("k")
