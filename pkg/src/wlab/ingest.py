"""Newform coefficient files, validation, and an optional remote fetcher.

File layout (UTF-8, line oriented)::

    #wlab-form v1
    level: 25
    ...                      key: value metadata
    checksum: sha256:<hex>   over every other line
    1 1.0 0.0                n re im, contiguous from 1
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .characters import DirichletChar
from .modforms import NewformData
from .padic import factorize

log = logging.getLogger(__name__)

HEADER = "#wlab-form v1"
MUST_TOL = 1e-6
SHOULD_TOL = 1e-9
A1_MUST_TOL = 1e-5  # decimal exports of a_1 may be off in the sixth digit
ENDPOINT_ENV = "WLAB_MF_ENDPOINT"
CACHE_ENV = "WLAB_CACHE_DIR"
DEFAULT_ENDPOINT = "https://www.lmfdb.org/api"


class FormFormatError(ValueError):
    pass


class ValidationBlocked(ValueError):
    def __init__(self, report: "ValidationReport"):
        super().__init__("validation failed: " + ", ".join(c.name for c in report.failures))
        self.report = report


class FetchError(RuntimeError):
    pass


class SchemaDrift(FetchError):
    pass


@dataclass
class FormFile:
    level: int
    weight: int
    character: dict | list
    embedding: int
    coefficients: list | np.ndarray
    label: str = ""
    l_half: complex | None = None
    petersson_reference: float | None = None
    source: str = ""
    extra: dict = field(default_factory=dict)

    def characters(self) -> tuple[DirichletChar, ...]:
        chars = self.character if isinstance(self.character, list) else [self.character]
        return tuple(DirichletChar.from_dict(c) for c in chars)


def _fmt(x: float) -> str:
    return repr(float(x))


def _body_lines(ff: FormFile) -> list[str]:
    lines = [HEADER, f"level: {ff.level}", f"weight: {ff.weight}",
             "character: " + json.dumps(ff.character, sort_keys=True),
             f"embedding: {ff.embedding}"]
    if ff.label:
        lines.append(f"label: {ff.label}")
    if ff.l_half is not None:
        lines.append(f"l_half: {_fmt(ff.l_half.real)} {_fmt(ff.l_half.imag)}")
    if ff.petersson_reference is not None:
        lines.append(f"petersson_reference: {_fmt(ff.petersson_reference)}")
    if ff.source:
        lines.append(f"source: {ff.source}")
    for k in sorted(ff.extra):
        lines.append(f"x-{k}: {ff.extra[k]}")
    coeffs = np.asarray(ff.coefficients, dtype=complex)
    lines += [f"{n} {_fmt(c.real)} {_fmt(c.imag)}" for n, c in enumerate(coeffs, start=1)]
    return lines


def _digest(lines: list[str]) -> str:
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def dumps(ff: FormFile) -> str:
    lines = _body_lines(ff)
    n_meta = next(i for i, ln in enumerate(lines) if ln[:1].isdigit())
    lines.insert(n_meta, f"checksum: sha256:{_digest(lines)}")
    return "\n".join(lines) + "\n"


def save(ff: FormFile, path) -> str:
    """Atomic write; returns the checksum."""
    text = dumps(ff)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return text.split("checksum: sha256:")[1].split("\n")[0]


def loads(text: str) -> FormFile:
    lines = text.rstrip("\n").split("\n")
    if not lines or lines[0] != HEADER:
        raise FormFormatError(f"missing header {HEADER!r}")
    meta: dict[str, str] = {}
    checksum = None
    body = [lines[0]]
    rows = []
    for ln in lines[1:]:
        if ln[:1].isdigit():
            rows.append(ln)
            body.append(ln)
            continue
        key, sep, val = ln.partition(": ")
        if not sep:
            raise FormFormatError(f"bad metadata line {ln!r}")
        if key == "checksum":
            checksum = val
            continue
        meta[key] = val
        body.append(ln)
    if checksum is None:
        raise FormFormatError("missing checksum")
    if checksum != f"sha256:{_digest(body)}":
        raise FormFormatError("checksum mismatch")
    coeffs = np.empty(len(rows), dtype=complex)
    for k, row in enumerate(rows, start=1):
        parts = row.split()
        if len(parts) != 3 or int(parts[0]) != k:
            raise FormFormatError(f"row {k} malformed or out of order")
        coeffs[k - 1] = complex(float(parts[1]), float(parts[2]))
    try:
        l_half = None
        if "l_half" in meta:
            re, im = meta["l_half"].split()
            l_half = complex(float(re), float(im))
        return FormFile(
            level=int(meta["level"]),
            weight=int(meta["weight"]),
            character=json.loads(meta["character"]),
            embedding=int(meta["embedding"]),
            coefficients=coeffs,
            label=meta.get("label", ""),
            l_half=l_half,
            petersson_reference=float(meta["petersson_reference"]) if "petersson_reference" in meta else None,
            source=meta.get("source", ""),
            extra={k[2:]: v for k, v in meta.items() if k.startswith("x-")},
        )
    except KeyError as exc:
        raise FormFormatError(f"missing field {exc}") from None


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tier: str  # "must" or "should"
    tol: float

    def __post_init__(self):
        object.__setattr__(self, "residual", float(self.residual))

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol

    @property
    def warn(self) -> bool:
        return self.passed and self.residual > SHOULD_TOL


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.tier == "must" and not c.passed]

    @property
    def warnings(self) -> list[Check]:
        return [c for c in self.checks if c.warn or (c.tier == "should" and not c.passed)]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {c.name: {"residual": c.residual, "tol": c.tol, "tier": c.tier, "passed": c.passed}
                for c in self.checks}


def _divisor_counts(M: int) -> np.ndarray:
    d = np.zeros(M + 1, dtype=np.int64)
    for k in range(1, M + 1):
        d[k::k] += 1
    return d


def validate(f: NewformData) -> ValidationReport:
    a = f.coefficients
    M = f.M
    checks = [Check("a1", abs(a[0] - 1), "must", A1_MUST_TOL)]

    # multiplicativity on coprime pairs m, n >= 2 with mn <= M
    worst = 0.0
    for m in range(2, int(math.isqrt(M)) + 1):
        n = np.arange(m + 1, M // m + 1)
        n = n[np.gcd(n, m) == 1]
        if n.size:
            r = np.abs(a[m * n - 1] - a[m - 1] * a[n - 1])
            worst = max(worst, float(r.max()))
    checks.append(Check("multiplicativity", worst, "must", MUST_TOL))

    # prime power recursions
    worst_rec = worst_ram = 0.0
    ram = factorize(f.level)
    p = 2
    while p <= M:
        if all(p % q for q in range(2, int(math.isqrt(p)) + 1)):
            ap = a[p - 1]
            prev, cur, pk = 1.0, ap, p
            chip = f.chi(p)
            while pk * p <= M:
                nxt = a[pk * p - 1]
                pred = ap * cur - chip * prev if p not in ram else ap * cur
                r = abs(nxt - pred)
                if p in ram:
                    worst_ram = max(worst_ram, r)
                else:
                    worst_rec = max(worst_rec, r)
                prev, cur, pk = cur, nxt, pk * p
        p += 1
    checks.append(Check("hecke_recursion", worst_rec, "must", MUST_TOL))
    checks.append(Check("ramified_power", worst_ram, "must", MUST_TOL))

    d = _divisor_counts(M)[1:]
    excess = float(np.max(np.abs(a) / d - 1.0))
    checks.append(Check("deligne", max(excess, 0.0), "must", MUST_TOL))

    if f.primitive_nebentypus and f.level > 1:
        r = max(abs(abs(a[q - 1]) - 1.0) for q in ram if q <= M)
        checks.append(Check("ramified_unit", r, "must", MUST_TOL))

    # SHOULD tier re-runs the MUST residuals at the tight tolerance
    checks += [Check(c.name + "_tight", c.residual, "should", SHOULD_TOL) for c in list(checks)]
    return ValidationReport(checks)


def to_newform(ff: FormFile) -> NewformData:
    return NewformData(
        level=ff.level,
        nebentypus=ff.characters(),
        coefficients=np.asarray(ff.coefficients, dtype=complex),
        source=ff.source,
        label=ff.label,
        l_half=ff.l_half,
        petersson_reference=ff.petersson_reference,
        metadata=dict(ff.extra),
    )


def load(path, *, strict: bool = True) -> NewformData:
    """Parse, checksum, and validate; a failed MUST check raises ValidationBlocked."""
    text = Path(path).read_text(encoding="utf-8")
    ff = loads(text)
    if ff.weight != 2:
        raise FormFormatError("only weight 2 is supported")
    f = to_newform(ff)
    report = validate(f)
    f.metadata["validation"] = report
    f.metadata["sha256"] = hashlib.sha256(text.encode()).hexdigest()
    if strict and not report.ok:
        raise ValidationBlocked(report)
    for w in report.warnings:
        log.warning("%s: %s residual %.3e", path, w.name, w.residual)
    return f


def load_space(directory, level: int, conrey_label: int) -> list[NewformData]:
    """All embeddings of all newforms of one character, by the data-set naming."""
    directory = Path(directory)
    files = sorted(directory.glob(f"form_{level}_{conrey_label}_*.txt"))
    return [load(p) for p in files]


def manifest(directory) -> dict:
    return json.loads((Path(directory) / "manifest.json").read_text())


# ---------------------------------------------------------------------------
# normalization


def arithmetic_to_normalized(c: np.ndarray, weight: int = 2) -> np.ndarray:
    n = np.arange(1, len(c) + 1, dtype=float)
    return np.asarray(c, dtype=complex) / n ** ((weight - 1) / 2.0)


def normalized_to_arithmetic(a: np.ndarray, weight: int = 2) -> np.ndarray:
    n = np.arange(1, len(a) + 1, dtype=float)
    return np.asarray(a, dtype=complex) * n ** ((weight - 1) / 2.0)


# ---------------------------------------------------------------------------
# remote


class ContentCache:
    """Content-addressed store: objects/<sha256>, index maps request key -> sha."""

    def __init__(self, root=None):
        root = root or os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "wlab"
        self.root = Path(root)
        (self.root / "objects").mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.json"

    def _index(self) -> dict:
        if self.index_path.exists():
            return json.loads(self.index_path.read_text())
        return {}

    def _atomic(self, path: Path, data: bytes):
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)

    def get(self, key: str) -> bytes | None:
        sha = self._index().get(key)
        if sha is None:
            return None
        path = self.root / "objects" / sha
        if not path.exists():
            return None
        data = path.read_bytes()
        if hashlib.sha256(data).hexdigest() != sha:
            raise FetchError(f"cache object {sha} is corrupt")
        return data

    def put(self, key: str, data: bytes) -> str:
        sha = hashlib.sha256(data).hexdigest()
        obj = self.root / "objects" / sha
        if not obj.exists():
            self._atomic(obj, data)
        idx = self._index()
        idx[key] = sha
        self._atomic(self.index_path, json.dumps(idx, sort_keys=True).encode())
        return sha


def _http_get(url: str, timeout: float = 30.0) -> bytes:
    req = urllib.request.Request(url, headers={"User-Agent": "wlab/0.1"})
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        return resp.read()


def _get_with_retry(url: str, attempts: int = 3, backoff: float = 1.0, opener=_http_get, sleep=time.sleep) -> bytes:
    last = None
    for k in range(attempts):
        try:
            return opener(url)
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            last = exc
            if k + 1 < attempts:
                sleep(backoff * 2**k)
    raise FetchError(f"{url}: {last}")


def _records(payload: bytes) -> list[dict]:
    try:
        doc = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise SchemaDrift(f"not JSON: {exc}") from None
    if not isinstance(doc, dict) or "data" not in doc or not isinstance(doc["data"], list):
        raise SchemaDrift("expected an object with a 'data' list")
    return doc["data"]


def _embedding_coefficients(emb: dict, weight: int) -> np.ndarray:
    """a_n from an embedding record: normalized pairs as is, arithmetic pairs converted."""
    try:
        if "an_normalized" in emb:
            return np.array([complex(float(r), float(i)) for r, i in emb["an_normalized"]])
        if "an" in emb:
            c = np.array([complex(float(r), float(i)) for r, i in emb["an"]])
            return arithmetic_to_normalized(c, weight)
    except (TypeError, ValueError) as exc:
        raise SchemaDrift(f"malformed coefficient pairs: {exc}") from None
    raise SchemaDrift("embedding record has neither 'an_normalized' nor 'an'")


def fetch_remote(level: int, weight: int, character: DirichletChar, embedding: int = 0, *,
                 min_coeffs: int = 2000, endpoint: str | None = None, offline: bool = False,
                 cache: ContentCache | None = None, opener=_http_get, sleep=time.sleep) -> list[FormFile]:
    """Newforms of S_weight(level, chi) with complex embeddings from the database API.

    Returns an empty list when the space has no newforms (that is data, not an error).
    """
    endpoint = (endpoint or os.environ.get(ENDPOINT_ENV) or DEFAULT_ENDPOINT).rstrip("/")
    cache = cache or ContentCache()
    orbit_query = urllib.parse.urlencode({
        "level": level, "weight": weight, "char_conductor": character.modulus.q ** int(character.conductor_exponent > 0),
        "_format": "json", "_fields": "label,char_labels,dim,hecke_orbit_code",
    })

    def get(url: str) -> bytes:
        hit = cache.get(url)
        if hit is not None:
            return hit
        if offline:
            raise FetchError(f"offline and not cached: {url}")
        data = _get_with_retry(url, opener=opener, sleep=sleep)
        cache.put(url, data)
        return data

    forms = _records(get(f"{endpoint}/mf_newforms/?{orbit_query}"))
    label = character.conrey_label
    out = []
    for rec in forms:
        try:
            if label not in [int(x) for x in rec["char_labels"]]:
                continue
            code = rec["hecke_orbit_code"]
            flabel = rec["label"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaDrift(f"newform record missing {exc}") from None
        q = urllib.parse.urlencode({
            "hecke_orbit_code": code, "conrey_index": label, "embedding_index": embedding + 1,
            "_format": "json", "_fields": "an_normalized,an,lfunction_label",
        })
        embs = _records(get(f"{endpoint}/mf_hecke_cc/?{q}"))
        for emb in embs:
            an = _embedding_coefficients(emb, weight)
            if an.size < min_coeffs:
                log.warning("%s: only %d coefficients (wanted %d)", flabel, an.size, min_coeffs)
            out.append(FormFile(level=level, weight=weight, character=character.to_dict(), embedding=embedding,
                                coefficients=an, label=f"{flabel}.{label}.{embedding}",
                                source=f"{endpoint}/mf_hecke_cc hecke_orbit_code={code}"))
    return out
