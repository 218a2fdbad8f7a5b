"""Command line front end: ``wlab {local,h-table,arch,fetch,global,mvalue,certify}``.

Every run writes a report whose header carries the full run configuration,
its hash, and the sha256 of every input file, so identical inputs give
byte-identical outputs. Exit codes: 0 ok, 2 validation blocked, 3 a checked
claim failed.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import ingest
from . import mean_values as mv
from . import modforms as mf
from . import whittaker_arch as wa
from . import whittaker_local as wl
from .characters import DirichletChar, UnitaryCharacter, enumerate_chars
from .padic import PrimePower

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CHECK_FAILED = 3

log = logging.getLogger("wlab")


@dataclass
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    offline: bool = False
    out: str | None = None

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


@dataclass
class Report:
    config: RunConfig
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)  # path -> sha256

    def header(self) -> dict:
        return {"wlab_version": __version__, "config": json.loads(self.config.canonical()),
                "config_hash": self.config.hash, "inputs": dict(sorted(self.inputs.items()))}

    def to_json(self) -> str:
        doc = {"header": self.header(), "summary": self.summary, "rows": self.rows}
        return json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(_jsonable(self.header()), sort_keys=True) + "\n")
        if self.rows:
            cols = list(self.rows[0].keys())
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for row in self.rows:
                w.writerow({k: _fmt_cell(row.get(k)) for k in cols})
        return buf.getvalue()

    def write(self, out: str | None):
        if out is None:
            sys.stdout.write(self.to_json())
            return
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv() if path.suffix == ".csv" else self.to_json())


def _fmt_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}j"
    return v


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


# ---------------------------------------------------------------------------
# config


def read_config(path: str | None) -> dict:
    """key = value lines; '#' comments; values parsed as JSON when possible."""
    if not path:
        return {}
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"bad config line: {raw!r}")
        val = val.strip()
        try:
            out[key.strip().replace("-", "_")] = json.loads(val)
        except json.JSONDecodeError:
            out[key.strip().replace("-", "_")] = val.strip("\"'")
    return out


def _ints(s) -> list[int]:
    if isinstance(s, list):
        return [int(v) for v in s]
    s = str(s).strip()
    if not s:
        return []
    out = []
    for part in s.split(","):
        if ".." in part:
            a, b = part.split("..")
            out += list(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_local(args, cfg: RunConfig) -> Report:
    rep = Report(cfg)
    v_lo, v_hi = _ints(args.v_range)
    bad = 0
    for p in _ints(args.p):
        for chi in enumerate_chars(PrimePower(p, 2), primitive_only=True, even_only=True):
            pi = wl.PrincipalSeries.from_dirichlet(chi)
            rows = wl.local_table(pi, chi.label, (v_lo, v_hi), cells=_ints(args.cells))
            bad += sum(r["provenance"] == "MISMATCH" for r in rows)
            rep.rows += rows
    rep.summary = {"rows": len(rep.rows), "mismatches": bad}
    return rep


def cmd_h_table(args, cfg: RunConfig) -> Report:
    rep = Report(cfg)
    bad = 0
    rng = np.random.default_rng(cfg.seed)
    for p in _ints(args.p):
        for c in _ints(args.c):
            if c == 1:
                rep.rows.append({"p": p, "c": c, "chi": "", "h_closed": None, "h_exhaustive": None, "agree": None,
                                 "note": "h bounded case out of closed-form scope (oracle only)"})
                continue
            for chi in enumerate_chars(PrimePower(p, c), primitive_only=True):
                pi = wl.PrincipalSeries.from_dirichlet(chi)
                closed = wl.h_closed_form(pi)
                found = wl.h_search(pi).value
                ok = abs(found - closed) <= args.tol
                bad += not ok
                rep.rows.append({"p": p, "c": c, "chi": chi.label, "h_closed": closed, "h_exhaustive": found,
                                 "agree": ok, "note": ""})
            # unramified twists by random unimodular values at p
            chi = enumerate_chars(PrimePower(p, c), primitive_only=True)[0]
            pi = wl.PrincipalSeries.from_dirichlet(chi)
            for theta in map(float, rng.uniform(0.0, 2.0 * math.pi, args.twists)):
                eta = UnitaryCharacter.unramified(p, complex(math.cos(theta), math.sin(theta)))
                ok = wl.unramified_twist_invariance(pi, eta, args.tol)
                bad += not ok
                rep.rows.append({"p": p, "c": c, "chi": chi.label, "h_closed": wl.h_closed_form(pi),
                                 "h_exhaustive": wl.h_search(pi.twist(eta)).value, "agree": ok,
                                 "note": f"unramified twist theta={theta!r}"})
    rep.summary = {"rows": len(rep.rows), "disagreements": bad}
    return rep


def cmd_arch(args, cfg: RunConfig) -> Report:
    rep = Report(cfg)
    kind = {"discrete": "discrete", "principal": "principal", "principal-nt": "principal_nt"}[args.series]
    lo, hi, n = args.grid
    grid = wa.default_grid(lo, hi, int(n))
    if kind == "discrete":
        grid = sorted({int(2 * round(k / 2)) for k in grid if k >= 2})
    fit = wa.fit_family(kind, grid)
    rep.rows = list(fit.rows)
    rep.summary = {"max_exponent": fit.max_exponent, "norm_exponent": fit.norm_exponent,
                   "ratio_exponent": fit.ratio_exponent,
                   "scaling": "principal series values carry e^(pi r/2); norms e^(pi r)"}
    return rep


def cmd_fetch(args, cfg: RunConfig) -> Report:
    rep = Report(cfg)
    from .padic import factorize

    fac = factorize(args.level)
    if len(fac) != 1:
        raise SystemExit("fetch supports prime-power levels")
    (p, c), = fac.items()
    chi = DirichletChar.from_conrey(p, c, args.char_orbit)
    forms = ingest.fetch_remote(args.level, 2, chi, args.embedding, min_coeffs=args.min_coeffs,
                                offline=args.offline)
    out = Path(args.data)
    for k, ff in enumerate(forms):
        path = out / f"form_{args.level}_{args.char_orbit}_{k}_{args.embedding}.txt"
        rep.inputs[str(path)] = ingest.save(ff, path)
        rep.rows.append({"file": str(path), "label": ff.label, "coefficients": len(ff.coefficients)})
    rep.summary = {"forms": len(forms), "empty_space": not forms}
    return rep


def _load_form(path: str, rep: Report) -> mf.NewformData:
    f = ingest.load(path)
    rep.inputs[path] = f.metadata["sha256"]
    return f


def cmd_global(args, cfg: RunConfig) -> Report:
    rep = Report(cfg)
    f = _load_form(args.form, rep)
    chi = f.nebentypus[0] if f.nebentypus else None
    action = args.action
    if action == "eval":
        sp = mf.special_point(chi)
        direct = mf.evaluate(f, sp.z, args.tol)
        twisted = mf.twisted_expansion_eval(f, chi, 1j, args.tol)
        rep.summary = {"z_chi": [str(sp.z.x), str(sp.z.y)], "abs_direct": abs(direct.value),
                       "abs_twisted": abs(twisted.value),
                       "difference": abs(abs(direct.value) - abs(twisted.value)),
                       "bound": direct.truncation_bound + twisted.truncation_bound,
                       "reference": math.sqrt(chi.p) * math.exp(-2 * math.pi)}
    elif action == "scan":
        s = mf.supnorm_scan(f, mf.ScanGrid(nx=args.nx, ny=args.ny, tol=args.tol))
        rep.summary = {"max_abs": s.max_abs, "argmax": s.argmax, "exponent": s.exponent,
                       "normalized_exponent": s.normalized_exponent, "points": s.points, "worst_bound": s.worst_bound, "special": s.special_values}
    elif action == "wilton":
        p = chi.p
        w = mf.wilton_scan(f, p, min(f.M, args.m_max), seed=cfg.seed)
        rep.summary = {"best_ratio": w.best_ratio, "best_M": w.best_M, "best_x": str(w.best_x),
                       "upper_exponent": w.upper_exponent}
    elif action == "hecke-integral":
        h = mf.hecke_integral(f, args.tol)
        rep.summary = {"integral": h.value, "series": h.series_value, "error": h.error_estimate,
                       "l_half": h.l_half,
                       "l_half_over_2pi": None if h.l_half is None else h.l_half / (2 * math.pi)}
    elif action == "certify":
        return _certify_forms([f], cfg, rep, args)
    return rep


def _certify_forms(forms, cfg: RunConfig, rep: Report, args) -> Report:
    failed = 0
    for f in forms:
        row = {"label": f.label, "level": f.level}
        try:
            cert = mf.lower_bound_certificate(f)
        except mf.CertificateUnavailable as exc:
            row.update({"certificate": None, "scan_max": None, "passed": None, "exponent": None,
                        "normalized_exponent": None,
                        "note": f"certificate unavailable: {exc}"})
            rep.rows.append(row)
            continue
        s = mf.supnorm_scan(f, mf.ScanGrid(nx=args.nx, ny=args.ny, tol=args.tol))
        ok = s.max_abs >= cert.value
        failed += not ok
        row.update({"certificate": cert.value, "scan_max": s.max_abs, "passed": ok,
                    "exponent": s.exponent, "normalized_exponent": s.normalized_exponent, "note": ""})
        rep.rows.append(row)
    rep.summary = {"forms": len(forms), "failed": failed}
    return rep


def cmd_certify(args, cfg: RunConfig) -> Report:
    rep = Report(cfg)
    data = Path(args.data)
    paths = [str(data / n) for sp in ingest.manifest(data)["spaces"] for n in sp["files"]]
    if args.level:
        paths = [p for p in paths if Path(p).name.split("_")[1] in map(str, _ints(args.level))]
    forms = [_load_form(p, rep) for p in paths]
    return _certify_forms(forms, cfg, rep, args)


def cmd_mvalue(args, cfg: RunConfig) -> Report:
    rep = Report(cfg)
    data = Path(args.data)
    space = next((sp for sp in ingest.manifest(data)["spaces"]
                  if sp["level"] == args.level and sp["conrey_label"] == args.chi), None)
    if space is None:
        raise SystemExit(f"no data for level {args.level}, Conrey label {args.chi}")
    forms = [_load_form(str(data / n), rep) for n in space["files"]]
    basis = mv.build_basis(forms, space["dimension"])
    points = args.points.split(",")
    if "zchi" in points:
        mech = mv.m_chi_at_special_point(basis)
        rep.rows.append({"point": "z_chi", "m_chi": mech.m_at_z, "single_form": mech.single_form_bound,
                         "partial": mech.partial})
    if "grid" in points:
        xs = np.linspace(0, 1, 8, endpoint=False)
        for y in (0.05, 0.1, 0.2):
            for x in xs:
                m = mv.m_chi(complex(x, y), basis)
                rep.rows.append({"point": f"{x:.4f}+{y:.4f}i", "m_chi": m.value, "single_form": m.contributions[0],
                                 "partial": m.partial})
    avg = mv.m_chi_domain_average(basis)
    rep.summary = {"dimension": space["dimension"], "domain_average": avg.value,
                   "domain_average_times_4pi": avg.value * 4 * math.pi,
                   "norms": [n.value for n in basis.norms], "partial": avg.partial}
    return rep


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wlab", description=__doc__.split("\n")[0])
    ap.add_argument("--config", help="key = value file merged under the command-line flags")
    ap.add_argument("--out", help="report path (.json or .csv); stdout JSON when omitted")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1, help="accepted for interface stability; runs serially")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("local", help="local Whittaker table, oracle against closed forms")
    s.add_argument("--p", default="3,5,7")
    s.add_argument("--v-range", default="-4,1")
    s.add_argument("--cells", default="0,1,2")
    s.set_defaults(func=cmd_local)

    s = sub.add_parser("h-table", help="sup of the local newvector, closed form against search")
    s.add_argument("--p", default="3,5")
    s.add_argument("--c", default="2,3,4")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--twists", type=int, default=5, help="random unramified twists per (p, c)")
    s.set_defaults(func=cmd_h_table)

    s = sub.add_parser("arch", help="archimedean max over norm with fitted exponents")
    s.add_argument("--series", choices=["discrete", "principal", "principal-nt"], default="principal")
    s.add_argument("--grid", type=float, nargs=3, metavar=("LO", "HI", "N"), default=[20.0, 200.0, 20])
    s.set_defaults(func=cmd_arch)

    s = sub.add_parser("fetch", help="download a newform space from the database API")
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--char-orbit", type=int, required=True, help="Conrey label of the character")
    s.add_argument("--embedding", type=int, default=0)
    s.add_argument("--min-coeffs", type=int, default=2000)
    s.add_argument("--data", default="data")
    s.add_argument("--offline", action="store_true")
    s.set_defaults(func=cmd_fetch)

    s = sub.add_parser("global", help="evaluations on one ingested newform")
    s.add_argument("action", choices=["eval", "scan", "wilton", "hecke-integral", "certify"])
    s.add_argument("--form", required=True)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--nx", type=int, default=64)
    s.add_argument("--ny", type=int, default=64)
    s.add_argument("--m-max", type=int, default=1250)
    s.set_defaults(func=cmd_global)

    s = sub.add_parser("mvalue", help="mean value M_chi over a full newform basis")
    s.add_argument("--level", type=int, default=25)
    s.add_argument("--chi", type=int, default=4, help="Conrey label")
    s.add_argument("--points", default="zchi")
    s.add_argument("--data", default="data")
    s.set_defaults(func=cmd_mvalue)

    s = sub.add_parser("certify", help="sup-norm lower-bound certificate for every ingested form")
    s.add_argument("--data", default="data")
    s.add_argument("--level", default="")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--nx", type=int, default=64)
    s.add_argument("--ny", type=int, default=64)
    s.set_defaults(func=cmd_certify)
    return ap


FAILURE_KEYS = ("mismatches", "disagreements", "failed")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    cfg_file = read_config(args.config)
    if cfg_file:
        # file values fill in whatever the command line left at its default
        defaults = vars(ap.parse_args([args.command] + _required_stub(args)))
        for k, v in cfg_file.items():
            if k in vars(args) and getattr(args, k) == defaults.get(k):
                setattr(args, k, v)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "out", "seed", "verbose")}
    cfg = RunConfig(args.command, params, args.seed, bool(getattr(args, "offline", False)), args.out)
    try:
        rep = args.func(args, cfg)
    except ingest.ValidationBlocked as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    rep.write(args.out)
    if any(rep.summary.get(k) for k in FAILURE_KEYS):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _required_stub(args) -> list[str]:
    """Re-supply required options so the defaults can be recovered."""
    stub = []
    if args.command == "global":
        stub = [args.action, "--form", args.form]
    elif args.command == "fetch":
        stub = ["--level", str(args.level), "--char-orbit", str(args.char_orbit)]
    return stub


if __name__ == "__main__":
    raise SystemExit(main())
