"""Regenerate the committed newform files under data/ with PARI/GP (cypari2).

Not a runtime dependency: the package only reads the files this writes.

    pip install cypari2
    python scripts/generate_forms.py --out data
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import cypari2

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wlab.characters import DirichletChar, enumerate_chars  # noqa: E402
from wlab.ingest import FormFile, save  # noqa: E402
from wlab.padic import PrimePower  # noqa: E402

PLAN = [
    # (level, prime, exponent, primitive even only?, conrey labels or None, coefficients)
    (25, 5, 2, True, None, 4000),
    (49, 7, 2, True, "first", 6000),
    (49, 7, 2, False, [1], 6000),
    (11, 11, 1, False, [1], 3000),
    (9, 3, 2, True, None, 2000),
]


def conrey_labels(p: int, c: int, primitive_even: bool) -> list[int]:
    if primitive_even:
        return [chi.conrey_label for chi in enumerate_chars(PrimePower(p, c), True, True)]
    return [1]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data")
    ap.add_argument("--precision", type=int, default=38)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    pari = cypari2.Pari()
    pari.allocatemem(2 * 10**9)
    pari.set_real_precision(args.precision)
    version = str(pari("version()"))
    manifest = {"generator": f"PARI/GP {version} via cypari2", "spaces": []}

    for level, p, c, prim_even, labels, ncoef in PLAN:
        if labels is None or labels == "first":
            labels = conrey_labels(p, c, prim_even)[: 1 if labels == "first" else None]
        for label in labels:
            chi = DirichletChar.from_conrey(p, c, label) if label != 1 else DirichletChar.trivial(p, c)
            pari(f"mf=mfinit([{level},2,Mod({label},{level})],0); B=mfeigenbasis(mf)")
            dim = int(pari("mfdim(mf)"))
            entry = {"level": level, "conrey_label": label, "character": chi.to_dict(), "dimension": dim, "files": []}
            nforms = int(pari("#B"))
            for fi in range(1, nforms + 1):
                emb = pari(f"F=B[{fi}]; E=mfembed(F, mfcoefs(F,{ncoef})); E")
                # PARI returns a single vector when the Hecke field is the
                # character field; normalize to a list of embeddings
                if str(pari("type(E[1])")) != "t_VEC":
                    emb = [emb]
                pet = pari("fs=mfsymbol(mf,F); P=mfpetersson(fs); P")
                pari("LL=lfunmf(mf,F)")
                for ei, vec in enumerate(emb):
                    cn = [complex(x) for x in vec]
                    an = [cn[n] / math.sqrt(n) for n in range(1, ncoef + 1)]
                    npet = len(emb)
                    pval = complex(pet[ei][ei]).real if npet > 1 else complex(pet).real
                    Lj = pari(f"lfun(LL[{ei + 1}],1)") if len(emb) > 1 else pari("lfun(LL,1)")
                    ff = FormFile(
                        level=level,
                        weight=2,
                        character=chi.to_dict(),
                        embedding=ei,
                        coefficients=an,
                        label=f"{level}.{label}.{fi - 1}.{ei}",
                        l_half=complex(Lj),
                        petersson_reference=pval,
                        source=f"PARI/GP {version}: mfeigenbasis(mfinit([{level},2,Mod({label},{level})],0))[{fi}], "
                        f"mfembed index {ei}; mfpetersson diagonal; lfun(lfunmf(...),1)",
                        extra={"space_dimension": str(dim), "conrey_label": str(label)},
                    )
                    name = f"form_{level}_{label}_{fi - 1}_{ei}.txt"
                    save(ff, out / name)
                    entry["files"].append(name)
                    print(name, f"|a_p|={abs(an[p - 1]):.6f}", f"pet={pval:.6g}", f"L={complex(Lj):.6g}")
            manifest["spaces"].append(entry)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
