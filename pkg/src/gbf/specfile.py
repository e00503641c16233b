"""JSON theory files and state descriptions.

Theory file layout::

    {
      "kappa": -1,
      "hypersurfaces": {"S": {"p": 1, "q": 1}},          # or {"signs": [1, -1]}
      "orientation_pairs": [["S", "~S"]],                 # optional, default "~label"
      "regions": {
        "M":  {"boundary": ["S", "~S"], "lmtilde": [[re..., im...], ...]},
        "sl": {"kind": "slice", "hypersurface": "S"},
        "U":  {"kind": "union", "parts": ["M", "sl"]}
      },
      "gluings": {"g": {"region": "U", "sigma": 1, "sigma_bar": 2, "result": "M1"}},
      "dirac": {"slab": "t", "mass": 1.0, "momenta": [[...]], "positions": [0, 1, 2]}
    }

Complex numbers are ``[re, im]`` pairs; real spanning vectors of solution
spaces are flat ``[re..., im...]`` arrays.  A glued region without its own
entry gets its solution space computed from the gluing.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .fock import FockState, generating_state
from .krein import check_kappa
from .spacetime import SLICE, UNION, TheoryBuilder, TheorySpec, reverse_label


class SpecError(ValueError):
    """Malformed or inconsistent input file."""


def _line_of(text: str | None, key: str) -> str:
    if not text:
        return ""
    needle = json.dumps(key)
    pos = text.find(needle)
    if pos < 0:
        return ""
    return f" (line {text.count(chr(10), 0, pos) + 1})"


def _fail(msg: str, text: str | None, key: str) -> SpecError:
    return SpecError(msg + _line_of(text, key))


def _signs(entry: dict, label: str, text: str | None) -> tuple[int, ...]:
    if "signs" in entry:
        signs = tuple(int(s) for s in entry["signs"])
        if any(s not in (1, -1) for s in signs):
            raise _fail(f"hypersurface {label!r}: signs must be +1 or -1", text, label)
        return signs
    try:
        p, q = int(entry["p"]), int(entry["q"])
    except (KeyError, TypeError, ValueError):
        raise _fail(f"hypersurface {label!r}: needs 'p' and 'q' or 'signs'", text, label) from None
    if p < 0 or q < 0:
        raise _fail(f"hypersurface {label!r}: negative dimension", text, label)
    return (1,) * p + (-1,) * q


def _span(rows: Any, dim: int, name: str, text: str | None) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        return np.zeros((dim, 0), dtype=complex)
    if arr.ndim != 2 or arr.shape[1] != 2 * dim:
        raise _fail(f"region {name!r}: lmtilde vectors must be flat arrays of length {2 * dim}", text, name)
    return (arr[:, :dim] + 1j * arr[:, dim:]).T


def theory_from_dict(data: dict, text: str | None = None) -> TheorySpec:
    """Build and validate a theory from the parsed JSON layout."""
    if not isinstance(data, dict):
        raise SpecError("top level must be an object")
    if "dirac" in data:
        return _dirac_theory(data["dirac"], text)
    try:
        kappa = check_kappa(int(data["kappa"]))
    except (KeyError, TypeError, ValueError):
        raise _fail("'kappa' must be -1 (fermionic) or 1 (bosonic)", text, "kappa") from None
    b = TheoryBuilder(kappa)
    hyps = data.get("hypersurfaces", {})
    pairs = {a: r for a, r in data.get("orientation_pairs", [])}
    explicit_rev = set(pairs.values())
    for label, entry in hyps.items():
        if label in explicit_rev:
            continue
        signs = _signs(entry, label, text)
        b.hypersurface(label, signs)
        rev = pairs.get(label, reverse_label(label))
        if rev != reverse_label(label):
            sp = b.spaces.pop(reverse_label(label))
            b.reversal.pop(reverse_label(label))
            b.spaces[rev] = type(sp)(sp.signs, rev)
            b.reversal[label], b.reversal[rev] = rev, label
        if rev in hyps:
            given = _signs(hyps[rev], rev, text)
            if given != tuple(kappa * s for s in signs):
                raise _fail(f"hypersurface {rev!r}: signature must be the reversal of {label!r}", text, rev)

    regions = data.get("regions", {})
    gluings = data.get("gluings", {})
    results = {g.get("result") for g in gluings.values()}
    pending_unions = []
    for name, entry in regions.items():
        kind = entry.get("kind", "regular")
        if kind == SLICE:
            lab = entry.get("hypersurface")
            if lab not in b.spaces:
                raise _fail(f"region {name!r}: unknown hypersurface {lab!r}", text, name)
            b.slice(name, lab)
        elif kind == UNION:
            pending_unions.append((name, entry))
        elif kind == "regular":
            bnd = entry.get("boundary")
            if not isinstance(bnd, list) or not bnd:
                raise _fail(f"region {name!r}: 'boundary' must be a nonempty list", text, name)
            for lab in bnd:
                if lab not in b.spaces:
                    raise _fail(f"region {name!r}: unknown boundary component {lab!r}", text, name)
            if "lmtilde" not in entry:
                if name in results:
                    continue
                raise _fail(f"region {name!r}: missing 'lmtilde'", text, name)
            dim = sum(b.spaces[lab].dim for lab in bnd)
            b.region(name, bnd, _span(entry["lmtilde"], dim, name, text))
        else:
            raise _fail(f"region {name!r}: unknown kind {kind!r}", text, name)
    for name, entry in pending_unions:
        parts = entry.get("parts", [])
        missing = [p for p in parts if p not in b.regions]
        if missing or not parts:
            raise _fail(f"region {name!r}: unknown parts {missing}", text, name)
        b.union(name, parts)
    for gname, g in gluings.items():
        try:
            region, sigma, sigma_bar, result = g["region"], int(g["sigma"]), int(g["sigma_bar"]), g["result"]
        except (KeyError, TypeError, ValueError):
            raise _fail(f"gluing {gname!r}: needs region, sigma, sigma_bar, result", text, gname) from None
        if region not in b.regions:
            raise _fail(f"gluing {gname!r}: unknown region {region!r}", text, gname)
        try:
            b.glue(gname, region, sigma, sigma_bar, result)
        except ValueError as err:
            raise _fail(f"gluing {gname!r}: {err}", text, gname) from None
    try:
        return b.build()
    except ValueError as err:
        raise SpecError(str(err)) from None


def _dirac_theory(block: dict, text: str | None) -> TheorySpec:
    from . import dirac

    slab = block.get("slab", "t")
    m = float(block.get("mass", 1.0))
    positions = block.get("positions", [0.0, 1.0, 2.0])
    try:
        if slab == "t":
            return dirac.build_equal_time_theory(block["momenta"], positions, m)
        if slab == "z":
            modes = [(float(E), np.asarray(kt, dtype=float)) for E, kt in block["modes"]]
            return dirac.build_constant_z_theory(modes, positions, m)
    except KeyError as err:
        raise _fail(f"dirac block: missing {err}", text, "dirac") from None
    except ValueError as err:
        raise _fail(f"dirac block: {err}", text, "dirac") from None
    raise _fail(f"dirac block: unknown slab {slab!r}", text, "dirac")


def loads_theory(text: str) -> TheorySpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecError(f"invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}") from None
    return theory_from_dict(data, text)


def load_theory(path: str | Path) -> TheorySpec:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise SpecError(f"cannot read {path}: {err.strerror}") from None
    return loads_theory(text)


def _flat(span: np.ndarray) -> list[list[float]]:
    span = np.asarray(span, dtype=complex)
    return [np.r_[span[:, j].real, span[:, j].imag].tolist() for j in range(span.shape[1])]


def theory_to_dict(theory: TheorySpec) -> dict:
    """Inverse of :func:`theory_from_dict` (glued regions are written explicitly)."""
    if "slab" in theory.metadata:
        md = theory.metadata
        block = {"slab": md["slab"], "mass": md["mass"], "positions": md["positions"]}
        block["momenta" if md["slab"] == "t" else "modes"] = md["momenta" if md["slab"] == "t" else "modes"]
        return {"dirac": block}
    hyps, pairs, seen = {}, [], set()
    for label, sp in theory.spaces.items():
        if label in seen:
            continue
        rev = theory.reversal[label]
        seen.update({label, rev})
        hyps[label] = {"signs": list(sp.signs)}
        pairs.append([label, rev])
    regions = {}
    for name, reg in theory.regions.items():
        if reg.kind == SLICE:
            regions[name] = {"kind": SLICE, "hypersurface": reg.hypersurface}
        elif reg.kind == UNION:
            regions[name] = {"kind": UNION, "parts": list(reg.parts)}
        else:
            regions[name] = {"boundary": list(reg.boundary), "lmtilde": _flat(reg.lmtilde)}
    gl = {g.name: {"region": g.region, "sigma": g.sigma, "sigma_bar": g.sigma_bar, "result": g.result}
          for g in theory.gluings.values()}
    return {"kappa": theory.kappa, "hypersurfaces": hyps, "orientation_pairs": sorted(pairs),
            "regions": regions, "gluings": gl}


def dumps_theory(theory: TheorySpec) -> str:
    return json.dumps(theory_to_dict(theory), indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# states


def _complex(value: Any) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    re, im = value
    return complex(float(re), float(im))


def state_from_dict(data: Any, theory: TheorySpec, region: str, nmax: int | None = None) -> FockState:
    """Boundary state of ``region`` from a description.

    Accepted forms: ``"vacuum"``; ``{"kind": "basis", "index": [...]}``;
    ``{"kind": "generating", "vectors": [[[re, im], ...], ...]}``;
    ``{"kind": "coeffs", "terms": [{"index": [...], "c": [re, im]}, ...]}``.
    """
    space, _ = theory.boundary_space(region)
    kappa = theory.kappa
    if data == "vacuum" or (isinstance(data, dict) and data.get("kind") == "vacuum"):
        return FockState.vacuum(space, kappa, nmax or 1)
    if not isinstance(data, dict):
        raise SpecError("state description must be 'vacuum' or an object")
    kind = data.get("kind")
    try:
        if kind == "basis":
            idx = tuple(int(a) for a in data["index"])
            return FockState.basis(space, kappa, idx, max(nmax or 0, len(idx), 1))
        if kind == "generating":
            vecs = [np.array([_complex(c) for c in v]) for v in data["vectors"]]
            return generating_state(space, kappa, vecs, max(nmax or 0, len(vecs), 1))
        if kind == "coeffs":
            coeffs = {tuple(int(a) for a in t["index"]): _complex(t["c"]) for t in data["terms"]}
            top = max((len(i) for i in coeffs), default=1)
            return FockState(space, kappa, coeffs, max(nmax or 0, top, 1))
    except (KeyError, TypeError, ValueError) as err:
        raise SpecError(f"invalid state description: {err}") from None
    raise SpecError(f"unknown state kind {kind!r}")


def load_state(path: str | Path, theory: TheorySpec, region: str, nmax: int | None = None) -> FockState:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise SpecError(f"cannot read {path}: {err.strerror}") from None
    if text.strip() == "vacuum":
        return state_from_dict("vacuum", theory, region, nmax)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecError(f"invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}") from None
    return state_from_dict(data, theory, region, nmax)


# ---------------------------------------------------------------------------
# bundled fixtures


FIXTURES = ("slice", "broken_c5", "random_fermionic", "bosonic", "cobordism", "dirac_t", "dirac_z")


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return Path(str(resources.files("gbf") / "data" / f"{name}.json"))


def load_fixture(name: str) -> TheorySpec:
    return load_theory(fixture_path(name))
