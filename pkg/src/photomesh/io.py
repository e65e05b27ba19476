"""JSON and CSV file formats.

Every loader validates its input completely and raises :class:`SchemaError`
on anything unexpected: invalid JSON, NaN or infinite numbers, missing or
extra keys, wrong types, out-of-range indices. Writers emit UTF-8 with
sorted keys and shortest round-trip float text, and replace the destination
atomically so a failed run never leaves a partial file behind.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .alternating import AlternatingCircuit, Form
from .clements import AmziDecomposition, ClementsDecomposition
from .errors import LayoutError, SchemaError, ShapeError
from .mesh import BareWaveguide, Layout, MeshCircuit, PhaseSetting, SmziElement, SmziSetting
from .reck import ReckDecomposition

TABLE_SCHEMES = ("reck-smzi", "clements-smzi", "clements-amzi")
MESH_SCHEME = "clements-edge"
CIRCUIT_SCHEMES = ("fldzhyan-full", "fldzhyan-compact")
ALL_SCHEMES = (*TABLE_SCHEMES, MESH_SCHEME, *CIRCUIT_SCHEMES)


def _reject_constant(name: str):
    raise SchemaError(f"non-finite number {name} is not allowed")


def parse_json(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None


def read_json(path: str | os.PathLike) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    return parse_json(text)


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_json(path: str | os.PathLike, obj: Any) -> None:
    atomic_write_text(path, dumps(obj))


# ---------------------------------------------------------------------------
# Field validation helpers.


def _obj(x: Any, what: str) -> dict:
    if not isinstance(x, dict):
        raise SchemaError(f"{what}: expected an object, got {type(x).__name__}")
    return x


def _keys(d: dict, required: Iterable[str], what: str, optional: Iterable[str] = ()) -> None:
    required, optional = set(required), set(optional)
    missing = required - set(d)
    extra = set(d) - required - optional
    if missing or extra:
        raise SchemaError(f"{what}: missing keys {sorted(missing)}, unexpected keys {sorted(extra)}")


def _int(x: Any, what: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SchemaError(f"{what}: expected an integer, got {x!r}")
    if (lo is not None and x < lo) or (hi is not None and x > hi):
        raise SchemaError(f"{what}: {x} outside [{lo}, {hi}]")
    return x


def _float(x: Any, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"{what}: expected a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise SchemaError(f"{what}: non-finite value")
    return x


def _list(x: Any, what: str, length: int | None = None) -> list:
    if not isinstance(x, list):
        raise SchemaError(f"{what}: expected a list, got {type(x).__name__}")
    if length is not None and len(x) != length:
        raise SchemaError(f"{what}: expected {length} entries, got {len(x)}")
    return x


def _float_vector(x: Any, what: str, length: int | None = None) -> np.ndarray:
    return np.array([_float(v, f"{what}[{i}]") for i, v in enumerate(_list(x, what, length))], dtype=float)


def _scheme(d: dict, allowed: Sequence[str]) -> str:
    s = d.get("scheme")
    if s not in allowed:
        raise SchemaError(f"scheme must be one of {list(allowed)}, got {s!r}")
    return s


# ---------------------------------------------------------------------------
# Matrices.


def matrix_to_json(u) -> dict:
    a = np.asarray(u.mat if hasattr(u, "mat") else u, dtype=np.complex128)
    return {"m": a.shape[0], "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(d: Any) -> np.ndarray:
    """Complex matrix of a ``{"m", "re", "im"}`` object (no unitarity check)."""
    d = _obj(d, "matrix file")
    _keys(d, ("m", "re", "im"), "matrix file")
    m = _int(d["m"], "m", 1)
    parts = []
    for key in ("re", "im"):
        rows = _list(d[key], key, m)
        parts.append(np.array([_float_vector(r, f"{key}[{i}]", m) for i, r in enumerate(rows)]))
    return parts[0] + 1j * parts[1]


def read_matrix(path) -> np.ndarray:
    return matrix_from_json(read_json(path))


def write_matrix(path, u) -> None:
    write_json(path, matrix_to_json(u))


# ---------------------------------------------------------------------------
# Phase tables.


def _smzi_rows(table: dict) -> list[dict]:
    return [{"j": j, "k": k, "theta1": s.theta1, "theta2": s.theta2} for (j, k), s in sorted(table.items())]


def _phase_rows(table: dict, key: str) -> list[dict]:
    return [{key: i, "phi": phi} for i, phi in sorted(table.items())]


def table_to_json(d: ReckDecomposition | ClementsDecomposition | AmziDecomposition) -> dict:
    if isinstance(d, ReckDecomposition):
        return {"scheme": "reck-smzi", "m": d.m, "global_phase": d.global_phase, "smzi": _smzi_rows(d.smzi),
                "phi_in": _phase_rows(d.phi_in, "j"), "zeta_out": _phase_rows(d.zeta_out, "mode")}
    if isinstance(d, ClementsDecomposition):
        return {"scheme": "clements-smzi", "m": d.m, "global_phase": d.global_phase, "smzi": _smzi_rows(d.smzi),
                "phi_side": _phase_rows(d.phi_side, "j"), "zeta_mid": _phase_rows(d.zeta_mid, "mode")}
    if isinstance(d, AmziDecomposition):
        return {"scheme": "clements-amzi", "m": d.m, "global_phase": 0.0,
                "amzi": [{"j": j, "k": k, "theta": t, "phi": p} for (j, k), (t, p) in sorted(d.amzi.items())],
                "output_phases": _phase_rows(d.output_phases, "mode")}
    raise TypeError(f"not a phase table: {type(d).__name__}")


def _indexed(rows: Any, what: str, index_keys: Sequence[str], value_keys: Sequence[str], m: int) -> dict:
    out = {}
    for i, row in enumerate(_list(rows, what)):
        row = _obj(row, f"{what}[{i}]")
        _keys(row, (*index_keys, *value_keys), f"{what}[{i}]")
        idx = tuple(_int(row[k], f"{what}[{i}].{k}", 1, m) for k in index_keys)
        idx = idx[0] if len(idx) == 1 else idx
        if idx in out:
            raise SchemaError(f"{what}: duplicate entry {idx}")
        vals = tuple(_float(row[k], f"{what}[{i}].{k}") for k in value_keys)
        out[idx] = vals[0] if len(vals) == 1 else vals
    return out


def table_from_json(d: Any) -> ReckDecomposition | ClementsDecomposition | AmziDecomposition:
    d = _obj(d, "phase table")
    scheme = _scheme(d, TABLE_SCHEMES)
    m = _int(d.get("m"), "m", 2)
    alpha = _float(d.get("global_phase"), "global_phase")
    if scheme == "clements-amzi":
        _keys(d, ("scheme", "m", "global_phase", "amzi", "output_phases"), "phase table")
        amzi = _indexed(d["amzi"], "amzi", ("j", "k"), ("theta", "phi"), m)
        out = _indexed(d["output_phases"], "output_phases", ("mode",), ("phi",), m)
        table = AmziDecomposition(m, amzi, out)
    else:
        side, resid = ("phi_in", "zeta_out") if scheme == "reck-smzi" else ("phi_side", "zeta_mid")
        _keys(d, ("scheme", "m", "global_phase", "smzi", side, resid), "phase table")
        smzi = {jk: SmziSetting(*v) for jk, v in
                _indexed(d["smzi"], "smzi", ("j", "k"), ("theta1", "theta2"), m).items()}
        phi = _indexed(d[side], side, ("j",), ("phi",), m)
        zeta = _indexed(d[resid], resid, ("mode",), ("phi",), m)
        cls = ReckDecomposition if scheme == "reck-smzi" else ClementsDecomposition
        table = cls(m, smzi, phi, zeta, alpha)
    table.validate()
    return table


# ---------------------------------------------------------------------------
# Meshes.


def _element_to_json(el) -> dict:
    if isinstance(el, SmziElement):
        return {"type": "smzi", "top_mode": el.top_mode, "theta1": el.setting.theta1, "theta2": el.setting.theta2}
    if isinstance(el, PhaseSetting):
        return {"type": "phase", "mode": el.mode, "phi": el.phi}
    return {"type": "bare", "mode": el.mode}


def mesh_to_json(c: MeshCircuit, global_phase: float = 0.0) -> dict:
    return {"scheme": MESH_SCHEME, "m": c.m, "layout": c.layout.value, "global_phase": global_phase,
            "columns": [[_element_to_json(el) for el in col] for col in c.columns]}


def _element_from_json(x: Any, what: str, m: int):
    x = _obj(x, what)
    kind = x.get("type")
    if kind == "smzi":
        _keys(x, ("type", "top_mode", "theta1", "theta2"), what)
        s = SmziSetting(_float(x["theta1"], f"{what}.theta1"), _float(x["theta2"], f"{what}.theta2"))
        return SmziElement(_int(x["top_mode"], f"{what}.top_mode", 1, m - 1), s)
    if kind == "phase":
        _keys(x, ("type", "mode", "phi"), what)
        return PhaseSetting(_float(x["phi"], f"{what}.phi"), _int(x["mode"], f"{what}.mode", 1, m))
    if kind == "bare":
        _keys(x, ("type", "mode"), what)
        return BareWaveguide(_int(x["mode"], f"{what}.mode", 1, m))
    raise SchemaError(f"{what}: unknown element type {kind!r}")


def mesh_from_json(d: Any) -> tuple[MeshCircuit, float]:
    """Mesh circuit and the global phase it carries relative to its target."""
    d = _obj(d, "mesh file")
    _scheme(d, (MESH_SCHEME,))
    _keys(d, ("scheme", "m", "layout", "global_phase", "columns"), "mesh file")
    m = _int(d["m"], "m", 1)
    try:
        layout = Layout(d["layout"])
    except ValueError:
        raise SchemaError(f"unknown layout {d['layout']!r}") from None
    cols = [[_element_from_json(el, f"columns[{ci}][{i}]", m) for i, el in enumerate(_list(col, f"columns[{ci}]"))]
            for ci, col in enumerate(_list(d["columns"], "columns"))]
    try:
        circuit = MeshCircuit(m, cols, layout)
    except (LayoutError, ShapeError) as exc:
        raise SchemaError(f"invalid mesh: {exc}") from None
    return circuit, _float(d["global_phase"], "global_phase")


# ---------------------------------------------------------------------------
# Alternating circuits.


def circuit_to_json(c: AlternatingCircuit) -> dict:
    scheme = "fldzhyan-compact" if c.form is Form.COMPACT else "fldzhyan-full"
    return {"scheme": scheme, "m": c.m, "depth": c.depth, "form": c.form.value, "offsets": list(c.offsets),
            "slots": list(c.slots), "splitter_angles": [a.tolist() for a in c.splitter_angles],
            "phase_layers": [p.tolist() for p in c.phase_layers]}


def circuit_from_json(d: Any) -> AlternatingCircuit:
    d = _obj(d, "circuit file")
    scheme = _scheme(d, CIRCUIT_SCHEMES)
    _keys(d, ("scheme", "m", "depth", "form", "splitter_angles", "phase_layers"), "circuit file",
          optional=("offsets", "slots"))
    m = _int(d["m"], "m", 1)
    depth = _int(d["depth"], "depth", 0)
    try:
        form = Form(d["form"])
    except ValueError:
        raise SchemaError(f"unknown form {d['form']!r}") from None
    if scheme == "fldzhyan-compact" and form is not Form.COMPACT:
        raise SchemaError(f"scheme {scheme} requires the compact form")
    if scheme == "fldzhyan-full" and form is Form.COMPACT:
        raise SchemaError(f"scheme {scheme} cannot carry a compact circuit")
    angles = [_float_vector(a, f"splitter_angles[{i}]") for i, a in enumerate(_list(d["splitter_angles"], "splitter_angles", depth))]
    phases = [_float_vector(p, f"phase_layers[{i}]", m) for i, p in enumerate(_list(d["phase_layers"], "phase_layers"))]
    offsets = tuple(_int(o, "offsets[]", 0, 1) for o in _list(d.get("offsets", []), "offsets"))
    slots = tuple(_int(s, "slots[]", 0, depth) for s in _list(d.get("slots", []), "slots"))
    try:
        return AlternatingCircuit(m, tuple(angles), tuple(phases), form, offsets, slots)
    except (LayoutError, ShapeError) as exc:
        raise SchemaError(f"invalid circuit: {exc}") from None


def read_any_table(path) -> tuple[str, Any]:
    """Scheme tag and parsed object for any table, mesh, or circuit file."""
    d = _obj(read_json(path), "table file")
    scheme = _scheme(d, ALL_SCHEMES)
    if scheme in TABLE_SCHEMES:
        return scheme, table_from_json(d)
    if scheme == MESH_SCHEME:
        return scheme, mesh_from_json(d)
    return scheme, circuit_from_json(d)


# ---------------------------------------------------------------------------
# CSV.


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV text; floats in ``%.17g`` so every double round-trips."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()
