"""JSON file formats and deterministic CSV/JSON table export.

Complex numbers are ``[re, im]`` pairs and matrices row-major nested lists.
Parse errors name the offending field, e.g. ``isometries[2].matrix``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import Settings
from .discrepancy import BooleanTable
from .engine import ALICE, BOB, InputDistribution, ProtocolSpec, Step
from .errors import InputError
from .linalg import GlobalPureState, Isometry, RegisterLayout

# ---------------------------------------------------------------------------
# reading


def _field(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    if key not in obj:
        raise InputError(f"{where}.{key}: missing field" if where else f"{key}: missing field")
    return obj[key]


def _number(v, where: str) -> float:
    try:
        return float(Fraction(str(v).strip())) if isinstance(v, str) else float(v)
    except (ValueError, TypeError, ZeroDivisionError):
        raise InputError(f"{where}: {v!r} is not a number") from None


def _complex_vector(vals, where: str) -> np.ndarray:
    if not isinstance(vals, list):
        raise InputError(f"{where}: expected a list of [re, im] pairs")
    out = np.zeros(len(vals), dtype=np.complex128)
    for k, v in enumerate(vals):
        if isinstance(v, list) and len(v) == 2:
            out[k] = complex(_number(v[0], f"{where}[{k}]"), _number(v[1], f"{where}[{k}]"))
        else:
            out[k] = _number(v, f"{where}[{k}]")
    return out


def _layout(items, where: str) -> RegisterLayout:
    if not isinstance(items, list):
        raise InputError(f"{where}: expected a list of {{label, dim}} objects")
    pairs = []
    for k, it in enumerate(items):
        label = _field(it, "label", f"{where}[{k}]")
        dim = _field(it, "dim", f"{where}[{k}]")
        if not isinstance(label, str) or not isinstance(dim, int) or dim < 1:
            raise InputError(f"{where}[{k}]: label must be a string and dim a positive integer")
        pairs.append((label, dim))
    try:
        return RegisterLayout.of(pairs)
    except InputError as e:
        raise InputError(f"{where}: {e}") from None


def _wrap(where: str, fn, *args):
    try:
        return fn(*args)
    except InputError as e:
        raise InputError(f"{where}: {e}") from None


def protocol_from_dict(d: dict) -> ProtocolSpec:
    rounds = _field(d, "rounds", "")
    xs = _field(d, "x_alphabet", "")
    ys = _field(d, "y_alphabet", "")
    isos = _field(d, "isometries", "")
    if not isinstance(rounds, int) or rounds < 1:
        raise InputError("rounds: must be a positive integer")
    if not isinstance(isos, list) or len(isos) != rounds + 1:
        raise InputError(f"isometries: expected {rounds + 1} entries for {rounds} rounds")
    roles = d.get("roles", {})
    steps = []
    for i, it in enumerate(isos):
        where = f"isometries[{i}]"
        ins = _layout(_field(it, "in", where), f"{where}.in")
        outs = _layout(_field(it, "out", where), f"{where}.out")
        rows = _field(it, "matrix", where)
        if not isinstance(rows, list) or len(rows) != outs.total:
            raise InputError(f"{where}.matrix: expected {outs.total} rows")
        m = np.zeros((outs.total, ins.total), dtype=np.complex128)
        for k, row in enumerate(rows):
            vec = _complex_vector(row, f"{where}.matrix[{k}]")
            if vec.size != ins.total:
                raise InputError(f"{where}.matrix[{k}]: expected {ins.total} entries")
            m[k] = vec
        sender = _field(it, "sender", where)
        if sender not in (ALICE, BOB):
            raise InputError(f"{where}.sender: must be \"A\" or \"B\"")
        message = it.get("message", [])
        if i < rounds and not message:
            raise InputError(f"{where}.message: missing message register list")
        v = _wrap(where, Isometry, ins, outs, m)
        steps.append(Step(sender, v, tuple(message)))
    pre = None
    owners: dict[str, str] = {}
    if d.get("prestate") is not None:
        ps = d["prestate"]
        labels = _field(ps, "labels", "prestate")
        dims = _field(ps, "dims", "prestate")
        amps = _complex_vector(_field(ps, "amplitudes", "prestate"), "prestate.amplitudes")
        pre = _wrap("prestate", GlobalPureState, RegisterLayout(tuple(labels), tuple(dims)), amps)
        for party in (ALICE, BOB):
            for l in roles.get(party, []):
                owners[l] = party
    outputs = roles.get("outputs", {})
    return _wrap(
        "protocol",
        ProtocolSpec,
        len(xs),
        len(ys),
        steps,
        pre,
        owners,
        {ALICE: tuple(outputs.get(ALICE, ())), BOB: tuple(outputs.get(BOB, ()))},
        d.get("name", ""),
    )


def _load_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None


def load_protocol(path: str | Path) -> ProtocolSpec:
    return protocol_from_dict(_load_json(path))


def distribution_from_dict(d: dict) -> InputDistribution:
    rows = _field(d, "probs", "")
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("probs: expected a nested list indexed [x][y]")
    vals = [[_number(v, f"probs[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]
    if len({len(r) for r in vals}) != 1:
        raise InputError("probs: rows have different lengths")
    return _wrap("probs", InputDistribution, np.array(vals))


def load_distribution(path: str | Path) -> InputDistribution:
    return distribution_from_dict(_load_json(path))


def parse_prior(text: str, x_size: int = 2, y_size: int = 2) -> InputDistribution:
    """Comma-separated row-major probabilities, e.g. ``1/3,1/3,1/3,0``."""
    parts = [t for t in text.split(",") if t.strip()]
    vals = [_number(t, f"prior[{k}]") for k, t in enumerate(parts)]
    if len(vals) != x_size * y_size:
        raise InputError(f"prior: expected {x_size * y_size} values, got {len(vals)}")
    return _wrap("prior", InputDistribution, np.array(vals).reshape(x_size, y_size))


def table_from_dict(d: dict) -> BooleanTable:
    nx = _field(d, "x_size", "")
    ny = _field(d, "y_size", "")
    vals = _field(d, "values", "")
    arr = np.array(vals)
    if arr.shape != (nx, ny):
        raise InputError(f"values: shape {arr.shape} does not match x_size={nx}, y_size={ny}")
    return _wrap("values", BooleanTable, arr)


def load_table(path: str | Path) -> BooleanTable:
    return table_from_dict(_load_json(path))


# ---------------------------------------------------------------------------
# writing


def _cpair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def protocol_to_dict(p: ProtocolSpec) -> dict:
    isos = []
    for st in p.steps:
        v = st.isometry
        isos.append(
            {
                "sender": st.sender,
                "in": [{"label": l, "dim": d} for l, d in v.inputs.items()],
                "out": [{"label": l, "dim": d} for l, d in v.outputs.items()],
                "message": list(st.message),
                "matrix": [[_cpair(z) for z in row] for row in v.matrix],
            }
        )
    pre = None
    if p.prestate is not None:
        pre = {
            "labels": list(p.prestate.layout.labels),
            "dims": list(p.prestate.layout.dims),
            "amplitudes": [_cpair(z) for z in p.prestate.amplitudes],
        }
    return {
        "name": p.name,
        "rounds": p.rounds,
        "x_alphabet": list(range(p.x_size)),
        "y_alphabet": list(range(p.y_size)),
        "prestate": pre,
        "isometries": isos,
        "roles": {
            ALICE: sorted(l for l, o in p.owners.items() if o == ALICE),
            BOB: sorted(l for l, o in p.owners.items() if o == BOB),
            "outputs": {ALICE: list(p.outputs[ALICE]), BOB: list(p.outputs[BOB])},
        },
    }


def fmt(v) -> str:
    """12 significant digits for floats; empty for ``None``."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == 0.0:
            return "0"
        return f"{v:.12g}"
    return str(v)


def _json_value(v):
    if v is None or isinstance(v, (str, bool)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(fmt(v))
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    return str(v)


@dataclass
class Table:
    """Rows with fixed columns plus run metadata, exportable to CSV and JSON."""

    columns: Sequence[str]
    rows: list[Sequence]
    meta: dict

    def header(self) -> str:
        parts = [f"qicsim {__version__}"] + [f"{k}={fmt(v)}" for k, v in self.meta.items()]
        return "# " + " ".join(parts)

    def to_csv(self) -> str:
        lines = [self.header(), ",".join(self.columns)]
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_json(self, extra: dict | None = None) -> str:
        doc = {
            "qicsim": __version__,
            "meta": _json_value(self.meta),
            "columns": list(self.columns),
            "rows": [dict(zip(self.columns, (_json_value(v) for v in row))) for row in self.rows],
        }
        if extra:
            doc.update(_json_value(extra))
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"

    def write(self, prefix: str | Path, extra: dict | None = None) -> tuple[Path, Path]:
        prefix = Path(prefix)
        if prefix.parent and not prefix.parent.exists():
            prefix.parent.mkdir(parents=True)
        csv_path = prefix.with_name(prefix.name + ".csv")
        json_path = prefix.with_name(prefix.name + ".json")
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json(extra))
        return csv_path, json_path


def settings_meta(settings: Settings, seed: int | None) -> dict:
    return {
        "seed": seed,
        "tol_norm": settings.tol_norm,
        "tol_herm": settings.tol_herm,
        "tol_psd": settings.tol_psd,
        "tol_iso": settings.tol_iso,
        "dim_cap": settings.dim_cap,
    }
