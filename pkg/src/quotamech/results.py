"""Result documents: mechanism outputs as plain JSON with exact "p/q" rationals."""

from __future__ import annotations

import dataclasses
import json
from fractions import Fraction
from pathlib import Path

from .audit import AuditReport
from .core import Instance, StudentAssignment, Violation, check_feasible, type_profile
from .errors import StructuralError
from .fileio import matrix_from_dict, matrix_to_dict
from .gps import GpsResult
from .lottery import Lottery
from .rational import as_rational, fmt
from .sdm import SdmResult


def jsonable(value, type_order: dict | None = None):
    """Recursively convert engine values to JSON-ready data."""
    if isinstance(value, bool) or value is None or isinstance(value, (str, int, float)):
        return value
    if isinstance(value, Fraction):
        return fmt(value)
    if isinstance(value, (frozenset, set)):
        if not type_order:
            return sorted(value)
        return sorted(value, key=lambda t: (type_order.get(t, len(type_order)), t))
    if isinstance(value, Violation):
        return {
            "school": value.school,
            "types": jsonable(value.types, type_order),
            "direction": value.direction,
            "magnitude": fmt(value.magnitude),
        }
    if isinstance(value, StudentAssignment):
        rows = sorted({i for i, _ in value.entries})
        cols = sorted({s for _, s in value.entries})
        return matrix_to_dict(value.entries, rows, cols)
    if isinstance(value, dict):
        return {str(k): jsonable(v, type_order) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v, type_order) for v in value]
    if dataclasses.is_dataclass(value):
        return {f.name: jsonable(getattr(value, f.name), type_order) for f in dataclasses.fields(value)}
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _type_order(inst: Instance) -> dict:
    return {t: k for k, t in enumerate(inst.types)}


def _violations(inst: Instance, y) -> list:
    report = check_feasible(y, inst)
    return [jsonable(v, _type_order(inst)) for v in report.violations]


def delta_table(inst: Instance, delta: dict) -> dict:
    return {t: {s: fmt(delta.get((t, s), 0)) for s in inst.all_schools} for t in inst.types}


def sd_document(inst: Instance, result: SdmResult, seed: int | None = None, trace: bool = False) -> dict:
    doc = {
        "mechanism": "sd",
        "seed": seed,
        "order": list(result.order),
        "opt": fmt(result.opt),
        "allocation": dict(result.allocation),
        "regular_count": result.regular_count(inst),
        "delta": delta_table(inst, result.delta),
        "violations": _violations(inst, result.y),
    }
    if trace:
        order = _type_order(inst)
        doc["trace"] = [
            {
                "kind": e.kind,
                "student": e.student,
                "school": e.school,
                "amount": fmt(e.amount),
                "source": e.source,
                "probes": [[s, fmt(f)] for s, f in e.probes],
                "partials": [[p.student, p.school, fmt(p.remainder)] for p in e.partials],
                "quotas": [
                    {"school": s, "types": jsonable(r, order), "lower": fmt(lo), "upper": fmt(hi)}
                    for s, r, lo, hi in e.quotas
                ],
            }
            for e in result.trace
        ]
    return doc


def assignment_table(inst: Instance, x: StudentAssignment) -> dict:
    return matrix_to_dict(x.entries, [st.id for st in inst.students], inst.all_schools)


def lottery_table(inst: Instance, lottery: Lottery) -> list:
    ids = [st.id for st in inst.students]
    return [{"weight": fmt(w), "allocation": {i: alloc[i] for i in ids}} for w, alloc in lottery]


def gps_document(inst: Instance, result: GpsResult, trace: bool = False,
                 lottery: Lottery | None = None) -> dict:
    doc = {
        "mechanism": "gps",
        "opt": fmt(result.opt),
        "assignment": assignment_table(inst, result.x),
        "violations": _violations(inst, type_profile(result.x, inst)),
    }
    if trace:
        doc["trace"] = [
            {"time": fmt(ev.time), "switches": [{"student": i, "from": a, "to": b} for i, a, b in ev.switches]}
            for ev in result.trace
        ]
    if lottery is not None:
        doc["lottery"] = lottery_table(inst, lottery)
    return doc


def audit_document(report: AuditReport, inst: Instance) -> dict:
    return {
        "property": report.property,
        "verdict": report.verdict,
        "witness": jsonable(report.witness, _type_order(inst)),
        "checked": report.checked,
        "notes": list(report.notes),
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def load_result(path) -> dict:
    """Read a result document, turning its exact fields back into Fractions."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path}: not valid JSON ({exc})") from None
    return result_from_dict(doc)


def result_from_dict(doc: dict) -> dict:
    if not isinstance(doc, dict) or "mechanism" not in doc:
        raise StructuralError("result: missing key 'mechanism'")
    out = dict(doc)
    if "opt" in doc:
        out["opt"] = as_rational(doc["opt"])
    if "assignment" in doc:
        out["assignment"] = StudentAssignment(matrix_from_dict(doc["assignment"]))
    if "delta" in doc:
        out["delta"] = matrix_from_dict(doc["delta"])
    if "lottery" in doc:
        out["lottery"] = [(as_rational(e["weight"]), dict(e["allocation"])) for e in doc["lottery"]]
    return out


def result_to_dict(result: dict, inst: Instance) -> dict:
    """Inverse of ``result_from_dict`` for the fields it converts."""
    doc = dict(result)
    if "opt" in result:
        doc["opt"] = fmt(result["opt"])
    if "assignment" in result:
        doc["assignment"] = assignment_table(inst, result["assignment"])
    if "delta" in result:
        doc["delta"] = delta_table(inst, result["delta"])
    if "lottery" in result:
        ids = [st.id for st in inst.students]
        doc["lottery"] = [{"weight": fmt(w), "allocation": {i: a[i] for i in ids}} for w, a in result["lottery"]]
    return doc
