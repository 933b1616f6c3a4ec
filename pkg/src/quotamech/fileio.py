"""JSON instance and result documents. Rationals are written as "p/q" strings."""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .core import Instance, QuotaConstraint, Student
from .errors import StructuralError
from .rational import as_rational, fmt


def _require(doc: dict, key: str, kind, where: str = "instance"):
    if key not in doc:
        raise StructuralError(f"{where}: missing key {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise StructuralError(f"{where}: key {key!r} has the wrong shape")
    return value


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise StructuralError("instance: top level must be an object")
    schools = _require(doc, "schools", list)
    types = _require(doc, "types", dict)
    students_doc = _require(doc, "students", list)
    cons_doc = doc.get("constraints", [])
    if not isinstance(cons_doc, list):
        raise StructuralError("instance: key 'constraints' must be a list")
    constraints = []
    for k, c in enumerate(cons_doc):
        where = f"constraints[{k}]"
        if not isinstance(c, dict):
            raise StructuralError(f"{where}: must be an object")
        for key in ("school", "types", "lower", "upper"):
            if key not in c:
                raise StructuralError(f"{where}: missing key {key!r}")
        try:
            lower, upper = as_rational(c["lower"]), as_rational(c["upper"])
        except StructuralError as exc:
            raise StructuralError(f"{where}: {exc}") from None
        constraints.append(QuotaConstraint(c["school"], frozenset(c["types"]), lower, upper))
    students = []
    for k, st in enumerate(students_doc):
        where = f"students[{k}]"
        if not isinstance(st, dict):
            raise StructuralError(f"{where}: must be an object")
        for key in ("id", "type", "prefs"):
            if key not in st:
                raise StructuralError(f"{where}: missing key {key!r}")
        students.append(Student(str(st["id"]), str(st["type"]), tuple(st["prefs"])))
    return Instance(tuple(schools), {str(t): c for t, c in types.items()}, tuple(constraints),
                    tuple(students), doc.get("outside", "phi"))


def instance_to_dict(inst: Instance) -> dict:
    type_order = {t: k for k, t in enumerate(inst.types)}
    return {
        "schools": list(inst.schools),
        "outside": inst.outside,
        "types": dict(inst.types),
        "constraints": [
            {
                "school": c.school,
                "types": sorted(c.types, key=type_order.__getitem__),
                "lower": fmt(c.lower),
                "upper": fmt(c.upper),
            }
            for c in inst.constraints
        ],
        "students": [{"id": st.id, "type": st.type, "prefs": list(st.prefs)} for st in inst.students],
    }


def parse_instance(path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path}: not valid JSON ({exc})") from None
    return instance_from_dict(doc)


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def write_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps(instance_to_dict(inst)), encoding="utf-8")


def fixture_path(name: str) -> Path:
    if not name.endswith(".json"):
        name += ".json"
    return Path(str(resources.files("quotamech") / "fixtures" / name))


def load_fixture(name: str) -> Instance:
    """Load one of the bundled example instances (e.g. ``"pairwise"``)."""
    return parse_instance(fixture_path(name))


def matrix_to_dict(entries: dict, rows, columns) -> dict:
    return {r: {s: fmt(entries.get((r, s), 0)) for s in columns} for r in rows}


def matrix_from_dict(doc: dict) -> dict:
    out = {}
    for r, cells in doc.items():
        for s, v in cells.items():
            q = as_rational(v)
            if q:
                out[r, s] = q
    return out


def rational_or_none(value):
    return None if value is None else Fraction(as_rational(value))
