"""JSON machine documents.

Every document has ``kind`` (``blm``, ``dfa``, ``mo1qfa``, ``mm1qfa`` or
``cl1qfa``), ``alphabet``, and optionally ``backend`` (``exact``/``float``),
``name`` and ``description``. Scalars are expression strings such as
``"1/sqrt(2)"`` or ``"3/4 - i/2"``; JSON integers are accepted too. The
end-marker is always the symbol ``"$"``. See ``docs/format.md`` for the
full schema.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .linalg import (
    DEFAULT_TOL,
    EXACT,
    FLOAT,
    BackendMismatchError,
    GaussianRational,
    Matrix,
    ScalarParseError,
    format_scalar,
    parse_scalar,
)
from .machines import END_MARKER, BilinearMachine, ClassicalDfa
from .qfa import Cl1Qfa, Mm1Qfa, Mo1Qfa, Observable
from .regex import RegexSyntaxError, StateCapError, regex_to_dfa

KINDS = ("blm", "dfa", "mo1qfa", "mm1qfa", "cl1qfa")


class MachineValidationError(ValueError):
    """A document failed to parse or validate; ``problems`` lists every violation found."""

    def __init__(self, problems: list[str], source: str | None = None):
        self.problems = list(problems)
        self.source = source
        head = f"{source}: " if source else ""
        super().__init__(head + "; ".join(self.problems))


@dataclass(frozen=True)
class MachineDocument:
    kind: str
    machine: Any
    name: str | None = None
    description: str | None = None


def kind_of(machine) -> str:
    if isinstance(machine, Mm1Qfa):
        return "mm1qfa"
    if isinstance(machine, Cl1Qfa):
        return "cl1qfa"
    if isinstance(machine, Mo1Qfa):
        return "mo1qfa"
    if isinstance(machine, ClassicalDfa):
        return "dfa"
    if isinstance(machine, BilinearMachine):
        return "blm"
    raise TypeError(f"unsupported machine {type(machine).__name__}")


class _Reader:
    """Collects problems instead of stopping at the first one."""

    def __init__(self, doc: dict):
        self.doc = doc
        self.problems: list[str] = []
        self.saw_float = False

    def fail(self, msg: str):
        self.problems.append(msg)

    def scalar(self, x, where: str):
        try:
            v = parse_scalar(x)
        except ScalarParseError as e:
            self.fail(f"{where}: {e}")
            return GaussianRational(0)
        if not isinstance(v, GaussianRational):
            self.saw_float = True
        return v

    def matrix(self, rows, where: str, shape: tuple[int, int] | None = None):
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            self.fail(f"{where}: expected a list of rows")
            return None
        if shape is not None and (len(rows) != shape[0] or any(len(r) != shape[1] for r in rows)):
            got = f"{len(rows)}x{len(rows[0]) if rows else 0}"
            self.fail(f"{where}: expected a {shape[0]}x{shape[1]} matrix, got {got}")
            return None
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            self.fail(f"{where}: ragged rows")
            return None
        return [[self.scalar(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(rows)]

    def vector(self, values, where: str, n: int | None = None):
        if not isinstance(values, list):
            self.fail(f"{where}: expected a list")
            return None
        if n is not None and len(values) != n:
            self.fail(f"{where}: expected {n} entries, got {len(values)}")
            return None
        return [self.scalar(x, f"{where}[{i}]") for i, x in enumerate(values)]

    def require(self, key: str, typ=None):
        if key not in self.doc:
            self.fail(f"missing field {key!r}")
            return None
        v = self.doc[key]
        if typ is not None and not isinstance(v, typ):
            self.fail(f"field {key!r} must be {typ.__name__ if isinstance(typ, type) else typ}")
            return None
        return v


def _resolve_backend(reader: _Reader, hint: str | None) -> str:
    if hint not in (None, EXACT, FLOAT):
        reader.fail(f"unknown backend {hint!r}")
        return FLOAT
    if hint == EXACT and reader.saw_float:
        reader.fail("backend 'exact' requested but some entries are irrational (sqrt of a non-square)")
    if hint is None:
        return FLOAT if reader.saw_float else EXACT
    return hint


def _mat(rows, backend):
    return Matrix.from_rows(rows, backend)


def _state_index(names: list[str] | None, n: int, ref, where: str, reader: _Reader):
    if isinstance(ref, bool):
        reader.fail(f"{where}: invalid state reference {ref!r}")
        return None
    if isinstance(ref, int):
        if 0 <= ref < n:
            return ref
        reader.fail(f"{where}: state index {ref} out of range")
        return None
    if names is not None and ref in names:
        return names.index(ref)
    reader.fail(f"{where}: unknown state {ref!r}")
    return None


def _states(reader: _Reader):
    states = reader.require("states")
    if isinstance(states, bool) or states is None:
        return None, None
    if isinstance(states, int):
        if states < 1:
            reader.fail("'states' must be positive")
            return None, None
        return states, None
    if isinstance(states, list) and all(isinstance(s, str) for s in states):
        if len(set(states)) != len(states):
            reader.fail("duplicate state names")
        return len(states), list(states)
    reader.fail("'states' must be a count or a list of names")
    return None, None


def _read_dfa(doc: dict, reader: _Reader, where: str = "") -> ClassicalDfa | None:
    sub = _Reader(doc)
    alphabet = sub.require("alphabet", list)
    n, names = _states(sub)
    initial = doc.get("initial", 0)
    accepting = sub.require("accepting", list)
    trans = sub.require("transitions", list)
    if alphabet is not None and n is not None and accepting is not None and trans is not None:
        init = _state_index(names, n, initial, "initial", sub)
        acc = [_state_index(names, n, q, "accepting", sub) for q in accepting]
        if len(trans) != n:
            sub.fail(f"'transitions' has {len(trans)} entries for {n} states")
        delta = []
        for q, row in enumerate(trans):
            if not isinstance(row, dict):
                sub.fail(f"transitions[{q}] must map symbols to states")
                continue
            missing = [s for s in alphabet if s not in row]
            extra = [s for s in row if s not in alphabet]
            if missing:
                sub.fail(f"transitions[{q}] is missing symbols {missing}; DFAs must be total")
            if extra:
                sub.fail(f"transitions[{q}] uses undeclared symbols {extra}")
            delta.append(tuple(_state_index(names, n, row.get(s, 0), f"transitions[{q}][{s!r}]", sub) for s in alphabet))
        if not sub.problems:
            try:
                dfa = ClassicalDfa(n, tuple(alphabet), init, tuple(delta), frozenset(acc))
            except ValueError as e:
                sub.fail(str(e))
            else:
                reader.problems.extend(sub.problems)
                return dfa
    reader.problems.extend(f"{where}{p}" for p in sub.problems)
    return None


def _read_blm(reader: _Reader, alphabet, backend_hint):
    doc = reader.doc
    pi = reader.vector(reader.require("initial"), "initial")
    n = len(pi) if pi else None
    eta = reader.vector(reader.require("final"), "final", n)
    trans_doc = reader.require("transitions", dict) or {}
    mats = {}
    for s in alphabet:
        if s not in trans_doc:
            reader.fail(f"transitions: no matrix for symbol {s!r}")
            continue
        mats[s] = reader.matrix(trans_doc[s], f"transitions[{s!r}]", (n, n) if n else None)
    for s in trans_doc:
        if s not in alphabet:
            reader.fail(f"transitions: symbol {s!r} is not in the alphabet")
    backend = _resolve_backend(reader, backend_hint)
    if reader.problems:
        return None
    return BilinearMachine(
        tuple(alphabet),
        Matrix.row(pi, backend),
        {s: _mat(m, backend) for s, m in mats.items()},
        Matrix.column(eta, backend),
        certified_real=bool(doc.get("certified_real", False)),
    )


def _read_observable(reader: _Reader, n: int, names, results_expected):
    obs = reader.require("observable", dict)
    if obs is None:
        return None
    if "partition" in obs:
        parts = obs["partition"]
        if not isinstance(parts, dict):
            reader.fail("observable.partition must map results to state lists")
            return None
        idx = {}
        for c, refs in parts.items():
            if not isinstance(refs, list):
                reader.fail(f"observable.partition[{c!r}] must be a list")
                continue
            idx[c] = [_state_index(names, n, r, f"observable.partition[{c!r}]", reader) for r in refs]
        return ("partition", idx)
    if "projectors" in obs:
        projs = obs["projectors"]
        if not isinstance(projs, dict):
            reader.fail("observable.projectors must map results to matrices")
            return None
        return ("projectors", {c: reader.matrix(m, f"observable.projectors[{c!r}]", (n, n)) for c, m in projs.items()})
    reader.fail("observable needs 'partition' or 'projectors'")
    return None


def _check_results(reader: _Reader, kind: str, results):
    expected = {"mo1qfa": {"a", "r"}, "mm1qfa": {"a", "r", "g"}}.get(kind)
    if expected is not None and set(results) != expected:
        reader.fail(f"{kind} observable must have results {sorted(expected)}, got {sorted(results)}")


def _read_qfa(reader: _Reader, kind: str, alphabet, backend_hint, tol):
    doc = reader.doc
    n, names = _states(reader)
    if END_MARKER in alphabet:
        if kind != "mo1qfa":
            reader.fail(f"the end-marker {END_MARKER!r} is implicit and must not be listed in the alphabet")
    working = list(alphabet) + ([END_MARKER] if kind in ("mm1qfa", "cl1qfa") else [])
    pi = reader.vector(reader.require("initial"), "initial", n)
    udoc = reader.require("unitaries", dict) or {}
    mats = {}
    for s in working:
        if s not in udoc:
            reader.fail(f"unitaries: no matrix for symbol {s!r}")
            continue
        mats[s] = reader.matrix(udoc[s], f"unitaries[{s!r}]", (n, n) if n else None)
    for s in udoc:
        if s not in working:
            reader.fail(f"unitaries: symbol {s!r} is not in the working alphabet")
    observable = _read_observable(reader, n, names, None) if n else None

    control = regex = None
    if kind == "cl1qfa":
        cdoc = reader.require("control", dict)
        results = None
        if observable is not None:
            results = list(observable[1].keys())
        if cdoc is not None and results is not None:
            if "regex" in cdoc:
                regex = cdoc["regex"]
                try:
                    control = regex_to_dfa(regex, results)
                except (RegexSyntaxError, StateCapError) as e:
                    reader.fail(f"control.regex: {e}")
            elif "dfa" in cdoc:
                control = _read_dfa(cdoc["dfa"], reader, "control.dfa: ")
            else:
                reader.fail("control needs 'regex' or 'dfa'")
    if observable is not None:
        _check_results(reader, kind, observable[1].keys())

    backend = _resolve_backend(reader, backend_hint)
    if reader.problems:
        return None
    if observable[0] == "partition":
        obs = Observable.from_partition(n, observable[1], backend)
    else:
        obs = Observable(tuple(observable[1]), {c: _mat(m, backend) for c, m in observable[1].items()})
    pi_m = Matrix.row(pi, backend)
    umats = {s: _mat(m, backend) for s, m in mats.items()}
    try:
        if kind == "mo1qfa":
            machine = Mo1Qfa(tuple(alphabet), pi_m, umats, obs, bool(doc.get("allow_nonunitary", False)))
        elif kind == "mm1qfa":
            machine = Mm1Qfa(tuple(alphabet), pi_m, umats, obs)
        else:
            machine = Cl1Qfa(tuple(alphabet), pi_m, umats, obs, control=control, control_regex=regex)
    except ValueError as e:
        reader.fail(str(e))
        return None
    reader.problems.extend(machine.violations(tol))
    return machine


def parse_document(doc: dict, tol: float = DEFAULT_TOL, source: str | None = None) -> MachineDocument:
    """Build and validate a machine from a decoded JSON object."""
    if not isinstance(doc, dict):
        raise MachineValidationError(["document must be a JSON object"], source)
    reader = _Reader(doc)
    kind = doc.get("kind")
    if kind not in KINDS:
        raise MachineValidationError([f"'kind' must be one of {list(KINDS)}, got {kind!r}"], source)
    alphabet = reader.require("alphabet", list)
    if alphabet is not None:
        if not all(isinstance(s, str) and s for s in alphabet):
            reader.fail("alphabet symbols must be non-empty strings")
        elif len(set(alphabet)) != len(alphabet):
            reader.fail("duplicate symbols in alphabet")
    if reader.problems:
        raise MachineValidationError(reader.problems, source)
    hint = doc.get("backend")
    if kind == "dfa":
        machine = _read_dfa(doc, reader)
    elif kind == "blm":
        machine = _read_blm(reader, alphabet, hint)
    else:
        machine = _read_qfa(reader, kind, alphabet, hint, tol)
    if reader.problems or machine is None:
        raise MachineValidationError(reader.problems or ["invalid document"], source)
    return MachineDocument(kind, machine, doc.get("name"), doc.get("description"))


def load_document(path, tol: float = DEFAULT_TOL) -> MachineDocument:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise MachineValidationError([f"cannot read file: {e.strerror}"], str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MachineValidationError([f"JSON parse error: {e}"], str(path)) from None
    return parse_document(doc, tol, str(path))


def load_machine(path, tol: float = DEFAULT_TOL):
    """Parse and fully validate a machine document; raises :class:`MachineValidationError`."""
    return load_document(path, tol).machine


# serialization


def _fmt_matrix(m: Matrix) -> list[list[str]]:
    return [[format_scalar(x) for x in row] for row in m.tolist()]


def _fmt_vector(m: Matrix) -> list[str]:
    return [format_scalar(x) for x in m.entries]


def _dfa_body(d: ClassicalDfa) -> dict:
    return {
        "alphabet": list(d.alphabet),
        "states": d.n_states,
        "initial": d.initial,
        "accepting": sorted(d.accepting),
        "transitions": [{s: d.delta[q][k] for k, s in enumerate(d.alphabet)} for q in range(d.n_states)],
    }


def _observable_body(obs: Observable) -> dict:
    supports = {c: obs.support(c) for c in obs.results}
    if all(v is not None for v in supports.values()):
        return {"partition": supports}
    return {"projectors": {c: _fmt_matrix(obs[c]) for c in obs.results}}


def to_document(machine, name: str | None = None, description: str | None = None) -> dict:
    kind = kind_of(machine)
    doc: dict[str, Any] = {"kind": kind}
    if name is not None:
        doc["name"] = name
    if description is not None:
        doc["description"] = description
    if kind == "dfa":
        doc.update(_dfa_body(machine))
        return doc
    doc["backend"] = machine.backend
    doc["alphabet"] = list(machine.alphabet)
    if kind == "blm":
        doc["states"] = machine.n
        doc["initial"] = _fmt_vector(machine.pi)
        doc["transitions"] = {s: _fmt_matrix(machine.transitions[s]) for s in machine.alphabet}
        doc["final"] = _fmt_vector(machine.eta)
        if machine.certified_real:
            doc["certified_real"] = True
        return doc
    doc["states"] = machine.n
    doc["initial"] = _fmt_vector(machine.pi)
    doc["unitaries"] = {s: _fmt_matrix(machine.unitaries[s]) for s in machine.working_alphabet}
    doc["observable"] = _observable_body(machine.observable)
    if kind == "mo1qfa" and machine.allow_nonunitary:
        doc["allow_nonunitary"] = True
    if kind == "cl1qfa":
        control: dict[str, Any] = {"dfa": _dfa_body(machine.control)}
        if machine.control_regex is not None:
            control = {"regex": machine.control_regex}
        doc["control"] = control
    return doc


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_document(doc: MachineDocument, path=None) -> str:
    text = dumps(to_document(doc.machine, doc.name, doc.description))
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def save_machine(machine, path=None, name: str | None = None, description: str | None = None) -> str:
    """Canonical JSON text (sorted keys, normalized scalars); written to ``path`` if given."""
    return save_document(MachineDocument(kind_of(machine), machine, name, description), path)


def convert_backend(machine, backend: str | None):
    if backend is None or isinstance(machine, ClassicalDfa) or machine.backend == backend:
        return machine
    if backend == EXACT:
        raise BackendMismatchError("a float machine cannot be converted to the exact backend")
    return machine.to_backend(backend)
