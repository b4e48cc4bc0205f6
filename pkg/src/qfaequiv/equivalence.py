"""Equivalence of bilinear machines and of the quantum automata that reduce to them.

:func:`equiv_blm` explores words breadth-first in length-then-alphabet order
and keeps the joined reach vector ``(pi1 M1(w), pi2 M2(w))`` of each word that
is linearly independent of the vectors kept so far. At most ``n1 + n2``
vectors are kept and every other reach vector lies in the span of kept
vectors of words no later in that order. The machines are equivalent iff
every kept vector is orthogonal to ``(eta1, -eta2)``, and the first kept
word that is not is the shortest, alphabetically least separating word.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    EXACT,
    FLOAT,
    BackendMismatchError,
    GaussianRational,
    Matrix,
    direct_sum,
    format_scalar,
    hstack,
    vstack,
)
from .machines import BilinearMachine, ClassicalDfa, format_word, word_function
from .qfa import (
    DEFAULT_ENUMERATION_CAP,
    Cl1Qfa,
    EnumerationCapError,
    Mm1Qfa,
    Mo1Qfa,
    cl_accept_prob_bruteforce,
    mm_accept_prob,
    mo_accept_prob,
)
from .transforms import mo_to_rblm, pipeline_cl_to_blm, pipeline_mm_to_blm, reduce_to_blm


class WitnessVerificationError(RuntimeError):
    """A witness from the reduced machines does not separate the original machines."""


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    witness: tuple[str, ...] | None
    f1: object
    f2: object
    bound_used: int
    basis_dimension: int | None
    tol: float
    backend: str
    method: str = "spanning-basis"
    notes: tuple[str, ...] = field(default=())

    @property
    def outcome(self) -> str:
        return "Equivalent" if self.equivalent else "NotEquivalent"

    def __bool__(self):
        return self.equivalent

    def to_dict(self) -> dict:
        out = {
            "outcome": self.outcome,
            "equivalent": self.equivalent,
            "bound_used": self.bound_used,
            "basis_dimension": self.basis_dimension,
            "backend": self.backend,
            "tol": self.tol,
            "method": self.method,
        }
        if self.witness is not None:
            out["witness"] = list(self.witness)
            out["witness_text"] = format_word(self.witness)
            out["f1"] = _json_value(self.f1)
            out["f2"] = _json_value(self.f2)
            if self.backend == EXACT:
                out["f1_exact"] = format_scalar(self.f1)
                out["f2_exact"] = format_scalar(self.f2)
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _json_value(x):
    c = complex(x)
    if c.imag == 0 or abs(c.imag) <= 1e-15:
        return c.real
    return [c.real, c.imag]


def _is_exact(x) -> bool:
    return isinstance(x, (GaussianRational, Fraction, int))


def values_differ(x, y, tol: float) -> bool:
    if _is_exact(x) and _is_exact(y):
        return x != y
    return abs(complex(x) - complex(y)) > tol


class _SpanBasis:
    """Incremental reduced row echelon basis with an independence test."""

    def __init__(self, dim: int, exact: bool, tol: float):
        self.dim = dim
        self.exact = exact
        self.tol = tol
        self.rows: list[tuple[int, object]] = []

    def __len__(self):
        return len(self.rows)

    def insert(self, vec) -> bool:
        """Add ``vec`` if it is independent of the current span; report whether it was."""
        if self.exact:
            return self._insert_exact(list(vec))
        return self._insert_float(np.array(vec, dtype=complex))

    def _insert_exact(self, v: list) -> bool:
        for p, r in self.rows:
            c = v[p]
            if c:
                v = [x - c * y if y else x for x, y in zip(v, r)]
        pivot = next((i for i, x in enumerate(v) if x), None)
        if pivot is None:
            return False
        inv = 1 / v[pivot]
        v = [x * inv if x else x for x in v]
        rows = []
        for p, r in self.rows:
            c = r[pivot]
            rows.append((p, [x - c * y if y else x for x, y in zip(r, v)] if c else r))
        rows.append((pivot, v))
        self.rows = rows
        return True

    def _insert_float(self, v: np.ndarray) -> bool:
        scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
        for p, r in self.rows:
            c = v[p]
            if c != 0:
                v = v - c * r
        mags = np.abs(v)
        pivot = int(np.argmax(mags)) if v.size else 0
        if not v.size or mags[pivot] <= self.tol * scale:
            return False
        v = v / v[pivot]
        v[pivot] = 1.0
        rows = []
        for p, r in self.rows:
            c = r[pivot]
            if c != 0:
                r = r - c * v
                r[pivot] = 0.0
            rows.append((p, r))
        rows.append((pivot, v))
        self.rows = rows
        return True


def _check_pair(a: BilinearMachine, b: BilinearMachine) -> tuple[str, ...]:
    if set(a.alphabet) != set(b.alphabet):
        raise ValueError(f"alphabets differ: {list(a.alphabet)} vs {list(b.alphabet)}")
    if a.backend != b.backend:
        raise BackendMismatchError(f"backends differ: {a.backend} vs {b.backend}")
    return a.alphabet


def _spanning_search(a: BilinearMachine, b: BilinearMachine, tol: float):
    """Return ``(witness, kept_count)``; ``witness`` is ``None`` when equivalent."""
    alphabet = _check_pair(a, b)
    exact = a.backend == EXACT
    start = hstack(a.pi, b.pi)
    step = {s: direct_sum(a.transitions[s], b.transitions[s]) for s in alphabet}
    final = vstack(a.eta, -b.eta)
    basis = _SpanBasis(a.n + b.n, exact, tol)

    def separates(v: Matrix) -> bool:
        x = (v @ final)[0, 0]
        return bool(x) if exact else abs(x) > tol

    basis.insert(start.entries)
    if separates(start):
        return (), len(basis)
    queue = deque([((), start)])
    while queue:
        word, vec = queue.popleft()
        for s in alphabet:
            nxt = vec @ step[s]
            if not basis.insert(nxt.entries):
                continue
            w = word + (s,)
            if separates(nxt):
                return w, len(basis)
            queue.append((w, nxt))
    return None, len(basis)


def equiv_blm(a: BilinearMachine, b: BilinearMachine, tol: float = DEFAULT_TOL) -> EquivalenceVerdict:
    """Decide ``f_a == f_b`` with a shortest separating word when they differ.

    The search stops at the first separating kept word, so for inequivalent
    pairs ``basis_dimension`` counts the vectors kept up to that point.
    """
    witness, kept = _spanning_search(a, b, tol)
    bound = a.n + b.n - 1
    if witness is None:
        return EquivalenceVerdict(True, None, None, None, bound, kept, tol, a.backend)
    if len(witness) > bound:
        raise AssertionError(f"witness of length {len(witness)} exceeds the bound {bound}")
    return EquivalenceVerdict(
        False, witness, word_function(a, witness), word_function(b, witness), bound, kept, tol, a.backend
    )


def _words(alphabet: Sequence[str], k: int):
    for length in range(k + 1):
        yield from itertools.product(alphabet, repeat=length)


def k_equiv_bruteforce(
    a: BilinearMachine,
    b: BilinearMachine,
    k: int,
    tol: float = DEFAULT_TOL,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> EquivalenceVerdict:
    """Compare word functions on every word of length at most ``k``."""
    alphabet = _check_pair(a, b)
    count = sum(len(alphabet) ** i for i in range(k + 1))
    if count > cap:
        raise EnumerationCapError(f"{count} words up to length {k} exceed the cap of {cap}")
    for w in _words(alphabet, k):
        x, y = word_function(a, w), word_function(b, w)
        if values_differ(x, y, tol):
            return EquivalenceVerdict(False, w, x, y, k, None, tol, a.backend, "bruteforce")
    return EquivalenceVerdict(True, None, None, None, k, None, tol, a.backend, "bruteforce")


def _with_direct_values(verdict: EquivalenceVerdict, f1, f2, tol, bound, notes=()) -> EquivalenceVerdict:
    if not values_differ(f1, f2, tol):
        raise WitnessVerificationError(
            f"witness {format_word(verdict.witness)!r} does not separate the machines under direct "
            f"simulation ({f1} vs {f2}); the tolerance {tol} is probably too small or too large"
        )
    return EquivalenceVerdict(
        False, verdict.witness, f1, f2, bound, verdict.basis_dimension, tol, verdict.backend, verdict.method,
        tuple(notes),
    )


def _rebase(verdict: EquivalenceVerdict, bound: int, notes=()) -> EquivalenceVerdict:
    return EquivalenceVerdict(
        verdict.equivalent, verdict.witness, verdict.f1, verdict.f2, bound, verdict.basis_dimension,
        verdict.tol, verdict.backend, verdict.method, tuple(notes),
    )


def _same_input_alphabet(a, b):
    if set(a.alphabet) != set(b.alphabet):
        raise ValueError(f"input alphabets differ: {list(a.alphabet)} vs {list(b.alphabet)}")


def equiv_mm(a: Mm1Qfa, b: Mm1Qfa, tol: float = DEFAULT_TOL) -> EquivalenceVerdict:
    """Measure-many equivalence; any witness is re-checked with :func:`mm_accept_prob`."""
    _same_input_alphabet(a, b)
    verdict = equiv_blm(pipeline_mm_to_blm(a), pipeline_mm_to_blm(b), tol)
    bound = 3 * a.n**2 + 3 * b.n**2 - 1
    if verdict.equivalent:
        return _rebase(verdict, bound)
    w = verdict.witness
    return _with_direct_values(verdict, mm_accept_prob(a, w), mm_accept_prob(b, w), tol, bound)


def _cl_direct(m: Cl1Qfa, blm: BilinearMachine, w, cap: int):
    if len(m.observable.results) ** (len(w) + 1) <= cap:
        return cl_accept_prob_bruteforce(m, w, cap), True
    return word_function(blm, w), False


def equiv_cl(
    a: Cl1Qfa,
    b: Cl1Qfa,
    tol: float = DEFAULT_TOL,
    minimize: bool = True,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> EquivalenceVerdict:
    """Control-language QFA equivalence.

    The bound is ``c1 n1^2 + c2 n2^2 - 1`` with ``c`` the size of the control
    DFA actually used (minimal unless ``minimize=False``).
    """
    _same_input_alphabet(a, b)
    ra, rb = pipeline_cl_to_blm(a, minimize), pipeline_cl_to_blm(b, minimize)
    verdict = equiv_blm(ra, rb, tol)
    bound = ra.n + rb.n - 1
    notes = []
    if a.control_regex is not None or b.control_regex is not None:
        notes.append("control DFA built from a regular expression; determinization is worst-case exponential")
    if verdict.equivalent:
        return _rebase(verdict, bound, notes)
    w = verdict.witness
    f1, direct1 = _cl_direct(a, ra, w, cap)
    f2, direct2 = _cl_direct(b, rb, w, cap)
    if not (direct1 and direct2):
        notes.append("witness too long for enumeration; values taken from the reduced machines")
    return _with_direct_values(verdict, f1, f2, tol, bound, notes)


def equiv_mo(a: Mo1Qfa, b: Mo1Qfa, tol: float = DEFAULT_TOL) -> EquivalenceVerdict:
    """Measure-once equivalence through bilinearization; bound ``n1^2 + n2^2 - 1``."""
    _same_input_alphabet(a, b)
    verdict = equiv_blm(mo_to_rblm(a), mo_to_rblm(b), tol)
    bound = a.n**2 + b.n**2 - 1
    if verdict.equivalent:
        return _rebase(verdict, bound)
    w = verdict.witness
    return _with_direct_values(verdict, mo_accept_prob(a, w), mo_accept_prob(b, w), tol, bound)


def direct_value(machine, word, cap: int = DEFAULT_ENUMERATION_CAP):
    """Acceptance probability (or word function) by the machine's own simulator."""
    if isinstance(machine, Mm1Qfa):
        return mm_accept_prob(machine, word)
    if isinstance(machine, Mo1Qfa):
        return mo_accept_prob(machine, word)
    if isinstance(machine, Cl1Qfa):
        w = tuple(word) if not isinstance(word, str) else word
        try:
            return cl_accept_prob_bruteforce(machine, w, cap)
        except EnumerationCapError:
            return word_function(pipeline_cl_to_blm(machine), w)
    if isinstance(machine, ClassicalDfa):
        return Fraction(int(machine.accepts(word)))
    if isinstance(machine, BilinearMachine):
        return word_function(machine, word)
    raise TypeError(f"unsupported machine {type(machine).__name__}")


def equivalent(a, b, tol: float = DEFAULT_TOL, minimize: bool = True) -> EquivalenceVerdict:
    """Dispatch on machine kinds; mixed kinds are compared through their reductions."""
    if isinstance(a, Mm1Qfa) and isinstance(b, Mm1Qfa):
        return equiv_mm(a, b, tol)
    if isinstance(a, Cl1Qfa) and isinstance(b, Cl1Qfa):
        return equiv_cl(a, b, tol, minimize)
    if isinstance(a, Mo1Qfa) and isinstance(b, Mo1Qfa):
        return equiv_mo(a, b, tol)
    _same_input_alphabet(a, b)
    ra, _ = reduce_to_blm(a, minimize)
    rb, _ = reduce_to_blm(b, minimize)
    if ra.backend != rb.backend:
        ra, rb = ra.to_backend(FLOAT), rb.to_backend(FLOAT)
    verdict = equiv_blm(ra, rb, tol)
    if verdict.equivalent or (isinstance(a, BilinearMachine) and isinstance(b, BilinearMachine)):
        return verdict
    w = verdict.witness
    return _with_direct_values(verdict, direct_value(a, w), direct_value(b, w), tol, verdict.bound_used)
