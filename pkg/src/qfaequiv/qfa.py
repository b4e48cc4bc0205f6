"""One-way quantum finite automata and their direct simulators.

States are row vectors and evolve by right multiplication, ``phi -> phi U``.
Row ``q`` of ``U(s)`` is therefore the image of basis state ``q``: the ket
rule ``U|q> = sum_j alpha_j |q_j>`` is written ``U[q, j] = alpha_j``.

Three models are supported:

* :class:`Mo1Qfa` -- measured once, after the whole word, results ``{a, r}``.
* :class:`Mm1Qfa` -- measured after every symbol and after the end-marker
  ``$``, results ``{a, r, g}``; halts on ``a`` or ``r``.
* :class:`Cl1Qfa` -- measured after every symbol with an arbitrary result set;
  accepts when the result sequence lies in a regular control language.

Simulators propagate unnormalized states, so accept masses add up directly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .linalg import (
    DEFAULT_TOL,
    EXACT,
    DimensionError,
    GaussianRational,
    Matrix,
    conj_transpose,
    is_hermitian,
    is_unitary,
    norm_sq,
    same_backend,
    unitarity_deviation,
)
from .machines import END_MARKER, ClassicalDfa, UnknownSymbolError, split_word

ACCEPT, REJECT, GO = "a", "r", "g"

DEFAULT_ENUMERATION_CAP = 10**6


class EnumerationCapError(RuntimeError):
    """Brute-force enumeration would exceed the configured cap."""


@dataclass(frozen=True, eq=False)
class Observable:
    """A projective measurement given by one projector per result."""

    results: tuple[str, ...]
    projectors: Mapping[str, Matrix]

    def __post_init__(self):
        object.__setattr__(self, "results", tuple(self.results))
        object.__setattr__(self, "projectors", MappingProxyType(dict(self.projectors)))
        if len(set(self.results)) != len(self.results):
            raise ValueError("duplicate measurement results")
        if set(self.results) != set(self.projectors):
            raise ValueError("every result needs exactly one projector")
        shapes = {p.shape for p in self.projectors.values()}
        if len(shapes) > 1:
            raise DimensionError(f"projectors have different shapes: {sorted(shapes)}")
        if shapes and not self.projectors[self.results[0]].is_square():
            raise DimensionError("projectors must be square")
        same_backend(*self.projectors.values())

    @classmethod
    def from_partition(
        cls, n: int, parts: Mapping[str, Iterable[int]], backend: str = EXACT
    ) -> "Observable":
        """Diagonal 0/1 projectors onto the listed basis states of each result."""
        projectors = {}
        for result, idx in parts.items():
            idx = set(idx)
            bad = [i for i in idx if not 0 <= i < n]
            if bad:
                raise ValueError(f"state indices {bad} out of range for result {result!r}")
            rows = [[1 if (i == j and i in idx) else 0 for j in range(n)] for i in range(n)]
            projectors[result] = Matrix.from_rows(rows, EXACT).to_backend(backend)
        return cls(tuple(parts), projectors)

    @property
    def dim(self) -> int:
        return self.projectors[self.results[0]].rows

    @property
    def backend(self) -> str:
        return self.projectors[self.results[0]].backend

    def __getitem__(self, result: str) -> Matrix:
        return self.projectors[result]

    def support(self, result: str) -> list[int] | None:
        """Basis indices of a diagonal 0/1 projector, or ``None`` if not basis-aligned."""
        p = self.projectors[result]
        idx = []
        for i in range(p.rows):
            for j in range(p.cols):
                x = p[i, j]
                if i != j and x != 0:
                    return None
            x = p[i, i]
            if x == 1:
                idx.append(i)
            elif x != 0:
                return None
        return idx

    def violations(self, tol: float = DEFAULT_TOL) -> list[str]:
        t = 0.0 if self.backend == EXACT else tol
        out = []
        eye = Matrix.identity(self.dim, self.backend)
        zero = Matrix.zeros(self.dim, self.dim, self.backend)
        total = zero
        for c in self.results:
            p = self.projectors[c]
            if not is_hermitian(p, t):
                out.append(f"projector P({c}) is not Hermitian (deviation {p.max_deviation(conj_transpose(p)):.3g})")
            sq = p @ p
            if not sq.equals(p, t):
                out.append(f"projector P({c}) is not idempotent (deviation {sq.max_deviation(p):.3g})")
            total = total + p
        for c1, c2 in itertools.combinations(self.results, 2):
            prod = self.projectors[c1] @ self.projectors[c2]
            if not prod.equals(zero, t):
                out.append(f"projectors P({c1}) and P({c2}) are not orthogonal (deviation {prod.max_deviation(zero):.3g})")
        if not total.equals(eye, t):
            out.append(f"projectors do not sum to the identity (deviation {total.max_deviation(eye):.3g})")
        return out

    def to_backend(self, backend: str) -> "Observable":
        return Observable(self.results, {c: p.to_backend(backend) for c, p in self.projectors.items()})


def _zero_prob(backend: str):
    return Fraction(0) if backend == EXACT else 0.0


@dataclass(frozen=True, eq=False)
class _Qfa:
    alphabet: tuple[str, ...]
    pi: Matrix
    unitaries: Mapping[str, Matrix]
    observable: Observable

    # symbols that must carry a unitary; overridden by models with an end-marker
    def _working_alphabet(self) -> tuple[str, ...]:
        return self.alphabet

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "unitaries", MappingProxyType(dict(self.unitaries)))
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate symbols in alphabet")
        n = self.pi.cols
        if self.pi.rows != 1:
            raise DimensionError(f"initial state must be a row vector, got {self.pi.shape}")
        expected = set(self._working_alphabet())
        if set(self.unitaries) != expected:
            raise ValueError(f"unitaries defined for {sorted(self.unitaries)}, expected {sorted(expected)}")
        for s, u in self.unitaries.items():
            if u.shape != (n, n):
                raise DimensionError(f"U({s!r}) must be {n}x{n}, got {u.shape}")
        if self.observable.dim != n:
            raise DimensionError(f"observable acts on {self.observable.dim} states, machine has {n}")
        same_backend(self.pi, *self.unitaries.values(), *self.observable.projectors.values())

    @property
    def n(self) -> int:
        return self.pi.cols

    @property
    def backend(self) -> str:
        return self.pi.backend

    @property
    def working_alphabet(self) -> tuple[str, ...]:
        return self._working_alphabet()

    def _check_unitaries(self, tol) -> list[str]:
        out = []
        for s in self._working_alphabet():
            u = self.unitaries[s]
            if not is_unitary(u, tol):
                dev = unitarity_deviation(u)
                out.append(f"U({s}) is not unitary (deviation {dev:.3g})")
        return out

    def _check_pi(self, tol) -> list[str]:
        sq = norm_sq(self.pi)
        if self.backend == EXACT:
            return [] if sq == 1 else [f"initial vector has squared norm {sq}, expected 1"]
        return [] if abs(sq - 1) <= tol else [f"initial vector has squared norm {sq:.12g}, expected 1"]

    def violations(self, tol: float = DEFAULT_TOL) -> list[str]:
        return self._check_pi(tol) + self._check_unitaries(tol) + self.observable.violations(tol)

    def validate(self, tol: float = DEFAULT_TOL) -> None:
        problems = self.violations(tol)
        if problems:
            raise ValueError("; ".join(problems))

    def _replace(self, **changes):
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return type(self)(**fields)

    def to_backend(self, backend: str):
        return self._replace(
            pi=self.pi.to_backend(backend),
            unitaries={s: u.to_backend(backend) for s, u in self.unitaries.items()},
            observable=self.observable.to_backend(backend),
        )


@dataclass(frozen=True, eq=False)
class Mo1Qfa(_Qfa):
    """Measure-once QFA.

    With ``allow_nonunitary`` the evolution matrices are not checked; values
    above 1 are then possible and are reported as computed.
    """

    allow_nonunitary: bool = False

    def __post_init__(self):
        super().__post_init__()
        if set(self.observable.results) != {ACCEPT, REJECT}:
            raise ValueError(f"MO-1QFA observable must have results {{a, r}}, got {list(self.observable.results)}")

    def _check_unitaries(self, tol):
        return [] if self.allow_nonunitary else super()._check_unitaries(tol)


@dataclass(frozen=True, eq=False)
class Mm1Qfa(_Qfa):
    """Measure-many QFA over ``alphabet + ($,)``."""

    def _working_alphabet(self):
        return self.alphabet + (END_MARKER,)

    def __post_init__(self):
        if END_MARKER in tuple(self.alphabet):
            raise ValueError(f"the end-marker {END_MARKER!r} cannot be an input symbol")
        super().__post_init__()
        if set(self.observable.results) != {ACCEPT, REJECT, GO}:
            raise ValueError(
                f"MM-1QFA observable must have results {{a, r, g}}, got {list(self.observable.results)}"
            )


@dataclass(frozen=True, eq=False)
class Cl1Qfa(_Qfa):
    """QFA with control language, given as a DFA over the measurement results."""

    control: ClassicalDfa = None
    control_regex: str | None = field(default=None)

    def _working_alphabet(self):
        return self.alphabet + (END_MARKER,)

    def __post_init__(self):
        if END_MARKER in tuple(self.alphabet):
            raise ValueError(f"the end-marker {END_MARKER!r} cannot be an input symbol")
        super().__post_init__()
        if self.control is None:
            raise ValueError("a CL-1QFA needs a control DFA")
        if set(self.control.alphabet) != set(self.observable.results):
            raise ValueError(
                f"control DFA alphabet {list(self.control.alphabet)} differs from "
                f"measurement results {list(self.observable.results)}"
            )


def _input(m: _Qfa, word) -> tuple[str, ...]:
    w = split_word(word, m.working_alphabet)
    if isinstance(m, (Mm1Qfa, Cl1Qfa)) and END_MARKER in w:
        raise UnknownSymbolError(f"the end-marker {END_MARKER!r} is appended automatically; do not pass it")
    return w


def mo_accept_prob(m: Mo1Qfa, word):
    """``|| pi U(w1) ... U(wk) P(a) ||^2``."""
    v = m.pi
    for s in _input(m, word):
        v = v @ m.unitaries[s]
    return norm_sq(v @ m.observable[ACCEPT])


@dataclass(frozen=True)
class MmStep:
    symbol: str
    accept: object
    reject: object
    go: object


def mm_trace(m: Mm1Qfa, word) -> list[MmStep]:
    """Per-step accept/reject/continue masses, end-marker step included."""
    pa, pr, pg = m.observable[ACCEPT], m.observable[REJECT], m.observable[GO]
    v = m.pi
    steps = []
    for s in _input(m, word) + (END_MARKER,):
        v = v @ m.unitaries[s]
        nxt = v @ pg
        steps.append(MmStep(s, norm_sq(v @ pa), norm_sq(v @ pr), norm_sq(nxt)))
        v = nxt
    return steps


def mm_accept_prob(m: Mm1Qfa, word):
    """Acceptance probability of ``word + $`` for a measure-many machine."""
    pa, pg = m.observable[ACCEPT], m.observable[GO]
    v = m.pi
    total = _zero_prob(m.backend)
    for s in _input(m, word) + (END_MARKER,):
        v = v @ m.unitaries[s]
        total += norm_sq(v @ pa)
        v = v @ pg
    return total


def mm_outcome_distribution(m: Mm1Qfa, word) -> dict[str, object]:
    """Accept and reject probabilities.

    Mass still in the go subspace after the end-marker is unaccepted and is
    counted as reject, so the two values sum to ``||pi||^2``.
    """
    steps = mm_trace(m, word)
    zero = _zero_prob(m.backend)
    accept = sum((s.accept for s in steps), zero)
    reject = sum((s.reject for s in steps), zero) + steps[-1].go
    return {"accept": accept, "reject": reject}


def cl_outcome_prob(m: Cl1Qfa, x, y: Sequence[str]):
    """Probability that ``x + $`` produces result sequence ``y``."""
    w = _input(m, x) + (END_MARKER,)
    y = tuple(y)
    if len(y) != len(w):
        raise ValueError(f"result sequence has length {len(y)}, expected {len(w)}")
    for c in y:
        if c not in m.observable.projectors:
            raise UnknownSymbolError(f"unknown measurement result {c!r}")
    v = m.pi
    for s, c in zip(w, y):
        v = v @ m.unitaries[s] @ m.observable[c]
    return norm_sq(v)


def _check_cap(count: int, cap: int):
    if count > cap:
        raise EnumerationCapError(
            f"enumeration of {count} result sequences exceeds the cap of {cap}; "
            "use the bilinear reduction instead"
        )


def cl_accept_prob_bruteforce(m: Cl1Qfa, x, cap: int = DEFAULT_ENUMERATION_CAP):
    """Sum of ``p(y | x$)`` over every result sequence ``y`` in the control language."""
    w = _input(m, x)
    results = m.observable.results
    _check_cap(len(results) ** (len(w) + 1), cap)
    total = _zero_prob(m.backend)
    for y in itertools.product(results, repeat=len(w) + 1):
        if m.control.accepts(y):
            total += cl_outcome_prob(m, w, y)
    return total


def check_total_probability(
    unitaries: Mapping[str, Matrix],
    observable: Observable,
    alpha: Matrix,
    x: Sequence[str],
    cap: int = DEFAULT_ENUMERATION_CAP,
):
    """Total mass of all measurement-result sequences for ``x`` started from ``alpha``.

    For unitary evolution and a complete projective measurement this equals
    ``||alpha||^2``.
    """
    x = tuple(x)
    for s in x:
        if s not in unitaries:
            raise UnknownSymbolError(f"no unitary for symbol {s!r}")
    results = observable.results
    _check_cap(len(results) ** len(x), cap)
    total = _zero_prob(alpha.backend)
    for y in itertools.product(results, repeat=len(x)):
        v = alpha
        for s, c in zip(x, y):
            v = v @ unitaries[s] @ observable[c]
        total += norm_sq(v)
    return total


def koshiba_g_machine(m: Mm1Qfa) -> Mo1Qfa:
    """Koshiba's MM-to-"MO-g1QFA" construction, single accepting state only.

    Every non-accepting state keeps its transitions except that amplitude
    sent to the accepting state is redirected to a fresh sink ``q_s`` for the
    symbol ``s`` read. The sinks form the accepting set and are fixed by every
    matrix. The result reads ``$`` as an ordinary symbol. It accumulates
    amplitudes where the MM machine accumulates probabilities, so it is not an
    equivalent machine in general.
    """
    acc = m.observable.support(ACCEPT)
    if acc is None or len(acc) != 1:
        raise ValueError("the construction is defined only for exactly one basis-aligned accepting state")
    q_acc = acc[0]
    if m.pi[0, q_acc] != 0:
        raise ValueError("the initial vector must have no amplitude on the accepting state")
    keep = [q for q in range(m.n) if q != q_acc]
    symbols = m.working_alphabet
    n_new = len(keep) + len(symbols)
    sink = {s: len(keep) + k for k, s in enumerate(symbols)}
    backend = m.backend
    zero = GaussianRational(0) if backend == EXACT else 0j
    one = GaussianRational(1) if backend == EXACT else 1 + 0j

    mats = {}
    for s in symbols:
        u = m.unitaries[s]
        rows = []
        for q in keep:
            row = [u[q, j] for j in keep] + [zero] * len(symbols)
            row[sink[s]] = u[q, q_acc]
            rows.append(row)
        for t in symbols:
            row = [zero] * n_new
            row[sink[t]] = one
            rows.append(row)
        mats[s] = Matrix.from_rows(rows, backend)
    pi = Matrix.row([m.pi[0, q] for q in keep] + [zero] * len(symbols), backend)
    accepting = list(sink.values())
    obs = Observable.from_partition(
        n_new, {ACCEPT: accepting, REJECT: [q for q in range(n_new) if q not in accepting]}, backend
    )
    return Mo1Qfa(symbols, pi, mats, obs, allow_nonunitary=True)
