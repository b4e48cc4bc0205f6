"""Bilinear machines and the classical automata they generalize.

A bilinear machine (BLM) over an alphabet is ``(pi, {M(s)}, eta)`` with
``pi`` a ``1 x n`` row, each ``M(s)`` ``n x n`` and ``eta`` an ``n x 1``
column. Its word function is ``f(w) = pi M(w1) ... M(wk) eta``, so
``f(empty) = pi eta``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    EXACT,
    BackendMismatchError,
    DimensionError,
    GaussianRational,
    Matrix,
    same_backend,
)

Word = tuple

END_MARKER = "$"


class UnknownSymbolError(ValueError):
    pass


def split_word(word, alphabet: Sequence[str]) -> tuple[str, ...]:
    """Normalize a word to a tuple of symbols.

    Strings are split into characters when every symbol is one character
    long, otherwise on whitespace and commas.
    """
    if isinstance(word, str):
        if all(len(s) == 1 for s in alphabet):
            symbols = tuple(word)
        else:
            symbols = tuple(t for t in word.replace(",", " ").split() if t)
    else:
        symbols = tuple(word)
    known = set(alphabet)
    for s in symbols:
        if s not in known:
            raise UnknownSymbolError(f"symbol {s!r} is not in the alphabet {list(alphabet)}")
    return symbols


def format_word(word: Sequence[str]) -> str:
    if all(len(s) == 1 for s in word):
        return "".join(word)
    return " ".join(word)


class MachineClass(enum.Enum):
    DFA = "DFA"
    PA = "PA"
    GA = "GA"
    RBLM = "RBLM"
    BLM = "BLM"


@dataclass(frozen=True, eq=False)
class BilinearMachine:
    alphabet: tuple[str, ...]
    pi: Matrix
    transitions: Mapping[str, Matrix]
    eta: Matrix
    # set by constructions known to produce real word functions
    certified_real: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "transitions", MappingProxyType(dict(self.transitions)))
        n = self.pi.cols
        if self.pi.rows != 1:
            raise DimensionError(f"pi must be a row vector, got {self.pi.shape}")
        if self.eta.shape != (n, 1):
            raise DimensionError(f"eta must be {n}x1, got {self.eta.shape}")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate symbols in alphabet")
        if set(self.transitions) != set(self.alphabet):
            raise ValueError(
                f"transitions defined for {sorted(self.transitions)}, alphabet is {list(self.alphabet)}"
            )
        for s, m in self.transitions.items():
            if m.shape != (n, n):
                raise DimensionError(f"M({s!r}) must be {n}x{n}, got {m.shape}")
        same_backend(self.pi, self.eta, *self.transitions.values())

    @property
    def n(self) -> int:
        return self.pi.cols

    @property
    def backend(self) -> str:
        return self.pi.backend

    def __call__(self, word) -> object:
        return word_function(self, word)

    def to_backend(self, backend: str) -> "BilinearMachine":
        if backend == self.backend:
            return self
        return BilinearMachine(
            self.alphabet,
            self.pi.to_backend(backend),
            {s: m.to_backend(backend) for s, m in self.transitions.items()},
            self.eta.to_backend(backend),
            self.certified_real,
        )

    def __repr__(self):
        return f"BilinearMachine(n={self.n}, alphabet={list(self.alphabet)}, backend={self.backend})"


def word_function(m: BilinearMachine, word):
    """``pi M(w1) ... M(wk) eta`` as a scalar (GaussianRational or complex)."""
    v = m.pi
    for s in split_word(word, m.alphabet):
        v = v @ m.transitions[s]
    return (v @ m.eta)[0, 0]


def _is_zero(x, tol):
    return x == 0 if isinstance(x, GaussianRational) else abs(x) <= tol


def _is_one(x, tol):
    return x == 1 if isinstance(x, GaussianRational) else abs(x - 1) <= tol


def _is_nonneg_real(x, tol):
    if isinstance(x, GaussianRational):
        return x.im == 0 and x.re >= 0
    return abs(x.imag) <= tol and x.real >= -tol


def _is_zero_one(mat: Matrix, tol) -> bool:
    return all(_is_zero(x, tol) or _is_one(x, tol) for x in mat.entries)


def _is_stochastic_row(row: Iterable, tol) -> bool:
    row = list(row)
    if not all(_is_nonneg_real(x, tol) for x in row):
        return False
    total = sum(row, GaussianRational(0) if isinstance(row[0], GaussianRational) else 0j) if row else 0
    return _is_one(total, tol)


def _is_stochastic(mat: Matrix, tol) -> bool:
    return all(_is_stochastic_row(mat[i, :], tol) for i in range(mat.rows))


def _is_degenerate_stochastic_row(row, tol) -> bool:
    row = list(row)
    ones = sum(1 for x in row if _is_one(x, tol))
    zeros = sum(1 for x in row if _is_zero(x, tol))
    return ones == 1 and ones + zeros == len(row)


def classify(m: BilinearMachine, tol: float = DEFAULT_TOL) -> MachineClass:
    """Most specific class of the DFA < PA < GA < RBLM < BLM ladder.

    RBLM is reported only for machines carrying ``certified_real``; real
    valuedness of an arbitrary complex machine is not tested semantically.
    """
    mats = list(m.transitions.values())
    real = m.pi.is_real(tol) and m.eta.is_real(tol) and all(x.is_real(tol) for x in mats)
    if real:
        eta_01 = _is_zero_one(m.eta, tol)
        if (
            eta_01
            and _is_degenerate_stochastic_row(m.pi.entries, tol)
            and all(_is_zero_one(x, tol) and _is_stochastic(x, tol) for x in mats)
        ):
            return MachineClass.DFA
        if eta_01 and _is_stochastic(m.pi, tol) and all(_is_stochastic(x, tol) for x in mats):
            return MachineClass.PA
        return MachineClass.GA
    if m.certified_real:
        return MachineClass.RBLM
    return MachineClass.BLM


def strip_endmarker(m: BilinearMachine, tau: str = END_MARKER) -> BilinearMachine:
    """Fold the trailing symbol into the final vector: ``eta' = M(tau) eta``.

    The result satisfies ``f'(w) = f(w + tau)`` for words over the remaining
    alphabet and keeps the same state count.
    """
    if tau not in m.alphabet:
        raise UnknownSymbolError(f"end-marker {tau!r} is not in the alphabet {list(m.alphabet)}")
    return BilinearMachine(
        tuple(s for s in m.alphabet if s != tau),
        m.pi,
        {s: x for s, x in m.transitions.items() if s != tau},
        m.transitions[tau] @ m.eta,
        m.certified_real,
    )


def realify_scalar(x) -> list[list]:
    """``a + bi`` as the real 2x2 block ``[[a, b], [-b, a]]``."""
    if isinstance(x, GaussianRational):
        a, b = GaussianRational(x.re), GaussianRational(x.im)
    else:
        x = complex(x)
        a, b = complex(x.real), complex(x.imag)
    return [[a, b], [-b, a]]


def realify_matrix(mat: Matrix) -> Matrix:
    """Replace each entry by its 2x2 real block."""
    r, c = mat.shape
    out = np.empty((2 * r, 2 * c), dtype=object)
    for i in range(r):
        for j in range(c):
            blk = realify_scalar(mat[i, j])
            for p in range(2):
                for q in range(2):
                    out[2 * i + p, 2 * j + q] = blk[p][q]
    return Matrix(out, mat.backend)


def to_real(m: BilinearMachine, certified_real: bool = True) -> BilinearMachine:
    """All-real machine with ``2n`` states computing ``Re f``.

    ``certified_real`` is the caller's assertion that ``f`` is real on every
    word, in which case the result is equivalent to ``m``; it is recorded on
    the output and not checked.
    """
    pi = realify_matrix(m.pi)
    eta = realify_matrix(m.eta)
    return BilinearMachine(
        m.alphabet,
        Matrix(pi[0:1, :], m.backend),
        {s: realify_matrix(x) for s, x in m.transitions.items()},
        Matrix(eta[:, 0:1], m.backend),
        certified_real=certified_real,
    )


@dataclass(frozen=True)
class ClassicalDfa:
    """A total DFA with states ``0 .. n_states-1``.

    ``delta[q][k]`` is the successor of state ``q`` on ``alphabet[k]``.
    """

    n_states: int
    alphabet: tuple[str, ...]
    initial: int
    delta: tuple[tuple[int, ...], ...]
    accepting: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "delta", tuple(tuple(int(t) for t in row) for row in self.delta))
        object.__setattr__(self, "accepting", frozenset(int(q) for q in self.accepting))
        if self.n_states < 1:
            raise ValueError("a DFA needs at least one state")
        if not 0 <= self.initial < self.n_states:
            raise ValueError(f"initial state {self.initial} out of range")
        if len(self.delta) != self.n_states:
            raise ValueError(f"delta has {len(self.delta)} rows for {self.n_states} states")
        for q, row in enumerate(self.delta):
            if len(row) != len(self.alphabet):
                raise ValueError(f"delta row {q} is not total over the alphabet")
            for t in row:
                if not 0 <= t < self.n_states:
                    raise ValueError(f"transition target {t} out of range")
        if any(not 0 <= q < self.n_states for q in self.accepting):
            raise ValueError("accepting state out of range")

    def step(self, state: int, symbol: str) -> int:
        try:
            k = self.alphabet.index(symbol)
        except ValueError:
            raise UnknownSymbolError(f"symbol {symbol!r} is not in the alphabet {list(self.alphabet)}") from None
        return self.delta[state][k]

    def run(self, word) -> int:
        q = self.initial
        for s in split_word(word, self.alphabet):
            q = self.step(q, s)
        return q

    def accepts(self, word) -> bool:
        return self.run(word) in self.accepting

    def transition_matrix(self, symbol: str, backend: str = EXACT) -> Matrix:
        """0/1 matrix ``M(c)`` with ``M[q, delta(q, c)] = 1``."""
        k = self.alphabet.index(symbol)
        rows = [[1 if self.delta[q][k] == t else 0 for t in range(self.n_states)] for q in range(self.n_states)]
        return Matrix.from_rows(rows, EXACT).to_backend(backend)

    def initial_vector(self, backend: str = EXACT) -> Matrix:
        return Matrix.basis_row(self.n_states, self.initial, backend)

    def final_vector(self, backend: str = EXACT) -> Matrix:
        return Matrix.column([1 if q in self.accepting else 0 for q in range(self.n_states)], EXACT).to_backend(backend)

    def to_blm(self, backend: str = EXACT) -> BilinearMachine:
        return BilinearMachine(
            self.alphabet,
            self.initial_vector(backend),
            {s: self.transition_matrix(s, backend) for s in self.alphabet},
            self.final_vector(backend),
        )

    @classmethod
    def from_blm(cls, m: BilinearMachine, tol: float = DEFAULT_TOL) -> "ClassicalDfa":
        if classify(m, tol) is not MachineClass.DFA:
            raise ValueError("machine is not a DFA in linear form")
        n = m.n
        initial = next(j for j in range(n) if _is_one(m.pi[0, j], tol))
        delta = []
        for q in range(n):
            delta.append(
                tuple(next(t for t in range(n) if _is_one(m.transitions[s][q, t], tol)) for s in m.alphabet)
            )
        accepting = {q for q in range(n) if _is_one(m.eta[q, 0], tol)}
        return cls(n, m.alphabet, initial, tuple(delta), frozenset(accepting))


def machines_backend(*machines: BilinearMachine) -> str:
    backends = {m.backend for m in machines}
    if len(backends) > 1:
        raise BackendMismatchError(f"machines use different backends: {sorted(backends)}")
    return backends.pop()


__all__ = [
    "END_MARKER",
    "BilinearMachine",
    "ClassicalDfa",
    "MachineClass",
    "UnknownSymbolError",
    "classify",
    "format_word",
    "realify_matrix",
    "split_word",
    "strip_endmarker",
    "to_real",
    "word_function",
]
