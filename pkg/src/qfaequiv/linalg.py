"""Complex scalars and dense matrices with two interchangeable backends.

``exact`` entries are :class:`GaussianRational` values (complex numbers whose
real and imaginary parts are :class:`fractions.Fraction`), stored in numpy
object arrays.  ``float`` entries are ``complex128``.  A matrix never mixes
the two; operations between matrices of different backends raise
:class:`BackendMismatchError`.
"""
from __future__ import annotations

import math
import numbers
import re
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

EXACT = "exact"
FLOAT = "float"
BACKENDS = (EXACT, FLOAT)

DEFAULT_TOL = 1e-9


class BackendMismatchError(TypeError):
    """Raised when exact and float values meet in one operation."""


class DimensionError(ValueError):
    pass


class GaussianRational:
    """An element of Q[i], kept in lowest terms by :class:`Fraction`."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, (float, complex)) or isinstance(im, (float, complex)):
            raise BackendMismatchError("GaussianRational parts must be rational, got a float")
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @classmethod
    def _coerce(cls, other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (bool, np.bool_)):
            return cls(int(other))
        if isinstance(other, (numbers.Rational, np.integer)):
            return cls(int(other) if isinstance(other, np.integer) else other)
        if isinstance(other, (float, complex, np.floating, np.complexfloating)):
            raise BackendMismatchError("cannot mix exact and float scalars")
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if not self.im and not o.im:
            return GaussianRational(self.re * o.re)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        den = o.abs2()
        if not den:
            raise ZeroDivisionError("division by zero")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __abs__(self):
        """Modulus as a float; use :meth:`abs2` to stay exact."""
        return math.sqrt(self.abs2())

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    @property
    def real(self) -> Fraction:
        return self.re

    @property
    def imag(self) -> Fraction:
        return self.im

    def is_real(self) -> bool:
        return self.im == 0

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except BackendMismatchError:
            return False
        if o is NotImplemented:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


Scalar = Union[GaussianRational, complex]


def _to_exact(x) -> GaussianRational:
    c = GaussianRational._coerce(x)
    if c is NotImplemented:
        raise TypeError(f"not a scalar: {x!r}")
    return c


def scalar_backend(x) -> str:
    if isinstance(x, (GaussianRational, numbers.Rational, np.integer)):
        return EXACT
    if isinstance(x, (float, complex, np.floating, np.complexfloating)):
        return FLOAT
    raise TypeError(f"not a scalar: {x!r}")


class Matrix:
    """Immutable dense matrix over one backend.

    Row vectors are ``1 x n`` matrices and column vectors ``n x 1``; there is
    no separate vector type.
    """

    __slots__ = ("_data", "backend")

    def __init__(self, data, backend: str | None = None):
        arr = np.asarray(data, dtype=object) if not isinstance(data, np.ndarray) else data
        if arr.ndim != 2:
            raise DimensionError(f"matrix data must be 2-D, got shape {arr.shape}")
        if backend is None:
            backend = _infer_backend(arr)
        if backend == EXACT:
            if arr.dtype != object or not all(isinstance(x, GaussianRational) for x in arr.flat):
                arr = _exact_array(arr)
        elif backend == FLOAT:
            if arr.dtype == object and any(isinstance(x, GaussianRational) for x in arr.flat):
                arr = np.array([[complex(x) for x in row] for row in arr], dtype=complex).reshape(arr.shape)
            else:
                arr = np.asarray(arr, dtype=complex)
        else:
            raise ValueError(f"unknown backend {backend!r}")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.setflags(write=False)
        object.__setattr__(self, "_data", arr)
        object.__setattr__(self, "backend", backend)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    # construction helpers

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], backend: str | None = None) -> "Matrix":
        rows = [list(r) for r in rows]
        width = len(rows[0]) if rows else 0
        if any(len(r) != width for r in rows):
            raise DimensionError("ragged rows")
        arr = np.empty((len(rows), width), dtype=object)
        for i, r in enumerate(rows):
            for j, x in enumerate(r):
                arr[i, j] = x
        return cls(arr, backend)

    @classmethod
    def row(cls, values: Iterable, backend: str | None = None) -> "Matrix":
        return cls.from_rows([list(values)], backend)

    @classmethod
    def column(cls, values: Iterable, backend: str | None = None) -> "Matrix":
        return cls.from_rows([[v] for v in values], backend)

    @classmethod
    def zeros(cls, rows: int, cols: int, backend: str = EXACT) -> "Matrix":
        if backend == EXACT:
            arr = np.empty((rows, cols), dtype=object)
            zero = GaussianRational(0)
            for idx in np.ndindex(rows, cols):
                arr[idx] = zero
            return cls(arr, EXACT)
        return cls(np.zeros((rows, cols), dtype=complex), FLOAT)

    @classmethod
    def identity(cls, n: int, backend: str = EXACT) -> "Matrix":
        if backend == EXACT:
            arr = cls.zeros(n, n, EXACT)._data.copy()
            one = GaussianRational(1)
            for i in range(n):
                arr[i, i] = one
            return cls(arr, EXACT)
        return cls(np.eye(n, dtype=complex), FLOAT)

    @classmethod
    def basis_row(cls, n: int, index: int, backend: str = EXACT) -> "Matrix":
        arr = cls.zeros(1, n, backend)._data.copy()
        arr[0, index] = GaussianRational(1) if backend == EXACT else 1.0
        return cls(arr, backend)

    @classmethod
    def basis_column(cls, n: int, index: int, backend: str = EXACT) -> "Matrix":
        return cls.basis_row(n, index, backend).T

    # shape and access

    @property
    def data(self) -> np.ndarray:
        """Read-only view of the underlying array."""
        return self._data

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def entries(self) -> tuple:
        return tuple(self._data.flat)

    def __getitem__(self, idx):
        return self._data[idx]

    def tolist(self) -> list[list]:
        return [list(r) for r in self._data]

    def is_square(self) -> bool:
        return self.rows == self.cols

    # algebra

    def _check_same(self, other: "Matrix"):
        if not isinstance(other, Matrix):
            raise TypeError(f"expected Matrix, got {type(other).__name__}")
        if other.backend != self.backend:
            raise BackendMismatchError(f"backend mismatch: {self.backend} vs {other.backend}")

    def __matmul__(self, other: "Matrix") -> "Matrix":
        return mat_mul(self, other)

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check_same(other)
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return Matrix(self._data + other._data, self.backend)

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check_same(other)
        if self.shape != other.shape:
            raise DimensionError(f"cannot subtract {self.shape} and {other.shape}")
        return Matrix(self._data - other._data, self.backend)

    def __neg__(self) -> "Matrix":
        return Matrix(-self._data, self.backend)

    def scale(self, c) -> "Matrix":
        if self.backend == EXACT:
            c = _to_exact(c)
        elif isinstance(c, GaussianRational):
            raise BackendMismatchError("exact scalar applied to a float matrix")
        return Matrix(self._data * c, self.backend)

    def conj(self) -> "Matrix":
        return Matrix(np.conjugate(self._data), self.backend)

    @property
    def T(self) -> "Matrix":
        return Matrix(self._data.T, self.backend)

    @property
    def H(self) -> "Matrix":
        return conj_transpose(self)

    def to_float(self) -> "Matrix":
        return self if self.backend == FLOAT else Matrix(self._data, FLOAT)

    def to_backend(self, backend: str) -> "Matrix":
        if backend == self.backend:
            return self
        if backend == FLOAT:
            return self.to_float()
        raise BackendMismatchError("float matrices cannot be converted to the exact backend")

    def is_real(self, tol: float = 0.0) -> bool:
        if self.backend == EXACT:
            return all(x.im == 0 for x in self._data.flat)
        return bool(np.all(np.abs(self._data.imag) <= tol))

    def max_deviation(self, other: "Matrix") -> float:
        """Largest entrywise modulus of ``self - other`` (as a float)."""
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")
        a = self.to_float()._data
        b = other.to_float()._data
        if a.size == 0:
            return 0.0
        return float(np.max(np.abs(a - b)))

    def equals(self, other: "Matrix", tol: float = 0.0) -> bool:
        if self.shape != other.shape:
            return False
        if self.backend == EXACT and other.backend == EXACT:
            return all(x == y for x, y in zip(self._data.flat, other._data.flat))
        return self.max_deviation(other) <= tol

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.backend == other.backend and self.equals(other)

    def __hash__(self):
        return hash((self.backend, self.shape, self.entries))

    def __repr__(self):
        body = "; ".join(", ".join(format_scalar(x) for x in r) for r in self._data)
        return f"Matrix<{self.backend} {self.rows}x{self.cols}>[{body}]"


def _infer_backend(arr: np.ndarray) -> str:
    if arr.dtype.kind in "fc":
        return FLOAT
    if arr.dtype.kind in "iub":
        return EXACT
    for x in arr.flat:
        if scalar_backend(x) == FLOAT:
            return FLOAT
    return EXACT


def _exact_array(arr: np.ndarray) -> np.ndarray:
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        out[idx] = _to_exact(arr[idx] if arr.dtype == object else arr[idx].item())
    return out


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    a._check_same(b)
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    if a.backend == EXACT:
        return Matrix(_exact_matmul(a._data, b._data), EXACT)
    return Matrix(a._data @ b._data, FLOAT)


def _exact_matmul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n, k = x.shape
    m = y.shape[1]
    zero = GaussianRational(0)
    out = np.empty((n, m), dtype=object)
    # skip zero terms: reduction matrices are very sparse
    ynz = [[(j, y[t, j]) for j in range(m) if y[t, j]] for t in range(k)]
    for i in range(n):
        acc = [zero] * m
        for t in range(k):
            xv = x[i, t]
            if not xv:
                continue
            for j, yv in ynz[t]:
                acc[j] = acc[j] + xv * yv
        for j in range(m):
            out[i, j] = acc[j]
    return out


def kron(a: Matrix, b: Matrix) -> Matrix:
    """Block matrix whose (i, j) block is ``a[i, j] * b``."""
    a._check_same(b)
    if a.backend == FLOAT:
        return Matrix(np.kron(a._data, b._data), FLOAT)
    p, q = b.shape
    out = np.empty((a.rows * p, a.cols * q), dtype=object)
    zero = GaussianRational(0)
    for i in range(a.rows):
        for j in range(a.cols):
            x = a._data[i, j]
            for r in range(p):
                for c in range(q):
                    y = b._data[r, c]
                    out[i * p + r, j * q + c] = x * y if (x and y) else zero
    return Matrix(out, EXACT)


def kron_all(*terms: Matrix) -> Matrix:
    out = terms[0]
    for t in terms[1:]:
        out = kron(out, t)
    return out


def direct_sum(a: Matrix, b: Matrix) -> Matrix:
    """Block-diagonal matrix ``diag(a, b)``."""
    a._check_same(b)
    out = Matrix.zeros(a.rows + b.rows, a.cols + b.cols, a.backend)._data.copy()
    out[: a.rows, : a.cols] = a._data
    out[a.rows :, a.cols :] = b._data
    return Matrix(out, a.backend)


def hstack(a: Matrix, b: Matrix) -> Matrix:
    a._check_same(b)
    if a.rows != b.rows:
        raise DimensionError("row count mismatch")
    return Matrix(np.concatenate([a._data, b._data], axis=1), a.backend)


def vstack(a: Matrix, b: Matrix) -> Matrix:
    a._check_same(b)
    if a.cols != b.cols:
        raise DimensionError("column count mismatch")
    return Matrix(np.concatenate([a._data, b._data], axis=0), a.backend)


def conj_transpose(a: Matrix) -> Matrix:
    return Matrix(np.conjugate(a._data).T, a.backend)


def norm_sq(v: Matrix):
    """Squared Euclidean norm of a row vector: Fraction (exact) or float."""
    if v.rows != 1:
        raise DimensionError(f"norm is defined on row vectors, got shape {v.shape}")
    if v.backend == EXACT:
        return sum((x.abs2() for x in v._data.flat), Fraction(0))
    return float(np.sum(np.abs(v._data) ** 2))


def row_norm(v: Matrix):
    """Euclidean norm of a row vector.

    On the exact backend the norm is returned only when it is rational;
    otherwise use :func:`norm_sq`.
    """
    sq = norm_sq(v)
    if v.backend == FLOAT:
        return math.sqrt(sq)
    root = exact_sqrt(sq)
    if root is None:
        raise ValueError(f"norm sqrt({sq}) is irrational; use norm_sq on the exact backend")
    return root


def exact_sqrt(x: Fraction) -> Fraction | None:
    x = Fraction(x)
    if x < 0:
        return None
    n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if n * n == x.numerator and d * d == x.denominator:
        return Fraction(n, d)
    return None


def is_unitary(m: Matrix, tol: float = DEFAULT_TOL) -> bool:
    """``M M† = M† M = I``; exact on the exact backend, else within ``tol``."""
    if not m.is_square():
        raise DimensionError(f"unitarity needs a square matrix, got {m.shape}")
    eye = Matrix.identity(m.rows, m.backend)
    h = conj_transpose(m)
    if m.backend == EXACT:
        return (m @ h).equals(eye) and (h @ m).equals(eye)
    return unitarity_deviation(m) <= tol


def unitarity_deviation(m: Matrix) -> float:
    """Max-entry deviation of ``M M†`` and ``M† M`` from the identity."""
    if not m.is_square():
        raise DimensionError(f"unitarity needs a square matrix, got {m.shape}")
    eye = Matrix.identity(m.rows, m.backend)
    h = conj_transpose(m)
    return max((m @ h).max_deviation(eye), (h @ m).max_deviation(eye))


def is_hermitian(m: Matrix, tol: float = DEFAULT_TOL) -> bool:
    if not m.is_square():
        return False
    return m.equals(conj_transpose(m), 0.0 if m.backend == EXACT else tol)


def same_backend(*matrices: Matrix) -> str:
    backends = {m.backend for m in matrices}
    if len(backends) > 1:
        raise BackendMismatchError(f"mixed backends: {sorted(backends)}")
    return backends.pop() if backends else EXACT


# scalar expression grammar

class ScalarParseError(ValueError):
    def __init__(self, message: str, text: str = "", position: int | None = None):
        self.text = text
        self.position = position
        where = f" at offset {position}" if position is not None else ""
        super().__init__(f"{message}{where} in {text!r}" if text else message)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]+)|(?P<op>[-+*/()]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ScalarParseError("unexpected character", text, pos)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _ScalarParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            raise ScalarParseError(f"expected {value!r}", self.text, tok[2])

    def parse(self):
        v = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ScalarParseError(f"unexpected {tok[1]!r}", self.text, tok[2])
        return v

    def expr(self):
        v = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            w = self.term()
            v = _combine(v, w, op)
        return v

    def term(self):
        v = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            w = self.unary()
            try:
                v = _combine(v, w, op)
            except ZeroDivisionError:
                raise ScalarParseError("division by zero", self.text, pos) from None
        return v

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.atom()

    def atom(self):
        kind, value, pos = self.take()
        if kind == "num":
            return GaussianRational(Fraction(value))
        if kind == "name":
            if value == "i":
                return GaussianRational(0, 1)
            if value == "sqrt":
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _sqrt(arg, self.text, pos)
            raise ScalarParseError(f"unknown name {value!r}", self.text, pos)
        if value == "(":
            v = self.expr()
            self.expect(")")
            return v
        raise ScalarParseError(f"unexpected {value or 'end of input'!r}", self.text, pos)


def _combine(v, w, op):
    if isinstance(v, GaussianRational) != isinstance(w, GaussianRational):
        v, w = complex(v), complex(w)
    if op == "+":
        return v + w
    if op == "-":
        return v - w
    if op == "*":
        return v * w
    return v / w


def _sqrt(arg, text, pos):
    if isinstance(arg, GaussianRational):
        if arg.im:
            raise ScalarParseError("sqrt of a non-real value", text, pos)
        if arg.re < 0:
            raise ScalarParseError("sqrt of a negative value", text, pos)
        root = exact_sqrt(arg.re)
        if root is not None:
            return GaussianRational(root)
        return complex(math.sqrt(arg.re))
    if arg.imag:
        raise ScalarParseError("sqrt of a non-real value", text, pos)
    if arg.real < 0:
        raise ScalarParseError("sqrt of a negative value", text, pos)
    return complex(math.sqrt(arg.real))


def parse_scalar(text) -> Scalar:
    """Evaluate a scalar expression such as ``"1/sqrt(2)"`` or ``"3/4 + (1/4)*i"``.

    Purely rational expressions give a :class:`GaussianRational`; a square
    root of a non-square rational makes the result a float ``complex``.
    JSON numbers (int) are accepted directly.
    """
    if isinstance(text, bool):
        raise ScalarParseError(f"not a scalar: {text!r}")
    if isinstance(text, int):
        return GaussianRational(text)
    if isinstance(text, float):
        return GaussianRational(Fraction(repr(text)))
    if not isinstance(text, str):
        raise ScalarParseError(f"not a scalar: {text!r}")
    return _ScalarParser(text).parse()


def _format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _format_float(x: float) -> str:
    if x == 0:
        return "0.0"
    return repr(float(x))


def format_scalar(x) -> str:
    """Canonical text for a scalar; :func:`parse_scalar` inverts it."""
    if isinstance(x, (numbers.Rational, np.integer)) and not isinstance(x, GaussianRational):
        x = GaussianRational(int(x) if isinstance(x, np.integer) else x)
    if isinstance(x, GaussianRational):
        re_, im = x.re, x.im
        if not im:
            return _format_fraction(re_)
        mag = abs(im)
        imag = "i" if mag == 1 else f"{_format_fraction(mag)}*i"
        if not re_:
            return imag if im > 0 else f"-{imag}"
        return f"{_format_fraction(re_)} {'+' if im > 0 else '-'} {imag}"
    c = complex(x)
    if not c.imag:
        return _format_float(c.real)
    imag = f"{_format_float(abs(c.imag))}*i"
    if not c.real:
        return imag if c.imag > 0 else f"-{imag}"
    return f"{_format_float(c.real)} {'+' if c.imag > 0 else '-'} {imag}"


def parse_matrix(rows, backend: str | None = None) -> Matrix:
    return Matrix.from_rows([[parse_scalar(x) for x in r] for r in rows], backend)


def to_real_number(x, tol: float = DEFAULT_TOL):
    """Real part of a scalar, insisting the imaginary part vanishes (float: within tol)."""
    if isinstance(x, GaussianRational):
        if x.im:
            raise ValueError(f"expected a real value, got {format_scalar(x)}")
        return x.re
    if isinstance(x, (numbers.Rational,)):
        return Fraction(x)
    c = complex(x)
    if abs(c.imag) > tol:
        raise ValueError(f"expected a real value, got {c}")
    return c.real
