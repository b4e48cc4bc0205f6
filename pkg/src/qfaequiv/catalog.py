"""Ready-made machines used in the documentation and tests."""
from __future__ import annotations

from .linalg import EXACT, FLOAT, Matrix, parse_matrix
from .machines import END_MARKER
from .qfa import Mm1Qfa, Observable

COUNTEREXAMPLE_STATES = ("q0", "q1", "q_acc", "q_rej")


def koshiba_counterexample(backend: str = FLOAT) -> Mm1Qfa:
    """Four-state measure-many machine over ``{a}`` that breaks Koshiba's construction.

    ``U_a`` sends ``q0 -> q0/2 + q1/sqrt2 + q_acc/2`` and
    ``q1 -> q0/2 - q1/sqrt2 + q_acc/2``; ``U_$`` sends ``q0 -> q_acc`` and
    ``q1 -> q_rej``. The remaining rows complete both matrices to unitaries.
    Acceptance of ``aa`` is ``5/8 + 1/(2 sqrt 2)``.
    """
    if backend != FLOAT:
        raise ValueError("the counterexample has irrational amplitudes; only the float backend applies")
    u_a = parse_matrix(
        [
            ["1/2", "1/sqrt(2)", "1/2", "0"],
            ["1/2", "-1/sqrt(2)", "1/2", "0"],
            ["1/sqrt(2)", "0", "-1/sqrt(2)", "0"],
            ["0", "0", "0", "1"],
        ],
        FLOAT,
    )
    u_end = parse_matrix(
        [
            ["0", "0", "1", "0"],
            ["0", "0", "0", "1"],
            ["1", "0", "0", "0"],
            ["0", "1", "0", "0"],
        ],
        FLOAT,
    )
    obs = Observable.from_partition(4, {"a": [2], "r": [3], "g": [0, 1]}, FLOAT)
    return Mm1Qfa(("a",), Matrix.basis_row(4, 0, FLOAT), {"a": u_a, END_MARKER: u_end}, obs)


def pythagorean_mm(backend: str = EXACT) -> Mm1Qfa:
    """Rational-amplitude 4-state machine over ``{a, b}`` (3-4-5 rotations)."""
    u_a = parse_matrix(
        [
            ["3/5", "0", "4/5", "0"],
            ["0", "1", "0", "0"],
            ["-4/5", "0", "3/5", "0"],
            ["0", "0", "0", "1"],
        ]
    )
    u_b = parse_matrix(
        [
            ["0", "3/5", "0", "4/5"],
            ["4/5", "0", "-3/5", "0"],
            ["3/5", "0", "4/5", "0"],
            ["0", "4/5", "0", "-3/5"],
        ]
    )
    u_end = parse_matrix(
        [
            ["0", "0", "3/5", "4/5"],
            ["0", "0", "4/5", "-3/5"],
            ["1", "0", "0", "0"],
            ["0", "1", "0", "0"],
        ]
    )
    obs = Observable.from_partition(4, {"a": [2], "r": [3], "g": [0, 1]}, EXACT)
    m = Mm1Qfa(("a", "b"), Matrix.basis_row(4, 0, EXACT), {"a": u_a, "b": u_b, END_MARKER: u_end}, obs)
    return m.to_backend(backend)
