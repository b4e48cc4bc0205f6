"""Reductions from quantum automata to bilinear machines.

Product-state layout: the reduced machine for an ``m``-state QFA with a
``k``-state control DFA has ``k * m * m`` states, and the triple
``(i, j, s)`` (quantum index, conjugate index, control state) sits at index
``(i * m + j) * k + s``. This is the order produced by
``quantum ⊗ conjugate ⊗ control`` Kronecker products.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .linalg import Matrix, kron, kron_all
from .machines import END_MARKER, BilinearMachine, ClassicalDfa, strip_endmarker
from .qfa import ACCEPT, Cl1Qfa, Mm1Qfa, Mo1Qfa
from .regex import GO_THEN_ACCEPT_REGEX, go_then_accept_dfa, minimize_dfa


@dataclass(frozen=True)
class ReductionReport:
    model: str
    quantum_states: int
    output_states: int
    backend: str
    control_states: int | None = None
    control_minimized: bool | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _diagonal_pairs(n: int, backend: str) -> Matrix:
    """Column ``sum_j e_j ⊗ e_j`` of length ``n * n``."""
    return Matrix.column([1 if i % (n + 1) == 0 else 0 for i in range(n * n)], "exact").to_backend(backend)


def mm_to_cl(m: Mm1Qfa) -> Cl1Qfa:
    """Same machine read as a CL-1QFA with control language ``g* a (a|r|g)*``."""
    return Cl1Qfa(
        m.alphabet,
        m.pi,
        m.unitaries,
        m.observable,
        control=go_then_accept_dfa(m.observable.results),
        control_regex=GO_THEN_ACCEPT_REGEX,
    )


def cl_to_rblm(m: Cl1Qfa, dfa: ClassicalDfa | None = None) -> BilinearMachine:
    """Real-valued BLM over ``alphabet + ($,)`` with ``f(w$)`` equal to the CL acceptance probability.

    ``dfa`` must recognize the control language; it defaults to ``m.control``.
    The conjugate factor uses ``P(c)*``, which equals ``P(c)`` for
    basis-aligned projectors.
    """
    dfa = m.control if dfa is None else dfa
    results = m.observable.results
    if set(dfa.alphabet) != set(results):
        raise ValueError(f"DFA alphabet {list(dfa.alphabet)} differs from measurement results {list(results)}")
    backend = m.backend
    n, k = m.n, dfa.n_states

    pi = kron_all(m.pi, m.pi.conj(), dfa.initial_vector(backend))
    measure = None
    for c in results:
        p = m.observable[c]
        term = kron_all(p, p.conj(), dfa.transition_matrix(c, backend))
        measure = term if measure is None else measure + term
    eye = Matrix.identity(k, backend)
    transitions = {}
    for s in m.working_alphabet:
        u = m.unitaries[s]
        transitions[s] = kron_all(u, u.conj(), eye) @ measure
    eta = kron(_diagonal_pairs(n, backend), dfa.final_vector(backend))
    return BilinearMachine(m.working_alphabet, pi, transitions, eta, certified_real=True)


def mo_to_rblm(m: Mo1Qfa) -> BilinearMachine:
    """Bilinearization: ``n*n`` states, ``f(w)`` equal to the MO acceptance probability.

    The final vector ``(P(a) ⊗ P(a)*) sum_j e_j ⊗ e_j`` has entry ``P(a)[i, j]``
    at ``(i, j)``, which handles projectors that are not basis-aligned.
    """
    pa = m.observable[ACCEPT]
    pi = kron(m.pi, m.pi.conj())
    transitions = {s: kron(u, u.conj()) for s, u in m.unitaries.items()}
    eta = kron(pa, pa.conj()) @ _diagonal_pairs(m.n, m.backend)
    return BilinearMachine(m.alphabet, pi, transitions, eta, certified_real=True)


def pipeline_cl_to_blm(m: Cl1Qfa, minimize: bool = True) -> BilinearMachine:
    """BLM over the input alphabet with ``f(w)`` equal to the CL acceptance probability of ``w``."""
    dfa = minimize_dfa(m.control) if minimize else m.control
    return strip_endmarker(cl_to_rblm(m, dfa), END_MARKER)


def pipeline_mm_to_blm(m: Mm1Qfa) -> BilinearMachine:
    """``3 n^2``-state BLM over the input alphabet computing the MM acceptance probability."""
    return strip_endmarker(cl_to_rblm(mm_to_cl(m)), END_MARKER)


def reduce_to_blm(machine, minimize: bool = True) -> tuple[BilinearMachine, ReductionReport]:
    """Reduce any supported machine to a BLM over its input alphabet, with bookkeeping."""
    if isinstance(machine, Mm1Qfa):
        out = pipeline_mm_to_blm(machine)
        return out, ReductionReport("mm1qfa", machine.n, out.n, machine.backend, 3, True)
    if isinstance(machine, Cl1Qfa):
        out = pipeline_cl_to_blm(machine, minimize)
        return out, ReductionReport(
            "cl1qfa", machine.n, out.n, machine.backend, out.n // (machine.n**2), minimize
        )
    if isinstance(machine, Mo1Qfa):
        out = mo_to_rblm(machine)
        return out, ReductionReport("mo1qfa", machine.n, out.n, machine.backend)
    if isinstance(machine, ClassicalDfa):
        out = machine.to_blm()
        return out, ReductionReport("dfa", machine.n_states, out.n, out.backend)
    if isinstance(machine, BilinearMachine):
        return machine, ReductionReport("blm", machine.n, machine.n, machine.backend)
    raise TypeError(f"cannot reduce {type(machine).__name__}")
