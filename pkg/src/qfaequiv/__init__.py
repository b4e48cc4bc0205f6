"""Equivalence checking for one-way quantum finite automata.

Measure-once, measure-many and control-language QFAs are reduced to
bilinear machines, whose equivalence is decided by a spanning-basis search
that also yields a shortest separating word.
"""
from .linalg import (
    EXACT,
    FLOAT,
    GaussianRational,
    Matrix,
    conj_transpose,
    is_unitary,
    kron,
    mat_mul,
    norm_sq,
    parse_scalar,
    row_norm,
)
from .machines import (
    END_MARKER,
    BilinearMachine,
    ClassicalDfa,
    MachineClass,
    classify,
    strip_endmarker,
    to_real,
    word_function,
)
from .qfa import (
    Cl1Qfa,
    Mm1Qfa,
    Mo1Qfa,
    Observable,
    check_total_probability,
    cl_accept_prob_bruteforce,
    cl_outcome_prob,
    koshiba_g_machine,
    mm_accept_prob,
    mm_outcome_distribution,
    mo_accept_prob,
)
from .regex import dfa_membership, minimize_dfa, parse_regex, regex_to_dfa
from .transforms import (
    cl_to_rblm,
    mm_to_cl,
    mo_to_rblm,
    pipeline_cl_to_blm,
    pipeline_mm_to_blm,
)
from .equivalence import (
    EquivalenceVerdict,
    equiv_blm,
    equiv_cl,
    equiv_mm,
    equiv_mo,
    equivalent,
    k_equiv_bruteforce,
)
from .io import load_machine, save_machine

__version__ = "0.1.0"
