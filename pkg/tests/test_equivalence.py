import random
from fractions import Fraction

import pytest

import qfaequiv.equivalence as equivalence_module
from qfaequiv.catalog import koshiba_counterexample, pythagorean_mm
from qfaequiv.linalg import EXACT, FLOAT, BackendMismatchError, GaussianRational, Matrix
from qfaequiv.machines import END_MARKER, BilinearMachine, ClassicalDfa
from qfaequiv.qfa import (
    EnumerationCapError,
    Cl1Qfa,
    Mo1Qfa,
    Observable,
    cl_accept_prob_bruteforce,
    mo_accept_prob,
)
from qfaequiv.equivalence import (
    WitnessVerificationError,
    equiv_blm,
    equiv_cl,
    equiv_mm,
    equiv_mo,
    equivalent,
    k_equiv_bruteforce,
)
from qfaequiv.regex import regex_to_dfa
from qfaequiv.transforms import mm_to_cl

from factories import (
    naive_word_function,
    permuted_blm,
    permuted_qfa,
    random_blm,
    random_mm,
    random_mo,
    words,
)


def counter_dfa(modulus: int) -> ClassicalDfa:
    """Counts a's modulo ``modulus`` and ignores b; accepts at residue 0."""
    delta = [[(q + 1) % modulus, q] for q in range(modulus)]
    return ClassicalDfa(modulus, ("a", "b"), 0, delta, {0})


def shortest_separator(a, b, max_len, tol=1e-9):
    """Exhaustive search with the naive fold oracle."""
    for w in words(a.alphabet, max_len):
        x, y = naive_word_function(a, w), naive_word_function(b, w)
        if abs(complex(x) - complex(y)) > tol:
            return w
    return None


class TestEquivBlm:
    @pytest.mark.parametrize("seed", range(5))
    def test_self(self, seed):
        m = random_blm(3, "ab", EXACT, seed)
        v = equiv_blm(m, m)
        assert v.equivalent and v.witness is None
        assert v.basis_dimension <= m.n
        assert v.bound_used == 5

    def test_doubled_final_vector(self):
        m = BilinearMachine(("a",), Matrix.row([1, 2]), {"a": Matrix.from_rows([[0, 1], [1, 0]])}, Matrix.column([1, 1]))
        d = BilinearMachine(m.alphabet, m.pi, m.transitions, m.eta.scale(2))
        v = equiv_blm(m, d)
        assert not v.equivalent
        assert v.witness == ()
        assert v.f2 == 2 * v.f1

    def test_mod_counters(self):
        a, b = counter_dfa(3).to_blm(), counter_dfa(4).to_blm()
        v = equiv_blm(a, b)
        assert v.witness == ("a", "a", "a")
        assert (v.f1, v.f2) == (1, 0)
        assert v.bound_used == 6
        for k in range(6):
            bk = k_equiv_bruteforce(a, b, k)
            assert bk.equivalent == (k < 3)
            if k >= 3:
                assert bk.witness == ("a", "a", "a")

    def test_mod_counter_multiple(self):
        # mod 2 and mod 4 agree on a^k for k < 2 only
        v = equiv_blm(counter_dfa(2).to_blm(), counter_dfa(4).to_blm())
        assert v.witness == ("a", "a")

    def test_lexicographic_tie_break(self):
        one = Matrix.from_rows([[1]])
        zero = Matrix.from_rows([[0]])
        a = BilinearMachine(("a", "b"), Matrix.row([1]), {"a": one, "b": one}, Matrix.column([1]))
        b = BilinearMachine(("a", "b"), Matrix.row([1]), {"a": zero, "b": zero}, Matrix.column([1]))
        assert equiv_blm(a, b).witness == ("a",)

    @pytest.mark.parametrize("seed", range(30))
    def test_float_random_against_exhaustive(self, seed):
        rnd = random.Random(seed)
        a = random_blm(rnd.randint(1, 3), "ab", FLOAT, seed)
        if seed % 2:
            perm = list(range(a.n))
            rnd.shuffle(perm)
            b = permuted_blm(a, perm)
        else:
            b = random_blm(rnd.randint(1, 3), "ab", FLOAT, seed + 1000)
        v = equiv_blm(a, b)
        bound = a.n + b.n - 1
        ref = shortest_separator(a, b, bound)
        assert v.witness == ref
        if seed % 2:
            assert v.equivalent

    def test_alphabet_mismatch(self):
        with pytest.raises(ValueError):
            equiv_blm(random_blm(2, "ab", EXACT, 0), random_blm(2, "ac", EXACT, 0))

    def test_backend_mismatch(self):
        with pytest.raises(BackendMismatchError):
            equiv_blm(random_blm(2, "ab", EXACT, 0), random_blm(2, "ab", FLOAT, 0))

    def test_verdict_json(self):
        v = equiv_blm(counter_dfa(3).to_blm(), counter_dfa(4).to_blm())
        d = v.to_dict()
        assert d["outcome"] == "NotEquivalent"
        assert d["witness"] == ["a", "a", "a"] and d["witness_text"] == "aaa"
        assert d["f1"] == 1.0 and d["f1_exact"] == "1"


class TestBruteForce:
    def test_k_zero(self):
        a = counter_dfa(3).to_blm()
        b = BilinearMachine(a.alphabet, a.pi, {s: Matrix.zeros(3, 3) for s in a.alphabet}, a.eta)
        assert k_equiv_bruteforce(a, b, 0).equivalent
        # "a" is rejected by both; "b" keeps residue 0
        assert k_equiv_bruteforce(a, b, 1).witness == ("b",)

    def test_cap(self):
        a = counter_dfa(3).to_blm()
        with pytest.raises(EnumerationCapError):
            k_equiv_bruteforce(a, a, 20, cap=1000)


class TestEquivMm:
    def test_counterexample_self(self):
        m = koshiba_counterexample()
        v = equiv_mm(m, m)
        assert v.equivalent and v.bound_used == 95

    def test_permuted_conjugate(self):
        m = pythagorean_mm()
        p = permuted_qfa(m, [2, 0, 3, 1])
        assert p.violations() == []
        assert equiv_mm(m, p).equivalent

    def test_endmarker_perturbation(self):
        m = pythagorean_mm()
        u = m.unitaries[END_MARKER]
        swapped = Matrix.from_rows([u.tolist()[1], u.tolist()[0], u.tolist()[2], u.tolist()[3]])
        p = m._replace(unitaries={**m.unitaries, END_MARKER: swapped})
        assert p.violations() == []
        v = equiv_mm(m, p)
        assert not v.equivalent and v.witness == ()
        assert (v.f1, v.f2) == (Fraction(9, 25), Fraction(16, 25))

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_cl_route(self, seed):
        a = random_mm(2, "ab", EXACT, seed)
        b = random_mm(2, "ab", EXACT, seed + 50)
        v1 = equiv_mm(a, b)
        v2 = equiv_cl(mm_to_cl(a), mm_to_cl(b))
        assert v1.equivalent == v2.equivalent
        assert v1.witness == v2.witness
        assert v1.bound_used == v2.bound_used == 23

    def test_witness_reverification(self, monkeypatch):
        m = pythagorean_mm()
        u = m.unitaries[END_MARKER]
        p = m._replace(unitaries={**m.unitaries, END_MARKER: Matrix.from_rows([u.tolist()[i] for i in (1, 0, 2, 3)])})
        monkeypatch.setattr(equivalence_module, "mm_accept_prob", lambda machine, w: Fraction(1, 2))
        with pytest.raises(WitnessVerificationError):
            equiv_mm(m, p)


def first_result_never_accept():
    """Reading 'a' measures g or r, never a; the end-marker then moves g to a."""
    g0 = [[Fraction(3, 5), 0, Fraction(4, 5)], [0, 1, 0], [Fraction(-4, 5), 0, Fraction(3, 5)]]
    end = [[0, 1, 0], [1, 0, 0], [0, 0, 1]]
    obs = Observable.from_partition(3, {"a": [1], "r": [2], "g": [0]})
    unitaries = {"a": Matrix.from_rows(g0), END_MARKER: Matrix.from_rows(end)}
    return unitaries, obs


class TestEquivCl:
    def test_self(self):
        c = mm_to_cl(pythagorean_mm())
        v = equiv_cl(c, c)
        assert v.equivalent
        assert v.bound_used == 95
        assert v.notes

    def test_control_languages(self):
        unitaries, obs = first_result_never_accept()
        pi = Matrix.basis_row(3, 0)
        c1 = Cl1Qfa(("a",), pi, unitaries, obs, control=regex_to_dfa("g*a(a|r|g)*", "arg"))
        c2 = Cl1Qfa(("a",), pi, unitaries, obs, control=regex_to_dfa("(a|r|g)*", "arg"))
        v = equiv_cl(c1, c2)
        assert not v.equivalent
        assert v.witness == ("a",)
        assert v.f1 == cl_accept_prob_bruteforce(c1, "a") == Fraction(9, 25)
        assert v.f2 == 1
        # minimal controls have 3 and 1 states: 3*9 + 1*9 - 1
        assert v.bound_used == 35

    def test_unminimized_bound(self):
        unitaries, obs = first_result_never_accept()
        pi = Matrix.basis_row(3, 0)
        d = regex_to_dfa("g*a(a|r|g)*", "arg")
        c = Cl1Qfa(("a",), pi, unitaries, obs, control=d)
        v = equiv_cl(c, c, minimize=False)
        assert v.equivalent and v.bound_used == 2 * d.n_states * 9 - 1


class TestEquivMo:
    @pytest.mark.parametrize("seed", range(5))
    def test_global_phase(self, seed):
        m = random_mo(3, "ab", EXACT, seed)
        i = GaussianRational(0, 1)
        rotated = m._replace(unitaries={s: u.scale(i) for s, u in m.unitaries.items()})
        v = equiv_mo(m, rotated)
        assert v.equivalent and v.bound_used == 17

    def test_opposite_projectors(self):
        u = {"a": Matrix.identity(2)}
        m1 = Mo1Qfa(("a",), Matrix.row([1, 0]), u, Observable.from_partition(2, {"a": [0], "r": [1]}))
        m2 = Mo1Qfa(("a",), Matrix.row([1, 0]), u, Observable.from_partition(2, {"a": [1], "r": [0]}))
        v = equiv_mo(m1, m2)
        assert v.witness == () and (v.f1, v.f2) == (1, 0)

    @pytest.mark.parametrize("seed", range(10))
    def test_exhaustive_2_state(self, seed):
        a = random_mo(2, "ab", EXACT, seed)
        b = random_mo(2, "ab", EXACT, seed + 77) if seed % 3 else permuted_qfa(a, [1, 0])
        v = equiv_mo(a, b)
        ref = next((w for w in words("ab", 7) if mo_accept_prob(a, w) != mo_accept_prob(b, w)), None)
        assert v.witness == ref
        if not v.equivalent:
            assert len(v.witness) <= v.bound_used == 7


class TestDispatch:
    def test_mixed_mm_and_cl(self):
        m = pythagorean_mm()
        assert equivalent(m, mm_to_cl(m)).equivalent

    def test_dfa_pair(self):
        v = equivalent(counter_dfa(3), counter_dfa(4))
        assert v.witness == ("a", "a", "a") and (v.f1, v.f2) == (1, 0)

    def test_mixed_backends(self):
        d = counter_dfa(2)
        assert equivalent(d, d.to_blm(FLOAT)).equivalent
