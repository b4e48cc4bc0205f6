import io
import json
import math
from pathlib import Path

import pytest

from qfaequiv.catalog import pythagorean_mm
from qfaequiv.cli import run_cli
from qfaequiv.io import (
    MachineValidationError,
    dumps,
    load_document,
    load_machine,
    parse_document,
    save_machine,
    to_document,
)
from qfaequiv.linalg import EXACT, FLOAT
from qfaequiv.machines import BilinearMachine, ClassicalDfa
from qfaequiv.qfa import Cl1Qfa, Mm1Qfa, cl_accept_prob_bruteforce, mm_accept_prob
from qfaequiv.regex import go_then_accept_dfa

EXAMPLES = Path(__file__).resolve().parent.parent / "docs" / "examples"
COUNTEREXAMPLE = EXAMPLES / "counterexample.json"
R2 = math.sqrt(2)


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def dfa_doc():
    return {
        "kind": "dfa",
        "alphabet": ["a", "b"],
        "states": ["even", "odd"],
        "initial": "even",
        "accepting": ["even"],
        "transitions": [{"a": "odd", "b": "even"}, {"a": "even", "b": "odd"}],
    }


class TestLoad:
    def test_counterexample(self):
        m = load_machine(COUNTEREXAMPLE)
        assert isinstance(m, Mm1Qfa)
        assert m.n == 4 and m.backend == FLOAT
        assert mm_accept_prob(m, "aa") == pytest.approx(5 / 8 + 1 / (2 * R2), abs=1e-12)

    def test_rational_document_is_exact(self):
        m = load_machine(EXAMPLES / "pythagorean.json")
        assert m.backend == EXACT

    def test_non_unitary(self, tmp_path):
        doc = json.loads(COUNTEREXAMPLE.read_text())
        doc["unitaries"]["a"][0][0] = "1"
        with pytest.raises(MachineValidationError) as e:
            load_machine(write(tmp_path, "bad.json", doc))
        text = " ".join(e.value.problems)
        assert "U(a)" in text or "'a'" in text
        assert "deviation" in text

    def test_every_problem_listed(self, tmp_path):
        doc = json.loads(COUNTEREXAMPLE.read_text())
        del doc["unitaries"]["$"]
        doc["initial"] = ["1", "0"]
        with pytest.raises(MachineValidationError) as e:
            load_machine(write(tmp_path, "bad.json", doc))
        assert len(e.value.problems) >= 2

    def test_endmarker_in_alphabet(self, tmp_path):
        doc = json.loads(COUNTEREXAMPLE.read_text())
        doc["alphabet"] = ["a", "$"]
        with pytest.raises(MachineValidationError):
            load_machine(write(tmp_path, "bad.json", doc))

    def test_exact_hint_with_irrational(self, tmp_path):
        doc = json.loads(COUNTEREXAMPLE.read_text())
        doc["backend"] = "exact"
        with pytest.raises(MachineValidationError):
            load_machine(write(tmp_path, "bad.json", doc))

    def test_float_hint_converts(self, tmp_path):
        doc = json.loads((EXAMPLES / "pythagorean.json").read_text())
        doc["backend"] = "float"
        assert load_machine(write(tmp_path, "f.json", doc)).backend == FLOAT

    def test_not_json(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text("{nope")
        with pytest.raises(MachineValidationError):
            load_machine(p)

    def test_unknown_kind(self):
        with pytest.raises(MachineValidationError):
            parse_document({"kind": "turing", "alphabet": ["a"]})

    def test_partial_dfa(self):
        doc = dfa_doc()
        del doc["transitions"][1]["b"]
        with pytest.raises(MachineValidationError) as e:
            parse_document(doc)
        assert "total" in e.value.problems[0]

    def test_cl_with_regex_control(self):
        m = load_machine(EXAMPLES / "pythagorean_cl.json")
        assert isinstance(m, Cl1Qfa)
        assert m.control_regex == "g*a(a|r|g)*"
        for w in ["", "a", "ab", "ba"]:
            assert cl_accept_prob_bruteforce(m, w) == mm_accept_prob(pythagorean_mm(), w)


class TestRoundTrip:
    def test_dfa(self, tmp_path):
        first = parse_document(dfa_doc()).machine
        p = tmp_path / "d.json"
        save_machine(first, p)
        second = load_machine(p)
        assert second == first
        assert isinstance(second, ClassicalDfa)

    @pytest.mark.parametrize("name", ["pythagorean.json", "pythagorean_cl.json", "go_then_accept.json"])
    def test_byte_identical(self, tmp_path, name):
        doc = load_document(EXAMPLES / name)
        once = save_machine(doc.machine, tmp_path / "a.json", doc.name, doc.description)
        twice = save_machine(load_machine(tmp_path / "a.json"), None, doc.name, doc.description)
        assert once == twice
        assert once == (EXAMPLES / name).read_text()

    def test_blm(self, tmp_path):
        d = go_then_accept_dfa().to_blm()
        p = tmp_path / "b.json"
        save_machine(d, p)
        back = load_machine(p)
        assert isinstance(back, BilinearMachine)
        assert back.pi == d.pi and back.eta == d.eta
        assert all(back.transitions[s] == d.transitions[s] for s in d.alphabet)

    def test_canonical_keys(self):
        text = dumps(to_document(go_then_accept_dfa()))
        assert json.loads(text) == json.loads(dumps(json.loads(text)))
        assert text.endswith("\n")


class TestCli:
    def test_validate(self):
        code, out, _ = cli("validate", COUNTEREXAMPLE)
        assert code == 0
        assert "mm1qfa" in out and "4 states" in out

    def test_validate_invalid(self, tmp_path):
        doc = json.loads(COUNTEREXAMPLE.read_text())
        doc["unitaries"]["a"][0][0] = "1"
        code, _, err = cli("validate", write(tmp_path, "bad.json", doc))
        assert code == 2
        assert "deviation" in err

    def test_missing_file(self, tmp_path):
        assert cli("validate", tmp_path / "none.json")[0] == 2

    def test_sim(self):
        code, out, _ = cli("sim", COUNTEREXAMPLE, "--word", "aa")
        assert code == 0
        assert "0.978553390593" in out

    def test_sim_trace(self):
        code, out, _ = cli("sim", COUNTEREXAMPLE, "--word", "aa", "--trace")
        assert code == 0
        lines = [line for line in out.splitlines() if line.startswith("step")]
        masses = [float(line.split("accept ")[1].split(",")[0]) for line in lines]
        later = (0.5 * (0.5 + 1 / R2)) ** 2
        assert masses == pytest.approx([0.25, later, later], abs=1e-9)

    def test_sim_unknown_symbol(self):
        code, _, err = cli("sim", COUNTEREXAMPLE, "--word", "ab")
        assert code == 2 and "not in the alphabet" in err

    def test_trace_needs_mm(self):
        assert cli("sim", EXAMPLES / "go_then_accept.json", "--word", "ga", "--trace")[0] == 2

    def test_equiv_self(self):
        code, out, _ = cli("equiv", COUNTEREXAMPLE, COUNTEREXAMPLE)
        assert code == 0
        assert "equivalent" in out and "bound 95" in out

    def test_equiv_json_inequivalent(self):
        code, out, _ = cli("equiv", EXAMPLES / "pythagorean.json", EXAMPLES / "pythagorean_perturbed.json", "--report", "json")
        assert code == 1
        report = json.loads(out)
        for key in ("witness", "f1", "f2", "bound_used"):
            assert key in report
        assert report["witness"] == [] and report["bound_used"] == 95
        assert report["f1_exact"] == "9/25" and report["f2_exact"] == "16/25"

    def test_equiv_text_inequivalent(self):
        code, out, _ = cli("equiv", EXAMPLES / "pythagorean.json", EXAMPLES / "pythagorean_perturbed.json")
        assert code == 1
        assert "witness: ''" in out and "0.36" in out and "0.64" in out

    def test_equiv_brute_bound(self):
        code, out, _ = cli("equiv", EXAMPLES / "pythagorean.json", EXAMPLES / "pythagorean_cl.json", "--brute-bound", "3")
        assert code == 0 and "consistent" in out

    def test_equiv_backend_float(self):
        code, out, _ = cli(
            "equiv", EXAMPLES / "pythagorean.json", EXAMPLES / "pythagorean_perturbed.json",
            "--backend", "float", "--report", "json",
        )
        assert code == 1 and json.loads(out)["backend"] == "float"

    def test_equiv_alphabet_mismatch(self):
        assert cli("equiv", EXAMPLES / "pythagorean.json", COUNTEREXAMPLE)[0] == 2

    def test_transform_blm(self, tmp_path):
        out_path = tmp_path / "blm.json"
        code, out, _ = cli("transform", EXAMPLES / "pythagorean.json", "--to", "blm", "--out", out_path)
        assert code == 0
        assert json.loads(out)["output_states"] == 48
        blm = load_machine(out_path)
        assert blm("ab") == mm_accept_prob(pythagorean_mm(), "ab")

    def test_transform_cl_and_rblm(self, tmp_path):
        assert cli("transform", COUNTEREXAMPLE, "--to", "cl", "--out", tmp_path / "cl.json")[0] == 0
        assert isinstance(load_machine(tmp_path / "cl.json"), Cl1Qfa)
        code, out, _ = cli("transform", tmp_path / "cl.json", "--to", "rblm", "--out", tmp_path / "r.json")
        assert code == 0 and json.loads(out)["output_states"] == 48
        r = load_machine(tmp_path / "r.json")
        assert r.alphabet == ("a", "$")
        assert complex(r(["a", "a", "$"])).real == pytest.approx(5 / 8 + 1 / (2 * R2), abs=1e-9)

    def test_transform_wrong_kind(self, tmp_path):
        assert cli("transform", EXAMPLES / "go_then_accept.json", "--to", "cl", "--out", tmp_path / "x.json")[0] == 2

    def test_minimize(self, tmp_path):
        code, out, _ = cli("minimize", EXAMPLES / "pythagorean_cl.json", "--out", tmp_path / "m.json")
        assert code == 0 and "-> 3 states" in out
        assert load_machine(tmp_path / "m.json").control.n_states == 3

    def test_minimize_wrong_kind(self, tmp_path):
        assert cli("minimize", COUNTEREXAMPLE, "--out", tmp_path / "m.json")[0] == 2

    def test_usage_errors(self):
        assert cli()[0] == 2
        assert cli("sim", COUNTEREXAMPLE)[0] == 2
        assert cli("frobnicate")[0] == 2

    def test_help(self):
        assert cli("--help")[0] == 0

    def test_tol_env(self, monkeypatch):
        monkeypatch.setenv("QFA_DEFAULT_TOL", "0.5")
        code, out, _ = cli(
            "equiv", EXAMPLES / "pythagorean.json", EXAMPLES / "pythagorean_perturbed.json",
            "--backend", "float", "--report", "json",
        )
        assert code == 0 and json.loads(out)["tol"] == 0.5
        monkeypatch.setenv("QFA_DEFAULT_TOL", "lots")
        assert cli("validate", COUNTEREXAMPLE)[0] == 2
