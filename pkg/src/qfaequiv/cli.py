"""``qfaequiv`` command line.

Exit codes: 0 success or equivalent, 1 not equivalent, 2 usage, validation
or runtime error.
"""
from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from .equivalence import (
    EquivalenceVerdict,
    WitnessVerificationError,
    direct_value,
    equivalent,
    k_equiv_bruteforce,
)
from .linalg import DEFAULT_TOL, EXACT, FLOAT, BackendMismatchError, GaussianRational, format_scalar
from .io import (
    MachineDocument,
    MachineValidationError,
    convert_backend,
    dumps,
    kind_of,
    load_document,
    save_document,
    save_machine,
)
from .machines import BilinearMachine, ClassicalDfa, UnknownSymbolError, format_word, split_word
from .qfa import Cl1Qfa, EnumerationCapError, Mm1Qfa, Mo1Qfa, mm_trace
from .regex import minimize_dfa
from .transforms import cl_to_rblm, mm_to_cl, mo_to_rblm, reduce_to_blm

EXIT_OK, EXIT_INEQUIVALENT, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    pass


def default_tol() -> float:
    raw = os.environ.get("QFA_DEFAULT_TOL")
    if not raw:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise CliError(f"QFA_DEFAULT_TOL={raw!r} is not a number") from None


def _fmt_value(x) -> str:
    if isinstance(x, (Fraction, GaussianRational, int)):
        exact = format_scalar(x)
        approx = complex(x)
        approx_s = repr(approx.real) if approx.imag == 0 else str(approx)
        return approx_s if exact == approx_s else f"{approx_s} (exact {exact})"
    c = complex(x)
    return repr(c.real) if abs(c.imag) <= 1e-15 else str(c)


def _load(path, tol):
    return load_document(path, tol)


def cmd_validate(args, out) -> int:
    doc = _load(args.file, args.tol)
    m = doc.machine
    n = m.n_states if isinstance(m, ClassicalDfa) else m.n
    print(f"valid {doc.kind} with {n} states over {list(m.alphabet)}", file=out)
    return EXIT_OK


def cmd_sim(args, out) -> int:
    doc = _load(args.file, args.tol)
    m = doc.machine
    word = split_word(args.word, m.alphabet)
    if args.trace:
        if not isinstance(m, Mm1Qfa):
            raise CliError("--trace is available for mm1qfa machines only")
        for k, step in enumerate(mm_trace(m, word), 1):
            print(
                f"step {k} ({step.symbol}): accept {_fmt_value(step.accept)}, "
                f"reject {_fmt_value(step.reject)}, continue {_fmt_value(step.go)}",
                file=out,
            )
    value = direct_value(m, word)
    label = "word function" if isinstance(m, BilinearMachine) else "acceptance probability"
    print(f"{label} of {format_word(word)!r}: {_fmt_value(value)}", file=out)
    return EXIT_OK


def _print_verdict(v: EquivalenceVerdict, out):
    if v.equivalent:
        print(f"equivalent (bound {v.bound_used}, basis dimension {v.basis_dimension})", file=out)
    else:
        print(f"not equivalent (bound {v.bound_used})", file=out)
        print(f"witness: {format_word(v.witness)!r} (length {len(v.witness)})", file=out)
        print(f"f1: {_fmt_value(v.f1)}", file=out)
        print(f"f2: {_fmt_value(v.f2)}", file=out)
    for note in v.notes:
        print(f"note: {note}", file=out)


def cmd_equiv(args, out) -> int:
    a = _load(args.a, args.tol).machine
    b = _load(args.b, args.tol).machine
    backend = args.backend
    if backend is None and {getattr(a, "backend", EXACT), getattr(b, "backend", EXACT)} == {EXACT, FLOAT}:
        backend = FLOAT
    a, b = convert_backend(a, backend), convert_backend(b, backend)
    verdict = equivalent(a, b, args.tol, minimize=not args.no_minimize)

    report = verdict.to_dict()
    if args.brute_bound is not None:
        ra, _ = reduce_to_blm(a, not args.no_minimize)
        rb, _ = reduce_to_blm(b, not args.no_minimize)
        if ra.backend != rb.backend:
            ra, rb = ra.to_backend(FLOAT), rb.to_backend(FLOAT)
        brute = k_equiv_bruteforce(ra, rb, args.brute_bound, args.tol)
        consistent = (
            brute.witness == verdict.witness
            if not brute.equivalent
            else verdict.equivalent or len(verdict.witness) > args.brute_bound
        )
        report["bruteforce"] = brute.to_dict()
        if not consistent:
            raise CliError(
                f"brute-force check up to length {args.brute_bound} disagrees with the spanning-basis verdict"
            )

    if args.report == "json":
        out.write(dumps(report))
    else:
        _print_verdict(verdict, out)
        if args.brute_bound is not None:
            b_ = report["bruteforce"]
            print(f"brute force up to length {args.brute_bound}: {b_['outcome']} (consistent)", file=out)
    return EXIT_OK if verdict.equivalent else EXIT_INEQUIVALENT


def cmd_transform(args, out) -> int:
    doc = _load(args.file, args.tol)
    m = doc.machine
    minimize = not args.no_minimize
    if args.to == "cl":
        if not isinstance(m, Mm1Qfa):
            raise CliError("--to cl needs an mm1qfa machine")
        result = mm_to_cl(m)
        report = {"model": "mm1qfa", "output_kind": "cl1qfa", "quantum_states": m.n, "control_states": 3}
    elif args.to == "rblm":
        if isinstance(m, Mm1Qfa):
            m = mm_to_cl(m)
        if isinstance(m, Cl1Qfa):
            dfa = minimize_dfa(m.control) if minimize else m.control
            result = cl_to_rblm(m, dfa)
            report = {
                "model": kind_of(doc.machine),
                "quantum_states": m.n,
                "control_states": dfa.n_states,
                "control_minimized": minimize,
                "output_states": result.n,
                "backend": result.backend,
            }
        elif isinstance(m, Mo1Qfa):
            result = mo_to_rblm(m)
            report = {"model": "mo1qfa", "quantum_states": m.n, "output_states": result.n, "backend": result.backend}
        else:
            raise CliError(f"cannot transform a {doc.kind} to rblm")
        report["output_kind"] = "blm"
    else:
        if isinstance(m, BilinearMachine):
            raise CliError("the machine is already a BLM")
        result, rep = reduce_to_blm(m, minimize)
        report = rep.to_dict()
        report["output_kind"] = "blm"
    save_machine(result, args.out, name=doc.name)
    out.write(dumps(report))
    return EXIT_OK


def cmd_minimize(args, out) -> int:
    doc = _load(args.file, args.tol)
    m = doc.machine
    if isinstance(m, ClassicalDfa):
        result = minimize_dfa(m)
        before, after = m.n_states, result.n_states
    elif isinstance(m, Cl1Qfa):
        dfa = minimize_dfa(m.control)
        result = Cl1Qfa(m.alphabet, m.pi, m.unitaries, m.observable, control=dfa)
        before, after = m.control.n_states, dfa.n_states
    else:
        raise CliError(f"minimize applies to dfa and cl1qfa documents, not {doc.kind}")
    save_document(MachineDocument(doc.kind, result, doc.name, doc.description), args.out)
    print(f"minimized {before} -> {after} states", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfaequiv", description="Equivalence checking for one-way quantum finite automata.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", type=float, default=None, help="float tolerance (default 1e-9 or $QFA_DEFAULT_TOL)")

    p = sub.add_parser("validate", help="parse and validate a machine document")
    p.add_argument("file")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sim", help="acceptance probability of one word")
    p.add_argument("file")
    p.add_argument("--word", required=True, help="input word without the end-marker")
    p.add_argument("--trace", action="store_true", help="per-step masses (mm1qfa)")
    common(p)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("equiv", help="decide equivalence of two machines")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--backend", choices=[EXACT, FLOAT], default=None)
    p.add_argument("--brute-bound", type=int, default=None, metavar="K", help="cross-check all words up to length K")
    p.add_argument("--no-minimize", action="store_true", help="use control DFAs as given")
    p.add_argument("--report", choices=["text", "json"], default="text")
    common(p)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("transform", help="reduce a machine and write the result")
    p.add_argument("file")
    p.add_argument("--to", choices=["cl", "rblm", "blm"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-minimize", action="store_true")
    common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("minimize", help="minimize a DFA (or a CL-1QFA's control DFA)")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_minimize)
    return parser


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    try:
        if args.tol is None:
            args.tol = default_tol()
        return args.func(args, stdout)
    except MachineValidationError as e:
        where = f"{e.source}: " if e.source else ""
        print(f"error: {where}invalid machine", file=stderr)
        for p in e.problems:
            print(f"  - {p}", file=stderr)
        return EXIT_ERROR
    except (
        CliError,
        UnknownSymbolError,
        BackendMismatchError,
        EnumerationCapError,
        WitnessVerificationError,
        ValueError,
        OSError,
    ) as e:
        print(f"error: {e}", file=stderr)
        return EXIT_ERROR


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
