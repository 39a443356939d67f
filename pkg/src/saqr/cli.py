"""Command-line front end.

Exit codes: 0 success, 2 parse error, 3 analysis or parameter error,
4 verdict false, 5 the oracle contradicts a passing certificate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from . import casestudies as cs
from . import judge
from .circuit import CircuitError, CircuitParseError, circuit_from_dict, gate_list
from .linalg import DimensionError, QubitIndexError, Tolerance, ket
from .observables import ObservablePredicate
from .oracle import default_cap, expectation, simulate_state
from .predicate import DomainMismatchError, PredicateParseError
from .qai import LocalRegisterTooLarge, ProjectivePredicate, analyze

EXIT_OK, EXIT_PARSE, EXIT_ANALYSIS, EXIT_VERDICT, EXIT_ORACLE = 0, 2, 3, 4, 5
ANALYSIS_ERRORS = (
    CircuitError,
    DimensionError,
    QubitIndexError,
    DomainMismatchError,
    LocalRegisterTooLarge,
    cs.CaseStudyError,
    judge.RuleInapplicableError,
    judge.MidpointMismatchError,
    ValueError,
)


class InputError(Exception):
    """Unreadable or malformed input file (exit code 2)."""


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _read_json(path: str) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"{path}: JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(args, report: dict, transcript: list[str] | None = None) -> None:
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    if args.transcript and transcript is not None:
        write_atomic(args.transcript, "\n".join(transcript) + "\n")


def _tol(args) -> Tolerance:
    return Tolerance(atol=args.tol_atol, rank_rel=args.tol_rank)


def _cap(args) -> int:
    return args.cap if args.cap is not None else default_cap()


# ------------------------------------------------------------------ commands


def cmd_analyze(args) -> int:
    c = circuit_from_dict(_read_json(args.circuit))
    pred = ProjectivePredicate.from_dict(_read_json(args.predicate))
    if pred.qubits and max(pred.qubits) > c.n:
        raise DomainMismatchError("predicate mentions qubits outside the circuit register")
    res = analyze(c, pred, _tol(args), args.cap_local)
    report = {
        "post_predicate": res.post.to_dict(),
        "trace": [
            {"gate": st.gate.label(), "max_register": st.max_register,
             "min_gap": None if st.min_gap == float("inf") else st.min_gap}
            for st in res.trace
        ],
    }
    lines = [f"QAI {st.gate.label()} register={st.max_register}" for st in res.trace]
    _emit(args, report, lines)
    return EXIT_OK


def load_judgment(obj: Any):
    """Parse a judgment file.

    Fields: ``circuit``, ``pre_obs``, ``pre_proj``, ``post_obs``, optional
    ``post_proj`` (defaults to the analysed post-state), optional
    ``partition`` (list of index lists) and optional ``intermediates`` (one
    observable predicate between each pair of consecutive gates).
    """
    if not isinstance(obj, dict):
        raise PredicateParseError("judgment: expected a JSON object")
    for key in ("circuit", "pre_obs", "pre_proj", "post_obs"):
        if key not in obj:
            raise PredicateParseError(f"judgment: missing field {key!r}")
    c = circuit_from_dict(obj["circuit"])
    out = {
        "circuit": c,
        "pre_obs": ObservablePredicate.from_dict(obj["pre_obs"]),
        "pre_proj": ProjectivePredicate.from_dict(obj["pre_proj"]),
        "post_obs": ObservablePredicate.from_dict(obj["post_obs"]),
        "post_proj": None,
        "partition": None,
        "intermediates": [],
    }
    if obj.get("post_proj") is not None:
        out["post_proj"] = ProjectivePredicate.from_dict(obj["post_proj"])
    if obj.get("partition") is not None:
        part = obj["partition"]
        if not isinstance(part, list) or not all(
            isinstance(b, list) and all(isinstance(i, int) for i in b) for b in part
        ):
            raise PredicateParseError("judgment.partition: expected a list of index lists")
        out["partition"] = judge.Partition(tuple(tuple(b) for b in part))
    inter = obj.get("intermediates") or []
    if not isinstance(inter, list):
        raise PredicateParseError("judgment.intermediates: expected a list")
    out["intermediates"] = [ObservablePredicate.from_dict(x) for x in inter]
    return out


def derive(spec: dict, mode: str, tol: Tolerance, cap: int, cap_local: int) -> judge.RuleCertificate:
    """Certificate for a parsed judgment: Skip, or a Unit chain plus Seq and Con."""
    c = spec["circuit"]
    A, P, B = spec["pre_obs"], spec["pre_proj"], spec["post_obs"]
    if not len(c):
        Q = spec["post_proj"] if spec["post_proj"] is not None else P
        return judge.check_skip(judge.Judgment(c, A, P, B, Q), tol)
    mids = spec["intermediates"]
    if len(mids) != len(c) - 1:
        raise judge.RuleInapplicableError(
            f"a {len(c)}-gate circuit needs {len(c) - 1} intermediate observable predicates"
        )
    obs = [A] + mids + [B]
    certs = []
    cur = P
    for g, lo, hi in zip(c.gates, obs, obs[1:]):
        cert = judge.check_unit_rule(lo, cur, g, hi, c.n, tol, mode=mode,
                                     partition=spec["partition"], cap=cap, cap_local=cap_local)
        certs.append(cert)
        cur = cert.conclusion.post_proj
    cert = judge.compose_all(certs, tol)
    lifted = judge.Judgment(c, A, P, B, cert.conclusion.post_proj)
    cert = judge.RuleCertificate(cert.rule, cert.premises, cert.verdict, cert.mode, lifted,
                                 cert.max_register)
    if spec["post_proj"] is not None:
        try:
            cert = judge.weaken(cert, T=spec["post_proj"], tol=tol)
        except judge.ConsequenceError as exc:
            return judge.RuleCertificate(
                "Con", cert.premises + (judge.Premise(str(exc), -1.0),), False, cert.mode,
                cert.conclusion, cert.max_register,
            )
    return cert


def cmd_check(args) -> int:
    spec = load_judgment(_read_json(args.judgment))
    tol, cap = _tol(args), _cap(args)
    cert = derive(spec, args.mode, tol, cap, args.cap_local)
    report: dict[str, Any] = {"certificate": cert.to_dict(), "oracle": None}
    code = EXIT_OK if cert.verdict else EXIT_VERDICT
    if cert.verdict and spec["circuit"].n <= cap:
        rep = judge.check_validity_oracle(cert.conclusion, args.samples, args.seed, cap, tol)
        report["oracle"] = rep.to_dict()
        if not rep.holds:
            code = EXIT_ORACLE
    lines = [f"{p.desc}: residual={p.residual:+.3e}" for p in cert.premises]
    _emit(args, report, lines)
    return code


def cmd_casestudy(args) -> int:
    tol, cap = _tol(args), _cap(args)
    if args.name == "ghz":
        kind = "random" if args.random else args.unitaries
        cert = cs.ghz_case_study(args.n, cs.ghz_unitaries(args.n, kind, args.seed), tol=tol,
                                 cap_local=args.cap_local, cap=cap)
    elif args.name == "qft":
        bits = args.j if args.j is not None else "0" * args.n
        cert = cs.qft_case_study(args.n, bits, tol=tol, cap_local=args.cap_local, cap=cap)
    else:
        cert = cs.qpe_case_study(args.n, 1, args.k, theta=args.theta_turns, tail=args.tail,
                                 tol=tol, cap_local=args.cap_local, cap=cap)
    _emit(args, cert.to_dict(), cert.transcript)
    verdict = cert.matches_expected if args.name == "qft" else cert.verdict
    return EXIT_OK if verdict else EXIT_VERDICT


def cmd_oracle(args) -> int:
    c = circuit_from_dict(_read_json(args.circuit))
    bits = args.input if args.input is not None else "0" * c.n
    if len(bits) != c.n or set(bits) - {"0", "1"}:
        raise cs.CaseStudyError(f"--input must be a {c.n}-bit string")
    out = simulate_state(c, ket(bits), cap=_cap(args))
    report: dict[str, Any] = {
        "n": c.n,
        "gates": gate_list(c.gates),
        "probabilities": [float(p) for p in np.abs(out) ** 2],
    }
    if args.observables:
        obs = ObservablePredicate.from_dict(_read_json(args.observables))
        report["expectation"] = expectation(obs, out)
    _emit(args, report)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-atol", type=float, default=1e-9)
    common.add_argument("--tol-rank", type=float, default=1e-8)
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--samples", type=_positive_int, default=50)
    common.add_argument("--cap", type=_positive_int, default=None,
                        help="oracle size cap (default: $SAQR_CAP or 12)")
    common.add_argument("--cap-local", type=_positive_int, default=8)
    common.add_argument("--mode", choices=("exact", "scalable"), default="exact")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--transcript", help="write a plain-text derivation transcript here")

    p = argparse.ArgumentParser(prog="saqr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="run the local abstract analysis")
    a.add_argument("circuit")
    a.add_argument("predicate")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("check", parents=[common], help="check a judgment file")
    c.add_argument("judgment")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("casestudy", parents=[common], help="run a case study")
    s.add_argument("name", choices=("ghz", "qft", "qpe"))
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--unitaries", choices=("identity", "T", "random"), default="identity")
    s.add_argument("--random", action="store_true", help="shorthand for --unitaries random")
    s.add_argument("--j", help="QFT input bit string")
    s.add_argument("--k", type=_positive_int, default=1, help="QPE tail-bit count")
    s.add_argument("--theta-turns", type=float, default=0.0, help="QPE phase in turns")
    s.add_argument("--tail", help="QPE tail bits to bound (default: best approximation)")
    s.set_defaults(func=cmd_casestudy)

    o = sub.add_parser("oracle", parents=[common], help="simulate a circuit on a basis input")
    o.add_argument("circuit")
    o.add_argument("--input", help="input bit string (default all zeros)")
    o.add_argument("--observables", help="observable predicate file to evaluate")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _tol(args)
    except ValueError as exc:
        print(f"saqr: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except (InputError, CircuitParseError) as exc:
        print(f"saqr: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ANALYSIS_ERRORS as exc:
        print(f"saqr: error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
