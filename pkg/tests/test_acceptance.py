"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

from __future__ import annotations

import time

import numpy as np
import pytest

from conftest import record
from helpers import (
    pair_domain,
    random_circuit,
    random_effect,
    random_gate,
    random_observables,
    random_pair_predicate,
    random_partition,
    tight_pre,
)
from saqr import judge
from saqr.casestudies import (
    FOUR_OVER_PI_SQ,
    best_approximation,
    ghz_case_study,
    ghz_unitaries,
    qft_case_study,
    qpe_case_study,
    r_product,
    r_telescoped,
)
from saqr.linalg import Tolerance, dagger, embed, kron, loewner_leq, partial_trace, support
from saqr.observables import ObservablePredicate
from saqr.oracle import projective_violation, random_density, sample_kets_in, simulate_state
from saqr.qai import ProjectivePredicate, analyze

ORACLE_TOL = Tolerance(atol=1e-8)


def _fit_exponent(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def _random_psd(d: int, rng, rank: int | None = None) -> np.ndarray:
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    return g @ dagger(g)


def _random_hermitian(d: int, rng) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + dagger(g)) / 2


# ---------------------------------------------------------------- 1


def test_criterion_1_lemma_suite():
    rng = np.random.default_rng(101)
    worst = 0.0
    count = 0
    start = time.perf_counter()
    for _ in range(200):
        d = 1 << int(rng.integers(1, 7))
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        worst = max(worst, abs(np.trace(a @ b) - np.trace(b @ a)) / (1 + abs(np.trace(a @ b))))
        count += 1
    for _ in range(200):
        d = 1 << int(rng.integers(1, 7))
        a, b = _random_psd(d, rng), _random_psd(d, rng)
        t = np.trace(a @ b)
        worst = max(worst, max(0.0, -t.real), abs(t.imag) / (1 + abs(t)))
        count += 1
    for _ in range(200):
        d = 1 << int(rng.integers(1, 7))
        a = _random_hermitian(d, rng)
        b = a + _random_psd(d, rng)
        assert loewner_leq(a, b)
        rho = random_density(d.bit_length() - 1, rng).rho
        worst = max(worst, max(0.0, np.trace(a @ rho).real - np.trace(b @ rho).real))
        count += 1
    for i in range(200):
        n = int(rng.integers(1, 7))
        d = 1 << n
        p = support(_random_psd(d, rng, rank=int(rng.integers(1, d + 1))))
        if i % 2 == 0:
            basis = np.linalg.eigh(p)[1][:, np.linalg.eigvalsh(p) > 0.5]
            g = basis @ (rng.standard_normal((basis.shape[1], 2)) + 0j)
            rho = g @ dagger(g)
            rho /= np.trace(rho).real
            # tr(P rho) = 1 and supp(rho) <= P
            worst = max(worst, abs(np.trace(p @ rho).real - 1))
            assert loewner_leq(support(rho), p)
        else:
            rho = random_density(n, rng).rho
            inside = loewner_leq(support(rho), p, Tolerance(atol=1e-9))
            trace_one = abs(np.trace(p @ rho).real - 1) <= 1e-9
            assert inside == trace_one
        count += 1
    for _ in range(200):
        n = int(rng.integers(1, 7))
        k = int(rng.integers(1, n + 1))
        s = tuple(sorted(int(q) + 1 for q in rng.choice(n, k, replace=False)))
        a = _random_hermitian(1 << k, rng)
        rho = random_density(n, rng).rho
        rho_s = partial_trace(rho, n, [q for q in range(1, n + 1) if q not in s])
        worst = max(worst, abs(np.trace(embed(a, s, n) @ rho) - np.trace(a @ rho_s)))
        count += 1
    elapsed = time.perf_counter() - start
    ok = count == 1000 and worst <= 1e-9 and elapsed < 30
    record("1 lemma suite", ok, f"{count} instances, worst residual {worst:.2e}, {elapsed:.1f} s")
    assert ok


# ---------------------------------------------------------------- 2


def test_criterion_2_qai_soundness():
    rng = np.random.default_rng(202)
    violations = 0
    trials = 0
    worst = 0.0
    start = time.perf_counter()
    for _ in range(200):
        n = int(rng.integers(2, 9))
        c = random_circuit(n, int(rng.integers(1, 31)), rng)
        pred = random_pair_predicate(n, rng)
        post = analyze(c, pred).post
        for psi in sample_kets_in(pred, n, 20, int(rng.integers(2**32))):
            out = simulate_state(c, psi)
            trials += 1
            v = projective_violation(out, post)
            worst = max(worst, v)
            violations += v > ORACLE_TOL.atol
    elapsed = time.perf_counter() - start
    ok = violations == 0 and trials == 4000 and elapsed < 300
    record("2 QAI soundness", ok,
           f"{trials} trials, {violations} violations, worst {worst:.2e}, {elapsed:.1f} s")
    assert ok


# ---------------------------------------------------------------- 3


def _unit_instance(rng):
    n = int(rng.integers(2, 7))
    P = random_pair_predicate(n, rng)
    B = random_observables(pair_domain(n), rng)
    g = random_gate(n, rng)
    A = tight_pre(B, g, rng, P)
    return judge.check_unit_rule(A, P, g, B, n)


def _warmup_instance(rng):
    n = int(rng.integers(2, 9))
    B = random_observables(pair_domain(n), rng)
    g = random_gate(n, rng)
    A = tight_pre(B, g, rng)
    part = random_partition(len(A), rng)
    direction = ["forward", "backward"][int(rng.integers(2))]
    return judge.check_warmup(A, B, g, part, direction, n)


def _partitioned_instance(rng):
    n = int(rng.integers(2, 9))
    P = random_pair_predicate(n, rng)
    B = random_observables(pair_domain(n), rng)
    g = random_gate(n, rng)
    A = tight_pre(B, g, rng, P)
    return judge.check_partitioned(A, B, P, g, random_partition(len(A), rng), n)


def _seq_instance(rng):
    n = int(rng.integers(2, 9))
    P = random_pair_predicate(n, rng)
    g1, g2 = random_gate(n, rng), random_gate(n, rng)
    C = random_observables(pair_domain(n), rng)
    B = tight_pre(C, g2, rng)
    A = tight_pre(B, g1, rng, P)
    c1 = judge.check_partitioned(A, B, P, g1, random_partition(len(A), rng), n)
    c2 = judge.check_partitioned(B, C, c1.conclusion.post_proj, g2,
                                 random_partition(len(A), rng), n)
    return judge.compose_seq(c1, c2)


def _weaken_instance(rng):
    cert = _partitioned_instance(rng)
    j = cert.conclusion
    D = j.pre_obs.scaled(rng.uniform(0.5, 1.0))
    E = ObservablePredicate.of(
        (s, b + 0.1 * (np.eye(len(b)) - b)) for s, b in j.post_obs
    )
    T = ProjectivePredicate.identity(j.post_proj.domain)
    return judge.weaken(cert, D, E, None, T)


def test_criterion_3_rule_soundness():
    rng = np.random.default_rng(303)
    makers = [_unit_instance, _warmup_instance, _partitioned_instance, _seq_instance,
              _weaken_instance]
    passing = 0
    contradictions = 0
    worst = np.inf
    for i in range(650):
        cert = makers[i % len(makers)](rng)
        if not cert.verdict:
            continue
        passing += 1
        rep = judge.check_validity_oracle(cert.conclusion, samples=10, seed=i)
        worst = min(worst, rep.worst_gap)
        contradictions += not rep.holds
    ok = passing >= 500 and contradictions == 0 and worst >= -1e-8
    record("3 rule soundness", ok,
           f"{passing} passing certificates, {contradictions} contradictions, "
           f"worst gap {worst:.2e}")
    assert ok


# ---------------------------------------------------------------- 4


def test_criterion_4_partitioned_implies_global():
    rng = np.random.default_rng(404)
    found = 0
    counterexamples = 0
    tries = 0
    while found < 200:
        tries += 1
        n = int(rng.integers(2, 9))
        P = random_pair_predicate(n, rng)
        B = random_observables(pair_domain(n), rng)
        g = random_gate(n, rng)
        A = tight_pre(B, g, rng, P)
        if tries % 3 == 0:
            # perturb so that some instances fail blockwise
            A = ObservablePredicate.of(
                (s, 0.9 * a + 0.1 * random_effect(len(s), rng)) for s, a in A
            )
        part = random_partition(len(A), rng)
        cert = judge.check_partitioned(A, B, P, g, part, n)
        if not cert.verdict:
            continue
        found += 1
        glob = judge.check_unit_rule(A, P, g, B, n)
        counterexamples += not glob.verdict
    ok = counterexamples == 0
    record("4 partitioned => global sandwich", ok,
           f"{found} passing block instances ({tries} tried), {counterexamples} counterexamples")
    assert ok


# ---------------------------------------------------------------- 5

INEXPRESSIBILITY_RESIDUAL = 1.0


def test_criterion_5_inexpressibility():
    from saqr.circuit import CNOT
    from saqr.linalg import ket, outer

    z = outer(ket("0"))
    m = kron(z, np.eye(2)) + outer(ket("00")) + outer(ket("11"))
    res = judge.local_decomposition_residual(m, [(1,), (2,)], 2)
    A = ObservablePredicate.of([((1,), z), ((2,), z)])
    rescued = judge.check_unit_rule(A, ProjectivePredicate.of([((1, 2), outer(ket("00")))]),
                                    CNOT(1, 2), A, 2)
    plain = judge.check_unit_rule(A, ProjectivePredicate.identity([(1, 2)]), CNOT(1, 2), A, 2)
    ok = (res > 0.1 and abs(res - INEXPRESSIBILITY_RESIDUAL) <= 1e-9
          and rescued.verdict and not plain.verdict)
    record("5 inexpressibility", ok,
           f"residual {res:.12f}, sandwiched {rescued.verdict}, unsandwiched {plain.verdict}")
    assert ok


# ---------------------------------------------------------------- 6


def test_criterion_6_ghz():
    bad = []
    sizes = {}
    slowest = 0.0
    for n in range(3, 13):
        t0 = time.perf_counter()
        for kind in ("identity", "T", "random"):
            cert = ghz_case_study(n, ghz_unitaries(n, kind, seed=n))
            errs = [abs(cert.bound_a_sq - 0.5), abs(cert.bound_b_sq - 0.5)]
            oracle = [abs(cert.oracle_a_sq - 0.5), abs(cert.oracle_b_sq - 0.5)]
            if max(errs) > 1e-12 or max(oracle) > 1e-9 or not cert.verdict:
                bad.append((n, kind, errs, oracle))
            if kind == "identity":
                sizes[n] = cert.proof_bytes
        slowest = max(slowest, time.perf_counter() - t0)
    ns = [n for n in sizes if n >= 4]
    exp = _fit_exponent(ns, [sizes[n] for n in ns])
    ok = not bad and abs(exp - 2) <= 0.3 and slowest < 60
    record("6 GHZ", ok, f"n=3..12 x 3 unitary families, failures {bad}, size exponent {exp:.2f}, "
                        f"slowest n {slowest:.1f} s")
    assert ok


# ---------------------------------------------------------------- 7


def test_criterion_7_qft():
    rng = np.random.default_rng(707)
    bad = []
    sizes = {}
    for n in range(1, 11):
        for _ in range(5):
            bits = "".join(str(b) for b in rng.integers(0, 2, n))
            cert = qft_case_study(n, bits)
            if not (cert.matches_expected and cert.max_deviation <= 1e-9 and cert.rank == 1
                    and cert.fidelity >= 1 - 1e-8):
                bad.append((n, bits))
            sizes[n] = cert.proof_bytes
    ns = [n for n in sizes if n >= 4]
    exp = _fit_exponent(ns, [sizes[n] for n in ns])
    ok = not bad and abs(exp - 3) <= 0.3
    record("7 QFT", ok, f"n=1..10 x 5 strings, failures {bad}, size exponent {exp:.2f}")
    assert ok


# ---------------------------------------------------------------- 8


def test_criterion_8_qpe():
    rng = np.random.default_rng(808)
    start = time.perf_counter()
    worst_formula = 0.0
    bad = []
    checked = 0
    for n, k in ((4, 1), (4, 2), (5, 2), (6, 3)):
        thetas = (np.arange(100) + rng.uniform(0, 1, 100)) / 100
        for theta in thetas:
            bits, eps = best_approximation(n, theta)
            tail = bits[n - k:]
            rp, rt = r_product(n, k, theta, tail), r_telescoped(n, k, theta, tail)
            worst_formula = max(worst_formula, abs(rp - rt))
            cert = qpe_case_study(n, 1, k, theta=float(theta), tail=tail)
            assert abs(eps) <= 2.0 ** -(n + 1) + 1e-15
            checked += 1
            if (rp < FOUR_OVER_PI_SQ - 1e-12 or not cert.verdict
                    or cert.oracle_probability < cert.r - 1e-8):
                bad.append((n, k, float(theta)))
    elapsed = time.perf_counter() - start
    ok = worst_formula <= 1e-10 and not bad and elapsed < 120
    record("8 QPE", ok, f"{checked} grid points, formula gap {worst_formula:.1e}, "
                        f"failures {bad}, {elapsed:.1f} s")
    assert ok


# ---------------------------------------------------------------- scaling note


def _timed(fn) -> float:
    best = np.inf
    for _ in range(3):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


@pytest.mark.parametrize("case", ["ghz", "qft"])
def test_scaling_note(case):
    ns = [8, 12, 16, 20, 24]
    times = []
    peak = 0
    for n in ns:
        if case == "ghz":
            cert = ghz_case_study(n, oracle=False)
            ok_n = cert.verdict
            times.append(_timed(lambda: ghz_case_study(n, oracle=False)))
        else:
            bits = "10" * (n // 2)
            cert = qft_case_study(n, bits, oracle=False)
            ok_n = cert.matches_expected
            times.append(_timed(lambda: qft_case_study(n, bits, oracle=False)))
        assert ok_n
        peak = max(peak, cert.max_register)
    exp = _fit_exponent(ns, times)
    ok = peak <= 8 and exp <= 4
    record(f"scaling note ({case})", ok,
           f"n=8..24 without the oracle, peak register {peak} qubits, time exponent {exp:.2f}")
    assert ok
