"""Judgments ``{A|P} C {B|Q}``, rule checkers and oracle-based validity testing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .circuit import DEFAULT_CAP, Circuit, Gate, SizeCapError, gate_unitary
from .linalg import (
    DEFAULT_TOL,
    Matrix,
    Tolerance,
    dagger,
    embed,
    embed_local,
    intersect_all,
    loewner_residual,
    min_eigenvalue,
)
from .observables import ObservablePredicate, matrix_rep
from .oracle import (
    default_cap,
    expectation,
    projective_violation,
    sample_kets_in,
    simulate_state,
)
from .predicate import DomainMismatchError
from .qai import (
    DEFAULT_CAP_LOCAL,
    LocalRegisterTooLarge,
    ProjectivePredicate,
    abstract_apply,
    concretize,
    relabel,
    swap_layer_mapping,
)

RULES = ("Skip", "Unit", "Seq", "Con", "WarmupFwd", "WarmupBwd", "Partitioned", "Remap")
ORACLE_SLACK = 1e-8


class RuleInapplicableError(ValueError):
    pass


class ConsequenceError(ValueError):
    """A containment required by the consequence rule fails."""


class MidpointMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Judgment:
    circuit: Circuit
    pre_obs: ObservablePredicate
    pre_proj: ProjectivePredicate
    post_obs: ObservablePredicate
    post_proj: ProjectivePredicate

    def __post_init__(self) -> None:
        n = self.circuit.n
        for name in ("pre_obs", "pre_proj", "post_obs", "post_proj"):
            qs = getattr(self, name).qubits
            if qs and max(qs) > n:
                raise DomainMismatchError(f"{name} mentions qubit {max(qs)} outside [1..{n}]")

    @property
    def n(self) -> int:
        return self.circuit.n

    def to_dict(self) -> dict:
        from .circuit import circuit_to_dict

        return {
            "circuit": circuit_to_dict(self.circuit),
            "pre_obs": self.pre_obs.to_dict(),
            "pre_proj": self.pre_proj.to_dict(),
            "post_obs": self.post_obs.to_dict(),
            "post_proj": self.post_proj.to_dict(),
        }


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(tuple(int(i) for i in b) for b in self.blocks))

    def validate(self, m: int) -> None:
        seen = [i for b in self.blocks for i in b]
        if any(not b for b in self.blocks):
            raise ValueError("partition has an empty block")
        if len(seen) != len(set(seen)):
            raise ValueError("partition blocks overlap")
        if set(seen) != set(range(m)):
            raise ValueError(f"partition does not cover the {m} entries exactly")

    @classmethod
    def singletons(cls, m: int) -> "Partition":
        return cls(tuple((i,) for i in range(m)))

    @classmethod
    def whole(cls, m: int) -> "Partition":
        return cls((tuple(range(m)),))


@dataclass(frozen=True)
class Premise:
    desc: str
    residual: float

    def to_dict(self) -> dict:
        return {"desc": self.desc, "residual": float(self.residual)}


@dataclass(frozen=True, eq=False)
class RuleCertificate:
    rule: str
    premises: tuple[Premise, ...]
    verdict: bool
    mode: str = "exact"
    conclusion: Judgment | None = None
    max_register: int = 0

    @property
    def min_residual(self) -> float:
        return min((p.residual for p in self.premises), default=0.0)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "premises": [p.to_dict() for p in self.premises],
            "verdict": bool(self.verdict),
            "mode": self.mode,
        }


def _verdict(premises: Sequence[Premise], tol: Tolerance) -> bool:
    return all(p.residual >= -tol.atol for p in premises)


# ------------------------------------------------------------------ validity


@dataclass(frozen=True)
class ValidityReport:
    holds: bool
    worst_gap: float
    worst_violation: float
    samples: int

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "worst_gap": self.worst_gap,
            "worst_violation": self.worst_violation,
            "samples": self.samples,
        }


def check_validity_oracle(
    j: Judgment,
    samples: int = 50,
    seed: int = 0,
    cap: int | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> ValidityReport:
    """Test the judgment on ``samples`` random pure states inside ``gamma(pre_proj)``.

    Pure states suffice because both conditions are convex in the input.
    ``worst_gap`` is the smallest slack ``tr(M_B C(rho)) - tr(M_A rho)``; a
    negative value is a counterexample.
    """
    cap = default_cap() if cap is None else cap
    kets = sample_kets_in(j.pre_proj, j.n, samples, seed, cap=cap, tol=tol)
    worst_gap = float("inf")
    worst_viol = 0.0
    for psi in kets:
        out = simulate_state(j.circuit, psi, cap=cap)
        worst_viol = max(worst_viol, projective_violation(out, j.post_proj))
        worst_gap = min(worst_gap, expectation(j.post_obs, out) - expectation(j.pre_obs, psi))
    holds = worst_gap >= -ORACLE_SLACK and worst_viol <= ORACLE_SLACK
    return ValidityReport(holds, worst_gap, worst_viol, samples)


# ------------------------------------------------------------------ rules


def check_skip(j: Judgment, tol: Tolerance = DEFAULT_TOL) -> RuleCertificate:
    if len(j.circuit):
        raise RuleInapplicableError("Skip applies only to the empty circuit")
    premises = []
    for name, a, b in (("obs", j.pre_obs, j.post_obs), ("proj", j.pre_proj, j.post_proj)):
        diff = a.max_diff(b) if a.domain == b.domain else float("inf")
        premises.append(Premise(f"{name} pre = post", -diff))
    return RuleCertificate("Skip", tuple(premises), _verdict(premises, tol), "exact", j)


def _gate_circuit(n: int, g: Gate | None) -> Circuit:
    return Circuit(n, () if g is None else (g,))


def check_unit_rule(
    A: ObservablePredicate,
    P: ProjectivePredicate,
    g: Gate,
    B: ObservablePredicate,
    n: int,
    tol: Tolerance = DEFAULT_TOL,
    *,
    mode: str = "exact",
    partition: Partition | None = None,
    cap: int = DEFAULT_CAP,
    cap_local: int = DEFAULT_CAP_LOCAL,
) -> RuleCertificate:
    """Unit rule premise ``gamma M_A gamma <= gamma U^dag M_B U gamma``.

    ``mode="scalable"`` discharges the premise blockwise via
    :func:`check_partitioned`, which entails it.
    """
    if mode == "scalable":
        cert = check_partitioned(A, B, P, g, partition or Partition.singletons(len(A)), n, tol,
                                 cap_local=cap_local)
        return RuleCertificate("Unit", cert.premises, cert.verdict, "scalable", cert.conclusion,
                               cert.max_register)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if n > cap:
        raise SizeCapError(f"exact Unit check on {n} qubits exceeds the size cap {cap}")
    gamma = concretize(P, n, cap=cap, tol=tol)
    u = embed(gate_unitary(g), g.targets, n)
    lhs = gamma @ matrix_rep(A, n, cap) @ gamma
    rhs = gamma @ dagger(u) @ matrix_rep(B, n, cap) @ u @ gamma
    premises = (Premise(f"global sandwich at {g.label()}", loewner_residual(lhs, rhs, tol)),)
    concl = Judgment(_gate_circuit(n, g), A, P, B, abstract_apply(g, P, tol))
    return RuleCertificate("Unit", premises, _verdict(premises, tol), "exact", concl, n)


def _block_register(entries: Iterable[tuple[int, ...]], g: Gate | None) -> tuple[int, ...]:
    qs = set().union(*map(set, entries))
    if g is not None and not qs.isdisjoint(g.targets):
        qs |= set(g.targets)
    return tuple(sorted(qs))


def _block_operators(A, B, g, block, cap_local):
    doms = [A.domain[i] for i in block]
    reg = _block_register(doms, g)
    if len(reg) > cap_local:
        raise LocalRegisterTooLarge(f"block register {reg} exceeds cap_local={cap_local}")
    sa = sum(embed_local(A.operators[i], A.domain[i], reg) for i in block)
    sb = sum(embed_local(B.operators[i], B.domain[i], reg) for i in block)
    if g is not None and set(g.targets) <= set(reg):
        u = embed_local(gate_unitary(g), g.targets, reg)
    else:
        u = np.eye(1 << len(reg), dtype=np.complex128)
    return reg, sa, sb, u


def _prepare_blocks(A, B, part: Partition):
    A.require_domain(B)
    part.validate(len(A))


def check_warmup(
    A: ObservablePredicate,
    B: ObservablePredicate,
    g: Gate | None,
    part: Partition,
    direction: str,
    n: int,
    tol: Tolerance = DEFAULT_TOL,
    *,
    P: ProjectivePredicate | None = None,
    cap_local: int = DEFAULT_CAP_LOCAL,
) -> RuleCertificate:
    """Blockwise unsandwiched inequalities on local registers only.

    A passing certificate also discharges the Unit premise, so its
    conclusion is ``{A|P} g {B|U#(P)}`` (``P`` defaults to the identity tuple).
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be forward or backward, got {direction!r}")
    _prepare_blocks(A, B, part)
    premises = []
    peak = 0
    for block in part.blocks:
        reg, sa, sb, u = _block_operators(A, B, g, block, cap_local)
        peak = max(peak, len(reg))
        if direction == "backward":
            res = loewner_residual(sa, dagger(u) @ sb @ u, tol)
        else:
            res = loewner_residual(u @ sa @ dagger(u), sb, tol)
        premises.append(Premise(f"block {list(block)} on {list(reg)}", res))
    P = P if P is not None else ProjectivePredicate.identity(A.domain)
    post = P if g is None else abstract_apply(g, P, tol)
    concl = Judgment(_gate_circuit(n, g), A, P, B, post)
    rule = "WarmupFwd" if direction == "forward" else "WarmupBwd"
    return RuleCertificate(rule, tuple(premises), _verdict(premises, tol), "scalable", concl, peak)


def check_partitioned(
    A: ObservablePredicate,
    B: ObservablePredicate,
    P: ProjectivePredicate,
    g: Gate | None,
    part: Partition,
    n: int,
    tol: Tolerance = DEFAULT_TOL,
    *,
    cap_local: int = DEFAULT_CAP_LOCAL,
) -> RuleCertificate:
    """Blockwise ``P_j (sum A) P_j <= P_j U^dag (sum B) U P_j``.

    When ``P`` shares the domain of ``A``, ``P_j`` intersects the block's own
    projectors; otherwise it intersects every entry of ``P`` inside the block
    register. Either way ``gamma(P) <= P_j``. With ``g=None`` this is the
    sandwiched skip step.
    """
    _prepare_blocks(A, B, part)
    same = P.domain == A.domain
    premises = []
    peak = 0
    for block in part.blocks:
        reg, sa, sb, u = _block_operators(A, B, g, block, cap_local)
        peak = max(peak, len(reg))
        if same:
            chosen = [(P.domain[i], P.operators[i]) for i in block]
        else:
            chosen = [(s, p) for s, p in P if set(s) <= set(reg)]
        if chosen:
            pj = intersect_all((embed_local(p, s, reg) for s, p in chosen), tol)
        else:
            pj = np.eye(1 << len(reg), dtype=np.complex128)
        res = loewner_residual(pj @ sa @ pj, pj @ dagger(u) @ sb @ u @ pj, tol)
        premises.append(Premise(f"block {list(block)} on {list(reg)} sandwiched", res))
    post = P if g is None else abstract_apply(g, P, tol)
    concl = Judgment(_gate_circuit(n, g), A, P, B, post)
    return RuleCertificate("Partitioned", tuple(premises), _verdict(premises, tol), "scalable",
                           concl, peak)


def _local_permutation(a: Matrix, s: Sequence[int], sigma: dict[int, int], reg: Sequence[int]):
    """Conjugate ``a`` (on ``s``) by a permutation of ``reg`` that agrees with ``sigma`` on ``s``."""
    image = {q: sigma.get(q, q) for q in s}
    rest_src = [q for q in reg if q not in image]
    rest_dst = [q for q in reg if q not in image.values()]
    full = {**image, **dict(zip(rest_src, rest_dst))}
    k = len(reg)
    idx = {q: t for t, q in enumerate(reg)}
    # factor idx[full[q]] of the output carries factor idx[q] of the input
    perm = [0] * k
    for q in reg:
        perm[idx[full[q]]] = idx[q]
    t = embed_local(a, s, reg).reshape((2,) * (2 * k))
    return t.transpose(perm + [k + p for p in perm]).reshape(1 << k, 1 << k)


def check_remap(
    A: ObservablePredicate,
    P: ProjectivePredicate,
    swaps: Circuit,
    tol: Tolerance = DEFAULT_TOL,
    *,
    cap_local: int = DEFAULT_CAP_LOCAL,
) -> RuleCertificate:
    """A layer of SWAPs moves every entry to its relabelled domain.

    Each entry is verified on the register ``s ∪ sigma(s)``: the conjugated
    operator must equal the relabelled one, so both Loewner directions hold.
    """
    sigma = swap_layer_mapping(swaps.gates)
    A2 = relabel(A, sigma)
    P2 = relabel(P, sigma)
    premises = []
    peak = 0
    for tup, tup2 in ((A, A2), (P, P2)):
        for (s, a), (s2, a2) in zip(tup, tup2):
            reg = tuple(sorted(set(s) | set(s2)))
            if len(reg) > cap_local:
                raise LocalRegisterTooLarge(f"remap register {reg} exceeds cap_local={cap_local}")
            peak = max(peak, len(reg))
            moved = _local_permutation(a, s, sigma, reg)
            target = embed_local(a2, s2, reg)
            res = min(loewner_residual(moved, target, tol), loewner_residual(target, moved, tol))
            premises.append(Premise(f"remap {list(s)} -> {list(s2)}", res))
    concl = Judgment(swaps, A, P, A2, P2)
    return RuleCertificate("Remap", tuple(premises), _verdict(premises, tol), "scalable", concl, peak)


def compose_seq(
    c1: RuleCertificate, c2: RuleCertificate, tol: Tolerance = DEFAULT_TOL
) -> RuleCertificate:
    j1, j2 = c1.conclusion, c2.conclusion
    if j1 is None or j2 is None:
        raise RuleInapplicableError("Seq needs certificates with conclusions")
    if not (j1.post_obs.close_to(j2.pre_obs, tol) and j1.post_proj.close_to(j2.pre_proj, tol)):
        raise MidpointMismatchError("midpoint predicates of the two judgments differ")
    concl = Judgment(j1.circuit.then(j2.circuit), j1.pre_obs, j1.pre_proj, j2.post_obs, j2.post_proj)
    mode = "exact" if c1.mode == c2.mode == "exact" else "scalable"
    return RuleCertificate(
        "Seq",
        c1.premises + c2.premises,
        c1.verdict and c2.verdict,
        mode,
        concl,
        max(c1.max_register, c2.max_register),
    )


def compose_all(certs: Sequence[RuleCertificate], tol: Tolerance = DEFAULT_TOL) -> RuleCertificate:
    if not certs:
        raise RuleInapplicableError("nothing to compose")
    out = certs[0]
    for c in certs[1:]:
        out = compose_seq(out, c, tol)
    return out


def _containment(a, b, tol: Tolerance) -> float:
    a.require_domain(b)
    return min((min_eigenvalue(y - x, tol) for x, y in zip(a.operators, b.operators)), default=0.0)


def weaken(
    cert: RuleCertificate,
    D: ObservablePredicate | None = None,
    E: ObservablePredicate | None = None,
    R: ProjectivePredicate | None = None,
    T: ProjectivePredicate | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> RuleCertificate:
    """Consequence rule: strengthen the precondition, weaken the postcondition."""
    j = cert.conclusion
    if j is None:
        raise RuleInapplicableError("Con needs a certificate with a conclusion")
    D = j.pre_obs if D is None else D
    E = j.post_obs if E is None else E
    R = j.pre_proj if R is None else R
    T = j.post_proj if T is None else T
    premises = (
        Premise("D <= A", _containment(D, j.pre_obs, tol)),
        Premise("B <= E", _containment(j.post_obs, E, tol)),
        Premise("R <= P", _containment(R, j.pre_proj, tol)),
        Premise("Q <= T", _containment(j.post_proj, T, tol)),
    )
    bad = [p.desc for p in premises if p.residual < -tol.atol]
    if bad:
        raise ConsequenceError(f"consequence rule containment fails: {', '.join(bad)}")
    concl = Judgment(j.circuit, D, R, E, T)
    return RuleCertificate("Con", cert.premises + premises, cert.verdict, cert.mode, concl,
                           cert.max_register)


# ------------------------------------------------------------------ diagnostics


def reduction_check(
    P: ProjectivePredicate,
    Q: ProjectivePredicate,
    c: Circuit,
    samples: int = 50,
    seed: int = 0,
    cap: int | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> bool:
    """Empirical form of: quantitative triple over ``P``, ``Q`` as observables
    implies the qualitative triple.

    The antecedent is taken at slack ``1e-12``; the consequent is then
    checked at ``1e-6``, since a trace deficit ``d`` permits an entrywise
    violation up to ``sqrt(d)``.
    """
    P.require_domain(Q)
    cap = default_cap() if cap is None else cap
    kets = sample_kets_in(P, c.n, samples, seed, cap=cap, tol=tol)
    Pobs, Qobs = ObservablePredicate(P.entries), ObservablePredicate(Q.entries)
    antecedent = True
    consequent = True
    for psi in kets:
        out = simulate_state(c, psi, cap=cap)
        if expectation(Qobs, out) - expectation(Pobs, psi) < -1e-12:
            antecedent = False
        if projective_violation(out, Q) > 1e-6:
            consequent = False
    return (not antecedent) or consequent


_PAULIS = (
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


def _pauli_strings(k: int):
    if k == 0:
        yield np.ones((1, 1), dtype=np.complex128)
        return
    for p in _PAULIS:
        for rest in _pauli_strings(k - 1):
            yield np.kron(p, rest)


def local_decomposition_residual(
    M: Matrix, domains: Sequence[Sequence[int]], n: int, cap: int = DEFAULT_CAP
) -> float:
    """Frobenius distance from ``M`` to the span of ``{A_i (x) I}`` with Hermitian ``A_i``.

    Hermitian operators on each domain are spanned by real combinations of
    Pauli strings, so this is a real linear least-squares problem.
    """
    if n > cap:
        raise SizeCapError(f"decomposition on {n} qubits exceeds the size cap {cap}")
    M = np.asarray(M, dtype=np.complex128)
    cols = [embed(p, s, n).reshape(-1) for s in domains for p in _pauli_strings(len(s))]
    target = M.reshape(-1)
    if not cols:
        return float(np.linalg.norm(target))
    basis = np.column_stack(cols)
    real_basis = np.vstack([basis.real, basis.imag])
    real_target = np.concatenate([target.real, target.imag])
    coef, *_ = np.linalg.lstsq(real_basis, real_target, rcond=None)
    return float(np.linalg.norm(real_basis @ coef - real_target))
