"""Projective predicates and the local abstract transformer over circuits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import DEFAULT_CAP, Circuit, Gate, SizeCapError, gate_unitary
from .linalg import (
    DEFAULT_TOL,
    Matrix,
    NotProjectorError,
    QubitSet,
    Tolerance,
    dagger,
    embed,
    embed_local,
    intersect_all,
    kron,
    outer,
    partial_trace,
    support_basis,
)
from .predicate import LocalTuple

DEFAULT_CAP_LOCAL = 8


class LocalRegisterTooLarge(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ProjectivePredicate(LocalTuple):
    """Tuple of local projectors; the abstract state of the analysis."""

    json_key = "projectors"

    def _validate(self, tol: Tolerance) -> None:
        for s, p in self.entries:
            if np.max(np.abs(p - dagger(p))) > tol.atol or np.max(np.abs(p @ p - p)) > tol.atol:
                raise NotProjectorError(f"entry on {s} is not an orthogonal projector")


def basis_predicate(bits: str | Sequence[int]) -> ProjectivePredicate:
    """Single-qubit predicate ``(|j1><j1|, ..., |jn><jn|)`` on domain ``({1}, ..., {n})``."""
    entries = []
    for i, b in enumerate(bits, start=1):
        p = np.zeros((2, 2), dtype=np.complex128)
        p[int(b), int(b)] = 1
        entries.append(((i,), p))
    return ProjectivePredicate(tuple(entries))


def concretize(
    pred: ProjectivePredicate, n: int, cap: int = DEFAULT_CAP, tol: Tolerance = DEFAULT_TOL
) -> Matrix:
    """Global projector: intersection of every ``P_s (x) I``."""
    if n > cap:
        raise SizeCapError(f"concretizing on {n} qubits exceeds the size cap {cap}")
    if not len(pred):
        return np.eye(1 << n, dtype=np.complex128)
    return intersect_all((embed(p, s, n) for s, p in pred), tol)


def _local_register(*sets) -> tuple[int, ...]:
    return tuple(sorted(set().union(*map(set, sets))))


@dataclass(frozen=True)
class EntryUpdate:
    index: int
    register: tuple[int, ...]
    gap: float


def abstract_apply_with_info(
    g: Gate,
    pred: ProjectivePredicate,
    tol: Tolerance = DEFAULT_TOL,
    cap_local: int = DEFAULT_CAP_LOCAL,
) -> tuple[ProjectivePredicate, list[EntryUpdate]]:
    """Apply the gate's abstract transformer; also report per-entry registers and gaps.

    Entries disjoint from the gate are carried over unchanged.
    """
    u = gate_unitary(g)
    gate_qubits = set(g.targets)
    domain = pred.domain
    out: list[tuple[QubitSet, Matrix]] = []
    info: list[EntryUpdate] = []
    for i, (s, p) in enumerate(pred):
        if gate_qubits.isdisjoint(s):
            out.append((s, p))
            continue
        reg = _local_register(s, gate_qubits)
        if len(reg) > cap_local:
            raise LocalRegisterTooLarge(
                f"local register {reg} exceeds cap_local={cap_local}"
            )
        regset = set(reg)
        parts = [
            embed_local(pj, sj, reg) for sj, pj in zip(domain, pred.operators) if regset.issuperset(sj)
        ]
        r = intersect_all(parts, tol)
        ul = embed_local(u, g.targets, reg)
        conj = ul @ r @ dagger(ul)
        traced = [k + 1 for k, q in enumerate(reg) if q not in s]
        reduced = partial_trace(conj, len(reg), traced)
        basis, gap = support_basis(reduced, tol)
        out.append((s, basis @ dagger(basis)))
        info.append(EntryUpdate(i, reg, gap))
    return ProjectivePredicate(tuple(out)), info


def abstract_apply(
    g: Gate, pred: ProjectivePredicate, tol: Tolerance = DEFAULT_TOL, cap_local: int = DEFAULT_CAP_LOCAL
) -> ProjectivePredicate:
    return abstract_apply_with_info(g, pred, tol, cap_local)[0]


@dataclass(frozen=True)
class AnalysisStep:
    gate: Gate
    predicate: ProjectivePredicate
    max_register: int
    min_gap: float


@dataclass(frozen=True)
class AnalysisResult:
    post: ProjectivePredicate
    trace: tuple[AnalysisStep, ...] = field(default_factory=tuple)

    @property
    def max_register(self) -> int:
        return max((st.max_register for st in self.trace), default=0)


def analyze(
    c: Circuit,
    pred: ProjectivePredicate,
    tol: Tolerance = DEFAULT_TOL,
    cap_local: int = DEFAULT_CAP_LOCAL,
) -> AnalysisResult:
    steps = []
    cur = pred
    for g in c.gates:
        cur, info = abstract_apply_with_info(g, cur, tol, cap_local)
        steps.append(
            AnalysisStep(
                g,
                cur,
                max((len(e.register) for e in info), default=0),
                min((e.gap for e in info), default=float("inf")),
            )
        )
    return AnalysisResult(cur, tuple(steps))


def _normalized(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("zero vector")
    return v / nrm


def span_projector(vectors) -> Matrix:
    """Orthogonal projector onto the span of the given vectors."""
    m = np.column_stack([np.asarray(v, dtype=np.complex128) for v in vectors])
    q, r = np.linalg.qr(m)
    keep = np.abs(np.diag(r)) > 1e-12
    q = q[:, keep]
    return q @ dagger(q)


def two_state_span_predicate(
    a_states: Sequence, b_states: Sequence, tol: Tolerance = DEFAULT_TOL
) -> ProjectivePredicate:
    """Neighbour-pair predicate whose concretization is ``span{|a1..an>, |b1..bn>}``.

    Each ``a_i`` must not be parallel to ``b_i``.
    """
    if len(a_states) != len(b_states):
        raise ValueError("a_states and b_states differ in length")
    n = len(a_states)
    if n < 2:
        raise ValueError("the pair predicate needs at least two qubits")
    a = [_normalized(v) for v in a_states]
    b = [_normalized(v) for v in b_states]
    for i, (x, y) in enumerate(zip(a, b), start=1):
        if abs(np.vdot(x, y)) >= 1 - tol.atol:
            raise ValueError(f"states on qubit {i} are parallel")
    entries = []
    for i in range(n - 1):
        p = span_projector([kron(a[i], a[i + 1]), kron(b[i], b[i + 1])])
        entries.append(((i + 1, i + 2), p))
    return ProjectivePredicate(tuple(entries))


def permute_qubits(a: Matrix, perm: Sequence[int]) -> Matrix:
    """Reorder tensor factors: factor ``k`` of the result is factor ``perm[k]`` of ``a``."""
    k = len(perm)
    t = np.asarray(a).reshape((2,) * (2 * k))
    return t.transpose(list(perm) + [k + p for p in perm]).reshape(a.shape)


def relabel(pred: LocalTuple, mapping: dict[int, int]) -> LocalTuple:
    """Rename qubits by ``mapping`` (a permutation of labels) in every entry.

    Domains are kept strictly increasing, so operators are permuted to
    follow the new ordering. Used to model SWAP layers as domain remaps.
    """
    out = []
    for s, a in pred:
        new = [mapping.get(q, q) for q in s]
        order = sorted(range(len(new)), key=lambda k: new[k])
        out.append((tuple(new[k] for k in order), permute_qubits(a, order)))
    return type(pred)(tuple(out))


def swap_layer_mapping(gates: Sequence[Gate]) -> dict[int, int]:
    """Where each qubit's content ends up after a sequence of SWAP gates."""
    pos: dict[int, int] = {}
    for g in gates:
        if g.kind != "SWAP":
            raise ValueError(f"expected only SWAP gates, got {g.label()}")
        a, b = g.targets
        inv = {v: k for k, v in pos.items()}
        src_a, src_b = inv.get(a, a), inv.get(b, b)
        pos[src_a], pos[src_b] = b, a
    return {k: v for k, v in pos.items() if k != v}


def product_ket(pred: ProjectivePredicate) -> np.ndarray:
    """Vector spanning ``gamma(pred)`` when every entry is a rank-1 single-qubit projector."""
    vecs = []
    for s, p in sorted(pred, key=lambda e: e[0]):
        if len(s) != 1:
            raise ValueError("product_ket needs single-qubit entries")
        basis, _ = support_basis(p)
        if basis.shape[1] != 1:
            raise ValueError(f"entry on {s} is not rank 1")
        vecs.append(basis[:, 0])
    return kron(*vecs).reshape(-1)


def pure_projector(v) -> Matrix:
    return outer(_normalized(v))
