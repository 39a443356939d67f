"""Random instance generators shared by the test modules."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from saqr import circuit as cc
from saqr.linalg import dagger, embed_local, kron, support
from saqr.observables import ObservablePredicate
from saqr.oracle import reduced_density_state
from saqr.qai import ProjectivePredicate


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def random_qubit(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return v / np.linalg.norm(v)


def random_gate(n: int, rng: np.random.Generator) -> cc.Gate:
    kinds = ["H", "T", "Rm", "X", "Z"] + (["CNOT", "SWAP", "U2"] if n >= 2 else [])
    kind = kinds[rng.integers(len(kinds))]
    if kind in ("CNOT", "SWAP", "U2"):
        a, b = (int(q) + 1 for q in rng.choice(n, 2, replace=False))
        if kind == "CNOT":
            return cc.CNOT(a, b)
        if kind == "SWAP":
            return cc.SWAP(a, b)
        return cc.raw(random_unitary(4, rng), a, b)
    q = int(rng.integers(n)) + 1
    if kind == "Rm":
        return cc.Rm(int(rng.integers(1, 5)), q)
    return getattr(cc, kind)(q)


def random_circuit(n: int, length: int, rng: np.random.Generator) -> cc.Circuit:
    return cc.Circuit(n, tuple(random_gate(n, rng) for _ in range(length)))


def pair_domain(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(1, n)]


def low_rank_state(n: int, rng: np.random.Generator, terms: int | None = None) -> np.ndarray:
    """Superposition of a few random product states; its pair marginals are rank deficient."""
    terms = terms or int(rng.integers(1, 4))
    v = sum(rng.standard_normal() * kron(*[random_qubit(rng) for _ in range(n)]) for _ in range(terms))
    return v / np.linalg.norm(v)


def marginal_support_predicate(
    psi: np.ndarray, n: int, domain, tol=None
) -> ProjectivePredicate:
    """Supports of the marginals of ``psi``; ``psi`` itself satisfies the result."""
    return ProjectivePredicate.of(
        (s, support(reduced_density_state(psi, n, s))) for s in domain
    )


def random_pair_predicate(n: int, rng: np.random.Generator) -> ProjectivePredicate:
    return marginal_support_predicate(low_rank_state(n, rng), n, pair_domain(n))


def random_effect(k: int, rng: np.random.Generator, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Random Hermitian operator on ``k`` qubits with spectrum in ``[lo, hi]``."""
    u = random_unitary(1 << k, rng)
    return u @ np.diag(rng.uniform(lo, hi, 1 << k)) @ dagger(u)


def random_observables(domain, rng: np.random.Generator, lo=0.0, hi=1.0) -> ObservablePredicate:
    return ObservablePredicate.of((s, random_effect(len(s), rng, lo, hi)) for s in domain)


def tight_pre(B: ObservablePredicate, g: cc.Gate, rng: np.random.Generator, P=None):
    """An ``A`` with the same domain as ``B`` passing every blockwise check against ``g``.

    Entries containing the gate get ``c U^dag B_i U``; disjoint entries get
    ``c B_i``; straddling entries get the scalar ``c lambda_min(B_i)``. When ``P``
    is given, a multiple of ``I - P_i`` is mixed in; sandwiching by ``P``
    removes it.
    """
    entries = []
    u = cc.gate_unitary(g)
    for i, (s, b) in enumerate(B):
        c = 1.0 if rng.random() < 1 / 3 else rng.uniform(0.3, 1.0)
        if set(g.targets) <= set(s):
            ul = embed_local(u, g.targets, s)
            a = c * dagger(ul) @ b @ ul
        elif set(g.targets).isdisjoint(s):
            a = c * b
        else:
            a = c * np.linalg.eigvalsh(b)[0] * np.eye(1 << len(s))
        if P is not None:
            a = a + (1 - c) * (np.eye(1 << len(s)) - P.operators[i])
        entries.append((s, (a + dagger(a)) / 2))
    return ObservablePredicate.of(entries)


def random_partition(m: int, rng: np.random.Generator):
    from saqr.judge import Partition

    labels = rng.integers(0, max(1, m // 2 + 1), m)
    blocks = [tuple(int(i) for i in np.flatnonzero(labels == lab)) for lab in np.unique(labels)]
    return Partition(tuple(blocks))
