"""Exact desk-scale semantics used as ground truth for the logic.

Everything here materializes the full ``2**n`` register and is bounded by a
size cap (default 12, overridable with the ``SAQR_CAP`` environment variable).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import DEFAULT_CAP, Circuit, SizeCapError, gate_unitary
from .linalg import (
    DEFAULT_TOL,
    DimensionError,
    Matrix,
    Tolerance,
    as_matrix,
    dagger,
    hermitian_defect,
    min_eigenvalue,
    partial_trace,
    qubit_set,
    support_basis,
)
from .predicate import LocalTuple
from .qai import ProjectivePredicate, concretize


class EmptyConcretizationError(ValueError):
    pass


def default_cap() -> int:
    return int(os.environ.get("SAQR_CAP", DEFAULT_CAP))


def _check_cap(n: int, cap: int | None) -> None:
    cap = default_cap() if cap is None else cap
    if n > cap:
        raise SizeCapError(f"{n} qubits exceeds the oracle size cap {cap}")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    n: int
    rho: Matrix

    def __post_init__(self) -> None:
        rho = np.array(as_matrix(self.rho))
        if rho.shape[0] != 1 << self.n:
            raise DimensionError(f"density of dim {rho.shape[0]} is not {self.n}-qubit")
        tol = DEFAULT_TOL
        if hermitian_defect(rho) > tol.atol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > tol.atol:
            raise ValueError(f"density matrix has trace {np.trace(rho).real:.6g}")
        if self.n <= 10 and min_eigenvalue(rho) < -tol.atol:
            raise ValueError("density matrix is not PSD")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        n = psi.size.bit_length() - 1
        return cls(n, np.outer(psi, psi.conj()))


def initial_state(n: int, cap: int | None = None) -> DensityMatrix:
    _check_cap(n, cap)
    rho = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    rho[0, 0] = 1
    return DensityMatrix(n, rho)


def _apply_to_axes(t: np.ndarray, u: Matrix, axes: Sequence[int]) -> np.ndarray:
    """Contract ``u`` into tensor ``t`` on the given qubit axes."""
    k = len(axes)
    ut = u.reshape((2,) * (2 * k))
    out = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), list(axes)))
    # tensordot puts the new axes first; move them back in place
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_gate_state(psi: np.ndarray, u: Matrix, targets: Sequence[int], n: int) -> np.ndarray:
    t = psi.reshape((2,) * n)
    return _apply_to_axes(t, u, [q - 1 for q in targets]).reshape(-1)


def simulate_state(c: Circuit, psi, cap: int | None = None) -> np.ndarray:
    """Pure-state semantics ``U_C |psi>`` applied gate by gate."""
    _check_cap(c.n, cap)
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    if psi.size != 1 << c.n:
        raise DimensionError(f"state of dim {psi.size} does not fit {c.n} qubits")
    for g in c.gates:
        psi = apply_gate_state(psi, gate_unitary(g), g.targets, c.n)
    return psi


def simulate(c: Circuit, rho: DensityMatrix, cap: int | None = None) -> DensityMatrix:
    """``U_C rho U_C^dag`` applied gate by gate without forming ``U_C``."""
    _check_cap(c.n, cap)
    if rho.n != c.n:
        raise DimensionError(f"circuit on {c.n} qubits applied to a {rho.n}-qubit state")
    n = c.n
    t = np.array(rho.rho).reshape((2,) * (2 * n))
    for g in c.gates:
        u = gate_unitary(g)
        rows = [q - 1 for q in g.targets]
        t = _apply_to_axes(t, u, rows)
        t = _apply_to_axes(t, u.conj(), [n + r for r in rows])
    out = t.reshape(1 << n, 1 << n)
    return DensityMatrix(n, (out + dagger(out)) / 2)


def reduced_density(rho: DensityMatrix, s: Sequence[int]) -> Matrix:
    s = qubit_set(s, rho.n)
    return partial_trace(rho.rho, rho.n, [q for q in range(1, rho.n + 1) if q not in s])


def reduced_density_state(psi: np.ndarray, n: int, s: Sequence[int]) -> Matrix:
    """Marginal of a pure state on ``s`` without forming the global density."""
    s = qubit_set(s, n)
    rest = [q - 1 for q in range(1, n + 1) if q not in s]
    t = np.asarray(psi).reshape((2,) * n).transpose([q - 1 for q in s] + rest)
    m = t.reshape(1 << len(s), -1)
    return m @ dagger(m)


def _marginals(state, n: int, domain) -> list[Matrix]:
    if isinstance(state, DensityMatrix):
        return [reduced_density(state, s) for s in domain]
    return [reduced_density_state(state, n, s) for s in domain]


def expectation(pred: LocalTuple, rho) -> float:
    """``tr(M_A rho)`` as a sum of local traces over marginals.

    ``rho`` is a :class:`DensityMatrix` or a normalized state vector.
    """
    n = rho.n if isinstance(rho, DensityMatrix) else int(np.asarray(rho).size).bit_length() - 1
    if pred.qubits and max(pred.qubits) > n:
        raise DimensionError("predicate domain exceeds the register")
    margs = _marginals(rho, n, pred.domain)
    return float(sum(np.trace(a @ r).real for a, r in zip(pred.operators, margs)))


def expectation_full(pred: LocalTuple, rho: DensityMatrix, cap: int | None = None) -> float:
    """Same quantity through the full matrix representation (cross-check path)."""
    from .observables import matrix_rep

    _check_cap(rho.n, cap)
    return float(np.trace(matrix_rep(pred, rho.n, cap=rho.n) @ rho.rho).real)


def projective_violation(state, pred: ProjectivePredicate) -> float:
    """``max_i max|P_i rho_i - rho_i|``; zero when the state satisfies ``pred``."""
    n = state.n if isinstance(state, DensityMatrix) else int(np.asarray(state).size).bit_length() - 1
    margs = _marginals(state, n, pred.domain)
    return max(
        (float(np.max(np.abs(p @ r - r))) for p, r in zip(pred.operators, margs)), default=0.0
    )


def satisfies_projective(state, pred: ProjectivePredicate, tol: Tolerance = DEFAULT_TOL) -> bool:
    return projective_violation(state, pred) <= tol.atol


def sample_kets_in(
    pred: ProjectivePredicate,
    n: int,
    count: int,
    seed: int | np.random.Generator,
    cap: int | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> list[np.ndarray]:
    """Haar-random pure states inside ``gamma(pred)`` (Gaussian in a basis, normalized)."""
    _check_cap(n, cap)
    gamma = concretize(pred, n, cap=n, tol=tol)
    basis, _ = support_basis(gamma, tol)
    r = basis.shape[1]
    if r == 0:
        raise EmptyConcretizationError("the predicate has an empty concretization")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = rng.standard_normal(r) + 1j * rng.standard_normal(r)
        v = basis @ c
        out.append(v / np.linalg.norm(v))
    return out


def sample_state_in(
    pred: ProjectivePredicate, n: int, seed: int, cap: int | None = None, tol: Tolerance = DEFAULT_TOL
) -> DensityMatrix:
    return DensityMatrix.pure(sample_kets_in(pred, n, 1, seed, cap, tol)[0])


def random_ket(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return v / np.linalg.norm(v)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    d = 1 << n
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ dagger(g)
    return DensityMatrix(n, rho / np.trace(rho).real)
