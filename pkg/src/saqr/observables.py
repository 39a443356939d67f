"""Local observable predicates: tuples of effects ``0 <= A_s <= I``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import DEFAULT_CAP, SizeCapError
from .linalg import (
    DEFAULT_TOL,
    Matrix,
    NonHermitianError,
    Tolerance,
    dagger,
    embed,
    hermitian_defect,
    loewner_leq,
    min_eigenvalue,
)
from .predicate import LocalTuple
from .qai import ProjectivePredicate


class NotEffectError(ValueError):
    """Observable outside ``0 <= A <= I``."""


@dataclass(frozen=True, eq=False)
class ObservablePredicate(LocalTuple):
    json_key = "observables"

    def _validate(self, tol: Tolerance) -> None:
        for s, a in self.entries:
            if hermitian_defect(a) > tol.atol:
                raise NonHermitianError(f"observable on {s} is not Hermitian")
            lo = min_eigenvalue(a, tol)
            hi = -min_eigenvalue(-a, tol)
            if lo < -tol.atol or hi > 1 + tol.atol:
                raise NotEffectError(
                    f"observable on {s} has spectrum [{lo:.3g}, {hi:.3g}] outside [0, 1]"
                )

    @classmethod
    def zero(cls, domain):
        return cls.of((s, np.zeros((1 << len(tuple(s)),) * 2)) for s in domain)

    def scaled(self, c: float) -> "ObservablePredicate":
        return ObservablePredicate(tuple((s, c * a) for s, a in self.entries))


def matrix_rep(pred: LocalTuple, n: int, cap: int = DEFAULT_CAP) -> Matrix:
    """``sum_i A_i (x) I`` on the full register."""
    if n > cap:
        raise SizeCapError(f"matrix representation on {n} qubits exceeds the size cap {cap}")
    out = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    for s, a in pred:
        out += embed(a, s, n)
    return out


def pred_leq(a: ObservablePredicate, b: ObservablePredicate, tol: Tolerance = DEFAULT_TOL) -> bool:
    a.require_domain(b)
    return all(loewner_leq(x, y, tol) for x, y in zip(a.operators, b.operators))


def projective_leq(
    p: ProjectivePredicate, q: ProjectivePredicate, tol: Tolerance = DEFAULT_TOL
) -> bool:
    """Entrywise subspace containment ``P_i <= Q_i``."""
    p.require_domain(q)
    return all(loewner_leq(x, y, tol) for x, y in zip(p.operators, q.operators))


def sandwich(a: ObservablePredicate, p: ProjectivePredicate) -> ObservablePredicate:
    """Entrywise ``P_i A_i P_i``."""
    a.require_domain(p)
    return ObservablePredicate(
        tuple((s, pi @ ai @ pi) for (s, ai), pi in zip(a.entries, p.operators))
    )


def as_observables(p: ProjectivePredicate) -> ObservablePredicate:
    return ObservablePredicate(p.entries)


def conjugated(a: Matrix, u: Matrix) -> Matrix:
    return u @ a @ dagger(u)
