"""Dense complex linear algebra on qubit registers.

Qubits are numbered from 1 and qubit 1 is the leftmost (most significant)
tensor factor, so ``|j1 j2 ... jn>`` has index ``j1 * 2**(n-1) + ... + jn``.
Matrices are plain ``numpy`` arrays of dtype ``complex128``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

Matrix = np.ndarray
QubitSet = tuple[int, ...]


class DimensionError(ValueError):
    """Matrix shape does not match the operation."""


class NonHermitianError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


class NotProjectorError(ValueError):
    pass


class QubitIndexError(ValueError):
    """Qubit index outside the register or a malformed qubit set."""


@dataclass(frozen=True)
class Tolerance:
    """Numerical tolerances.

    ``atol`` bounds entrywise and eigenvalue errors; ``rank_rel`` is the
    relative eigenvalue cutoff used when computing supports.
    """

    atol: float = 1e-9
    rank_rel: float = 1e-8

    def __post_init__(self) -> None:
        if not (self.atol > 0 and self.rank_rel > 0):
            raise ValueError("tolerances must be positive")


DEFAULT_TOL = Tolerance()


def as_matrix(a) -> Matrix:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"expected a nonempty square matrix, got shape {m.shape}")
    return m


def num_qubits(m: Matrix) -> int:
    d = m.shape[0]
    q = d.bit_length() - 1
    if 1 << q != d:
        raise DimensionError(f"dimension {d} is not a power of 2")
    return q


def qubit_set(indices: Iterable[int], n: int | None = None, *, ordered: bool = True) -> QubitSet:
    """Validate a qubit set.

    With ``ordered=True`` the indices must be strictly increasing (domain
    sets); otherwise they only need to be distinct (gate target lists).
    """
    s = tuple(int(i) for i in indices)
    if not s:
        raise QubitIndexError("qubit set must be nonempty")
    if len(set(s)) != len(s):
        raise QubitIndexError(f"repeated qubit in {s}")
    if ordered and any(a >= b for a, b in zip(s, s[1:])):
        raise QubitIndexError(f"qubit set {s} is not strictly increasing")
    if min(s) < 1:
        raise QubitIndexError(f"qubit indices are 1-based, got {s}")
    if n is not None and max(s) > n:
        raise QubitIndexError(f"qubit {max(s)} out of range for a {n}-qubit register")
    return s


def dagger(m: Matrix) -> Matrix:
    return m.conj().T


def ket(bits: str | Sequence[int]) -> np.ndarray:
    """Computational basis vector for a bit string such as ``"010"``."""
    bits = [int(b) for b in bits]
    v = np.zeros(1 << len(bits), dtype=np.complex128)
    v[int("".join(map(str, bits)) or "0", 2)] = 1.0
    return v


def outer(u: np.ndarray, v: np.ndarray | None = None) -> Matrix:
    u = np.asarray(u, dtype=np.complex128)
    v = u if v is None else np.asarray(v, dtype=np.complex128)
    return np.outer(u, v.conj())


def kron(*ms) -> Matrix:
    """Kronecker product; vectors in give a vector out."""
    ms = [np.asarray(m) for m in ms]
    unit = (1,) if ms and all(m.ndim == 1 for m in ms) else (1, 1)
    return reduce(np.kron, ms, np.ones(unit, dtype=np.complex128))


def hermitian_defect(m: Matrix) -> float:
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def is_hermitian(m: Matrix, tol: Tolerance = DEFAULT_TOL) -> bool:
    return hermitian_defect(as_matrix(m)) <= tol.atol


def _symmetrized(m: Matrix, tol: Tolerance) -> Matrix:
    m = as_matrix(m)
    defect = hermitian_defect(m)
    if defect > tol.atol:
        raise NonHermitianError(f"matrix is not Hermitian (max|M - M^dag| = {defect:.3g})")
    return (m + dagger(m)) / 2


def min_eigenvalue(m: Matrix, tol: Tolerance = DEFAULT_TOL) -> float:
    """Smallest eigenvalue of the Hermitian part of ``m``."""
    return float(np.linalg.eigvalsh(_symmetrized(m, tol))[0])


def is_psd(m: Matrix, tol: Tolerance = DEFAULT_TOL) -> bool:
    return min_eigenvalue(m, tol) >= -tol.atol


def _check_same_dim(a: Matrix, b: Matrix) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def loewner_residual(a: Matrix, b: Matrix, tol: Tolerance = DEFAULT_TOL) -> float:
    """Most negative eigenvalue of ``b - a`` (nonnegative iff ``a <= b``)."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same_dim(a, b)
    return min_eigenvalue(b - a, tol)


def loewner_leq(a: Matrix, b: Matrix, tol: Tolerance = DEFAULT_TOL) -> bool:
    return loewner_residual(a, b, tol) >= -tol.atol


def trace(m: Matrix) -> complex:
    return complex(np.trace(as_matrix(m)))


def partial_trace(m: Matrix, n: int, trace_out: Iterable[int]) -> Matrix:
    """Trace out the given 1-based qubits of an ``n``-qubit operator."""
    m = as_matrix(m)
    if m.shape[0] != 1 << n:
        raise DimensionError(f"matrix of dim {m.shape[0]} is not a {n}-qubit operator")
    out = sorted(set(int(q) for q in trace_out))
    if not out:
        return m.copy()
    qubit_set(out, n)
    keep = [q for q in range(1, n + 1) if q not in out]
    t = m.reshape((2,) * (2 * n))
    rows = [q - 1 for q in keep] + [q - 1 for q in out]
    t = t.transpose(rows + [n + r for r in rows])
    dk, dt = 1 << len(keep), 1 << len(out)
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def embed(a: Matrix, s: Sequence[int], n: int) -> Matrix:
    """Return ``a`` acting on qubits ``s`` (in that order) tensored with identity.

    ``s`` may be in any order; the k-th tensor factor of ``a`` lands on
    qubit ``s[k]``.
    """
    a = as_matrix(a)
    s = qubit_set(s, n, ordered=False)
    k = len(s)
    if a.shape[0] != 1 << k:
        raise DimensionError(f"operator of dim {a.shape[0]} cannot act on {k} qubit(s)")
    full = np.kron(a, np.eye(1 << (n - k), dtype=np.complex128))
    rest = [q for q in range(1, n + 1) if q not in s]
    # axis i of ``full`` (rows) currently holds qubit order[i]
    order = list(s) + rest
    perm = [order.index(q) for q in range(1, n + 1)]
    t = full.reshape((2,) * (2 * n)).transpose(perm + [n + p for p in perm])
    return t.reshape(1 << n, 1 << n)


def embed_local(a: Matrix, targets: Sequence[int], register: Sequence[int]) -> Matrix:
    """Embed ``a`` on ``targets`` into the sub-register ``register`` (global labels)."""
    pos = {q: i + 1 for i, q in enumerate(register)}
    try:
        local = [pos[q] for q in targets]
    except KeyError as exc:
        raise QubitIndexError(f"qubit {exc.args[0]} not in register {tuple(register)}") from None
    return embed(a, local, len(register))


def is_projector(p: Matrix, tol: Tolerance = DEFAULT_TOL) -> bool:
    p = as_matrix(p)
    return hermitian_defect(p) <= tol.atol and float(np.max(np.abs(p @ p - p))) <= tol.atol


def _require_projector(p: Matrix, tol: Tolerance) -> Matrix:
    p = as_matrix(p)
    if not is_projector(p, tol):
        raise NotProjectorError("matrix is not an orthogonal projector")
    return p


def support_basis(a: Matrix, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """Orthonormal basis (as columns) of ``supp(a)`` and the eigenvalue gap.

    The gap is the ratio ``smallest kept / largest dropped`` eigenvalue
    (``inf`` when nothing is dropped or nothing is kept) and is reported so
    borderline rank decisions can be audited.
    """
    h = _symmetrized(a, tol)
    w, v = np.linalg.eigh(h)
    if w[0] < -tol.atol:
        raise NotPSDError(f"support of a non-PSD matrix (min eigenvalue {w[0]:.3g})")
    cutoff = tol.rank_rel * max(1.0, float(w[-1]))
    keep = w > cutoff
    kept, dropped = w[keep], w[~keep]
    worst_dropped = float(abs(dropped).max()) if dropped.size else 0.0
    if kept.size and worst_dropped > 0:
        gap = float(kept.min() / worst_dropped)
    else:
        gap = float("inf")
    return v[:, keep], gap


def support(a: Matrix, tol: Tolerance = DEFAULT_TOL) -> Matrix:
    basis, _ = support_basis(a, tol)
    return basis @ dagger(basis)


def intersect(p: Matrix, q: Matrix, tol: Tolerance = DEFAULT_TOL) -> Matrix:
    """Projector onto the intersection of the ranges of two projectors."""
    p, q = _require_projector(p, tol), _require_projector(q, tol)
    _check_same_dim(p, q)
    w, v = np.linalg.eigh((p + q + dagger(p + q)) / 2)
    basis = v[:, w >= 2.0 - tol.atol]
    return basis @ dagger(basis)


def intersect_all(projectors: Iterable[Matrix], tol: Tolerance = DEFAULT_TOL) -> Matrix:
    ps = list(projectors)
    if not ps:
        raise ValueError("intersection of an empty family")
    return reduce(lambda x, y: intersect(x, y, tol), ps[1:], _require_projector(ps[0], tol))


def rank(p: Matrix, tol: Tolerance = DEFAULT_TOL) -> int:
    return support_basis(p, tol)[0].shape[1]
