"""Circuit IR, gate library, JSON wire format and exact unitary semantics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    Matrix,
    QubitIndexError,
    QubitSet,
    Tolerance,
    as_matrix,
    dagger,
    embed,
    num_qubits,
    qubit_set,
)

MAX_ARITY = 4
DEFAULT_CAP = 12

_SQ2 = 1 / np.sqrt(2)

FIXED_GATES: dict[str, Matrix] = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    ),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
    ),
}
KINDS = tuple(FIXED_GATES) + ("Rm", "ControlledPower", "Raw")


class CircuitError(ValueError):
    pass


class CircuitParseError(CircuitError):
    pass


class SizeCapError(CircuitError):
    """Full-register materialization requested above the size cap."""


def rm_matrix(m: int) -> Matrix:
    """Phase gate ``diag(1, exp(2 pi i / 2**m))``."""
    if m < 1:
        raise CircuitError(f"R_m needs m >= 1, got {m}")
    return np.array([[1, 0], [0, np.exp(2j * np.pi / 2**m)]], dtype=np.complex128)


def unitarity_defect(u: Matrix) -> float:
    return float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))))


@dataclass(frozen=True, eq=False)
class Gate:
    """A gate with its ordered target list.

    For ``CNOT`` and ``ControlledPower`` the control is ``targets[0]``.
    ``matrix`` holds the raw unitary (``Raw``) or the base unitary
    (``ControlledPower``).
    """

    kind: str
    targets: QubitSet
    m: int | None = None
    exponent: int | None = None
    matrix: Matrix | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", qubit_set(self.targets, ordered=False))
        if self.kind == "Rm" and (self.m is None or int(self.m) < 1):
            raise CircuitError("Rm gate needs an integer m >= 1")
        if self.kind == "ControlledPower":
            if self.exponent is None or int(self.exponent) < 0:
                raise CircuitError("ControlledPower needs a nonnegative exponent")
        if self.kind in ("Raw", "ControlledPower"):
            if self.matrix is None:
                raise CircuitError(f"{self.kind} gate needs a matrix")
            mat = as_matrix(self.matrix)
            mat.setflags(write=False)
            object.__setattr__(self, "matrix", mat)
            num_qubits(mat)
            if unitarity_defect(mat) > DEFAULT_TOL.atol:
                raise CircuitError(f"{self.kind} matrix is not unitary")
        if len(self.targets) != self.arity:
            raise CircuitError(
                f"{self.kind} acts on {self.arity} qubit(s) but got targets {self.targets}"
            )
        if self.arity > MAX_ARITY:
            raise CircuitError(f"gate arity {self.arity} exceeds the bound {MAX_ARITY}")

    @property
    def arity(self) -> int:
        if self.kind in ("CNOT", "SWAP"):
            return 2
        if self.kind == "Raw":
            return num_qubits(self.matrix)
        if self.kind == "ControlledPower":
            return 1 + num_qubits(self.matrix)
        return 1

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.targets)

    def unitary(self) -> Matrix:
        return gate_unitary(self)

    def inverse(self) -> "Gate":
        if self.kind in ("H", "X", "Y", "Z", "CNOT", "SWAP"):
            return self
        if self.kind == "ControlledPower":
            base = np.linalg.matrix_power(self.matrix, int(self.exponent))
            return Gate("ControlledPower", self.targets, exponent=1, matrix=dagger(base))
        return Gate("Raw", self.targets, matrix=dagger(gate_unitary(self)))

    def label(self) -> str:
        extra = ""
        if self.kind == "Rm":
            extra = f"[m={self.m}]"
        elif self.kind == "ControlledPower":
            extra = f"[^{self.exponent}]"
        return f"{self.kind}{extra}{list(self.targets)}"

    def __repr__(self) -> str:
        return f"Gate({self.label()})"


def gate_unitary(g: Gate) -> Matrix:
    if g.kind in FIXED_GATES:
        return FIXED_GATES[g.kind].copy()
    if g.kind == "Rm":
        return rm_matrix(int(g.m))
    if g.kind == "Raw":
        return np.array(g.matrix)
    base = np.linalg.matrix_power(np.array(g.matrix), int(g.exponent))
    d = base.shape[0]
    out = np.eye(2 * d, dtype=np.complex128)
    out[d:, d:] = base
    return out


# Convenience constructors.
def H(q: int) -> Gate:
    return Gate("H", (q,))


def X(q: int) -> Gate:
    return Gate("X", (q,))


def Z(q: int) -> Gate:
    return Gate("Z", (q,))


def T(q: int) -> Gate:
    return Gate("T", (q,))


def Rm(m: int, q: int) -> Gate:
    return Gate("Rm", (q,), m=m)


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def SWAP(a: int, b: int) -> Gate:
    return Gate("SWAP", (a, b))


def raw(u, *targets: int) -> Gate:
    return Gate("Raw", targets, matrix=u)


def controlled_power(u, exponent: int, control: int, *targets: int) -> Gate:
    return Gate("ControlledPower", (control,) + targets, exponent=exponent, matrix=u)


def controlled_rm(m: int, control: int, target: int) -> Gate:
    return controlled_power(rm_matrix(m), 1, control, target)


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if int(self.n) < 1:
            raise CircuitError("register size must be >= 1")
        object.__setattr__(self, "gates", tuple(self.gates))
        for i, g in enumerate(self.gates):
            if max(g.targets) > self.n:
                raise QubitIndexError(
                    f"gate {i} ({g.label()}) targets qubit {max(g.targets)} outside [1..{self.n}]"
                )

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def then(self, other: "Circuit") -> "Circuit":
        if other.n != self.n:
            raise CircuitError("sequencing circuits on different registers")
        return Circuit(self.n, self.gates + other.gates)

    def slice(self, start: int, stop: int | None = None) -> "Circuit":
        return Circuit(self.n, self.gates[start:stop])


def skip(n: int) -> Circuit:
    return Circuit(n, ())


def circuit_unitary(c: Circuit, cap: int = DEFAULT_CAP) -> Matrix:
    if c.n > cap:
        raise SizeCapError(f"{c.n}-qubit unitary exceeds the size cap {cap}")
    u = np.eye(1 << c.n, dtype=np.complex128)
    for g in c.gates:
        u = embed(gate_unitary(g), g.targets, c.n) @ u
    return u


# ---------------------------------------------------------------- JSON format


def complex_to_json(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def matrix_to_json(m: Matrix) -> list:
    return [[complex_to_json(z) for z in row] for row in np.asarray(m)]


def matrix_from_json(data: Any, where: str = "matrix") -> Matrix:
    try:
        arr = np.array(
            [[complex(float(re), float(im)) for re, im in row] for row in data],
            dtype=np.complex128,
        )
    except (TypeError, ValueError) as exc:
        raise CircuitParseError(f"{where}: expected rows of [re, im] pairs ({exc})") from None
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise CircuitParseError(f"{where}: expected a square matrix, got shape {arr.shape}")
    return arr


def gate_to_json(g: Gate) -> dict:
    out: dict[str, Any] = {"kind": g.kind, "targets": list(g.targets)}
    if g.kind == "Rm":
        out["m"] = int(g.m)
    if g.kind == "ControlledPower":
        out["exponent"] = int(g.exponent)
    if g.matrix is not None:
        out["matrix"] = matrix_to_json(g.matrix)
    return out


def circuit_to_dict(c: Circuit) -> dict:
    return {"n": c.n, "gates": [gate_to_json(g) for g in c.gates]}


def serialize_circuit(c: Circuit) -> str:
    return json.dumps(circuit_to_dict(c))


def _int_field(obj: dict, key: str, where: str, required: bool = True) -> int | None:
    if key not in obj:
        if required:
            raise CircuitParseError(f"{where}: missing field {key!r}")
        return None
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise CircuitParseError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def gate_from_json(obj: Any, where: str = "gate") -> Gate:
    if not isinstance(obj, dict):
        raise CircuitParseError(f"{where}: expected an object")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise CircuitParseError(f"{where}.kind: unknown gate kind {kind!r}")
    targets = obj.get("targets")
    if not isinstance(targets, list) or not all(
        isinstance(t, int) and not isinstance(t, bool) for t in targets
    ):
        raise CircuitParseError(f"{where}.targets: expected a list of integers")
    kwargs: dict[str, Any] = {}
    if kind == "Rm":
        kwargs["m"] = _int_field(obj, "m", where)
    if kind == "ControlledPower":
        kwargs["exponent"] = _int_field(obj, "exponent", where)
    if kind in ("Raw", "ControlledPower"):
        if "matrix" not in obj:
            raise CircuitParseError(f"{where}: missing field 'matrix'")
        kwargs["matrix"] = matrix_from_json(obj["matrix"], f"{where}.matrix")
    try:
        return Gate(kind, tuple(targets), **kwargs)
    except (CircuitError, QubitIndexError, ValueError) as exc:
        raise CircuitParseError(f"{where}: {exc}") from None


def circuit_from_dict(obj: Any) -> Circuit:
    if not isinstance(obj, dict):
        raise CircuitParseError("circuit: expected a JSON object")
    n = _int_field(obj, "n", "circuit")
    gates = obj.get("gates")
    if not isinstance(gates, list):
        raise CircuitParseError("circuit.gates: expected a list")
    parsed = [gate_from_json(g, f"gates[{i}]") for i, g in enumerate(gates)]
    try:
        return Circuit(n, tuple(parsed))
    except (CircuitError, QubitIndexError) as exc:
        raise CircuitParseError(str(exc)) from None


def parse_circuit(text: str) -> Circuit:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(
            f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return circuit_from_dict(obj)


def gate_list(gates: Iterable[Gate]) -> list[str]:
    return [g.label() for g in gates]
