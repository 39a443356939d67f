"""Shared machinery for tuples of local operators ``(s_1: A_1, ..., s_m: A_m)``."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, ClassVar, Iterable, Iterator, Sequence

import numpy as np

from .circuit import CircuitParseError, matrix_from_json, matrix_to_json
from .linalg import (
    DEFAULT_TOL,
    DimensionError,
    Matrix,
    QubitSet,
    Tolerance,
    as_matrix,
    qubit_set,
)


class DomainMismatchError(ValueError):
    pass


class PredicateParseError(CircuitParseError):
    pass


@dataclass(frozen=True, eq=False)
class LocalTuple:
    """Ordered entries ``(qubit set, local operator)``; immutable."""

    entries: tuple[tuple[QubitSet, Matrix], ...]

    json_key: ClassVar[str] = "operators"

    def __post_init__(self) -> None:
        fixed = []
        for s, a in self.entries:
            s = qubit_set(s)
            a = np.array(as_matrix(a))
            if a.shape[0] != 1 << len(s):
                raise DimensionError(
                    f"operator of dim {a.shape[0]} does not fit domain {s}"
                )
            a.setflags(write=False)
            fixed.append((s, a))
        object.__setattr__(self, "entries", tuple(fixed))
        self._validate(DEFAULT_TOL)

    def _validate(self, tol: Tolerance) -> None:
        pass

    @classmethod
    def of(cls, pairs: Iterable[tuple[Sequence[int], Any]]):
        return cls(tuple((tuple(s), a) for s, a in pairs))

    @classmethod
    def identity(cls, domain: Iterable[Sequence[int]]):
        return cls.of((s, np.eye(1 << len(tuple(s)))) for s in domain)

    @property
    def domain(self) -> tuple[QubitSet, ...]:
        return tuple(s for s, _ in self.entries)

    @property
    def operators(self) -> tuple[Matrix, ...]:
        return tuple(a for _, a in self.entries)

    @property
    def qubits(self) -> frozenset[int]:
        return frozenset(q for s in self.domain for q in s)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[QubitSet, Matrix]]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> tuple[QubitSet, Matrix]:
        return self.entries[i]

    def replace(self, i: int, op: Matrix):
        entries = list(self.entries)
        entries[i] = (entries[i][0], op)
        return type(self)(tuple(entries))

    def require_domain(self, other: "LocalTuple") -> None:
        if self.domain != other.domain:
            raise DomainMismatchError(f"domains differ: {self.domain} vs {other.domain}")

    def max_diff(self, other: "LocalTuple") -> float:
        self.require_domain(other)
        return max(
            (float(np.max(np.abs(a - b))) for a, b in zip(self.operators, other.operators)),
            default=0.0,
        )

    def close_to(self, other: "LocalTuple", tol: Tolerance = DEFAULT_TOL) -> bool:
        if self.domain != other.domain:
            return False
        return self.max_diff(other) <= tol.atol

    def to_dict(self) -> dict:
        return {
            "domain": [list(s) for s in self.domain],
            self.json_key: [matrix_to_json(a) for a in self.operators],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: Any):
        if not isinstance(obj, dict):
            raise PredicateParseError("predicate: expected a JSON object")
        dom, ops = obj.get("domain"), obj.get(cls.json_key)
        if not isinstance(dom, list) or not isinstance(ops, list):
            raise PredicateParseError(
                f"predicate: expected list fields 'domain' and {cls.json_key!r}"
            )
        if len(dom) != len(ops):
            raise PredicateParseError("predicate: 'domain' and operator lists differ in length")
        entries = []
        for i, (s, a) in enumerate(zip(dom, ops)):
            if not isinstance(s, list) or not all(
                isinstance(q, int) and not isinstance(q, bool) for q in s
            ):
                raise PredicateParseError(f"domain[{i}]: expected a list of integers")
            entries.append((tuple(s), matrix_from_json(a, f"{cls.json_key}[{i}]")))
        try:
            return cls(tuple(entries))
        except ValueError as exc:
            raise PredicateParseError(f"predicate: {exc}") from None

    @classmethod
    def from_json(cls, text: str):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PredicateParseError(
                f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None
        return cls.from_dict(obj)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(domain={list(map(list, self.domain))})"
