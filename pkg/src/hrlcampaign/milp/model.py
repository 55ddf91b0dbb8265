"""Immutable linear model container plus an incremental builder."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")

SENSES = ("<=", ">=", "=")


class ModelError(ValueError):
    """Raised for malformed models (bad bounds, unknown variables, bad names)."""


class Status(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE_WITH_GAP = "feasible-with-gap"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time-limit"

    def __str__(self) -> str:
        return self.value

    @property
    def has_primal(self) -> bool:
        return self in (Status.OPTIMAL, Status.FEASIBLE_WITH_GAP)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MilpModel:
    """Minimization model ``min c.x + c0`` over sparse rows.

    Rows are stored CSR-style (``row_ptr``, ``col_idx``, ``coef``).  All arrays
    are read-only; use :class:`ModelBuilder` to create instances.
    """

    names: tuple[str, ...]
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    c: np.ndarray
    row_ptr: np.ndarray
    col_idx: np.ndarray
    coef: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    row_names: tuple[str, ...]
    obj_constant: float = 0.0
    name: str = "model"
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        n = len(self.names)
        if not (len(self.lb) == len(self.ub) == len(self.integer) == len(self.c) == n):
            raise ModelError("variable arrays disagree in length")
        if np.any(self.lb > self.ub):
            bad = self.names[int(np.argmax(self.lb > self.ub))]
            raise ModelError(f"variable {bad!r} has lower bound above upper bound")
        if len(self.col_idx) and (self.col_idx.min() < 0 or self.col_idx.max() >= n):
            raise ModelError("constraint references a nonexistent variable")
        if len(self.row_ptr) != len(self.senses) + 1 or len(self.rhs) != len(self.senses):
            raise ModelError("row arrays disagree in length")
        for s in self.senses:
            if s not in SENSES:
                raise ModelError(f"unknown constraint sense {s!r}")
        if not self._index:
            self._index.update({nm: i for i, nm in enumerate(self.names)})
            if len(self._index) != n:
                raise ModelError("duplicate variable names")

    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return len(self.senses)

    @property
    def num_integer(self) -> int:
        return int(self.integer.sum())

    def index(self, name: str) -> int:
        return self._index[name]

    def row(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.row_ptr[k], self.row_ptr[k + 1]
        return self.col_idx[a:b], self.coef[a:b]

    def dense(self) -> np.ndarray:
        A = np.zeros((self.num_rows, self.num_vars))
        for k in range(self.num_rows):
            cols, vals = self.row(k)
            np.add.at(A[k], cols, vals)
        return A

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.obj_constant)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest absolute bound or row violation of ``x``."""
        x = np.asarray(x, dtype=float)
        viol = max(0.0, float(np.max(self.lb - x, initial=0.0)), float(np.max(x - self.ub, initial=0.0)))
        A = self.dense()
        act = A @ x if self.num_rows else np.zeros(0)
        for k, s in enumerate(self.senses):
            r = act[k] - self.rhs[k]
            if s == "<=":
                viol = max(viol, r)
            elif s == ">=":
                viol = max(viol, -r)
            else:
                viol = max(viol, abs(r))
        return viol

    def relaxed(self) -> "MilpModel":
        """Copy with every integrality flag cleared."""
        return MilpModel(
            self.names, self.lb, self.ub, _frozen(np.zeros(self.num_vars, dtype=bool)), self.c,
            self.row_ptr, self.col_idx, self.coef, self.senses, self.rhs, self.row_names,
            self.obj_constant, self.name,
        )


class ModelBuilder:
    """Accumulates variables and rows, then freezes them into a :class:`MilpModel`."""

    def __init__(self, name: str = "model", check_names: bool = True):
        self.name = name
        self.check_names = check_names
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._int: list[bool] = []
        self._c: list[float] = []
        self._rows: list[tuple[np.ndarray, np.ndarray]] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []
        self.obj_constant = 0.0

    def __len__(self) -> int:
        return len(self._names)

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf,
                integer: bool = False, obj: float = 0.0) -> int:
        if self.check_names and not _NAME_RE.match(name):
            raise ModelError(f"variable name {name!r} is not LP-format safe")
        if name in self._index:
            raise ModelError(f"duplicate variable {name!r}")
        if lb > ub:
            raise ModelError(f"variable {name!r}: lb {lb} > ub {ub}")
        j = len(self._names)
        self._names.append(name)
        self._index[name] = j
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._int.append(bool(integer))
        self._c.append(float(obj))
        return j

    def index(self, name: str) -> int:
        return self._index[name]

    def add_obj(self, j: int, coef: float) -> None:
        self._c[j] += float(coef)

    def set_bounds(self, j: int, lb: float | None = None, ub: float | None = None) -> None:
        if lb is not None:
            self._lb[j] = float(lb)
        if ub is not None:
            self._ub[j] = float(ub)

    def add_row(self, terms: Mapping[int, float] | Iterable[tuple[int, float]], sense: str,
                rhs: float, name: str | None = None) -> int:
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[int, float] = {}
        for j, v in items:
            if not 0 <= j < len(self._names):
                raise ModelError(f"row references unknown variable index {j}")
            acc[j] = acc.get(j, 0.0) + float(v)
        cols = np.array(sorted(k for k, v in acc.items() if v != 0.0), dtype=np.int64)
        vals = np.array([acc[k] for k in cols], dtype=float)
        k = len(self._senses)
        self._rows.append((cols, vals))
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        self._row_names.append(name or f"r{k}")
        return k

    def build(self) -> MilpModel:
        lens = [len(r[0]) for r in self._rows]
        row_ptr = np.zeros(len(self._rows) + 1, dtype=np.int64)
        row_ptr[1:] = np.cumsum(lens)
        col_idx = np.concatenate([r[0] for r in self._rows]) if self._rows else np.zeros(0, np.int64)
        coef = np.concatenate([r[1] for r in self._rows]) if self._rows else np.zeros(0)
        return MilpModel(
            names=tuple(self._names),
            lb=_frozen(np.array(self._lb, dtype=float)),
            ub=_frozen(np.array(self._ub, dtype=float)),
            integer=_frozen(np.array(self._int, dtype=bool)),
            c=_frozen(np.array(self._c, dtype=float)),
            row_ptr=_frozen(row_ptr),
            col_idx=_frozen(col_idx.astype(np.int64)),
            coef=_frozen(coef.astype(float)),
            senses=tuple(self._senses),
            rhs=_frozen(np.array(self._rhs, dtype=float)),
            row_names=tuple(self._row_names),
            obj_constant=float(self.obj_constant),
            name=self.name,
        )


def from_arrays(c: Sequence[float], A: np.ndarray | None = None, senses: Sequence[str] = (),
                rhs: Sequence[float] = (), lb: Sequence[float] | None = None,
                ub: Sequence[float] | None = None, integer: Sequence[bool] | None = None,
                name: str = "model") -> MilpModel:
    """Convenience constructor from dense arrays; variables are named ``x0, x1, ...``."""
    n = len(c)
    lb = np.zeros(n) if lb is None else np.asarray(lb, float)
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, float)
    integer = np.zeros(n, bool) if integer is None else np.asarray(integer, bool)
    b = ModelBuilder(name)
    for j in range(n):
        b.add_var(f"x{j}", lb[j], ub[j], bool(integer[j]), float(c[j]))
    if A is not None:
        A = np.atleast_2d(np.asarray(A, float))
        for k in range(A.shape[0]):
            b.add_row({j: A[k, j] for j in np.flatnonzero(A[k])}, senses[k], rhs[k])
    return b.build()


@dataclass(frozen=True)
class MilpSolution:
    status: Status
    x: np.ndarray | None
    objective: float
    best_bound: float
    gap: float
    wall_time: float
    nodes: int = 0
    iterations: int = 0
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    basis_state: np.ndarray | None = None

    @property
    def has_primal(self) -> bool:
        return self.x is not None and self.status.has_primal

    def value(self, model: MilpModel, name: str) -> float:
        if self.x is None:
            raise ValueError("solution carries no primal values")
        return float(self.x[model.index(name)])


def relative_gap(objective: float, bound: float) -> float:
    """``(objective - bound) / |objective|``, the incumbent-relative gap."""
    if not np.isfinite(objective):
        return np.inf
    if not np.isfinite(bound):
        return np.inf
    diff = max(objective - bound, 0.0)
    if diff == 0.0:
        return 0.0
    return diff / max(abs(objective), 1e-10)
