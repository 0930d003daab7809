from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

INF = math.inf


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NODE_LIMIT = "node_limit"
    TIME_LIMIT = "time_limit"


class MilpError(Exception):
    pass


class NumericalFailure(MilpError):
    pass


@dataclass
class Variable:
    id: int
    name: str
    lower: float
    upper: float
    binary: bool = False


@dataclass
class Constraint:
    index: np.ndarray
    coef: np.ndarray
    sense: Sense
    rhs: float
    name: str = ""


@dataclass
class SolverConfig:
    int_tol: float = 1e-6
    gap_abs: float = 1e-9
    lp_tol: float = 1e-9
    max_nodes: int = 100_000
    time_limit: float = math.inf
    branching: str = "most_fractional"  # or "lowest_index"

    def __post_init__(self):
        for name in ("int_tol", "gap_abs", "lp_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.branching not in ("most_fractional", "lowest_index"):
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass
class SolveResult:
    status: Status
    objective_value: float
    best_bound: float
    assignment: np.ndarray
    node_count: int = 0
    # row multipliers and reduced costs, only filled for pure LP solves
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL

    def value(self, var) -> float | np.ndarray:
        return self.assignment[var]


class MilpModel:
    """A mixed-binary linear program assembled row by row.

    Variables are addressed by integer ids in creation order; ``add_vars``
    returns numpy id arrays so rows can be written with fancy indexing.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.maximize = True

    # variables -----------------------------------------------------------

    def add_var(self, name: str = "", lower: float = -INF, upper: float = INF,
                binary: bool = False) -> int:
        vid = len(self.variables)
        if binary:
            lower, upper = 0.0, 1.0
        if lower > upper:
            raise MilpError(f"variable {name!r} has lower > upper")
        self.variables.append(Variable(vid, name or f"v{vid}", float(lower), float(upper), binary))
        return vid

    def add_vars(self, prefix: str, count: int, lower=-INF, upper=INF,
                 binary: bool = False) -> np.ndarray:
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (count,))
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (count,))
        return np.array([self.add_var(f"{prefix}[{i}]", lower[i], upper[i], binary)
                         for i in range(count)], dtype=int)

    def set_bounds(self, vid: int, lower: float, upper: float):
        var = self.variables[vid]
        if var.binary and not (0 <= lower <= upper <= 1):
            raise MilpError("binary bounds must stay within [0, 1]")
        var.lower, var.upper = float(lower), float(upper)

    def fix(self, vids, values):
        for vid, val in zip(np.atleast_1d(vids), np.atleast_1d(values)):
            self.set_bounds(int(vid), float(val), float(val))

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_binaries(self) -> int:
        return sum(v.binary for v in self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def binary_ids(self) -> np.ndarray:
        return np.array([v.id for v in self.variables if v.binary], dtype=int)

    # rows ----------------------------------------------------------------

    def add_constraint(self, index, coef, sense, rhs: float, name: str = ""):
        """Add sum_k coef[k] * var[index[k]] (sense) rhs.

        Repeated indices are summed; exact zeros are dropped.
        """
        index = np.asarray(index, dtype=int).reshape(-1)
        coef = np.asarray(coef, dtype=float).reshape(-1)
        if index.shape != coef.shape:
            raise MilpError("index and coef lengths differ")
        if index.size and (index.min() < 0 or index.max() >= self.n_vars):
            raise MilpError(f"constraint {name!r} references an undeclared variable")
        if not np.all(np.isfinite(coef)) or not math.isfinite(rhs):
            raise MilpError(f"constraint {name!r} has non-finite data")
        uniq, inv = np.unique(index, return_inverse=True)
        summed = np.zeros(uniq.size)
        np.add.at(summed, inv, coef)
        nz = summed != 0
        self.constraints.append(Constraint(uniq[nz], summed[nz], Sense(sense), float(rhs), name))

    def add_rows(self, index, coef_matrix, sense, rhs, name: str = ""):
        """One constraint per row of ``coef_matrix`` over the shared ``index``."""
        coef_matrix = np.atleast_2d(coef_matrix)
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), (coef_matrix.shape[0],))
        for r, (row, b) in enumerate(zip(coef_matrix, rhs)):
            self.add_constraint(index, row, sense, b, f"{name}[{r}]" if name else "")

    def set_objective(self, index, coef, sense: str = "max"):
        if sense not in ("max", "min"):
            raise MilpError("objective sense must be 'max' or 'min'")
        self.objective = {}
        for i, c in zip(np.atleast_1d(index), np.atleast_1d(coef)):
            self.objective[int(i)] = self.objective.get(int(i), 0.0) + float(c)
        self.maximize = sense == "max"

    # dense views used by the solvers ---------------------------------------

    def dense(self):
        """(A, senses, b, c, lb, ub, is_binary) with c in the user's direction."""
        A = np.zeros((self.n_constraints, self.n_vars))
        for r, con in enumerate(self.constraints):
            A[r, con.index] = con.coef
        senses = [con.sense for con in self.constraints]
        b = np.array([con.rhs for con in self.constraints], dtype=float)
        c = np.zeros(self.n_vars)
        for i, val in self.objective.items():
            c[i] = val
        lb = np.array([v.lower for v in self.variables], dtype=float)
        ub = np.array([v.upper for v in self.variables], dtype=float)
        is_bin = np.array([v.binary for v in self.variables], dtype=bool)
        return A, senses, b, c, lb, ub, is_bin

    def copy(self) -> "MilpModel":
        other = MilpModel(self.name)
        other.variables = [Variable(v.id, v.name, v.lower, v.upper, v.binary) for v in self.variables]
        other.constraints = [Constraint(c.index.copy(), c.coef.copy(), c.sense, c.rhs, c.name)
                             for c in self.constraints]
        other.objective = dict(self.objective)
        other.maximize = self.maximize
        return other

    def stats(self) -> dict:
        return {"variables": self.n_vars, "binaries": self.n_binaries,
                "constraints": self.n_constraints}
