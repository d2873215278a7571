"""Sparse mixed-integer linear model container.

Every formulation compiles into a :class:`MilpModel`: named binary or
continuous variables, sparse rows with a sense and right-hand side, and a
minimization objective stored on the variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

INF = math.inf


class VarKind(Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Sense(Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class ModelError(Exception):
    pass


@dataclass
class Variable:
    name: str
    kind: VarKind
    lower: float
    upper: float
    obj: float = 0.0

    def __post_init__(self):
        if self.kind is VarKind.BINARY and (self.lower, self.upper) != (0.0, 1.0):
            raise ModelError(f"binary variable {self.name} must have bounds [0, 1]")
        if self.lower > self.upper:
            raise ModelError(f"variable {self.name} has empty bound interval")


@dataclass
class Constraint:
    name: str
    terms: list[tuple[int, float]]  # (variable id, coefficient)
    sense: Sense
    rhs: float


@dataclass
class MilpModel:
    """Minimization MILP with stable integer ids for variables and rows."""

    name: str = "model"
    metadata: dict = field(default_factory=dict)
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)

    def __post_init__(self):
        self._var_index: dict[str, int] = {v.name: i for i, v in enumerate(self.variables)}
        self._con_index: dict[str, int] = {c.name: i for i, c in enumerate(self.constraints)}

    # -- construction -------------------------------------------------

    def add_variable(
        self,
        name: str,
        kind: VarKind = VarKind.CONTINUOUS,
        lower: float = 0.0,
        upper: float = INF,
        obj: float = 0.0,
    ) -> int:
        if name in self._var_index:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind is VarKind.BINARY:
            lower, upper = 0.0, 1.0
        if not (math.isfinite(obj) and math.isfinite(lower) or lower == -INF):
            raise ModelError(f"bad bounds/objective for variable {name!r}")
        self.variables.append(Variable(name, kind, lower, upper, obj))
        vid = len(self.variables) - 1
        self._var_index[name] = vid
        return vid

    def add_constraint(
        self,
        name: str,
        terms: list[tuple[int, float]],
        sense: Sense,
        rhs: float,
    ) -> int:
        if name in self._con_index:
            raise ModelError(f"duplicate constraint name {name!r}")
        seen: set[int] = set()
        for vid, coeff in terms:
            if not 0 <= vid < len(self.variables):
                raise ModelError(f"constraint {name!r} references unknown variable id {vid}")
            if vid in seen:
                raise ModelError(f"constraint {name!r} repeats variable id {vid}")
            if not math.isfinite(coeff):
                raise ModelError(f"constraint {name!r} has non-finite coefficient")
            seen.add(vid)
        if not math.isfinite(rhs):
            raise ModelError(f"constraint {name!r} has non-finite rhs")
        self.constraints.append(Constraint(name, list(terms), sense, rhs))
        cid = len(self.constraints) - 1
        self._con_index[name] = cid
        return cid

    # -- lookup -------------------------------------------------------

    def var_id(self, name: str) -> int:
        try:
            return self._var_index[name]
        except KeyError:
            raise ModelError(f"no variable named {name!r}")

    def has_var(self, name: str) -> bool:
        return name in self._var_index

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_cons(self) -> int:
        return len(self.constraints)

    def binary_ids(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind is VarKind.BINARY]

    # -- evaluation ---------------------------------------------------

    def objective_value(self, values: np.ndarray) -> float:
        c = np.array([v.obj for v in self.variables])
        return float(c @ np.asarray(values))

    def constraint_violation(self, values: np.ndarray) -> float:
        """Largest absolute row violation of an assignment."""
        worst = 0.0
        x = np.asarray(values)
        for con in self.constraints:
            act = sum(coeff * x[vid] for vid, coeff in con.terms)
            if con.sense is Sense.LE:
                worst = max(worst, act - con.rhs)
            elif con.sense is Sense.GE:
                worst = max(worst, con.rhs - act)
            else:
                worst = max(worst, abs(act - con.rhs))
        return worst
