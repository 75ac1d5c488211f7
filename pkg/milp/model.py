"""
MILP 모델 표현
- 변수 (연속/이진, 상하한), 선형 제약 (<=, =, >=), 최소화 목적함수
- LinExpr: 인코더용 희소 아핀식
- dump_lp: LP 형식 텍스트 출력
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np


class ModelError(ValueError):
    """모델 구성 오류 (역전된 상하한, 미선언 변수, 무한 상하한)"""


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NODE_LIMIT = "node-limit"
    ITERATION_LIMIT = "iteration-limit"


@dataclass
class Variable:
    id: int
    kind: VarKind
    lb: float
    ub: float
    name: str


@dataclass
class Constraint:
    id: int
    coeffs: Dict[int, float]
    sense: Sense
    rhs: float
    name: str = ""


# ============================================================
# 아핀식
# ============================================================

class LinExpr:
    """Σ coef·x_id + const"""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[Mapping[int, float]] = None, const: float = 0.0):
        self.terms: Dict[int, float] = dict(terms) if terms else {}
        self.const = float(const)

    @classmethod
    def var(cls, var_id: int, coef: float = 1.0) -> "LinExpr":
        return cls({var_id: float(coef)})

    @classmethod
    def constant(cls, value: float) -> "LinExpr":
        return cls(None, value)

    @classmethod
    def total(cls, exprs: Iterable["LinExpr"]) -> "LinExpr":
        out = cls()
        for e in exprs:
            out.add_inplace(e)
        return out

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def add_inplace(self, other: Union["LinExpr", float], scale: float = 1.0) -> "LinExpr":
        if isinstance(other, LinExpr):
            for k, v in other.terms.items():
                self.terms[k] = self.terms.get(k, 0.0) + scale * v
            self.const += scale * other.const
        else:
            self.const += scale * float(other)
        return self

    def __add__(self, other):
        return self.copy().add_inplace(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().add_inplace(other, -1.0)

    def __rsub__(self, other):
        return (-self).add_inplace(other)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar: float):
        s = float(scalar)
        return LinExpr({k: s * v for k, v in self.terms.items()}, s * self.const)

    __rmul__ = __mul__

    def is_constant(self) -> bool:
        return all(v == 0.0 for v in self.terms.values())

    def evaluate(self, values: Mapping[int, float]) -> float:
        return self.const + sum(v * values[k] for k, v in self.terms.items())

    def bounds(self, model: "MilpModel") -> Tuple[float, float]:
        """변수 상하한으로부터 구간 산술 범위"""
        lo = hi = self.const
        for k, v in self.terms.items():
            var = model.variables[k]
            a, b = v * var.lb, v * var.ub
            lo += min(a, b)
            hi += max(a, b)
        return lo, hi

    def __repr__(self) -> str:
        return f"LinExpr({self.terms}, {self.const})"


Row = Union[LinExpr, Mapping[int, float], Iterable[Tuple[int, float]]]


# ============================================================
# 모델
# ============================================================

class MilpModel:
    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.objective: Dict[int, float] = {}
        self.obj_const = 0.0

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def binaries(self) -> List[int]:
        return [v.id for v in self.variables if v.kind is VarKind.BINARY]

    def add_var(self, kind: VarKind = VarKind.CONTINUOUS, lb: Optional[float] = None,
                ub: Optional[float] = None, name: str = "") -> int:
        kind = VarKind(kind)
        if kind is VarKind.BINARY:
            lb = 0.0 if lb is None else float(lb)
            ub = 1.0 if ub is None else float(ub)
            if lb not in (0.0, 1.0) or ub not in (0.0, 1.0):
                raise ModelError(f"binary '{name}' bounds must be 0 or 1")
        else:
            lb = 0.0 if lb is None else float(lb)
            ub = math.inf if ub is None else float(ub)
        if lb > ub:
            raise ModelError(f"variable '{name}' has inverted bounds [{lb}, {ub}]")
        var_id = len(self.variables)
        self.variables.append(Variable(var_id, kind, lb, ub, name or f"x{var_id}"))
        return var_id

    def _coeffs(self, row: Row) -> Tuple[Dict[int, float], float]:
        const = 0.0
        if isinstance(row, LinExpr):
            items = row.terms.items()
            const = row.const
        elif isinstance(row, Mapping):
            items = row.items()
        else:
            items = row
        coeffs: Dict[int, float] = {}
        for k, v in items:
            if not (0 <= k < len(self.variables)):
                raise ModelError(f"unknown variable id {k}")
            coeffs[k] = coeffs.get(k, 0.0) + float(v)
        return {k: v for k, v in coeffs.items() if v != 0.0}, const

    def add_constraint(self, row: Row, sense: Sense, rhs: float = 0.0, name: str = "") -> int:
        coeffs, const = self._coeffs(row)
        cid = len(self.constraints)
        self.constraints.append(Constraint(cid, coeffs, Sense(sense), float(rhs) - const, name or f"c{cid}"))
        return cid

    def set_objective(self, row: Row, const: float = 0.0):
        coeffs, expr_const = self._coeffs(row)
        self.objective = coeffs
        self.obj_const = float(const) + expr_const

    def add_objective(self, row: Row, scale: float = 1.0):
        coeffs, expr_const = self._coeffs(row)
        for k, v in coeffs.items():
            self.objective[k] = self.objective.get(k, 0.0) + scale * v
        self.obj_const += scale * expr_const

    # ---------- 검사 ----------
    def bounds_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return lb, ub

    def objective_value(self, x: Mapping[int, float]) -> float:
        return self.obj_const + sum(v * x[k] for k, v in self.objective.items())

    def max_violation(self, x: Mapping[int, float]) -> float:
        worst = 0.0
        for var in self.variables:
            worst = max(worst, var.lb - x[var.id], x[var.id] - var.ub)
        for con in self.constraints:
            lhs = sum(v * x[k] for k, v in con.coeffs.items())
            if con.sense is Sense.LE:
                worst = max(worst, lhs - con.rhs)
            elif con.sense is Sense.GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return worst


# ============================================================
# 해
# ============================================================

@dataclass
class SolveStats:
    nodes: int = 0
    iterations: int = 0
    wall_time: float = 0.0


@dataclass
class Solution:
    status: SolveStatus
    values: Dict[int, float] = field(default_factory=dict)
    objective: float = math.nan
    stats: SolveStats = field(default_factory=SolveStats)
    duals: Optional[np.ndarray] = None

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def value(self, var_id: int) -> float:
        return self.values[var_id]

    def expr_value(self, expr: LinExpr) -> float:
        return expr.evaluate(self.values)


# ============================================================
# LP 텍스트 출력
# ============================================================

def _fmt_terms(coeffs: Mapping[int, float], model: MilpModel) -> str:
    if not coeffs:
        return "0"
    parts = []
    for k in sorted(coeffs):
        v = coeffs[k]
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {abs(v):.12g} {model.variables[k].name}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def dump_lp(model: MilpModel) -> str:
    lines = [f"\\ {model.name}", "Minimize", f" obj: {_fmt_terms(model.objective, model)}"]
    if model.obj_const:
        lines[-1] += f" + {model.obj_const:.12g} constant"
    lines.append("Subject To")
    for con in model.constraints:
        lines.append(f" {con.name}: {_fmt_terms(con.coeffs, model)} {con.sense.value} {con.rhs:.12g}")
    lines.append("Bounds")
    for var in model.variables:
        lo = "-inf" if var.lb == -math.inf else f"{var.lb:.12g}"
        hi = "+inf" if var.ub == math.inf else f"{var.ub:.12g}"
        lines.append(f" {lo} <= {var.name} <= {hi}")
    bins = [model.variables[k].name for k in model.binaries()]
    if bins:
        lines.append("Binaries")
        lines.extend(f" {name}" for name in bins)
    lines.append("End")
    return "\n".join(lines) + "\n"
