"""
에이전트 임무 수식 생성
- 목표 도달: F[0,T_f] (∧_j a_j·p + b_j <= 0)
- 분리 조건: G[0,T_f] ∧_neighbors (|Δp1| >= d1 ∘ |Δp2| >= d2)
- 신호 배치: [p1, p2, v1, v2, q_{1,1}, q_{1,2}, ..., q_{n,1}, q_{n,2}]
"""
from enum import Enum
from typing import List, Sequence, Tuple

from .formulas import (
    And, Eventually, Always, FormulaError, Or, Pred, Predicate, StlFormula, StlTrue, conj,
)

STATE_DIM = 4

HalfPlane = Tuple[Sequence[float], float]


class SeparationMode(str, Enum):
    CONJUNCTIVE = "conjunctive"
    DISJUNCTIVE = "disjunctive"


def agent_signal_dim(n_neighbors: int) -> int:
    return STATE_DIM + 2 * n_neighbors


def neighbor_slot(j: int) -> Tuple[int, int]:
    """j 번째 이웃 위치의 신호 인덱스"""
    base = STATE_DIM + 2 * j
    return base, base + 1


def goal_predicates(polytope: Sequence[HalfPlane], dim: int = STATE_DIM) -> List[Pred]:
    """a·p + b <= 0 를 strict 형태 -a·p - b > 0 으로"""
    if not polytope:
        raise FormulaError("goal polytope needs at least one half-plane")
    preds = []
    for a, b in polytope:
        if len(a) != 2:
            raise FormulaError("goal half-planes act on the 2-d position")
        coeffs = [0.0] * dim
        coeffs[0], coeffs[1] = -float(a[0]), -float(a[1])
        preds.append(Pred(Predicate(tuple(coeffs), -float(b))))
    return preds


def build_goal_formula(polytope: Sequence[HalfPlane], T_f: int, dim: int = STATE_DIM) -> StlFormula:
    return Eventually(0, T_f, conj(goal_predicates(polytope, dim)))


def _axis_terms(axis: int, slot: int, d: float, dim: int) -> Or:
    """|p_axis - q_axis| >= d  →  (p - q - d > 0) ∨ (q - p - d > 0)"""
    pos = [0.0] * dim
    pos[axis], pos[slot] = 1.0, -1.0
    neg = [-c for c in pos]
    return Or((Pred(Predicate(tuple(pos), -d)), Pred(Predicate(tuple(neg), -d))))


def separation_clause(j: int, d1: float, d2: float, mode: SeparationMode, dim: int) -> StlFormula:
    s1, s2 = neighbor_slot(j)
    x_term = _axis_terms(0, s1, d1, dim)
    y_term = _axis_terms(1, s2, d2, dim)
    if SeparationMode(mode) is SeparationMode.CONJUNCTIVE:
        return And((x_term, y_term))
    return Or(x_term.children + y_term.children)


def build_separation_formula(d1: float, d2: float, mode: SeparationMode, n_neighbors: int,
                             T_f: int = 0) -> StlFormula:
    if d1 <= 0 or d2 <= 0:
        raise FormulaError("separation distances must be positive")
    if n_neighbors == 0:
        return StlTrue()
    dim = agent_signal_dim(n_neighbors)
    clauses = [separation_clause(j, d1, d2, mode, dim) for j in range(n_neighbors)]
    return Always(0, T_f, conj(clauses))


def build_agent_formula(polytope: Sequence[HalfPlane], T_f: int, d1: float, d2: float,
                        mode: SeparationMode, n_neighbors: int) -> StlFormula:
    """φ_i = 목표 도달 ∧ 분리 조건"""
    dim = agent_signal_dim(n_neighbors)
    goal = build_goal_formula(polytope, T_f, dim)
    sep = build_separation_formula(d1, d2, mode, n_neighbors, T_f)
    if isinstance(sep, StlTrue):
        return goal
    return And((goal, sep))
