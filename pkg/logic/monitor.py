"""
STL Boolean 모니터
- horizon: 수식이 참조하는 미래 샘플 수
- eval_stl: 재귀 의미론 (NNF, 술어는 strict >)
- eval_naive: 일반 부정을 허용하는 참조 평가기
- eval_table: 테이블 채우기(DP) 평가기, 모든 k 에 대한 판정 배열
"""
import logging
from typing import Callable, Dict

import numpy as np

from .formulas import (
    Always, And, Eventually, FormulaError, Not, Or, Pred, Signal, SignalTooShortError,
    SpatialAtom, StlFormula, StlTrue, Until, has_spatial,
)

logger = logging.getLogger(__name__)

AtomFn = Callable[[StlFormula, int], bool]


def horizon(f: StlFormula) -> int:
    if isinstance(f, (StlTrue, Pred, SpatialAtom)):
        return 0
    if isinstance(f, Not):
        return horizon(f.child)
    if isinstance(f, (And, Or)):
        return max((horizon(c) for c in f.children), default=0)
    if isinstance(f, (Always, Eventually)):
        return f.b + horizon(f.child)
    if isinstance(f, Until):
        return f.b + max(horizon(f.left), horizon(f.right))
    raise FormulaError(f"unknown STL node {type(f).__name__}")


# ============================================================
# 공용 시간 재귀 (SpaTeL 평가에서도 사용)
# ============================================================

def temporal_eval(f: StlFormula, k: int, atom: AtomFn) -> bool:
    """시간 연산자 재귀. 원자(Pred/SpatialAtom)는 atom(node, t) 로 판정"""
    if isinstance(f, StlTrue):
        return True
    if isinstance(f, (Pred, SpatialAtom)):
        return atom(f, k)
    if isinstance(f, Not):
        return not temporal_eval(f.child, k, atom)
    if isinstance(f, And):
        return all(temporal_eval(c, k, atom) for c in f.children)
    if isinstance(f, Or):
        return any(temporal_eval(c, k, atom) for c in f.children)
    if isinstance(f, Always):
        return all(temporal_eval(f.child, t, atom) for t in range(k + f.a, k + f.b + 1))
    if isinstance(f, Eventually):
        return any(temporal_eval(f.child, t, atom) for t in range(k + f.a, k + f.b + 1))
    if isinstance(f, Until):
        for t2 in range(k + f.a, k + f.b + 1):
            if not temporal_eval(f.right, t2, atom):
                continue
            # 왼쪽 피연산자는 [k, t2] 양 끝 포함
            if all(temporal_eval(f.left, t, atom) for t in range(k, t2 + 1)):
                return True
        return False
    raise FormulaError(f"unknown STL node {type(f).__name__}")


def _signal_atom(s: Signal) -> AtomFn:
    def atom(node, t):
        if isinstance(node, SpatialAtom):
            raise FormulaError("spatial atoms need a QTS trace; use eval_spatel")
        return node.predicate.holds(s[t])
    return atom


def _check_length(f: StlFormula, s: Signal, k: int):
    need = k + horizon(f)
    if k < 0 or need >= len(s):
        raise SignalTooShortError(
            f"formula needs samples {k}..{need} but the signal has {len(s)}"
        )


def eval_stl(f: StlFormula, s: Signal, k: int = 0) -> bool:
    if has_spatial(f):
        raise FormulaError("eval_stl does not accept spatial atoms")
    _check_length(f, s, k)
    return temporal_eval(f, k, _signal_atom(s))


def eval_naive(f: StlFormula, s: Signal, k: int = 0) -> bool:
    """NNF 여부와 무관하게 평가 (파서 정규화 검증용)"""
    _check_length(f, s, k)
    return temporal_eval(f, k, _signal_atom(s))


# ============================================================
# 테이블 채우기 평가기
# ============================================================

def eval_table(f: StlFormula, s: Signal) -> np.ndarray:
    """result[k] = (s, k) ⊨ f, k = 0 .. len(s) - horizon(f) - 1"""
    n = len(s) - horizon(f)
    if n <= 0:
        raise SignalTooShortError(f"signal of length {len(s)} is shorter than the formula horizon")
    memo: Dict[StlFormula, np.ndarray] = {}
    table = _fill(f, s, memo)
    return table[:n].copy()


def _fill(f: StlFormula, s: Signal, memo) -> np.ndarray:
    if f in memo:
        return memo[f]
    samples = s.samples
    if isinstance(f, StlTrue):
        out = np.ones(len(s), dtype=bool)
    elif isinstance(f, Pred):
        p = f.predicate
        if p.dim != s.dim:
            raise FormulaError(f"predicate dimension {p.dim} != signal dimension {s.dim}")
        out = samples @ np.asarray(p.coeffs) + p.offset > 0.0
    elif isinstance(f, Not):
        out = ~_fill(f.child, s, memo)
    elif isinstance(f, (And, Or)):
        rows = [_fill(c, s, memo) for c in f.children]
        size = min(len(r) for r in rows)
        stack = np.stack([r[:size] for r in rows])
        out = stack.all(axis=0) if isinstance(f, And) else stack.any(axis=0)
    elif isinstance(f, (Always, Eventually)):
        child = _fill(f.child, s, memo)
        size = max(len(child) - f.b, 0)
        windows = [child[k + f.a:k + f.b + 1] for k in range(size)]
        if isinstance(f, Always):
            out = np.array([w.all() for w in windows], dtype=bool)
        else:
            out = np.array([w.any() for w in windows], dtype=bool)
    elif isinstance(f, Until):
        left = _fill(f.left, s, memo)
        right = _fill(f.right, s, memo)
        size = max(min(len(left), len(right)) - f.b, 0)
        # run[t] = 왼쪽이 t 부터 연속으로 참인 길이
        run = np.zeros(len(left) + 1, dtype=int)
        for t in range(len(left) - 1, -1, -1):
            run[t] = run[t + 1] + 1 if left[t] else 0
        out = np.zeros(size, dtype=bool)
        for k in range(size):
            for t2 in range(k + f.a, k + f.b + 1):
                if right[t2] and run[k] >= t2 - k + 1:
                    out[k] = True
                    break
    elif isinstance(f, SpatialAtom):
        raise FormulaError("eval_table does not accept spatial atoms")
    else:
        raise FormulaError(f"unknown STL node {type(f).__name__}")
    memo[f] = out
    return out
