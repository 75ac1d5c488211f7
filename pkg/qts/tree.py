"""
Quad Transition System (QTS)
- 완전 사분트리, 잎은 격자 셀
- 내부 노드 μ = 네 자식 μ 의 평균
- TSSL / SpaTeL 평가
"""
import logging
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from logic.formulas import (
    Always, ExistsNext, ForAllNext, FormulaError, Label, LABEL_ORDER, Pred, SignalTooShortError,
    SpatialAtom, StlFormula, TsslAnd, TsslFormula, TsslNot, TsslOr, TsslTrue, ValCmp, And,
    tssl_conj,
)
from logic.monitor import horizon, temporal_eval

from .grid import GridError

logger = logging.getLogger(__name__)


class Node(NamedTuple):
    depth: int
    row: int
    col: int


ROOT = Node(0, 0, 0)

# 자식 오프셋 (행, 열)
_CHILD_OFFSET = {
    Label.NW: (0, 0),
    Label.NE: (0, 1),
    Label.SW: (1, 0),
    Label.SE: (1, 1),
}


def child_of(v: Node, label: Label) -> Node:
    dr, dc = _CHILD_OFFSET[Label(label)]
    return Node(v.depth + 1, 2 * v.row + dr, 2 * v.col + dc)


def leaf_path(m: int, n: int, depth: int) -> Tuple[Label, ...]:
    """루트에서 잎 (m, n) 까지의 라벨 경로"""
    path = []
    for bit in range(depth - 1, -1, -1):
        dr, dc = (m >> bit) & 1, (n >> bit) & 1
        path.append(LABEL_ORDER[2 * dr + dc])
    return tuple(path)


def node_of(path: Sequence[Label]) -> Node:
    v = ROOT
    for label in path:
        v = child_of(v, label)
    return v


class Qts:
    """levels[d] 는 깊이 d 노드의 μ 를 담은 2^d × 2^d 배열"""

    def __init__(self, levels: List[np.ndarray]):
        self.levels = levels
        for arr in levels:
            arr.setflags(write=False)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def root(self) -> Node:
        return ROOT

    @property
    def leaf_values(self) -> np.ndarray:
        return self.levels[-1]

    def mu(self, v: Node) -> float:
        return float(self.levels[v.depth][v.row, v.col])

    def is_leaf(self, v: Node) -> bool:
        return v.depth == self.depth

    def children(self, v: Node) -> Dict[Label, Node]:
        return {lb: child_of(v, lb) for lb in LABEL_ORDER}

    def next_node(self, v: Node, label: Label) -> Node:
        # 잎의 다음 노드는 자기 자신
        return v if self.is_leaf(v) else child_of(v, label)

    def node_count(self) -> int:
        return sum(arr.size for arr in self.levels)

    def leaves(self) -> List[Node]:
        n = 2 ** self.depth
        return [Node(self.depth, m, c) for m in range(n) for c in range(n)]


def build_qts(values) -> Qts:
    arr = np.array(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise GridError(f"QTS needs a square matrix, got shape {arr.shape}")
    side = arr.shape[0]
    if side < 1 or side & (side - 1):
        raise GridError(f"matrix side {side} is not a power of two")
    if (arr < 0).any():
        raise GridError("valuations must be nonnegative")
    levels = [arr]
    while levels[0].shape[0] > 1:
        cur = levels[0]
        half = cur.shape[0] // 2
        blocks = cur.reshape(half, 2, half, 2)
        parent = (blocks[:, 0, :, 0] + blocks[:, 0, :, 1] + blocks[:, 1, :, 0] + blocks[:, 1, :, 1]) / 4.0
        levels.insert(0, parent)
    return Qts(levels)


# ============================================================
# TSSL 평가
# ============================================================

def eval_tssl(f: TsslFormula, q: Qts, v: Node = ROOT) -> bool:
    if isinstance(f, TsslTrue):
        return True
    if isinstance(f, ValCmp):
        mu = q.mu(v)
        return mu <= f.threshold if f.sense == "<=" else mu >= f.threshold
    if isinstance(f, TsslNot):
        return not eval_tssl(f.child, q, v)
    if isinstance(f, TsslAnd):
        return all(eval_tssl(c, q, v) for c in f.children)
    if isinstance(f, TsslOr):
        return any(eval_tssl(c, q, v) for c in f.children)
    if isinstance(f, ForAllNext):
        return all(eval_tssl(f.child, q, q.next_node(v, lb)) for lb in f.labels)
    if isinstance(f, ExistsNext):
        return any(eval_tssl(f.child, q, q.next_node(v, lb)) for lb in f.labels)
    raise FormulaError(f"unknown TSSL node {type(f).__name__}")


# ============================================================
# SpaTeL (QTS trace 위의 STL)
# ============================================================

class QtsTrace:
    def __init__(self, snapshots: Sequence[Qts]):
        snapshots = list(snapshots)
        if not snapshots:
            raise GridError("a QTS trace needs at least one snapshot")
        depth = snapshots[0].depth
        if any(s.depth != depth for s in snapshots):
            raise GridError("all trace snapshots must share one tree shape")
        self.snapshots = snapshots

    @classmethod
    def from_counts(cls, counts: Sequence[np.ndarray]) -> "QtsTrace":
        return cls([build_qts(c) for c in counts])

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, t: int) -> Qts:
        return self.snapshots[t]


def eval_spatel(f: StlFormula, trace: QtsTrace, k: int = 0) -> bool:
    last = len(trace) - 1
    if k < 0 or k + horizon(f) > last:
        raise SignalTooShortError(
            f"formula needs steps {k}..{k + horizon(f)} but the trace ends at {last}"
        )

    def atom(node, t):
        if isinstance(node, Pred):
            raise FormulaError("SpaTeL formulas over a QTS trace take spatial atoms only")
        return eval_tssl(node.formula, trace[t], ROOT)

    return temporal_eval(f, k, atom)


def build_global_formula(patterns: Sequence[TsslFormula], T_f: int) -> StlFormula:
    """φ = G[0,T_f] ψ1 ∧ G[0,T_f] (ψ2 ∧ ψ3 ∧ ψ4 ∧ ψ5)"""
    if len(patterns) != 5:
        raise FormulaError("expected the obstacle pattern plus four quadrant patterns")
    first = Always(0, T_f, SpatialAtom(patterns[0]))
    rest = Always(0, T_f, SpatialAtom(tssl_conj(patterns[1:])))
    return And((first, rest))


def first_violation(counts: Sequence[np.ndarray], cap) -> Optional[Tuple[int, Tuple[int, int]]]:
    """용량 초과가 처음 발생한 (step, (m, n)), 없으면 None"""
    cap = np.asarray(cap)
    for t, c in enumerate(counts):
        over = np.argwhere(np.asarray(c) > cap)
        if len(over):
            m, n = over[0]
            return t, (int(m), int(n))
    return None
