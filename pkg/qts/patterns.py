"""
용량 행렬에서 ψ1..ψ5 공간 패턴 생성
- ψ1: 장애물 잎마다 ∀-next 체인 (μ <= 0)
- ψ2..ψ5: NW/NE/SW/SE 사분면별 비장애물 잎 체인 (μ <= C[m][n])
- 같은 임계값을 가진 체인은 한 위치만 다를 때 라벨 집합으로 병합
"""
from typing import Dict, FrozenSet, List, Tuple

import numpy as np

from logic.formulas import ForAllNext, LABEL_ORDER, Label, TsslFormula, ValCmp, tssl_conj

from .tree import leaf_path

Chain = Tuple[Tuple[FrozenSet[Label], ...], float]


def _merge_at(chains: List[Chain], pos: int) -> List[Chain]:
    groups: Dict[tuple, FrozenSet[Label]] = {}
    order = []
    for sets, threshold in chains:
        key = (sets[:pos], sets[pos + 1:], threshold)
        if key not in groups:
            groups[key] = frozenset()
            order.append(key)
        groups[key] = groups[key] | sets[pos]
    return [(head + (groups[(head, tail, th)],) + tail, th) for head, tail, th in order]


def merge_chains(chains: List[Chain]) -> List[Chain]:
    """가장 깊은 위치부터 병합, 변화가 없을 때까지 반복"""
    if not chains:
        return []
    depth = len(chains[0][0])
    current = list(chains)
    while True:
        before = len(current)
        for pos in range(depth - 1, -1, -1):
            current = _merge_at(current, pos)
        if len(current) == before:
            break
    return sorted(current, key=_sort_key)


def _sort_key(chain: Chain):
    sets, threshold = chain
    return tuple(min(LABEL_ORDER.index(lb) for lb in s) for s in sets), threshold


def chain_formula(chain: Chain) -> TsslFormula:
    sets, threshold = chain
    f: TsslFormula = ValCmp("<=", threshold)
    for labels in reversed(sets):
        f = ForAllNext(tuple(labels), f)
    return f


def _leaf_chain(m: int, n: int, depth: int, threshold: float) -> Chain:
    return tuple(frozenset({lb}) for lb in leaf_path(m, n, depth)), float(threshold)


def generate_patterns(cap) -> Tuple[TsslFormula, TsslFormula, TsslFormula, TsslFormula, TsslFormula]:
    cap = np.asarray(cap)
    side = cap.shape[0]
    depth = side.bit_length() - 1
    obstacles: List[Chain] = []
    quadrants: Dict[Label, List[Chain]] = {lb: [] for lb in LABEL_ORDER}
    for m in range(side):
        for n in range(side):
            value = cap[m, n]
            if value == 0:
                obstacles.append(_leaf_chain(m, n, depth, 0.0))
            else:
                chain = _leaf_chain(m, n, depth, value)
                first = next(iter(chain[0][0]))
                quadrants[first].append(chain)
    psi1 = tssl_conj([chain_formula(c) for c in merge_chains(obstacles)])
    rest = [tssl_conj([chain_formula(c) for c in merge_chains(quadrants[lb])]) for lb in LABEL_ORDER]
    return (psi1, *rest)
