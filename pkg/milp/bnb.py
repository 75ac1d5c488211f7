"""
Best-bound branch-and-bound (이진 변수)
- 노드 순서: (부모 LP 하한, 생성 순번) 힙
- 분기: 가장 분수적인 이진 변수, 동률은 가장 작은 id, 0 쪽 자식 먼저
- 정수해 후보는 이진 변수를 반올림 값으로 고정하고 LP 를 다시 풀어 확정
"""
import heapq
import logging
import math
import time
from typing import Optional, Sequence

import numpy as np

from .model import MilpModel, Solution, SolveStats, SolveStatus
from .simplex import solve_lp

logger = logging.getLogger(__name__)

INT_TOL = 1e-6
GAP_TOL = 1e-6
DEFAULT_NODE_LIMIT = 10 ** 6


def _most_fractional(values, binaries, threshold: float = INT_TOL) -> Optional[int]:
    best_id, best_score = None, threshold
    for j in binaries:
        f = values[j] - math.floor(values[j])
        score = min(f, 1.0 - f)
        if score > best_score:
            best_id, best_score = j, score
    return best_id


def _fix_rounded(values, binaries: Sequence[int], lb: np.ndarray, ub: np.ndarray):
    lb, ub = lb.copy(), ub.copy()
    for j in binaries:
        lb[j] = ub[j] = float(round(values[j]))
    return lb, ub


def solve_milp(model: MilpModel, node_limit: Optional[int] = None) -> Solution:
    started = time.perf_counter()
    node_limit = DEFAULT_NODE_LIMIT if node_limit is None else node_limit
    binaries = model.binaries()
    lb0, ub0 = model.bounds_arrays()
    stats = SolveStats()
    incumbent: Optional[Solution] = None
    best = math.inf
    root_unbounded = False
    incomplete = False

    heap = [(-math.inf, 0, lb0, ub0)]
    seq = 1
    hit_limit = False
    while heap:
        bound, _, lb, ub = heapq.heappop(heap)
        if bound >= best - GAP_TOL:
            continue
        if stats.nodes >= node_limit:
            hit_limit = True
            break
        lp = solve_lp(model, lb, ub)
        stats.nodes += 1
        stats.iterations += lp.stats.iterations
        if lp.status is SolveStatus.UNBOUNDED:
            root_unbounded = stats.nodes == 1
            if root_unbounded:
                break
            continue
        if lp.status is SolveStatus.ITERATION_LIMIT:
            incomplete = True
            continue
        if lp.status is not SolveStatus.OPTIMAL or lp.objective >= best - GAP_TOL:
            continue
        j = _most_fractional(lp.values, binaries)
        if j is None and binaries:
            exact = solve_lp(model, *_fix_rounded(lp.values, binaries, lb, ub))
            stats.iterations += exact.stats.iterations
            if exact.status is SolveStatus.OPTIMAL:
                if exact.objective < best - GAP_TOL:
                    incumbent, best = exact, exact.objective
                    logger.debug("incumbent %.6f at node %d", best, stats.nodes)
                continue
            if exact.status is SolveStatus.ITERATION_LIMIT:
                incomplete = True
                continue
            # 반올림 고정이 실현 불가: 아직 고정되지 않은 이진 변수로 계속 분기
            open_bins = [k for k in binaries if lb[k] != ub[k]]
            j = _most_fractional(lp.values, open_bins, threshold=0.0)
            if j is None:
                continue
        elif j is None:
            incumbent, best = lp, lp.objective
            continue
        down_ub = ub.copy()
        down_ub[j] = 0.0
        up_lb = lb.copy()
        up_lb[j] = 1.0
        heapq.heappush(heap, (lp.objective, seq, lb, down_ub))
        heapq.heappush(heap, (lp.objective, seq + 1, up_lb, ub))
        seq += 2

    stats.wall_time = time.perf_counter() - started
    if hit_limit:
        logger.warning("branch-and-bound node limit %d reached", node_limit)
        if incumbent is None:
            return Solution(SolveStatus.NODE_LIMIT, stats=stats)
        return Solution(SolveStatus.NODE_LIMIT, incumbent.values, incumbent.objective, stats, incumbent.duals)
    if root_unbounded:
        return Solution(SolveStatus.UNBOUNDED, stats=stats)
    if incomplete:
        logger.warning("branch-and-bound skipped nodes whose LP hit the pivot limit")
        if incumbent is None:
            return Solution(SolveStatus.ITERATION_LIMIT, stats=stats)
        return Solution(SolveStatus.ITERATION_LIMIT, incumbent.values, incumbent.objective, stats,
                        incumbent.duals)
    if incumbent is None:
        return Solution(SolveStatus.INFEASIBLE, stats=stats)
    return Solution(SolveStatus.OPTIMAL, incumbent.values, incumbent.objective, stats, incumbent.duals)
