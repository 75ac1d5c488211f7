"""
통신 품질 행렬
- base_station_matrix: 가장 가까운 기지국까지 로그 거리 경로손실 + 장애물 음영 패널티
- agent_comm_matrix: 이웃 에이전트 위치 기준 경로손실만 (음영 없음)
"""
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Set, Tuple

import numpy as np

from .grid import Cell, Grid, GridError


@dataclass(frozen=True)
class PathLossParams:
    """d0, d_cut 이 None 이면 각각 셀 한 변, 작업 공간 한 변"""
    q_max: float = 6.0
    d0: Optional[float] = None
    d_cut: Optional[float] = None
    shadow_penalty: float = 2.0

    def resolve(self, g: Grid) -> Tuple[float, float]:
        d0 = self.d0 if self.d0 is not None else g.cell_side
        d_cut = self.d_cut if self.d_cut is not None else g.side
        if d0 <= 0 or d_cut <= d0:
            raise GridError("path-loss distances need 0 < d0 < d_cut")
        return d0, d_cut


def path_loss_quality(d: float, q_max: float, d0: float, d_cut: float) -> float:
    """q_max · max(0, 1 − log10(max(d, d0)/d0) / log10(d_cut/d0))"""
    ratio = math.log10(max(d, d0) / d0) / math.log10(d_cut / d0)
    return q_max * max(0.0, 1.0 - ratio)


def segment_blocked(a: Sequence[float], b: Sequence[float], obstacles: Set[Cell], g: Grid) -> bool:
    """선분 a→b 를 1/4 셀 간격으로 샘플링해 장애물 셀 통과 여부 판정"""
    if not obstacles:
        return False
    length = math.dist(a, b)
    steps = max(1, math.ceil(length / (g.cell_side / 4.0)))
    for s in range(steps + 1):
        w = s / steps
        p = (a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]))
        if g.cell_of(p) in obstacles:
            return True
    return False


def base_station_matrix(stations: Sequence[Sequence[float]], obstacles: Iterable[Cell], g: Grid,
                        params: PathLossParams = PathLossParams()) -> np.ndarray:
    if not stations:
        raise GridError("at least one base station is required")
    blocked_cells = {tuple(c) for c in obstacles}
    d0, d_cut = params.resolve(g)
    out = np.zeros((g.n, g.n), dtype=int)
    for m, n in g.cells():
        if (m, n) in blocked_cells:
            continue
        center = g.cell_center(m, n)
        dists = [math.dist(center, s) for s in stations]
        nearest = int(np.argmin(dists))
        q = path_loss_quality(dists[nearest], params.q_max, d0, d_cut)
        if segment_blocked(center, stations[nearest], blocked_cells, g):
            q -= params.shadow_penalty
        level = math.floor(q + 0.5)
        out[m, n] = int(min(max(level, 1), params.q_max))
    return out


def agent_comm_matrix(p_j: Sequence[float], g: Grid, params: PathLossParams = PathLossParams()) -> np.ndarray:
    d0, d_cut = params.resolve(g)
    out = np.zeros((g.n, g.n), dtype=float)
    for m, n in g.cells():
        out[m, n] = path_loss_quality(math.dist(g.cell_center(m, n), p_j), params.q_max, d0, d_cut)
    return out
