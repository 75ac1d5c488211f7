"""
작업 공간 격자 (2^D × 2^D)
- 행 0 = 가장 북쪽, 열 0 = 가장 서쪽
- 셀 (m, n) 은 [west, east) × (south, north] 구간 (반열림)
"""
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np


class GridError(ValueError):
    """격자/행렬 형태 오류"""


Cell = Tuple[int, int]


@dataclass(frozen=True)
class Grid:
    origin: Tuple[float, float]
    side: float
    depth: int

    def __post_init__(self):
        if self.side <= 0:
            raise GridError("workspace side must be positive")
        if self.depth < 1:
            raise GridError("grid depth D must be at least 1")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def n(self) -> int:
        return 2 ** self.depth

    @property
    def cell_side(self) -> float:
        return self.side / self.n

    @property
    def west(self) -> float:
        return self.origin[0]

    @property
    def east(self) -> float:
        return self.origin[0] + self.side

    @property
    def south(self) -> float:
        return self.origin[1]

    @property
    def north(self) -> float:
        return self.origin[1] + self.side

    def contains(self, p: Sequence[float]) -> bool:
        return self.west <= p[0] <= self.east and self.south <= p[1] <= self.north

    def cell_of(self, p: Sequence[float]) -> Cell:
        """경계 밖의 점은 가장 가까운 경계 셀로 clamp"""
        col = math.floor((p[0] - self.west) / self.cell_side)
        row = math.floor((self.north - p[1]) / self.cell_side)
        return min(max(row, 0), self.n - 1), min(max(col, 0), self.n - 1)

    def cell_bounds(self, m: int, n: int) -> Tuple[float, float, float, float]:
        """(west, east, south, north)"""
        w = self.west + n * self.cell_side
        top = self.north - m * self.cell_side
        return w, w + self.cell_side, top - self.cell_side, top

    def cell_center(self, m: int, n: int) -> Tuple[float, float]:
        w, e, s, nth = self.cell_bounds(m, n)
        return (w + e) / 2.0, (s + nth) / 2.0

    def cells(self) -> Iterable[Cell]:
        for m in range(self.n):
            for n in range(self.n):
                yield m, n

    def check_matrix(self, matrix, name: str = "matrix") -> np.ndarray:
        arr = np.asarray(matrix)
        if arr.shape != (self.n, self.n):
            raise GridError(f"{name} must be {self.n}x{self.n}, got {arr.shape}")
        return arr


def cell_of(p: Sequence[float], g: Grid) -> Cell:
    return g.cell_of(p)


def occupancy_counts(positions: Iterable[Sequence[float]], g: Grid) -> np.ndarray:
    counts = np.zeros((g.n, g.n), dtype=int)
    for p in positions:
        m, n = g.cell_of(p)
        counts[m, n] += 1
    return counts
