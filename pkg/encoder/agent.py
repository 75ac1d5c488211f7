"""
에이전트 동역학 인코딩
- AgentModel: 이산 이중적분기 (A_d, B_d), 입력/속도 한계
- EncodingContext: 변수 id ↔ 의미 (상태, 입력, 슬랙, 점유, 만족 리터럴)
- encode_dynamics / encode_velocity_polygon
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from milp.model import LinExpr, MilpModel, Sense, VarKind
from qts.grid import Grid

logger = logging.getLogger(__name__)

EPSILON = 1e-4
COEF_ZERO = 1e-12


class EncodingError(ValueError):
    """인코딩 구간/차원/파라미터 오류"""


DEFAULT_A_D = ((1.0, 0.0, 1.0, 0.0), (0.0, 1.0, 0.0, 1.0), (0.0, 0.0, 1.0, 0.0), (0.0, 0.0, 0.0, 1.0))
DEFAULT_B_D = ((0.5, 0.0), (0.0, 0.5), (1.0, 0.0), (0.0, 1.0))


@dataclass(frozen=True)
class AgentModel:
    """상태 [p1, p2, v1, v2], 입력 [u1, u2]"""
    A_d: np.ndarray
    B_d: np.ndarray
    u_max: float
    v_max: float

    def __post_init__(self):
        A = np.asarray(self.A_d, dtype=float)
        B = np.asarray(self.B_d, dtype=float)
        if A.shape != (4, 4) or B.shape != (4, 2):
            raise EncodingError(f"expected A_d 4x4 and B_d 4x2, got {A.shape} and {B.shape}")
        if self.u_max <= 0 or self.v_max <= 0:
            raise EncodingError("u_max and v_max must be positive")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A_d", A)
        object.__setattr__(self, "B_d", B)

    @classmethod
    def double_integrator(cls, u_max: float = 2.0, v_max: float = 8.0) -> "AgentModel":
        return cls(np.array(DEFAULT_A_D), np.array(DEFAULT_B_D), u_max, v_max)

    def controllability_matrix(self) -> np.ndarray:
        blocks = [self.B_d]
        for _ in range(3):
            blocks.append(self.A_d @ blocks[-1])
        return np.hstack(blocks)

    def is_controllable(self) -> bool:
        return int(np.linalg.matrix_rank(self.controllability_matrix())) == 4

    def step(self, x: Sequence[float], u: Sequence[float]) -> np.ndarray:
        return self.A_d @ np.asarray(x, dtype=float) + self.B_d @ np.asarray(u, dtype=float)

    def speed_bound(self, sides: int) -> float:
        """L 각형 속도 제약의 외접원 반지름"""
        return self.v_max / math.cos(math.pi / sides)


@dataclass
class EncodingContext:
    model: MilpModel
    agent: AgentModel
    x0: np.ndarray
    t0: int
    H: int
    grid: Optional[Grid] = None
    eps: float = EPSILON
    states: List[List[int]] = field(default_factory=list)
    inputs: List[List[int]] = field(default_factory=list)
    alpha: Dict[Tuple[int, int], int] = field(default_factory=dict)
    beta: Dict[Tuple[int, int], int] = field(default_factory=dict)
    gamma: Dict[Tuple[int, int], int] = field(default_factory=dict)
    occupancy: Dict[int, np.ndarray] = field(default_factory=dict)
    neighbor_counts: Dict[int, np.ndarray] = field(default_factory=dict)
    literals: Dict[tuple, LinExpr] = field(default_factory=dict)
    big_m: float = 0.0

    @property
    def steps(self) -> range:
        return range(self.t0, self.t0 + self.H)

    @property
    def last_step(self) -> int:
        return self.t0 + self.H - 1

    def _index(self, t: int) -> int:
        if not (self.t0 <= t <= self.last_step):
            raise EncodingError(f"step {t} outside the encoded horizon {self.t0}..{self.last_step}")
        return t - self.t0

    def state_var(self, t: int, j: int) -> int:
        return self.states[self._index(t)][j]

    def state_expr(self, t: int, j: int) -> LinExpr:
        return LinExpr.var(self.state_var(t, j))

    def state_exprs(self, t: int) -> List[LinExpr]:
        return [self.state_expr(t, j) for j in range(4)]

    def input_var(self, t: int, k: int) -> int:
        idx = self._index(t)
        if idx >= len(self.inputs):
            raise EncodingError(f"no input is applied at step {t}")
        return self.inputs[idx][k]

    def occupancy_vars(self, t: int) -> np.ndarray:
        self._index(t)
        if t not in self.occupancy:
            raise EncodingError(f"occupancy binaries missing at step {t}")
        return self.occupancy[t]


# ============================================================
# 도달 가능 범위 (변수 상하한 축소)
# ============================================================

def reachable_bounds(am: AgentModel, x0: np.ndarray, s: int, speed: float,
                     grid: Optional[Grid]) -> Tuple[np.ndarray, np.ndarray]:
    """t0 + s 단계의 상태 상하한"""
    x0 = np.asarray(x0, dtype=float)
    if s == 0:
        return x0.copy(), x0.copy()
    lo = np.zeros(4)
    hi = np.zeros(4)
    for k in range(2):
        p0, v0 = x0[k], x0[2 + k]
        cap = max(speed, abs(v0))
        travel = sum(min(cap, abs(v0) + i * am.u_max) for i in range(s)) + 0.5 * s * am.u_max
        lo[k], hi[k] = p0 - travel, p0 + travel
        lo[2 + k] = max(-speed, v0 - s * am.u_max)
        hi[2 + k] = min(speed, v0 + s * am.u_max)
        if lo[2 + k] > hi[2 + k]:
            lo[2 + k] = hi[2 + k] = min(max(v0, -speed), speed)
    if grid is not None:
        for k, (west, east) in enumerate(((grid.west, grid.east), (grid.south, grid.north))):
            lo[k] = min(max(lo[k], west), east)
            hi[k] = min(max(hi[k], west), east)
    return lo, hi


def encode_dynamics(model: MilpModel, am: AgentModel, x0: Sequence[float], t0: int, H: int,
                    grid: Optional[Grid] = None, sides: Optional[int] = None) -> EncodingContext:
    if H < 1:
        raise EncodingError("horizon H must be at least 1")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (4,):
        raise EncodingError("initial state must be [p1, p2, v1, v2]")
    speed = am.speed_bound(sides) if sides else 2.0 * am.v_max
    ctx = EncodingContext(model, am, x0, t0, H, grid)
    ctx.big_m = grid.side if grid is not None else 0.0
    for s in range(H):
        lo, hi = reachable_bounds(am, x0, s, speed, grid)
        ctx.states.append([
            model.add_var(VarKind.CONTINUOUS, lo[j], hi[j], f"x_{t0 + s}_{j}") for j in range(4)
        ])
    for j in range(4):
        model.add_constraint({ctx.states[0][j]: 1.0}, Sense.EQ, float(x0[j]), f"init_{j}")
    for s in range(H - 1):
        u = [model.add_var(VarKind.CONTINUOUS, -am.u_max, am.u_max, f"u_{t0 + s}_{k}") for k in range(2)]
        ctx.inputs.append(u)
        cur, nxt = ctx.states[s], ctx.states[s + 1]
        for j in range(4):
            row = {nxt[j]: 1.0}
            for i in range(4):
                if am.A_d[j, i] != 0.0:
                    row[cur[i]] = row.get(cur[i], 0.0) - am.A_d[j, i]
            for k in range(2):
                if am.B_d[j, k] != 0.0:
                    row[u[k]] = row.get(u[k], 0.0) - am.B_d[j, k]
            model.add_constraint(row, Sense.EQ, 0.0, f"dyn_{t0 + s}_{j}")
    return ctx


def polygon_rows(sides: int) -> List[Tuple[float, float]]:
    """(sin(2πl/L), cos(2πl/L)), l = 1..L, 아주 작은 계수는 0"""
    rows = []
    for l in range(1, sides + 1):
        a = math.sin(2.0 * math.pi * l / sides)
        b = math.cos(2.0 * math.pi * l / sides)
        rows.append((0.0 if abs(a) < COEF_ZERO else a, 0.0 if abs(b) < COEF_ZERO else b))
    return rows


def encode_velocity_polygon(model: MilpModel, ctx: EncodingContext, sides: int):
    if sides < 3:
        raise EncodingError("velocity polygon needs L >= 3 sides")
    rows = polygon_rows(sides)
    for t in ctx.steps:
        if t == ctx.t0:
            continue
        v1, v2 = ctx.state_var(t, 2), ctx.state_var(t, 3)
        for l, (a, b) in enumerate(rows, start=1):
            model.add_constraint({v1: a, v2: b}, Sense.LE, ctx.agent.v_max, f"vel_{t}_{l}")
