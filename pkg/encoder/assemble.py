"""
에이전트 한 명의 H 단계 계획 문제 조립
- 동역학, 입력 상자, 속도 다각형, 점유
- 목적함수 αJ1 + (1−α)J2
- 분리 조건 / SpaTeL 패턴 (이웃 계획은 상수)
- 마감이 창 안에 들어오면 목표 도달을 강제
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from logic.builders import HalfPlane, SeparationMode, build_goal_formula, build_separation_formula
from logic.formulas import StlTrue, TsslFormula
from milp.model import LinExpr, MilpModel, Solution, dump_lp
from qts.grid import Grid, occupancy_counts

from .agent import AgentModel, EncodingContext, encode_dynamics, encode_velocity_polygon, EPSILON
from .costs import encode_cost_j1, encode_cost_j2, encode_occupancy
from .formulas import encode_spatel, encode_stl

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GoalRegion:
    """a·p + b <= 0 반평면들의 교집합, center 는 J1 의 목표점"""
    half_planes: Tuple[HalfPlane, ...]
    center: Tuple[float, float]

    @classmethod
    def box(cls, center: Sequence[float], half_width: float) -> "GoalRegion":
        cx, cy = float(center[0]), float(center[1])
        w = float(half_width)
        planes = (
            ((1.0, 0.0), -(cx + w)),
            ((-1.0, 0.0), cx - w),
            ((0.0, 1.0), -(cy + w)),
            ((0.0, -1.0), cy - w),
        )
        return cls(planes, (cx, cy))

    def contains(self, p: Sequence[float]) -> bool:
        return all(a[0] * p[0] + a[1] * p[1] + b <= 0.0 for a, b in self.half_planes)

    def strictly_contains(self, p: Sequence[float]) -> bool:
        """모니터와 같은 strict 판정"""
        return all(-(a[0] * p[0] + a[1] * p[1]) - b > 0.0 for a, b in self.half_planes)


@dataclass
class NeighborView:
    """이웃의 방송된 계획 (단계 → 위치, 끝 이후는 마지막 위치 유지)"""
    agent_id: int
    positions: Dict[int, Tuple[float, float]]
    comm: Optional[np.ndarray] = None

    def position_at(self, t: int) -> Tuple[float, float]:
        if t in self.positions:
            return self.positions[t]
        last = max(self.positions)
        first = min(self.positions)
        return self.positions[last] if t > last else self.positions[first]


@dataclass(frozen=True)
class EncodingParams:
    H: int = 5
    L: int = 8
    T_f: int = 50
    lam: float = 0.005
    alpha: float = 0.5
    d1: float = 1.0
    d2: float = 1.0
    q: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    r: Tuple[float, float] = (1.0, 1.0)
    separation_mode: SeparationMode = SeparationMode.DISJUNCTIVE
    eps: float = EPSILON


@dataclass
class AgentProblem:
    model: MilpModel
    ctx: EncodingContext
    neighbors: List[NeighborView]
    goal_hard: bool
    j1: LinExpr
    j2: LinExpr = field(default_factory=LinExpr)


def _window(t0: int, H: int) -> List[int]:
    return list(range(t0 + 1, t0 + H))


def assemble_agent_problem(agent_id: int, x0: Sequence[float], t0: int, goal: GoalRegion,
                           am: AgentModel, grid: Grid, capacity, patterns: Sequence[TsslFormula],
                           neighbors: Sequence[NeighborView], params: EncodingParams,
                           enforce_goal: bool = True, dump_dir: Optional[Path] = None) -> AgentProblem:
    neighbors = list(neighbors)
    model = MilpModel(f"agent{agent_id}_t{t0}")
    ctx = encode_dynamics(model, am, x0, t0, params.H, grid, params.L)
    ctx.eps = params.eps
    encode_velocity_polygon(model, ctx, params.L)
    encode_occupancy(model, ctx, grid)

    j1 = encode_cost_j1(model, ctx, params.q, params.r, params.lam, t0, goal.center)
    model.set_objective(j1 * params.alpha)
    j2 = LinExpr()
    if params.alpha < 1.0:
        comms = [nb.comm for nb in neighbors if nb.comm is not None]
        j2 = encode_cost_j2(model, ctx, capacity, comms)
        model.add_objective(j2, 1.0 - params.alpha)

    window = _window(t0, params.H)
    own_signal = ctx.state_exprs

    def signal(t: int):
        row = ctx.state_exprs(t)
        for nb in neighbors:
            p = nb.position_at(t)
            row += [LinExpr.constant(p[0]), LinExpr.constant(p[1])]
        return row

    goal_hard = False
    if window:
        sep = build_separation_formula(params.d1, params.d2, params.separation_mode, len(neighbors),
                                       len(window) - 1)
        if not isinstance(sep, StlTrue):
            encode_stl(model, ctx, sep, window[0], signal, require=True)

        counts = {t: occupancy_counts([nb.position_at(t) for nb in neighbors], grid) for t in window}
        encode_spatel(model, ctx, patterns, counts, window, require=True)

        if enforce_goal and ctx.last_step >= params.T_f > t0:
            goal_f = build_goal_formula(goal.half_planes, params.T_f - window[0])
            encode_stl(model, ctx, goal_f, window[0], own_signal, require=True)
            goal_hard = True

    logger.debug("agent %d t=%d: %d vars, %d rows, %d binaries, %d neighbors", agent_id, t0,
                 model.num_vars, model.num_constraints, len(model.binaries()), len(neighbors))
    if dump_dir is not None:
        dump_dir = Path(dump_dir)
        dump_dir.mkdir(parents=True, exist_ok=True)
        (dump_dir / f"agent{agent_id}_t{t0}.lp").write_text(dump_lp(model), encoding="utf-8")
    return AgentProblem(model, ctx, neighbors, goal_hard, j1, j2)


def decode_plan(problem: AgentProblem, solution: Solution) -> Tuple[np.ndarray, np.ndarray]:
    """입력을 읽고 상태는 동역학 재귀로 다시 계산 (잔차 0)"""
    ctx = problem.ctx
    am = ctx.agent
    inputs = np.array([[solution.value(u[k]) for k in range(2)] for u in ctx.inputs], dtype=float)
    inputs = np.clip(inputs.reshape(-1, 2), -am.u_max, am.u_max)
    states = [ctx.x0.copy()]
    for u in inputs:
        states.append(am.step(states[-1], u))
    return np.array(states), inputs
