"""
분산 우선순위 MPC 루프
- 주기마다: 우선순위 추첨 → 이웃 탐색 → 우선순위 순으로 계획 → 방송 → 첫 입력 실행
- 같은 의존 레벨의 에이전트는 병렬로 풀 수 있음 (결과는 순차 실행과 동일)
- 비실현 시 단계적 fallback
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from encoder.agent import AgentModel, EncodingError
from encoder.assemble import (
    EncodingParams, GoalRegion, NeighborView, assemble_agent_problem, decode_plan,
)
from logic.formulas import TsslFormula
from milp.bnb import DEFAULT_NODE_LIMIT, solve_milp
from milp.model import SolveStatus
from qts.comm import PathLossParams, agent_comm_matrix
from qts.grid import Grid

from .world import AgentStatus, Plan, PlanningError, WorldState, assign_priorities, neighbor_set, step_world

logger = logging.getLogger(__name__)

TIER_FULL = "full"
TIER_NO_GOAL = "no-goal"
TIER_HOLD = "hold"


@dataclass(frozen=True)
class AgentSpec:
    agent_id: int
    x0: Tuple[float, float, float, float]
    goal: GoalRegion


@dataclass(frozen=True)
class MissionSetup:
    """한 번의 실행 동안 변하지 않는 환경"""
    agent_model: AgentModel
    grid: Grid
    capacity: np.ndarray
    patterns: Tuple[TsslFormula, ...]
    agents: Tuple[AgentSpec, ...]
    path_loss: PathLossParams = PathLossParams()


@dataclass(frozen=True)
class PlannerParams:
    encoding: EncodingParams = EncodingParams()
    neighbor_radius: float = 40.0
    seed: int = 0
    node_limit: int = DEFAULT_NODE_LIMIT
    lower_priority_mode: str = "stale"
    workers: int = 1
    record_wall_time: bool = False
    dump_dir: Optional[Path] = None


@dataclass
class PeriodTrace:
    step: int
    priorities: List[int]
    neighbors: Dict[int, List[int]]
    levels: Dict[int, int]
    assembly_order: List[int]
    plans: Dict[int, Plan]
    failures: List[str] = field(default_factory=list)


@dataclass
class RunTrace:
    periods: List[PeriodTrace]
    states: List[Dict[int, np.ndarray]]
    statuses: List[Dict[int, str]]
    inputs: List[Dict[int, Optional[np.ndarray]]]
    arrived_at: Dict[int, Optional[int]]
    complete: bool


# ============================================================
# 한 에이전트 계획
# ============================================================

def _neighbor_views(world: WorldState, i: int, neighbors: Sequence[int], rank: Dict[int, int],
                    fresh: Dict[int, Plan], setup: MissionSetup, params: PlannerParams) -> List[NeighborView]:
    views = []
    for j in neighbors:
        rec = world.agents[j]
        comm = agent_comm_matrix(rec.position, setup.grid, setup.path_loss)
        if rec.status is AgentStatus.ARRIVED:
            views.append(NeighborView(j, {world.t: rec.position}, comm))
            continue
        if rank[j] < rank[i]:
            if j not in fresh:
                raise PlanningError(f"agent {i} planned before higher-priority neighbor {j}")
            views.append(NeighborView(j, fresh[j].positions(), comm))
            continue
        if params.lower_priority_mode == "ignore":
            continue
        positions = {world.t: rec.position}
        if rec.plan is not None:
            positions.update({s: p for s, p in rec.plan.positions().items() if s > world.t})
        views.append(NeighborView(j, positions, comm))
    return views


def _hold_plan(world: WorldState, i: int, am: AgentModel, H: int, reason: str) -> Plan:
    states = [world.agents[i].state.copy()]
    inputs = np.zeros((max(H - 1, 0), 2))
    for u in inputs:
        states.append(am.step(states[-1], u))
    return Plan(i, world.t, np.array(states), inputs, float("nan"), reason, TIER_HOLD)


def plan_agent(world: WorldState, i: int, setup: MissionSetup, params: PlannerParams,
               rank: Dict[int, int], neighbors: Sequence[int], fresh: Dict[int, Plan]) -> Tuple[Plan, List[str]]:
    """fallback: 전체 → 목표 창 제거 → 무입력 유지. 분리 조건과 SpaTeL 패턴은 모든 단계에서 유지"""
    rec = world.agents[i]
    enc = params.encoding
    failures = []
    tiers = [(TIER_FULL, True), (TIER_NO_GOAL, False)]
    last_status = "infeasible"
    goal_was_hard = True
    views = _neighbor_views(world, i, neighbors, rank, fresh, setup, params)
    for tier, enforce_goal in tiers:
        if tier == TIER_NO_GOAL and not goal_was_hard:
            continue
        try:
            problem = assemble_agent_problem(
                i, rec.state, world.t, rec.goal, setup.agent_model, setup.grid, setup.capacity,
                setup.patterns, views, enc, enforce_goal=enforce_goal, dump_dir=params.dump_dir,
            )
        except EncodingError as e:
            failures.append(f"agent {i} t={world.t} {tier}: {e}")
            logger.warning("agent %d t=%d: encoding failed (%s)", i, world.t, e)
            continue
        if tier == TIER_FULL:
            goal_was_hard = problem.goal_hard
        solution = solve_milp(problem.model, params.node_limit)
        last_status = solution.status.value
        if solution.status is SolveStatus.OPTIMAL:
            states, inputs = decode_plan(problem, solution)
            wall = solution.stats.wall_time if params.record_wall_time else 0.0
            plan = Plan(i, world.t, states, inputs, float(solution.objective), last_status, tier,
                        solution.stats.nodes, solution.stats.iterations, wall, problem.goal_hard)
            return plan, failures
        failures.append(f"agent {i} t={world.t} {tier}: {last_status}")
        logger.warning("agent %d t=%d: %s model is %s, falling back", i, world.t, tier, last_status)
    failures.append(f"agent {i} t={world.t} hold: zero-input plan")
    return _hold_plan(world, i, setup.agent_model, enc.H, last_status), failures


# ============================================================
# 주기 스케줄링
# ============================================================

def dependency_levels(priorities: Sequence[int], neighbors: Dict[int, List[int]]) -> Dict[int, int]:
    """level(i) = 1 + max level(상위 우선순위 이웃), 없으면 0"""
    rank = {a: k for k, a in enumerate(priorities)}
    levels: Dict[int, int] = {}
    for i in priorities:
        above = [levels[j] for j in neighbors[i] if j in rank and rank[j] < rank[i]]
        levels[i] = 1 + max(above) if above else 0
    return levels


def run_period(world: WorldState, setup: MissionSetup, params: PlannerParams) -> PeriodTrace:
    priorities = assign_priorities(world)
    rank = {a: k for k, a in enumerate(priorities)}
    neighbors = {i: neighbor_set(world, i, params.neighbor_radius) for i in priorities}
    levels = dependency_levels(priorities, neighbors)
    order = sorted(priorities, key=lambda a: (levels[a], rank[a]))
    trace = PeriodTrace(world.t, priorities, neighbors, levels, order, {})
    logger.info("t=%d active=%d priorities=%s", world.t, len(priorities), priorities)

    by_level: Dict[int, List[int]] = {}
    for a in order:
        by_level.setdefault(levels[a], []).append(a)

    def solve(a):
        return plan_agent(world, a, setup, params, rank, neighbors[a], trace.plans)

    pool = ThreadPoolExecutor(max_workers=params.workers) if params.workers > 1 else None
    try:
        for level in sorted(by_level):
            group = by_level[level]
            if pool is not None and len(group) > 1:
                results = list(pool.map(solve, group))
            else:
                results = [solve(a) for a in group]
            # 방송은 우선순위 순서로
            for a, (plan, failures) in zip(group, results):
                trace.plans[a] = plan
                trace.failures.extend(failures)
    finally:
        if pool is not None:
            pool.shutdown()
    return trace


def run(setup: MissionSetup, params: PlannerParams) -> RunTrace:
    T_f = params.encoding.T_f
    world = WorldState.initial([(a.agent_id, a.x0, a.goal) for a in setup.agents], params.seed)
    periods: List[PeriodTrace] = []
    states = [{i: r.state.copy() for i, r in world.agents.items()}]
    statuses = [{i: r.status.value for i, r in world.agents.items()}]
    inputs: List[Dict[int, Optional[np.ndarray]]] = []

    while world.active_ids() and world.t < T_f:
        period = run_period(world, setup, params)
        periods.append(period)
        inputs.append({i: (period.plans[i].first_input().copy() if i in period.plans else None)
                       for i in world.agents})
        step_world(world, period.plans, setup.agent_model)
        states.append({i: r.state.copy() for i, r in world.agents.items()})
        statuses.append({i: r.status.value for i, r in world.agents.items()})

    inputs.append({i: None for i in world.agents})
    complete = not world.active_ids()
    if not complete:
        logger.warning("time limit %d reached with agents %s still active", T_f, world.active_ids())
    arrived = {i: r.arrived_at for i, r in world.agents.items()}
    return RunTrace(periods, states, statuses, inputs, arrived, complete)
