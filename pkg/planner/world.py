"""
분산 MPC 세계 상태
- 에이전트 상태 / 상태 플래그 / 마지막 방송 계획
- 우선순위 추첨, 이웃 집합, 한 단계 진행
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from encoder.agent import AgentModel
from encoder.assemble import GoalRegion

logger = logging.getLogger(__name__)


class PlanningError(RuntimeError):
    """계획 순서/입력 오류"""


class AgentStatus(str, Enum):
    ACTIVE = "active"
    ARRIVED = "arrived"


@dataclass(frozen=True)
class Plan:
    agent_id: int
    start: int
    states: np.ndarray
    inputs: np.ndarray
    objective: float
    solver_status: str
    tier: str
    nodes: int = 0
    iterations: int = 0
    wall_time: float = 0.0
    goal_hard: bool = False

    def positions(self) -> Dict[int, Tuple[float, float]]:
        return {self.start + s: (float(x[0]), float(x[1])) for s, x in enumerate(self.states)}

    def first_input(self) -> np.ndarray:
        return self.inputs[0] if len(self.inputs) else np.zeros(2)


@dataclass
class AgentRecord:
    agent_id: int
    state: np.ndarray
    goal: GoalRegion
    status: AgentStatus = AgentStatus.ACTIVE
    plan: Optional[Plan] = None
    arrived_at: Optional[int] = None

    @property
    def position(self) -> Tuple[float, float]:
        return float(self.state[0]), float(self.state[1])


@dataclass
class WorldState:
    t: int
    agents: Dict[int, AgentRecord]
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    @classmethod
    def initial(cls, agents: Sequence[Tuple[int, Sequence[float], GoalRegion]], seed: int) -> "WorldState":
        records = {}
        for agent_id, x0, goal in sorted(agents, key=lambda a: a[0]):
            rec = AgentRecord(agent_id, np.asarray(x0, dtype=float), goal)
            if goal.strictly_contains(rec.position):
                rec.status = AgentStatus.ARRIVED
                rec.arrived_at = 0
            records[agent_id] = rec
        return cls(0, records, np.random.default_rng(seed))

    def active_ids(self) -> List[int]:
        return [i for i, a in self.agents.items() if a.status is AgentStatus.ACTIVE]

    def positions(self) -> Dict[int, Tuple[float, float]]:
        return {i: a.position for i, a in self.agents.items()}


def assign_priorities(world: WorldState) -> List[int]:
    """활성 에이전트의 무작위 순열, 앞쪽이 높은 우선순위"""
    active = sorted(world.active_ids())
    if not active:
        raise PlanningError("no active agents to prioritize")
    order = world.rng.permutation(len(active))
    return [active[k] for k in order]


def neighbor_set(world: WorldState, i: int, radius: float) -> List[int]:
    if radius <= 0:
        raise PlanningError("neighbor radius must be positive")
    p = world.agents[i].position
    return [j for j, a in world.agents.items() if j != i and math.dist(p, a.position) < radius]


def step_world(world: WorldState, plans: Dict[int, Plan], am: AgentModel) -> WorldState:
    """활성 에이전트는 계획의 첫 입력을 적용, 목표에 들어가면 arrived"""
    for i in world.active_ids():
        if i not in plans:
            raise PlanningError(f"agent {i} has no plan for step {world.t}")
    world.t += 1
    for i, rec in world.agents.items():
        if rec.status is AgentStatus.ARRIVED:
            rec.state = np.array([rec.state[0], rec.state[1], 0.0, 0.0])
            continue
        plan = plans[i]
        rec.plan = plan
        rec.state = am.step(rec.state, plan.first_input())
        if rec.goal.strictly_contains(rec.position):
            rec.status = AgentStatus.ARRIVED
            rec.arrived_at = world.t
            logger.info("agent %d arrived at step %d", i, world.t)
    return world
