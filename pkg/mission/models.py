"""
Pydantic 데이터 모델
- Scenario: 실험 설정 전체
- RunLog: 주기별 기록 + 단계별 상태표
- Report: 모니터 판정 결과
"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from encoder.agent import DEFAULT_A_D, DEFAULT_B_D
from logic.builders import SeparationMode


# ============================================================
# Scenario
# ============================================================

class Workspace(BaseModel):
    origin: Tuple[float, float] = (0.0, 0.0)
    side: float = Field(gt=0)
    depth: int = Field(ge=1)


class HalfPlaneConfig(BaseModel):
    """a·p + b <= 0"""
    a: Tuple[float, float]
    b: float


class GoalConfig(BaseModel):
    center: Tuple[float, float]
    half_width: Optional[float] = Field(default=None, gt=0)
    half_planes: Optional[List[HalfPlaneConfig]] = None


class AgentConfig(BaseModel):
    id: int
    x0: Tuple[float, float, float, float]
    goal: GoalConfig


class Dynamics(BaseModel):
    A_d: List[List[float]] = Field(default_factory=lambda: [list(r) for r in DEFAULT_A_D])
    B_d: List[List[float]] = Field(default_factory=lambda: [list(r) for r in DEFAULT_B_D])
    u_max: float = Field(default=2.0, gt=0)
    v_max: float = Field(default=8.0, gt=0)


class PathLossConfig(BaseModel):
    q_max: float = 6.0
    d0: Optional[float] = None
    d_cut: Optional[float] = None
    shadow_penalty: float = 2.0


class CapacitySource(str, Enum):
    MATRIX = "matrix"
    GENERATE = "generate"


class LowerPriorityMode(str, Enum):
    STALE = "stale"
    IGNORE = "ignore"


class Params(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    H: int = Field(default=5, ge=1)
    L: int = Field(default=8, ge=3)
    dt: float = Field(default=1.0, gt=0)
    T_f: int = Field(default=50, ge=1)
    lam: float = Field(default=0.005, ge=0, alias="lambda")
    alpha: float = Field(default=0.5, ge=0, le=1)
    d1: float = Field(default=1.0, gt=0)
    d2: float = Field(default=1.0, gt=0)
    q: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    r: Tuple[float, float] = (1.0, 1.0)
    separation_mode: SeparationMode = SeparationMode.DISJUNCTIVE
    neighbor_radius: float = Field(default=40.0, gt=0)
    seed: int = 0
    node_limit: int = Field(default=1000000, ge=1)
    lower_priority_mode: LowerPriorityMode = LowerPriorityMode.STALE


class Scenario(BaseModel):
    name: str
    description: str = ""
    workspace: Workspace
    capacity_source: CapacitySource = CapacitySource.MATRIX
    capacity: Optional[List[List[int]]] = None
    obstacles: List[Tuple[int, int]] = []
    stations: List[Tuple[float, float]] = []
    path_loss: PathLossConfig = PathLossConfig()
    agents: List[AgentConfig] = []
    dynamics: Dynamics = Dynamics()
    params: Params = Params()


# ============================================================
# RunLog
# ============================================================

class AgentPlanSummary(BaseModel):
    agent: int
    tier: str
    solver_status: str
    objective: Optional[float] = None
    nodes: int = 0
    iterations: int = 0
    wall_time: float = 0.0
    goal_hard: bool = False
    first_input: Tuple[float, float]
    states: List[Tuple[float, float, float, float]]


class PeriodRecord(BaseModel):
    step: int
    priorities: List[int]
    neighbors: Dict[int, List[int]]
    levels: Dict[int, int]
    assembly_order: List[int]
    plans: List[AgentPlanSummary]
    failures: List[str] = []


class StateRow(BaseModel):
    step: int
    agent: int
    p1: float
    p2: float
    v1: float
    v2: float
    u1: Optional[float] = None
    u2: Optional[float] = None
    cell_m: int
    cell_n: int
    status: str


class RunLog(BaseModel):
    scenario: Scenario
    complete: bool
    arrived_at: Dict[int, Optional[int]]
    periods: List[PeriodRecord]
    states: List[StateRow]
    occupancy: List[List[List[int]]]


# ============================================================
# Report
# ============================================================

class AgentVerdict(BaseModel):
    agent: int
    goal: bool
    separation: bool
    phi: bool
    arrived_at: Optional[int] = None


class Violation(BaseModel):
    """용량을 처음 넘은 단계와 잎 셀 (pattern: obstacle 또는 NW/NE/SW/SE)"""
    step: int
    pattern: str
    cell: Tuple[int, int]
    path: List[str]
    count: int
    capacity: int


class SolveSummary(BaseModel):
    periods: int
    plans: int
    mean_nodes: float
    max_nodes: int
    mean_iterations: float
    median_wall_time: float
    tiers: Dict[str, int]


class Report(BaseModel):
    scenario: str
    complete: bool
    agents: List[AgentVerdict]
    global_spatel: bool
    first_violation: Optional[Violation] = None
    all_true: bool
    solve_stats: SolveSummary
    comm_base: List[float]
    comm_total: List[float]
    comm_base_mean: float
    comm_total_mean: float
