"""
시나리오 파일 로드 / 검증 / 변환
- JSON 스키마 오류와 불변식 위반을 필드 경로와 함께 모두 모아서 보고
- 번들 시나리오는 이름만으로 찾음 (SCENARIO_DIR/<name>.json)
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from encoder.agent import AgentModel, EncodingError
from encoder.assemble import EncodingParams, GoalRegion
from planner.mpc import AgentSpec, MissionSetup, PlannerParams
from qts.comm import PathLossParams, base_station_matrix
from qts.grid import Grid, GridError
from qts.patterns import generate_patterns

from . import config
from .models import CapacitySource, GoalConfig, Params, Scenario

logger = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """시나리오 오류 (errors: '경로: 메시지' 목록)"""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


# ============================================================
# 파일 입출력
# ============================================================

def list_scenarios(directory: Optional[Union[str, Path]] = None) -> List[str]:
    directory = Path(directory or config.SCENARIO_DIR)
    if not directory.is_dir():
        return []
    return sorted(p.stem for p in directory.glob("*.json"))


def resolve_path(name_or_path: Union[str, Path]) -> Path:
    path = Path(name_or_path)
    if path.is_file():
        return path
    bundled = Path(config.SCENARIO_DIR) / f"{path.stem}.json"
    if bundled.is_file():
        return bundled
    raise ScenarioError([f"{name_or_path}: no such scenario file or bundled scenario"])


def _schema_errors(e: ValidationError) -> List[str]:
    out = []
    for err in e.errors():
        loc = ""
        for part in err["loc"]:
            loc += f"[{part}]" if isinstance(part, int) else (f".{part}" if loc else str(part))
        out.append(f"{loc or '<root>'}: {err['msg']}")
    return out


def parse_scenario(text: str) -> Scenario:
    try:
        scenario = Scenario.model_validate_json(text)
    except ValidationError as e:
        raise ScenarioError(_schema_errors(e)) from e
    errors = validate_scenario(scenario)
    if errors:
        raise ScenarioError(errors)
    return scenario


def load_scenario(name_or_path: Union[str, Path]) -> Scenario:
    path = resolve_path(name_or_path)
    logger.info("loading scenario %s", path)
    return parse_scenario(path.read_text(encoding="utf-8"))


def dump_scenario(scenario: Scenario) -> str:
    return scenario.model_dump_json(indent=2, by_alias=True)


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_scenario(scenario) + "\n", encoding="utf-8")
    return path


def apply_overrides(scenario: Scenario, seed: Optional[int] = None, alpha: Optional[float] = None,
                    horizon: Optional[int] = None) -> Scenario:
    """CLI 덮어쓰기, Params 검증을 다시 거침"""
    updates: Dict[str, object] = {}
    if seed is not None:
        updates["seed"] = seed
    if alpha is not None:
        updates["alpha"] = alpha
    if horizon is not None:
        updates["H"] = horizon
    if not updates:
        return scenario
    raw = scenario.params.model_dump(by_alias=True)
    raw.update({("lambda" if k == "lam" else k): v for k, v in updates.items()})
    try:
        params = Params.model_validate(raw)
    except ValidationError as e:
        raise ScenarioError([f"params.{m}" for m in _schema_errors(e)]) from e
    return scenario.model_copy(update={"params": params})


# ============================================================
# 변환
# ============================================================

def build_grid(scenario: Scenario) -> Grid:
    ws = scenario.workspace
    return Grid(tuple(ws.origin), float(ws.side), int(ws.depth))


def build_agent_model(scenario: Scenario) -> AgentModel:
    dyn = scenario.dynamics
    return AgentModel(np.array(dyn.A_d, dtype=float), np.array(dyn.B_d, dtype=float),
                      float(dyn.u_max), float(dyn.v_max))


def build_path_loss(scenario: Scenario) -> PathLossParams:
    pl = scenario.path_loss
    return PathLossParams(pl.q_max, pl.d0, pl.d_cut, pl.shadow_penalty)


def build_capacity(scenario: Scenario, grid: Optional[Grid] = None) -> np.ndarray:
    grid = grid or build_grid(scenario)
    if scenario.capacity_source is CapacitySource.GENERATE:
        return base_station_matrix(scenario.stations, scenario.obstacles, grid, build_path_loss(scenario))
    return grid.check_matrix(scenario.capacity, "capacity").astype(int)


def build_goal(goal: GoalConfig) -> GoalRegion:
    if goal.half_planes:
        planes = tuple((tuple(h.a), float(h.b)) for h in goal.half_planes)
        return GoalRegion(planes, (float(goal.center[0]), float(goal.center[1])))
    return GoalRegion.box(goal.center, goal.half_width)


def build_setup(scenario: Scenario) -> MissionSetup:
    grid = build_grid(scenario)
    capacity = build_capacity(scenario, grid)
    agents = tuple(AgentSpec(a.id, tuple(float(x) for x in a.x0), build_goal(a.goal))
                   for a in sorted(scenario.agents, key=lambda a: a.id))
    return MissionSetup(build_agent_model(scenario), grid, capacity, generate_patterns(capacity),
                        agents, build_path_loss(scenario))


def build_encoding_params(scenario: Scenario) -> EncodingParams:
    p = scenario.params
    return EncodingParams(
        H=p.H, L=p.L, T_f=p.T_f, lam=p.lam, alpha=p.alpha, d1=p.d1, d2=p.d2,
        q=tuple(p.q), r=tuple(p.r), separation_mode=p.separation_mode,
    )


def build_planner_params(scenario: Scenario, workers: int = 1, record_wall_time: bool = False,
                         node_limit: Optional[int] = None, dump_dir: Optional[Path] = None) -> PlannerParams:
    p = scenario.params
    limit = min(p.node_limit, node_limit) if node_limit else p.node_limit
    return PlannerParams(
        encoding=build_encoding_params(scenario),
        neighbor_radius=p.neighbor_radius,
        seed=p.seed,
        node_limit=limit,
        lower_priority_mode=p.lower_priority_mode.value,
        workers=max(1, workers),
        record_wall_time=record_wall_time,
        dump_dir=dump_dir,
    )


# ============================================================
# 불변식 검사
# ============================================================

def _goal_errors(k: int, goal: GoalConfig, grid: Grid) -> List[str]:
    where = f"agents[{k}].goal"
    if goal.half_width is None and not goal.half_planes:
        return [f"{where}: give either half_width or half_planes"]
    errors = []
    if goal.half_planes:
        region = build_goal(goal)
        if not region.strictly_contains(goal.center):
            errors.append(f"{where}.center: must lie strictly inside the half-planes")
        if not grid.contains(goal.center):
            errors.append(f"{where}.center: outside the workspace")
        return errors
    cx, cy = goal.center
    w = goal.half_width
    if cx - w < grid.west or cx + w > grid.east or cy - w < grid.south or cy + w > grid.north:
        errors.append(f"{where}: box {goal.center} ± {w} is not inside the workspace")
    return errors


def validate_scenario(scenario: Scenario) -> List[str]:
    """모든 불변식 위반을 모아서 반환 (비어 있으면 유효)"""
    errors: List[str] = []
    try:
        grid = build_grid(scenario)
    except GridError as e:
        return [f"workspace: {e}"]
    side = grid.n

    try:
        am = build_agent_model(scenario)
        if not am.is_controllable():
            errors.append("dynamics: (A_d, B_d) is not controllable")
    except EncodingError as e:
        errors.append(f"dynamics: {e}")

    for k, (m, n) in enumerate(scenario.obstacles):
        if not (0 <= m < side and 0 <= n < side):
            errors.append(f"obstacles[{k}]: cell ({m}, {n}) outside the {side}x{side} grid")

    capacity = None
    if scenario.capacity_source is CapacitySource.GENERATE:
        if not scenario.stations:
            errors.append("stations: capacity_source 'generate' needs at least one station")
        elif not any(e.startswith("obstacles[") for e in errors):
            try:
                capacity = build_capacity(scenario, grid)
            except GridError as e:
                errors.append(f"path_loss: {e}")
    elif scenario.capacity is None:
        errors.append("capacity: required when capacity_source is 'matrix'")
    else:
        rows = scenario.capacity
        if len(rows) != side or any(len(r) != side for r in rows):
            errors.append(f"capacity: expected a {side}x{side} matrix for depth {grid.depth}")
        else:
            capacity = np.array(rows, dtype=int)
            if (capacity < 0).any():
                errors.append("capacity: entries must be nonnegative")

    if capacity is not None:
        obstacles = {tuple(c) for c in scenario.obstacles}
        for m, n in grid.cells():
            if (m, n) in obstacles and capacity[m, n] != 0:
                errors.append(f"capacity[{m}][{n}]: obstacle cell must have zero capacity")
            elif (m, n) not in obstacles and capacity[m, n] == 0:
                errors.append(f"obstacles: zero-capacity cell ({m}, {n}) is not listed")

    seen = set()
    counts = np.zeros((side, side), dtype=int)
    for k, agent in enumerate(scenario.agents):
        if agent.id in seen:
            errors.append(f"agents[{k}].id: duplicate id {agent.id}")
        seen.add(agent.id)
        p = agent.x0[:2]
        if not grid.contains(p):
            errors.append(f"agents[{k}].x0: position {tuple(p)} outside the workspace")
        else:
            counts[grid.cell_of(p)] += 1
        errors.extend(_goal_errors(k, agent.goal, grid))

    if capacity is not None and capacity.shape == counts.shape:
        for m, n in np.argwhere(counts > capacity):
            errors.append(f"agents: cell ({m}, {n}) starts with {counts[m, n]} agents "
                          f"but its capacity is {capacity[m, n]}")

    if scenario.params.dt != 1.0:
        logger.debug("scenario %s uses dt=%s; A_d/B_d are taken as already discretized",
                     scenario.name, scenario.params.dt)
    return errors
