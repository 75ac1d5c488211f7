"""
실행 기록 사후 검증
- 상태표의 위치만으로 판정 (솔버 출력은 쓰지 않음)
- 에이전트별 STL: 목표 도달 / 분리 조건 (다른 모든 에이전트 기준)
- 전역 SpaTeL: 점유 QTS 궤적에서 φ 평가, 실패 시 첫 위반 단계와 잎
- 통신 품질 시계열 / 풀이 통계
"""
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from logic.builders import build_goal_formula, build_separation_formula
from logic.formulas import Signal
from logic.monitor import eval_stl
from qts.comm import agent_comm_matrix
from qts.grid import occupancy_counts
from qts.tree import QtsTrace, build_global_formula, eval_spatel, first_violation, leaf_path

from .models import AgentVerdict, Report, RunLog, Scenario, SolveSummary, Violation
from .scenario import build_goal, build_path_loss, build_setup

logger = logging.getLogger(__name__)


class RunLogError(ValueError):
    """잘린 기록 / 시나리오와 맞지 않는 기록"""


# ============================================================
# 기록 → 궤적
# ============================================================

def realized_states(log: RunLog, scenario: Scenario) -> List[Dict[int, np.ndarray]]:
    """단계별 {agent: [p1, p2, v1, v2]}, 기록 일관성 검사 포함"""
    ids = sorted(a.id for a in scenario.agents)
    T_f = scenario.params.T_f
    by_step: Dict[int, Dict[int, np.ndarray]] = {}
    for row in log.states:
        if row.agent not in ids:
            raise RunLogError(f"log has agent {row.agent} which the scenario does not define")
        step = by_step.setdefault(row.step, {})
        if row.agent in step:
            raise RunLogError(f"duplicate state row for agent {row.agent} at step {row.step}")
        step[row.agent] = np.array([row.p1, row.p2, row.v1, row.v2], dtype=float)

    if not ids:
        return [{}]
    if not by_step:
        raise RunLogError("log has no state rows")
    last = max(by_step)
    for t in range(last + 1):
        missing = [i for i in ids if i not in by_step.get(t, {})]
        if missing:
            raise RunLogError(f"step {t} is missing agents {missing}")
    if last > T_f:
        raise RunLogError(f"log runs to step {last}, past the time limit {T_f}")
    if len(log.periods) != last:
        raise RunLogError(f"log has {len(log.periods)} planning periods for {last} executed steps")
    if log.complete:
        pending = [i for i in ids if log.arrived_at.get(i) is None]
        if pending:
            raise RunLogError(f"log is marked complete but agents {pending} never arrived")
    elif last < T_f:
        raise RunLogError(f"log stops at step {last} before the time limit {T_f} with agents still active")
    return [by_step[t] for t in range(last + 1)]


def pad_states(states: List[Dict[int, np.ndarray]], T_f: int) -> List[Dict[int, np.ndarray]]:
    """T_f 까지 마지막 위치 유지 (속도 0)"""
    padded = list(states)
    while len(padded) < T_f + 1:
        padded.append({i: np.array([x[0], x[1], 0.0, 0.0]) for i, x in padded[-1].items()})
    return padded


def occupancy_trace(states: List[Dict[int, np.ndarray]], scenario: Scenario) -> List[np.ndarray]:
    grid = build_setup(scenario).grid
    return [occupancy_counts([x[:2] for _, x in sorted(step.items())], grid) for step in states]


# ============================================================
# 판정
# ============================================================

def agent_verdicts(states: List[Dict[int, np.ndarray]], scenario: Scenario,
                   arrived_at: Dict[int, Optional[int]]) -> List[AgentVerdict]:
    p = scenario.params
    ids = sorted(a.id for a in scenario.agents)
    goals = {a.id: build_goal(a.goal) for a in scenario.agents}
    verdicts = []
    for i in ids:
        others = [j for j in ids if j != i]
        rows = []
        for step in states:
            row = list(step[i])
            for j in others:
                row += [step[j][0], step[j][1]]
            rows.append(row)
        signal = Signal(rows)
        own = Signal([r[:4] for r in rows])
        goal_ok = eval_stl(build_goal_formula(goals[i].half_planes, p.T_f), own, 0)
        sep_f = build_separation_formula(p.d1, p.d2, p.separation_mode, len(others), p.T_f)
        sep_ok = True if not others else eval_stl(sep_f, signal, 0)
        verdicts.append(AgentVerdict(agent=i, goal=goal_ok, separation=sep_ok,
                                     phi=goal_ok and sep_ok, arrived_at=arrived_at.get(i)))
    return verdicts


def _violation(counts: List[np.ndarray], capacity: np.ndarray, depth: int) -> Optional[Violation]:
    found = first_violation(counts, capacity)
    if found is None:
        return None
    t, (m, n) = found
    path = [lb.value for lb in leaf_path(m, n, depth)]
    cap = int(capacity[m, n])
    return Violation(step=t, pattern="obstacle" if cap == 0 else path[0], cell=(m, n), path=path,
                     count=int(counts[t][m, n]), capacity=cap)


def comm_series(states: List[Dict[int, np.ndarray]], scenario: Scenario) -> Tuple[List[float], List[float]]:
    """단계별 Σ C[cell(p_i)] 와 Σ (C + Σ_j C'_j)[cell(p_i)]"""
    setup = build_setup(scenario)
    grid, cap = setup.grid, setup.capacity
    radius = scenario.params.neighbor_radius
    pl = build_path_loss(scenario)
    base, total = [], []
    for step in states:
        ids = sorted(step)
        cells = {i: grid.cell_of(step[i][:2]) for i in ids}
        comm = {i: agent_comm_matrix(step[i][:2], grid, pl) for i in ids}
        b = 0.0
        tot = 0.0
        for i in ids:
            c = float(cap[cells[i]])
            extra = sum(float(comm[j][cells[i]]) for j in ids
                        if j != i and math.dist(step[i][:2], step[j][:2]) < radius)
            b += c
            tot += c + extra
        base.append(b)
        total.append(tot)
    return base, total


def solve_summary(log: RunLog) -> SolveSummary:
    plans = [s for period in log.periods for s in period.plans]
    nodes = [s.nodes for s in plans]
    iters = [s.iterations for s in plans]
    walls = [s.wall_time for s in plans]
    tiers: Dict[str, int] = {}
    for s in plans:
        tiers[s.tier] = tiers.get(s.tier, 0) + 1
    return SolveSummary(
        periods=len(log.periods),
        plans=len(plans),
        mean_nodes=float(np.mean(nodes)) if nodes else 0.0,
        max_nodes=max(nodes) if nodes else 0,
        mean_iterations=float(np.mean(iters)) if iters else 0.0,
        median_wall_time=float(np.median(walls)) if walls else 0.0,
        tiers=dict(sorted(tiers.items())),
    )


def verify_log(log: RunLog, scenario: Optional[Scenario] = None) -> Report:
    """기록과 시나리오만의 순수 함수"""
    scenario = scenario or log.scenario
    log_ids = sorted(a.id for a in log.scenario.agents)
    if log_ids != sorted(a.id for a in scenario.agents):
        raise RunLogError(f"log agents {log_ids} do not match the scenario agents")
    T_f = scenario.params.T_f
    realized = realized_states(log, scenario)
    if not scenario.agents:
        return Report(scenario=scenario.name, complete=True, agents=[], global_spatel=True,
                      all_true=True, solve_stats=solve_summary(log), comm_base=[], comm_total=[],
                      comm_base_mean=0.0, comm_total_mean=0.0)

    if log.occupancy and len(log.occupancy) != len(realized):
        raise RunLogError(f"occupancy trace has {len(log.occupancy)} steps, state table {len(realized)}")
    states = pad_states(realized, T_f)
    counts = occupancy_trace(states, scenario)
    for t, logged in enumerate(log.occupancy):
        if not np.array_equal(np.asarray(logged), counts[t]):
            logger.warning("logged occupancy at step %d differs from the state table", t)
            break

    setup = build_setup(scenario)
    verdicts = agent_verdicts(states, scenario, log.arrived_at)
    phi = build_global_formula(setup.patterns, T_f)
    global_ok = eval_spatel(phi, QtsTrace.from_counts(counts), 0)
    violation = _violation(counts, setup.capacity, setup.grid.depth)
    if global_ok and violation is not None:
        logger.warning("global formula holds but the capacity check found step %d", violation.step)

    base, total = comm_series(realized, scenario)
    report = Report(
        scenario=scenario.name,
        complete=log.complete,
        agents=verdicts,
        global_spatel=global_ok,
        first_violation=violation,
        all_true=global_ok and all(v.phi for v in verdicts),
        solve_stats=solve_summary(log),
        comm_base=base,
        comm_total=total,
        comm_base_mean=float(np.mean(base)),
        comm_total_mean=float(np.mean(total)),
    )
    logger.info("verified %s: phi_i %d/%d, global %s", scenario.name,
                sum(v.phi for v in verdicts), len(verdicts), global_ok)
    return report
