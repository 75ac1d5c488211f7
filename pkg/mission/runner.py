"""
실행 오케스트레이션
- 시나리오 → 플래너 실행 → RunLog → 독립 검증 → Report
- 산출물: runlog.json, states.csv, report.json
"""
import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from planner.mpc import MissionSetup, RunTrace, run
from planner.world import Plan
from qts.grid import occupancy_counts

from . import config
from .models import AgentPlanSummary, PeriodRecord, Report, RunLog, Scenario, StateRow
from .scenario import apply_overrides, build_planner_params, build_setup, load_scenario
from .verify import RunLogError, verify_log

logger = logging.getLogger(__name__)

STATE_COLUMNS = ("step", "agent", "p1", "p2", "v1", "v2", "u1", "u2", "cell_m", "cell_n", "status")


@dataclass
class RunResult:
    log: RunLog
    report: Report
    out_dir: Optional[Path] = None


# ============================================================
# RunTrace → RunLog
# ============================================================

def _plan_summary(plan: Plan) -> AgentPlanSummary:
    objective = None if math.isnan(plan.objective) else float(plan.objective)
    u = plan.first_input()
    return AgentPlanSummary(
        agent=plan.agent_id,
        tier=plan.tier,
        solver_status=plan.solver_status,
        objective=objective,
        nodes=int(plan.nodes),
        iterations=int(plan.iterations),
        wall_time=float(plan.wall_time),
        goal_hard=bool(plan.goal_hard),
        first_input=(float(u[0]), float(u[1])),
        states=[tuple(float(v) for v in x) for x in plan.states],
    )


def to_runlog(trace: RunTrace, scenario: Scenario, setup: MissionSetup) -> RunLog:
    periods = [
        PeriodRecord(
            step=p.step,
            priorities=list(p.priorities),
            neighbors={i: sorted(js) for i, js in sorted(p.neighbors.items())},
            levels=dict(sorted(p.levels.items())),
            assembly_order=list(p.assembly_order),
            plans=[_plan_summary(p.plans[i]) for i in p.priorities],
            failures=list(p.failures),
        )
        for p in trace.periods
    ]
    rows = []
    occupancy = []
    for t, step in enumerate(trace.states):
        for i in sorted(step):
            x = step[i]
            u = trace.inputs[t].get(i)
            m, n = setup.grid.cell_of(x[:2])
            rows.append(StateRow(
                step=t, agent=i,
                p1=float(x[0]), p2=float(x[1]), v1=float(x[2]), v2=float(x[3]),
                u1=None if u is None else float(u[0]),
                u2=None if u is None else float(u[1]),
                cell_m=m, cell_n=n, status=trace.statuses[t][i],
            ))
        counts = occupancy_counts([step[i][:2] for i in sorted(step)], setup.grid)
        occupancy.append(counts.tolist())
    return RunLog(
        scenario=scenario,
        complete=trace.complete,
        arrived_at=dict(sorted(trace.arrived_at.items())),
        periods=periods,
        states=rows,
        occupancy=occupancy,
    )


# ============================================================
# 직렬화
# ============================================================

def dump_runlog(log: RunLog) -> str:
    return log.model_dump_json(indent=1, by_alias=True)


def dump_report(report: Report) -> str:
    return report.model_dump_json(indent=2)


def states_csv(log: RunLog) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STATE_COLUMNS)
    for row in log.states:
        data = row.model_dump()
        writer.writerow(["" if data[c] is None else data[c] for c in STATE_COLUMNS])
    return buf.getvalue()


def load_runlog(path: Union[str, Path]) -> RunLog:
    try:
        return RunLog.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise RunLogError(f"{path}: not a valid run log ({e.error_count()} errors)") from e


def write_outputs(log: RunLog, report: Report, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "runlog.json").write_text(dump_runlog(log) + "\n", encoding="utf-8")
    (out_dir / "states.csv").write_text(states_csv(log), encoding="utf-8")
    (out_dir / "report.json").write_text(dump_report(report) + "\n", encoding="utf-8")
    logger.info("wrote runlog.json, states.csv, report.json to %s", out_dir)
    return out_dir


# ============================================================
# 명령
# ============================================================

def execute(scenario: Scenario, workers: int = config.PLANNER_WORKERS,
            dump_dir: Optional[Path] = None) -> RunResult:
    """파일을 쓰지 않는 실행 + 검증 (API 에서도 사용)"""
    setup = build_setup(scenario)
    params = build_planner_params(scenario, workers=workers, record_wall_time=config.RECORD_WALL_TIME,
                                  node_limit=config.SOLVER_NODE_LIMIT, dump_dir=dump_dir)
    logger.info("running %s: %d agents, H=%d, T_f=%d, alpha=%.2f, seed=%d", scenario.name,
                len(setup.agents), params.encoding.H, params.encoding.T_f, params.encoding.alpha,
                params.seed)
    trace = run(setup, params)
    # 검증은 직렬화된 기록에서 (cmd_verify 와 같은 입력)
    log = RunLog.model_validate_json(dump_runlog(to_runlog(trace, scenario, setup)))
    return RunResult(log, verify_log(log))


def cmd_run(scenario_path: Union[str, Path], seed: Optional[int] = None, alpha: Optional[float] = None,
            horizon: Optional[int] = None, out_dir: Optional[Union[str, Path]] = None,
            workers: int = config.PLANNER_WORKERS) -> RunResult:
    scenario = apply_overrides(load_scenario(scenario_path), seed=seed, alpha=alpha, horizon=horizon)
    out = Path(out_dir) if out_dir else Path(config.OUTPUT_DIR) / scenario.name
    dump_dir = out / "models" if config.DUMP_MODELS else None
    result = execute(scenario, workers=workers, dump_dir=dump_dir)
    result.out_dir = write_outputs(result.log, result.report, out)
    return result


def cmd_verify(log_path: Union[str, Path], scenario_path: Optional[Union[str, Path]] = None) -> Report:
    log = load_runlog(log_path)
    scenario = load_scenario(scenario_path) if scenario_path else log.scenario
    if scenario_path and scenario.params.T_f != log.scenario.params.T_f:
        logger.warning("scenario T_f %d differs from the logged run's %d",
                       scenario.params.T_f, log.scenario.params.T_f)
    return verify_log(log, scenario)
