# -*- coding: utf-8 -*-
"""
통신 인지 다중 에이전트 모션 플래너 (분산 MPC + STL/SpaTeL MILP)
- run      : 시나리오 실행 → runlog.json / states.csv / report.json
- verify   : 기록 사후 검증
- plot     : SVG 궤적 / 점유 히트맵
- scenarios: 번들 시나리오 목록
- serve    : FastAPI 서버
종료 코드: 0 모든 판정 참, 1 거짓 판정 있음, 2 입력 오류
"""

import logging
import sys
from pathlib import Path

import click
import uvicorn

from mission import config
from mission.models import Report
from mission.plot import cmd_plot
from mission.runner import cmd_run, cmd_verify, dump_report, load_runlog
from mission.scenario import ScenarioError, list_scenarios
from mission.verify import RunLogError

logging.basicConfig(
    level=getattr(logging, config.LOG_LEVEL, logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FALSE_VERDICT = 1
EXIT_INPUT_ERROR = 2


def _print_report(report: Report):
    print("=" * 80)
    print(f"📋 {report.scenario}: {'모든 판정 참' if report.all_true else '거짓 판정 있음'}")
    print("=" * 80)
    for v in report.agents:
        mark = "✅" if v.phi else "❌"
        print(f"   {mark} agent {v.agent:>3}  goal={v.goal!s:<5}  separation={v.separation!s:<5}  "
              f"arrived_at={v.arrived_at}")
    print(f"   {'✅' if report.global_spatel else '❌'} global SpaTeL φ = {report.global_spatel}")
    if report.first_violation is not None:
        fv = report.first_violation
        print(f"   ⚠️  first violation: step {fv.step}, cell {tuple(fv.cell)} ({'/'.join(fv.path)}), "
              f"{fv.count} agents > capacity {fv.capacity}")
    stats = report.solve_stats
    print(f"   • periods={stats.periods} plans={stats.plans} mean_nodes={stats.mean_nodes:.1f} "
          f"tiers={stats.tiers}")
    print(f"   • comm quality mean: base={report.comm_base_mean:.3f} total={report.comm_total_mean:.3f}")
    print("=" * 80)


def _exit_for(report: Report):
    sys.exit(EXIT_OK if report.all_true else EXIT_FALSE_VERDICT)


@click.group()
def cli():
    """Communication-aware multi-agent planner"""


@cli.command()
@click.argument("scenario")
@click.option("--seed", type=int, default=None, help="priority RNG seed")
@click.option("--alpha", type=float, default=None, help="weight of the motion cost J1 (1.0 ignores communication)")
@click.option("--horizon", type=int, default=None, help="planning horizon H")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="output directory")
@click.option("--workers", type=int, default=config.PLANNER_WORKERS, show_default=True)
def run(scenario, seed, alpha, horizon, out_dir, workers):
    """Run a scenario and verify the result."""
    print("\n" + "=" * 80)
    print(f"🚀 planning run: {scenario}")
    print("=" * 80)
    try:
        result = cmd_run(scenario, seed=seed, alpha=alpha, horizon=horizon, out_dir=out_dir, workers=workers)
    except ScenarioError as e:
        print(f"❌ {e}")
        sys.exit(EXIT_INPUT_ERROR)
    except OSError as e:
        logger.error("could not write outputs: %s", e)
        sys.exit(EXIT_INPUT_ERROR)
    print(f"📁 outputs: {result.out_dir}")
    _print_report(result.report)
    _exit_for(result.report)


@cli.command()
@click.argument("log", type=click.Path(exists=True, dir_okay=False))
@click.argument("scenario", required=False)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="write report.json here")
def verify(log, scenario, out_path):
    """Verify a run log against its (or the given) scenario."""
    try:
        report = cmd_verify(log, scenario)
    except (ScenarioError, RunLogError) as e:
        print(f"❌ {e}")
        sys.exit(EXIT_INPUT_ERROR)
    if out_path:
        Path(out_path).write_text(dump_report(report) + "\n", encoding="utf-8")
    _print_report(report)
    _exit_for(report)


def _parse_steps(text):
    if not text:
        return []
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter("steps must be comma-separated integers")


@cli.command()
@click.argument("log", type=click.Path(exists=True, dir_okay=False))
@click.option("--steps", default="", help="comma-separated steps for occupancy heatmaps")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
def plot(log, steps, out_dir):
    """Draw trajectory and occupancy SVGs."""
    try:
        runlog = load_runlog(log)
        written = cmd_plot(runlog, out_dir or Path(log).parent / "plots", _parse_steps(steps))
    except RunLogError as e:
        print(f"❌ {e}")
        sys.exit(EXIT_INPUT_ERROR)
    for path in written:
        print(f"🖼️  {path}")


@cli.command()
def scenarios():
    """List bundled scenarios."""
    for name in list_scenarios(config.SCENARIO_DIR):
        print(name)


@cli.command()
@click.option("--host", default=config.API_HOST, show_default=True)
@click.option("--port", type=int, default=config.API_PORT, show_default=True)
def serve(host, port):
    """Start the HTTP API."""
    from mission.api import app

    print("\n" + "=" * 80)
    print("🚀 Planner API Server 시작!")
    print("=" * 80)
    print("   • GET  /api/health                           → 헬스 체크")
    print("   • GET  /api/scenarios                        → 번들 시나리오")
    print("   • POST /api/run                              → 실행 + 검증")
    print("   • POST /api/verify                           → 기록 검증")
    print("=" * 80 + "\n")
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    cli()
