import math

import numpy as np
import pytest

from encoder.agent import polygon_rows
from mission.runner import cmd_run, cmd_verify, dump_report, dump_runlog, execute
from mission.scenario import load_scenario

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def swarm():
    return execute(load_scenario("paper_fig5"))


@pytest.fixture(scope="module")
def motion_only():
    return execute(load_scenario("paper_fig7"))


def test_swarm_satisfies_every_formula(swarm):
    report = swarm.report
    assert report.complete
    assert report.global_spatel
    assert report.first_violation is None
    assert all(v.phi for v in report.agents)
    assert all(v.arrived_at is not None and v.arrived_at <= 50 for v in report.agents)
    assert report.all_true


def test_communication_term_keeps_agents_in_better_cells(swarm, motion_only):
    assert motion_only.report.all_true
    assert swarm.report.comm_base_mean > motion_only.report.comm_base_mean


def test_planned_velocities_stay_in_the_polygon(swarm):
    scenario = swarm.log.scenario
    L = scenario.params.L
    v_max = scenario.dynamics.v_max
    rows = polygon_rows(L)
    for period in swarm.log.periods:
        for plan in period.plans:
            for x in plan.states[1:]:
                for a, b in rows:
                    assert a * x[2] + b * x[3] <= v_max + 1e-6
                assert math.hypot(x[2], x[3]) <= v_max / math.cos(math.pi / L) + 1e-6


def test_logged_cells_match_positions(swarm):
    side = swarm.log.scenario.workspace.side
    n = 2 ** swarm.log.scenario.workspace.depth
    cs = side / n
    for row in swarm.log.states:
        col = min(int(math.floor(row.p1 / cs)), n - 1)
        r = min(int(math.floor((side - row.p2) / cs)), n - 1)
        assert (row.cell_m, row.cell_n) == (max(r, 0), max(col, 0))


@pytest.mark.parametrize("name", ["toy_2agent", "solo"])
def test_runs_are_reproducible(name):
    a = execute(load_scenario(name))
    b = execute(load_scenario(name))
    assert dump_runlog(a.log) == dump_runlog(b.log)
    assert dump_report(a.report) == dump_report(b.report)


def test_cli_run_and_verify_agree(tmp_path):
    result = cmd_run("toy_2agent", out_dir=tmp_path)
    assert {p.name for p in tmp_path.iterdir()} >= {"runlog.json", "states.csv", "report.json"}
    report = cmd_verify(tmp_path / "runlog.json")
    assert dump_report(report) == dump_report(result.report)
    assert report.all_true
    assert np.isfinite(report.comm_total_mean)
