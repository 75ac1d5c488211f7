import numpy as np
import pytest

from encoder.agent import (
    AgentModel, EncodingContext, EncodingError, encode_dynamics, encode_velocity_polygon, polygon_rows,
)
from encoder.assemble import EncodingParams, GoalRegion, NeighborView, assemble_agent_problem, decode_plan
from encoder.costs import encode_cost_j1, encode_occupancy, occupied_cell, time_penalty
from encoder.formulas import encode_stl, encode_tssl
from logic.formulas import (
    Always, And, Eventually, ExistsNext, ForAllNext, Label, Not, Or, Pred, Predicate, Signal,
    TsslAnd, TsslNot, TsslOr, Until, ValCmp, tssl_conj,
)
from logic.monitor import eval_stl, horizon
from milp.bnb import solve_milp
from milp.model import LinExpr, MilpModel, Sense, SolveStatus, VarKind
from milp.simplex import solve_lp
from qts.grid import Grid
from qts.patterns import generate_patterns
from qts.tree import build_qts, eval_tssl


def _fix_inputs(model, ctx, u):
    for ids in ctx.inputs:
        for k in range(2):
            model.add_constraint({ids[k]: 1.0}, Sense.EQ, u[k])


# ============================================================
# dynamics
# ============================================================

def test_agent_model_validation(agent_model):
    assert agent_model.is_controllable()
    with pytest.raises(EncodingError):
        AgentModel(np.eye(4), np.zeros((4, 3)), 2.0, 8.0)
    with pytest.raises(EncodingError):
        AgentModel.double_integrator(u_max=0.0)
    assert not AgentModel(np.eye(4), np.zeros((4, 2)), 2.0, 8.0).is_controllable()


def test_dynamics_rows_follow_the_recursion(agent_model):
    model = MilpModel()
    x0 = [10.0, 10.0, 1.0, 0.0]
    ctx = encode_dynamics(model, agent_model, x0, 3, 4, Grid((0.0, 0.0), 160.0, 3), 8)
    _fix_inputs(model, ctx, (1.0, -0.5))
    sol = solve_lp(model)
    assert sol.status is SolveStatus.OPTIMAL
    x = np.array(x0)
    for t in ctx.steps:
        got = [sol.value(ctx.state_var(t, j)) for j in range(4)]
        assert got == pytest.approx(x.tolist(), abs=1e-7)
        x = agent_model.step(x, (1.0, -0.5))
    with pytest.raises(EncodingError):
        ctx.input_var(ctx.last_step, 0)
    with pytest.raises(EncodingError):
        ctx.state_var(2, 0)


def test_polygon_rows():
    assert polygon_rows(4) == [(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0)]
    model = MilpModel()
    ctx = encode_dynamics(model, AgentModel.double_integrator(), np.zeros(4), 0, 2)
    with pytest.raises(EncodingError):
        encode_velocity_polygon(model, ctx, 2)


def test_velocity_polygon_caps_speed(agent_model):
    model = MilpModel()
    ctx = encode_dynamics(model, agent_model, [80.0, 80.0, 0.0, 0.0], 0, 8, Grid((0.0, 0.0), 160.0, 3), 8)
    encode_velocity_polygon(model, ctx, 8)
    model.set_objective({ctx.state_var(ctx.last_step, 2): -1.0})
    sol = solve_lp(model)
    assert sol.value(ctx.state_var(ctx.last_step, 2)) == pytest.approx(agent_model.v_max, abs=1e-6)


# ============================================================
# costs
# ============================================================

def test_time_penalty():
    assert time_penalty(0.005, 10) == pytest.approx(0.5)
    assert time_penalty(0.005, 0) == 0.0


def test_j1_is_zero_when_resting_at_goal(agent_model):
    model = MilpModel()
    ctx = encode_dynamics(model, agent_model, [50.0, 50.0, 0.0, 0.0], 10, 4, Grid((0.0, 0.0), 160.0, 3), 8)
    cost = encode_cost_j1(model, ctx, (0.0, 0.0, 0.0, 0.0), (1.0, 1.0), 0.005, 10, (50.0, 50.0))
    model.set_objective(cost)
    sol = solve_lp(model)
    assert sol.objective == pytest.approx(0.0, abs=1e-9)
    assert ctx.gamma and ctx.beta and not ctx.alpha


def test_j1_rejects_bad_weights(agent_model):
    model = MilpModel()
    ctx = encode_dynamics(model, agent_model, np.zeros(4), 0, 2)
    with pytest.raises(EncodingError):
        encode_cost_j1(model, ctx, (1.0, 1.0, 1.0), (1.0, 1.0), 0.0, 0, (0.0, 0.0))
    with pytest.raises(EncodingError):
        encode_cost_j1(model, ctx, (0.0,) * 4, (-1.0, 1.0), 0.0, 0, (0.0, 0.0))


def test_occupancy_binaries_track_the_cell(agent_model):
    g = Grid((0.0, 0.0), 160.0, 3)
    model = MilpModel()
    ctx = encode_dynamics(model, agent_model, [10.0, 150.0, 3.0, -2.0], 0, 4, g, 8)
    encode_occupancy(model, ctx, g)
    _fix_inputs(model, ctx, (1.0, -1.0))
    sol = solve_milp(model)
    assert sol.status is SolveStatus.OPTIMAL
    cells = []
    for t in ctx.steps:
        p = (sol.value(ctx.state_var(t, 0)), sol.value(ctx.state_var(t, 1)))
        assert occupied_cell(ctx, sol.values, t) == g.cell_of(p)
        cells.append(g.cell_of(p))
    assert cells[0] == (0, 0)
    assert cells[-1] == (1, 1)


def test_occupancy_rejects_start_outside_grid(agent_model):
    g = Grid((0.0, 0.0), 40.0, 1)
    model = MilpModel()
    ctx = encode_dynamics(model, agent_model, [50.0, 10.0, 0.0, 0.0], 0, 2)
    with pytest.raises(EncodingError):
        encode_occupancy(model, ctx, g)


# ============================================================
# formula encodings agree with the monitors
# ============================================================

def _random_stl(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        p = Pred(Predicate(tuple(rng.integers(-1, 2, size=2).astype(float)), float(rng.integers(-2, 3))))
        return Not(p) if rng.random() < 0.3 else p
    kind = rng.integers(0, 5)
    a = int(rng.integers(0, 2))
    b = a + int(rng.integers(0, 2))

    def sub():
        return _random_stl(rng, depth - 1)

    if kind == 0:
        return And((sub(), sub()))
    if kind == 1:
        return Or((sub(), sub()))
    if kind == 2:
        return Always(a, b, sub())
    if kind == 3:
        return Eventually(a, b, sub())
    return Until(a, b, sub(), sub())


def _stl_feasible(f, samples, forced, require=False):
    model = MilpModel("stl")
    ctx = EncodingContext(model, AgentModel.double_integrator(), np.zeros(4), 0, 1)
    ids = []
    for row in samples:
        vs = [model.add_var(VarKind.CONTINUOUS, -10.0, 10.0) for _ in row]
        for v, value in zip(vs, row):
            model.add_constraint({v: 1.0}, Sense.EQ, float(value))
        ids.append(vs)

    def signal(t):
        return [LinExpr.var(v) for v in ids[t]]

    z = encode_stl(model, ctx, f, 0, signal, require=require)
    if not require:
        model.add_constraint(z, Sense.GE if forced else Sense.LE, 1.0 if forced else 0.0)
    return solve_milp(model).status is SolveStatus.OPTIMAL


def test_stl_encoding_matches_monitor(rng):
    for _ in range(100):
        f = _random_stl(rng, 3)
        samples = rng.integers(-2, 3, size=(horizon(f) + 1, 2)).astype(float)
        truth = eval_stl(f, Signal(samples))
        assert _stl_feasible(f, samples, True) == truth
        assert _stl_feasible(f, samples, False) == (not truth)
        assert _stl_feasible(f, samples, True, require=True) == truth


def _random_tssl(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        leaf = ValCmp("<=" if rng.random() < 0.5 else ">=", float(rng.integers(0, 5)) / 2.0)
        return TsslNot(leaf) if rng.random() < 0.3 else leaf
    kind = rng.integers(0, 4)
    labels = tuple(lb for lb in Label if rng.random() < 0.5) or (Label.NW,)
    if kind == 0:
        return TsslAnd((_random_tssl(rng, depth - 1), _random_tssl(rng, depth - 1)))
    if kind == 1:
        return TsslOr((_random_tssl(rng, depth - 1), _random_tssl(rng, depth - 1)))
    if kind == 2:
        return ForAllNext(labels, _random_tssl(rng, depth - 1))
    return ExistsNext(labels, _random_tssl(rng, depth - 1))


def _tssl_solve(f, own, counts, forced):
    g = Grid((0.0, 0.0), 80.0, 2)
    model = MilpModel("tssl")
    ctx = EncodingContext(model, AgentModel.double_integrator(), np.zeros(4), 0, 1, g)
    ids = np.full((4, 4), -1, dtype=int)
    for m, n in g.cells():
        ids[m, n] = model.add_var(VarKind.BINARY)
        model.add_constraint({int(ids[m, n]): 1.0}, Sense.EQ, float(own[m, n]))
    ctx.occupancy[0] = ids
    ctx.neighbor_counts[0] = counts
    z = encode_tssl(model, ctx, f, 0)
    model.add_constraint(z, Sense.GE if forced else Sense.LE, 1.0 if forced else 0.0)
    return model, solve_milp(model)


def _tssl_feasible(f, own, counts, forced):
    return _tssl_solve(f, own, counts, forced)[1].status is SolveStatus.OPTIMAL


def test_tssl_encoding_matches_monitor(rng):
    for _ in range(40):
        f = _random_tssl(rng, 3)
        own = np.zeros((4, 4), dtype=int)
        own[rng.integers(0, 4), rng.integers(0, 4)] = 1
        counts = rng.integers(0, 3, size=(4, 4))
        truth = eval_tssl(f, build_qts(own + counts))
        assert _tssl_feasible(f, own, counts, True) == truth
        assert _tssl_feasible(f, own, counts, False) == (not truth)


def test_nested_next_with_strict_threshold_is_decided_exactly(rng):
    f = ExistsNext((Label.NE, Label.SW, Label.SE), ForAllNext((Label.NE,), TsslNot(ValCmp("<=", 1.0))))
    own = np.zeros((4, 4), dtype=int)
    own[2, 1] = 1
    for _ in range(30):
        counts = rng.integers(0, 3, size=(4, 4))
        truth = eval_tssl(f, build_qts(own + counts))
        model, sol = _tssl_solve(f, own, counts, True)
        assert (sol.status is SolveStatus.OPTIMAL) == truth
        if truth:
            assert model.max_violation(sol.values) <= 1e-6
        assert _tssl_feasible(f, own, counts, False) == (not truth)


def test_encoded_patterns_match_capacity(rng):
    for _ in range(50):
        cap = rng.integers(0, 4, size=(4, 4))
        f = tssl_conj(list(generate_patterns(cap)))
        own = np.zeros((4, 4), dtype=int)
        own[rng.integers(0, 4), rng.integers(0, 4)] = 1
        counts = rng.integers(0, 3, size=(4, 4))
        fits = bool((own + counts <= cap).all())
        assert _tssl_feasible(f, own, counts, True) == fits
        assert _tssl_feasible(f, own, counts, False) == (not fits)


# ============================================================
# assembled agent problems
# ============================================================

def _solo(t0, x0, T_f=30):
    g = Grid((0.0, 0.0), 80.0, 2)
    cap = np.full((4, 4), 2, dtype=int)
    params = EncodingParams(T_f=T_f)
    problem = assemble_agent_problem(0, x0, t0, GoalRegion.box((70.0, 10.0), 5.0), AgentModel.double_integrator(),
                                     g, cap, generate_patterns(cap), [], params)
    return problem, solve_milp(problem.model)


def test_solo_problem_has_soft_goal_early():
    problem, sol = _solo(0, [10.0, 70.0, 0.0, 0.0])
    assert not problem.goal_hard
    assert sol.status is SolveStatus.OPTIMAL
    states, inputs = decode_plan(problem, sol)
    assert states.shape == (5, 4)
    assert inputs.shape == (4, 2)
    assert np.abs(inputs).max() <= 2.0


def test_goal_becomes_hard_inside_the_window():
    problem, sol = _solo(26, [60.0, 20.0, 0.0, 0.0])
    assert problem.goal_hard
    assert sol.status is SolveStatus.OPTIMAL
    states, _ = decode_plan(problem, sol)
    goal = GoalRegion.box((70.0, 10.0), 5.0)
    assert any(goal.strictly_contains(x[:2]) for x in states[1:])


def test_unreachable_hard_goal_is_infeasible():
    problem, sol = _solo(26, [10.0, 70.0, 0.0, 0.0])
    assert problem.goal_hard
    assert sol.status is SolveStatus.INFEASIBLE


def _with_neighbor(cap, nb_pos, x0, params):
    g = Grid((0.0, 0.0), 40.0, 1)
    cap = np.asarray(cap)
    goal = GoalRegion.box((30.0, 30.0), 5.0)
    nb = NeighborView(1, {10: nb_pos})
    problem = assemble_agent_problem(0, x0, 10, goal, AgentModel.double_integrator(), g, cap,
                                     generate_patterns(cap), [nb], params)
    sol = solve_milp(problem.model)
    assert sol.status is SolveStatus.OPTIMAL
    states, _ = decode_plan(problem, sol)
    return g, states


def test_full_neighbor_cell_is_never_entered():
    params = EncodingParams(lam=0.5, alpha=1.0, T_f=50)
    g, states = _with_neighbor([[1, 1], [1, 1]], (30.0, 30.0), [10.0, 30.0, 0.0, 0.0], params)
    assert all(g.cell_of(x[:2]) != (0, 1) for x in states[1:])
    assert states[-1][0] > states[0][0]


def test_separation_is_kept():
    params = EncodingParams(lam=0.5, alpha=1.0, T_f=50, d1=2.0, d2=2.0)
    _, states = _with_neighbor([[3, 3], [3, 3]], (30.0, 30.0), [24.0, 30.0, 0.0, 0.0], params)
    for x in states[1:]:
        assert max(abs(x[0] - 30.0), abs(x[1] - 30.0)) > 2.0 - 1e-6
