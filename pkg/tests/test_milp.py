import itertools
import math

import pytest

from milp.bnb import solve_milp
from milp.model import LinExpr, MilpModel, ModelError, Sense, SolveStatus, VarKind, dump_lp
from milp.simplex import dual_bound, solve_lp


def _lp_model():
    model = MilpModel("lp")
    x = model.add_var(VarKind.CONTINUOUS, 0.0, 10.0, "x")
    y = model.add_var(VarKind.CONTINUOUS, 0.0, 10.0, "y")
    model.add_constraint({x: 1.0, y: 1.0}, Sense.LE, 4.0)
    model.add_constraint({x: 1.0}, Sense.LE, 3.0)
    model.set_objective({x: -1.0, y: -2.0})
    return model, x, y


# ============================================================
# model
# ============================================================

def test_linexpr_arithmetic():
    e = LinExpr.var(0, 2.0) + 3.0 - LinExpr.var(1)
    e = e * 2.0
    assert e.terms == {0: 4.0, 1: -2.0}
    assert e.const == 6.0
    assert (-e).evaluate({0: 1.0, 1: 1.0}) == -8.0
    assert LinExpr.constant(5.0).is_constant()


def test_linexpr_bounds():
    model = MilpModel()
    a = model.add_var(VarKind.CONTINUOUS, -1.0, 2.0)
    b = model.add_var(VarKind.BINARY)
    lo, hi = (LinExpr.var(a, 3.0) - LinExpr.var(b) + 1.0).bounds(model)
    assert (lo, hi) == (-3.0, 7.0)


def test_model_errors():
    model = MilpModel()
    with pytest.raises(ModelError):
        model.add_var(VarKind.CONTINUOUS, 2.0, 1.0)
    with pytest.raises(ModelError):
        model.add_var(VarKind.BINARY, 0.5, 1.0)
    with pytest.raises(ModelError):
        model.add_constraint({3: 1.0}, Sense.LE, 0.0)


def test_constraint_folds_constants_and_duplicates():
    model = MilpModel()
    x = model.add_var(VarKind.CONTINUOUS, 0.0, 1.0)
    cid = model.add_constraint([(x, 1.0), (x, 2.0)], Sense.GE, 1.0)
    assert model.constraints[cid].coeffs == {x: 3.0}
    cid = model.add_constraint(LinExpr.var(x) + 2.0, Sense.LE, 5.0)
    assert model.constraints[cid].rhs == 3.0


def test_dump_lp_sections():
    model, _, _ = _lp_model()
    model.add_var(VarKind.BINARY, name="z")
    text = dump_lp(model)
    for section in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
        assert section in text


# ============================================================
# simplex
# ============================================================

def test_solve_lp_optimum():
    model, x, y = _lp_model()
    sol = solve_lp(model)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(-8.0)
    assert sol.value(y) == pytest.approx(4.0)
    assert model.max_violation(sol.values) <= 1e-9


def test_solve_lp_infeasible():
    model = MilpModel()
    x = model.add_var(VarKind.CONTINUOUS, 0.0, 3.0)
    model.add_constraint({x: 1.0}, Sense.GE, 5.0)
    assert solve_lp(model).status is SolveStatus.INFEASIBLE


def test_solve_lp_requires_finite_bounds():
    model = MilpModel()
    model.add_var(VarKind.CONTINUOUS)
    with pytest.raises(ModelError):
        solve_lp(model)


def test_equality_and_negative_rhs():
    model = MilpModel()
    x = model.add_var(VarKind.CONTINUOUS, -5.0, 5.0)
    y = model.add_var(VarKind.CONTINUOUS, -5.0, 5.0)
    model.add_constraint({x: 1.0, y: 1.0}, Sense.EQ, -3.0)
    model.add_constraint({x: 1.0, y: -1.0}, Sense.GE, -1.0)
    model.set_objective({x: 1.0, y: 2.0})
    sol = solve_lp(model)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.value(x) + sol.value(y) == pytest.approx(-3.0)
    assert sol.objective == pytest.approx(-8.0)


def test_dual_bound_matches_lp_optimum():
    model = MilpModel()
    x = model.add_var(VarKind.CONTINUOUS, 0.0, 10.0)
    y = model.add_var(VarKind.CONTINUOUS, 0.0, 10.0)
    model.add_constraint({x: 1.0, y: 1.0}, Sense.GE, 2.0)
    model.add_constraint({x: 1.0, y: -1.0}, Sense.LE, 1.0)
    model.set_objective({x: 1.0, y: 1.5})
    sol = solve_lp(model)
    assert sol.objective == pytest.approx(dual_bound(model, sol), abs=1e-7)


def test_fixed_variables_are_presolved():
    model = MilpModel()
    x = model.add_var(VarKind.CONTINUOUS, 2.0, 2.0)
    y = model.add_var(VarKind.CONTINUOUS, 0.0, 5.0)
    model.add_constraint({x: 1.0, y: 1.0}, Sense.GE, 3.0)
    model.set_objective({y: 1.0})
    sol = solve_lp(model)
    assert sol.value(x) == 2.0
    assert sol.value(y) == pytest.approx(1.0)


# ============================================================
# branch and bound
# ============================================================

def _knapsack():
    model = MilpModel("knapsack")
    a, b, c = (model.add_var(VarKind.BINARY, name=n) for n in "abc")
    model.add_constraint({a: 2.0, b: 3.0, c: 1.0}, Sense.LE, 5.0)
    model.set_objective({a: -5.0, b: -4.0, c: -3.0})
    return model


def test_knapsack():
    sol = solve_milp(_knapsack())
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(-9.0)
    assert [sol.value(k) for k in range(3)] == [1.0, 1.0, 0.0]
    assert sol.stats.nodes >= 1


def test_node_limit():
    sol = solve_milp(_knapsack(), node_limit=1)
    assert sol.status is SolveStatus.NODE_LIMIT


def test_infeasible_milp():
    model = MilpModel()
    a = model.add_var(VarKind.BINARY)
    b = model.add_var(VarKind.BINARY)
    model.add_constraint({a: 1.0, b: 1.0}, Sense.EQ, 1.0)
    model.add_constraint({a: 1.0, b: -1.0}, Sense.EQ, 0.0)
    assert solve_milp(model).status is SolveStatus.INFEASIBLE


def test_binary_pair_rounds_up():
    model = MilpModel()
    x = model.add_var(VarKind.BINARY)
    y = model.add_var(VarKind.BINARY)
    model.add_constraint({x: 1.0, y: 1.0}, Sense.GE, 1.5)
    model.set_objective({x: 1.0, y: 1.0})
    assert solve_milp(model).objective == pytest.approx(2.0)


def test_binary_without_integer_point_is_infeasible():
    model = MilpModel()
    z = model.add_var(VarKind.BINARY)
    model.add_constraint({z: 1.0}, Sense.GE, 0.3)
    model.add_constraint({z: 1.0}, Sense.LE, 0.7)
    assert solve_milp(model).status is SolveStatus.INFEASIBLE


def test_continuous_model_matches_lp():
    model, _, _ = _lp_model()
    lp = solve_lp(model)
    milp = solve_milp(model)
    assert milp.stats.nodes == 1
    assert milp.objective == pytest.approx(lp.objective, abs=1e-12)
    assert milp.values == lp.values


def _random_model(rng):
    model = MilpModel("random")
    n_bin = int(rng.integers(1, 7))
    n_cont = int(rng.integers(0, 9 - n_bin))
    ids = [model.add_var(VarKind.BINARY) for _ in range(n_bin)]
    ids += [model.add_var(VarKind.CONTINUOUS, -3.0, 3.0) for _ in range(n_cont)]
    senses = [Sense.LE, Sense.GE, Sense.EQ]
    for _ in range(int(rng.integers(1, 11))):
        coeffs = {v: float(rng.integers(-5, 6)) for v in ids if rng.random() < 0.6}
        sense = senses[int(rng.choice(3, p=[0.45, 0.45, 0.1]))]
        model.add_constraint(coeffs, sense, float(rng.integers(-5, 6)))
    model.set_objective({v: float(rng.integers(-5, 6)) for v in ids})
    return model


def _enumerate(model):
    binaries = model.binaries()
    lb0, ub0 = model.bounds_arrays()
    best = math.inf
    for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
        lb, ub = lb0.copy(), ub0.copy()
        for j, bit in zip(binaries, bits):
            lb[j] = ub[j] = bit
        sol = solve_lp(model, lb, ub)
        if sol.status is SolveStatus.OPTIMAL:
            best = min(best, sol.objective)
    return best


def test_branch_and_bound_matches_enumeration(rng):
    for _ in range(200):
        model = _random_model(rng)
        sol = solve_milp(model)
        expected = _enumerate(model)
        if math.isinf(expected):
            assert sol.status is SolveStatus.INFEASIBLE
            continue
        assert sol.status is SolveStatus.OPTIMAL
        assert sol.objective == pytest.approx(expected, abs=1e-6)
        assert model.max_violation(sol.values) <= 1e-6
        assert all(sol.value(j) in (0.0, 1.0) for j in model.binaries())


def test_solves_are_deterministic(rng):
    for _ in range(20):
        model = _random_model(rng)
        a, b = solve_milp(model), solve_milp(model)
        assert (a.status, a.values, a.stats.nodes) == (b.status, b.values, b.stats.nodes)


def test_extra_constraint_never_lowers_the_optimum(rng):
    for _ in range(50):
        model = _random_model(rng)
        before = solve_milp(model)
        ids = list(range(model.num_vars))
        model.add_constraint({v: float(rng.integers(-5, 6)) for v in ids}, Sense.LE, float(rng.integers(0, 6)))
        after = solve_milp(model)
        if before.status is not SolveStatus.OPTIMAL or after.status is not SolveStatus.OPTIMAL:
            assert not (before.status is SolveStatus.INFEASIBLE and after.status is SolveStatus.OPTIMAL)
            continue
        assert after.objective >= before.objective - 1e-6


def test_optimal_lp_points_satisfy_every_row(rng):
    for _ in range(200):
        model = _random_model(rng)
        sol = solve_lp(model)
        if sol.status is SolveStatus.OPTIMAL:
            assert model.max_violation(sol.values) <= 1e-6


def test_degenerate_lp_does_not_cycle():
    # Beale's cycling example under Dantzig pricing
    model = MilpModel("beale")
    x4, x5, x6, x7 = (model.add_var(VarKind.CONTINUOUS, 0.0, 10.0, n) for n in ("x4", "x5", "x6", "x7"))
    model.add_constraint({x4: 0.25, x5: -60.0, x6: -1.0 / 25.0, x7: 9.0}, Sense.LE, 0.0)
    model.add_constraint({x4: 0.5, x5: -90.0, x6: -1.0 / 50.0, x7: 3.0}, Sense.LE, 0.0)
    model.add_constraint({x6: 1.0}, Sense.LE, 1.0)
    model.set_objective({x4: -0.75, x5: 150.0, x6: -1.0 / 50.0, x7: 6.0})
    sol = solve_lp(model)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(-0.05, abs=1e-9)
    assert sol.value(x6) == pytest.approx(1.0)


def test_iteration_limit_is_a_status():
    model, _, _ = _lp_model()
    assert solve_lp(model, max_iter=0).status is SolveStatus.ITERATION_LIMIT


def test_rounded_incumbent_is_resolved():
    model = MilpModel("big-m")
    x = model.add_var(VarKind.CONTINUOUS, 0.0, 10.0, "x")
    z = model.add_var(VarKind.BINARY, name="z")
    model.add_constraint({x: 1.0, z: -1e6}, Sense.GE, 5.0 - 1e6)
    model.add_constraint({z: 100.0}, Sense.GE, 5e-5)
    model.set_objective({x: 1.0, z: 1.0})
    sol = solve_milp(model)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.value(z) == 1.0
    assert sol.objective == pytest.approx(6.0)
    assert model.max_violation(sol.values) <= 1e-6
