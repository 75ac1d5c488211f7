import itertools

import numpy as np
import pytest

from logic.formulas import ForAllNext, Label, SignalTooShortError, TsslTrue, ValCmp, tssl_conj
from qts.comm import PathLossParams, agent_comm_matrix, base_station_matrix, path_loss_quality, segment_blocked
from qts.grid import Grid, GridError, occupancy_counts
from qts.patterns import chain_formula, generate_patterns, merge_chains
from qts.tree import (
    ROOT, Node, QtsTrace, build_global_formula, build_qts, eval_spatel, eval_tssl,
    first_violation, leaf_path, node_of,
)


# ============================================================
# grid
# ============================================================

def test_grid_cells_are_row_major_from_north():
    g = Grid((0.0, 0.0), 160.0, 3)
    assert g.n == 8
    assert g.cell_side == 20.0
    assert g.cell_of((5.0, 155.0)) == (0, 0)
    assert g.cell_of((130.0, 25.0)) == (6, 6)
    assert g.cell_bounds(0, 1) == (20.0, 40.0, 140.0, 160.0)
    assert g.cell_center(7, 7) == (150.0, 10.0)


def test_grid_boundary_points_and_clamping():
    g = Grid((0.0, 0.0), 40.0, 1)
    assert g.cell_of((20.0, 30.0)) == (0, 1)
    assert g.cell_of((10.0, 20.0)) == (1, 0)
    assert g.cell_of((40.0, 0.0)) == (1, 1)
    assert g.cell_of((-5.0, 100.0)) == (0, 0)


def test_grid_rejects_bad_shape():
    with pytest.raises(GridError):
        Grid((0.0, 0.0), 0.0, 2)
    with pytest.raises(GridError):
        Grid((0.0, 0.0), 10.0, 2).check_matrix(np.zeros((3, 3)))


def test_occupancy_counts():
    g = Grid((0.0, 0.0), 40.0, 1)
    counts = occupancy_counts([(5.0, 35.0), (6.0, 36.0), (30.0, 5.0)], g)
    assert counts.tolist() == [[2, 0], [0, 1]]


# ============================================================
# tree
# ============================================================

def test_leaf_paths():
    assert leaf_path(0, 0, 3) == (Label.NW, Label.NW, Label.NW)
    assert leaf_path(7, 7, 3) == (Label.SE, Label.SE, Label.SE)
    assert leaf_path(2, 4, 3) == (Label.NE, Label.SW, Label.NW)
    assert node_of(leaf_path(2, 4, 3)) == Node(3, 2, 4)


def test_root_valuation_of_quality_map(quality_map):
    q = build_qts(quality_map)
    assert q.depth == 3
    assert q.mu(ROOT) == pytest.approx(2.90625)
    assert q.node_count() == 1 + 4 + 16 + 64
    assert q.mu(Node(1, 0, 0)) == pytest.approx(quality_map[:4, :4].mean())


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_root_is_leaf_mean(depth, rng):
    for _ in range(100):
        values = rng.random((2 ** depth, 2 ** depth)) * 10
        assert abs(build_qts(values).mu(ROOT) - values.mean()) <= 1e-12


def test_build_qts_validation():
    with pytest.raises(GridError):
        build_qts(np.zeros((3, 3)))
    with pytest.raises(GridError):
        build_qts(np.zeros((2, 4)))
    with pytest.raises(GridError):
        build_qts(-np.ones((2, 2)))


def test_leaf_next_is_itself():
    q = build_qts([[1, 2], [3, 4]])
    leaf = Node(1, 1, 0)
    assert q.next_node(leaf, Label.NE) == leaf
    f = ForAllNext((Label.NW,), ForAllNext((Label.NE,), ValCmp("<=", 1)))
    assert eval_tssl(f, q)
    assert not eval_tssl(ForAllNext((Label.SE,), ValCmp("<=", 3)), q)


def test_spatel_requires_full_trace():
    trace = QtsTrace.from_counts([np.zeros((2, 2))] * 3)
    patterns = generate_patterns(np.ones((2, 2), dtype=int))
    assert eval_spatel(build_global_formula(patterns, 2), trace)
    with pytest.raises(SignalTooShortError):
        eval_spatel(build_global_formula(patterns, 3), trace)


# ============================================================
# patterns
# ============================================================

def test_merge_chains_unions_single_differences():
    chains = [
        ((frozenset({Label.NW}), frozenset({Label.NE})), 0.0),
        ((frozenset({Label.NW}), frozenset({Label.SE})), 0.0),
        ((frozenset({Label.SW}), frozenset({Label.NE})), 0.0),
        ((frozenset({Label.SW}), frozenset({Label.SE})), 0.0),
    ]
    merged = merge_chains(chains)
    assert merged == [((frozenset({Label.NW, Label.SW}), frozenset({Label.NE, Label.SE})), 0.0)]


def test_chain_formula_shape():
    f = chain_formula(((frozenset({Label.SE, Label.NW}), frozenset({Label.NE})), 2.0))
    assert f == ForAllNext((Label.NW, Label.SE), ForAllNext((Label.NE,), ValCmp("<=", 2.0)))


def test_empty_quadrant_pattern_is_true():
    psi = generate_patterns(np.array([[1, 0], [2, 1]]))
    assert psi[2] == TsslTrue()
    assert psi[0] == ForAllNext((Label.NE,), ValCmp("<=", 0.0))


def _satisfies(patterns, counts):
    return eval_tssl(tssl_conj(list(patterns)), build_qts(counts))


def test_patterns_match_capacity_exhaustively_at_depth_one():
    caps = [np.array([[1, 0], [2, 1]]), np.array([[2, 2], [2, 2]]), np.array([[0, 3], [1, 0]])]
    for cap in caps:
        patterns = generate_patterns(cap)
        for agents in range(4):
            for cells in itertools.combinations_with_replacement(range(4), agents):
                counts = np.zeros((2, 2), dtype=int)
                for c in cells:
                    counts[divmod(c, 2)] += 1
                assert _satisfies(patterns, counts) == bool((counts <= cap).all())


def test_patterns_match_capacity_on_quality_map(quality_map, rng):
    patterns = generate_patterns(quality_map)
    for _ in range(1000):
        counts = np.zeros((8, 8), dtype=int)
        for _ in range(int(rng.integers(1, 13))):
            counts[rng.integers(0, 8), rng.integers(0, 8)] += 1
        assert _satisfies(patterns, counts) == bool((counts <= quality_map).all())


def test_first_violation(quality_map):
    counts = [np.zeros((8, 8), dtype=int) for _ in range(3)]
    assert first_violation(counts, quality_map) is None
    counts[2][4, 3] = 1
    counts[2][5, 2] = 1
    assert first_violation(counts, quality_map) == (2, (4, 3))


# ============================================================
# communication maps
# ============================================================

def test_path_loss_quality_range():
    assert path_loss_quality(5.0, 6.0, 20.0, 160.0) == 6.0
    assert path_loss_quality(160.0, 6.0, 20.0, 160.0) == pytest.approx(0.0)
    assert path_loss_quality(500.0, 6.0, 20.0, 160.0) == 0.0


def test_segment_blocked():
    g = Grid((0.0, 0.0), 40.0, 1)
    assert segment_blocked((10.0, 30.0), (10.0, 10.0), {(1, 0)}, g)
    assert not segment_blocked((10.0, 30.0), (30.0, 30.0), {(1, 0)}, g)


def test_base_station_matrix(quality_map):
    g = Grid((0.0, 0.0), 160.0, 3)
    obstacles = [tuple(c) for c in np.argwhere(quality_map == 0)]
    stations = [(40.0, 120.0), (120.0, 120.0), (40.0, 40.0), (120.0, 40.0)]
    C = base_station_matrix(stations, obstacles, g)
    assert C.dtype.kind == "i"
    for m, n in obstacles:
        assert C[m, n] == 0
    mask = quality_map != 0
    assert C[mask].min() >= 1
    assert C[mask].max() <= 6
    assert C[1, 1] == 6


def test_path_loss_params_validation():
    g = Grid((0.0, 0.0), 160.0, 3)
    assert PathLossParams().resolve(g) == (20.0, 160.0)
    with pytest.raises(GridError):
        PathLossParams(d0=50.0, d_cut=40.0).resolve(g)


def test_agent_comm_matrix_decays_with_distance():
    g = Grid((0.0, 0.0), 160.0, 3)
    p = (10.0, 150.0)
    C = agent_comm_matrix(p, g)
    assert C[0, 0] == pytest.approx(6.0)
    assert C[7, 7] == 0.0
    by_distance = sorted((np.hypot(*np.subtract(g.cell_center(m, n), p)), C[m, n]) for m, n in g.cells())
    values = [c for _, c in by_distance]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
