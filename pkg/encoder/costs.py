"""
비용 / 점유 인코딩
- J1: 상태·입력 절댓값 슬랙 + h(k')·목표 맨해튼 거리
- 점유 이진변수 o_{m,n,t} (1 = 점유) 와 위치 연결 (big-M + 합산 행)
- J2: −Σ_t Σ_{m,n} (C + ΣC'_j)·o_{m,n,t}
"""
import logging
from typing import Sequence

import numpy as np

from milp.model import LinExpr, MilpModel, Sense, VarKind
from qts.grid import Grid

from .agent import EncodingContext, EncodingError

logger = logging.getLogger(__name__)


def time_penalty(lam: float, k: int) -> float:
    """h(k) = λ·k²"""
    return lam * k * k


def _abs_slack(model: MilpModel, expr: LinExpr, bound: float, name: str) -> int:
    s = model.add_var(VarKind.CONTINUOUS, 0.0, bound, name)
    model.add_constraint(expr - LinExpr.var(s), Sense.LE, 0.0, f"{name}_pos")
    model.add_constraint(-expr - LinExpr.var(s), Sense.LE, 0.0, f"{name}_neg")
    return s


def encode_cost_j1(model: MilpModel, ctx: EncodingContext, q: Sequence[float], r: Sequence[float],
                   lam: float, k_prime: int, goal: Sequence[float]) -> LinExpr:
    if len(q) != 4 or len(r) != 2:
        raise EncodingError("J1 weights need q in R^4 and r in R^2")
    if min(q) < 0 or min(r) < 0 or lam < 0:
        raise EncodingError("J1 weights must be nonnegative")
    cost = LinExpr()
    h = time_penalty(lam, k_prime)
    for t in ctx.steps:
        if t == ctx.t0:
            continue
        for j in range(4):
            if q[j] == 0.0:
                continue
            var = model.variables[ctx.state_var(t, j)]
            bound = max(abs(var.lb), abs(var.ub))
            a = _abs_slack(model, ctx.state_expr(t, j), bound, f"alpha_{t}_{j}")
            ctx.alpha[(t, j)] = a
            cost.add_inplace(LinExpr.var(a, q[j]))
        for k in range(2):
            if h == 0.0:
                continue
            var = model.variables[ctx.state_var(t, k)]
            bound = max(abs(var.lb - goal[k]), abs(var.ub - goal[k]))
            g = _abs_slack(model, ctx.state_expr(t, k) - goal[k], bound, f"gamma_{t}_{k}")
            ctx.gamma[(t, k)] = g
            cost.add_inplace(LinExpr.var(g, h))
    for s, u in enumerate(ctx.inputs):
        t = ctx.t0 + s
        for k in range(2):
            if r[k] == 0.0:
                continue
            b = _abs_slack(model, LinExpr.var(u[k]), ctx.agent.u_max, f"beta_{t}_{k}")
            ctx.beta[(t, k)] = b
            cost.add_inplace(LinExpr.var(b, r[k]))
    return cost


# ============================================================
# 점유
# ============================================================

def _reachable_cells(g: Grid, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    (m_top, n_left) = g.cell_of((lo[0], hi[1]))
    (m_bot, n_right) = g.cell_of((hi[0], lo[1]))
    mask = np.zeros((g.n, g.n), dtype=bool)
    # 경계 위의 점은 인접 셀에도 속할 수 있으므로 한 칸 여유
    mask[max(m_top - 1, 0):min(m_bot + 2, g.n), max(n_left - 1, 0):min(n_right + 2, g.n)] = True
    return mask


def encode_occupancy(model: MilpModel, ctx: EncodingContext, g: Grid) -> dict:
    if ctx.grid is None:
        ctx.grid = g
    if not (g.contains(ctx.x0[:2])):
        raise EncodingError("agent position lies outside the gridded workspace")
    M = g.side
    ctx.big_m = M
    eps = ctx.eps
    for t in ctx.steps:
        ids = np.full((g.n, g.n), -1, dtype=int)
        if t == ctx.t0:
            cell = g.cell_of(ctx.x0[:2])
            for m, n in g.cells():
                fixed = 1.0 if (m, n) == cell else 0.0
                ids[m, n] = model.add_var(VarKind.BINARY, fixed, fixed, f"o_{m}_{n}_{t}")
            ctx.occupancy[t] = ids
            continue
        p1 = ctx.state_var(t, 0)
        p2 = ctx.state_var(t, 1)
        lo = np.array([model.variables[p1].lb, model.variables[p2].lb])
        hi = np.array([model.variables[p1].ub, model.variables[p2].ub])
        mask = _reachable_cells(g, lo, hi)
        agg_w, agg_e, agg_s, agg_n = {}, {}, {}, {}
        for m, n in g.cells():
            if not mask[m, n]:
                ids[m, n] = model.add_var(VarKind.BINARY, 0.0, 0.0, f"o_{m}_{n}_{t}")
                continue
            o = model.add_var(VarKind.BINARY, name=f"o_{m}_{n}_{t}")
            ids[m, n] = o
            west, east, south, north = g.cell_bounds(m, n)
            e_eps = 0.0 if n == g.n - 1 else eps
            s_eps = 0.0 if m == g.n - 1 else eps
            model.add_constraint({p1: 1.0, o: -M}, Sense.GE, west - M, f"occ_w_{m}_{n}_{t}")
            model.add_constraint({p1: 1.0, o: M}, Sense.LE, east - e_eps + M, f"occ_e_{m}_{n}_{t}")
            model.add_constraint({p2: 1.0, o: -M}, Sense.GE, south + s_eps - M, f"occ_s_{m}_{n}_{t}")
            model.add_constraint({p2: 1.0, o: M}, Sense.LE, north + M, f"occ_n_{m}_{n}_{t}")
            agg_w[o] = -west
            agg_e[o] = -(east - e_eps)
            agg_s[o] = -(south + s_eps)
            agg_n[o] = -north
        free = [int(v) for v in ids[mask]]
        model.add_constraint({v: 1.0 for v in free}, Sense.EQ, 1.0, f"occ_one_{t}")
        model.add_constraint({p1: 1.0, **agg_w}, Sense.GE, 0.0, f"occ_aw_{t}")
        model.add_constraint({p1: 1.0, **agg_e}, Sense.LE, 0.0, f"occ_ae_{t}")
        model.add_constraint({p2: 1.0, **agg_s}, Sense.GE, 0.0, f"occ_as_{t}")
        model.add_constraint({p2: 1.0, **agg_n}, Sense.LE, 0.0, f"occ_an_{t}")
        ctx.occupancy[t] = ids
    return ctx.occupancy


def encode_cost_j2(model: MilpModel, ctx: EncodingContext, C, C_list: Sequence = ()) -> LinExpr:
    C = np.asarray(C, dtype=float)
    total = C.copy()
    for Cj in C_list:
        Cj = np.asarray(Cj, dtype=float)
        if Cj.shape != C.shape:
            raise EncodingError(f"neighbor matrix shape {Cj.shape} != capacity shape {C.shape}")
        total += Cj
    cost = LinExpr()
    for t in ctx.steps:
        ids = ctx.occupancy_vars(t)
        if ids.shape != C.shape:
            raise EncodingError(f"capacity shape {C.shape} does not match the grid")
        for (m, n), v in np.ndenumerate(ids):
            if total[m, n] != 0.0:
                cost.add_inplace(LinExpr.var(int(v), -total[m, n]))
    return cost


def occupied_cell(ctx: EncodingContext, values, t: int):
    """해에서 o = 1 인 셀"""
    ids = ctx.occupancy_vars(t)
    flat = [(values[int(v)], (m, n)) for (m, n), v in np.ndenumerate(ids)]
    return max(flat)[1]
