"""
2단계 primal simplex (dense tableau)
- presolve: 고정 변수 / 빈 행 제거
- x = lb + x', x' <= ub - lb 는 명시적 행으로 추가
- 진입: Dantzig, 퇴화 pivot 이 연속되면 Bland 로 전환
- 퇴출: 사전식(lexicographic) 최소 비율, 남은 동률은 가장 작은 기저 변수 인덱스
- 종료 후 원래 행렬에서 기저해를 다시 계산하고 모든 행을 검사
"""
import logging
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .model import MilpModel, ModelError, Sense, Solution, SolveStats, SolveStatus

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-6
PIVOT_TOL = 1e-9
ZERO_TOL = 1e-9
RATIO_TOL = 1e-10
DEGENERATE_RUN = 20
DEFAULT_MAX_ITER = 50000


class _Tableau:
    """마지막 행은 reduced cost, 마지막 열은 rhs. lex_cols 는 초기 단위 기저 열 (B⁻¹)"""

    def __init__(self, T: np.ndarray, basis: List[int], lex_cols: Sequence[int]):
        self.T = T
        self.basis = basis
        self.lex_cols = np.asarray(lex_cols, dtype=int)
        self.iterations = 0

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def pivot(self, r: int, c: int):
        T = self.T
        T[r, :] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if len(nz):
            T[nz, :] -= np.outer(col[nz], T[r, :])
        T[r, c] = 1.0
        T[nz, c] = 0.0
        self.basis[r] = c
        self.iterations += 1

    def set_costs(self, costs: np.ndarray):
        row = np.zeros(self.T.shape[1])
        row[:len(costs)] = costs
        for i, b in enumerate(self.basis):
            if row[b] != 0.0:
                row -= row[b] * self.T[i, :]
        self.T[-1, :] = row

    def leaving_row(self, c: int) -> Optional[int]:
        col = self.T[:-1, c]
        rows = np.nonzero(col > PIVOT_TOL)[0]
        if len(rows) == 0:
            return None
        rhs = np.maximum(self.T[rows, -1], 0.0)
        ratios = rhs / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + RATIO_TOL * max(1.0, abs(best))]
        for k in self.lex_cols:
            if len(ties) == 1:
                break
            vals = self.T[ties, k] / col[ties]
            ties = ties[vals <= vals.min() + RATIO_TOL]
        return int(min(ties, key=lambda i: self.basis[i]))

    def run(self, allowed: np.ndarray, max_iter: int) -> str:
        bland = False
        degenerate = 0
        for _ in range(max_iter):
            d = self.T[-1, :-1]
            cand = np.nonzero((d < -PIVOT_TOL) & allowed)[0]
            if len(cand) == 0:
                return "optimal"
            c = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
            r = self.leaving_row(c)
            if r is None:
                return "unbounded"
            if self.T[r, -1] <= ZERO_TOL:
                degenerate += 1
                if degenerate >= DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
            self.pivot(r, c)
        return "iteration-limit"


def _dense(model: MilpModel) -> Tuple[np.ndarray, np.ndarray, list, np.ndarray]:
    n = model.num_vars
    A = np.zeros((model.num_constraints, n))
    b = np.zeros(model.num_constraints)
    senses = []
    for i, con in enumerate(model.constraints):
        for k, v in con.coeffs.items():
            A[i, k] = v
        b[i] = con.rhs
        senses.append(con.sense)
    c = np.zeros(n)
    for k, v in model.objective.items():
        c[k] = v
    return A, b, senses, c


def row_violation(A: np.ndarray, b: np.ndarray, senses: Sequence[Sense], x: np.ndarray) -> float:
    """Ax ∘ b 의 최대 위반량 (0 이면 모든 행 만족)"""
    if len(b) == 0:
        return 0.0
    lhs = A @ x
    worst = 0.0
    for i, s in enumerate(senses):
        if s is Sense.LE:
            worst = max(worst, lhs[i] - b[i])
        elif s is Sense.GE:
            worst = max(worst, b[i] - lhs[i])
        else:
            worst = max(worst, abs(lhs[i] - b[i]))
    return float(worst)


def _basic_solution(T0: np.ndarray, b0: np.ndarray, rows: List[int], basis: List[int], ncols: int) -> np.ndarray:
    """누적 pivot 오차 없이 B x_B = b 를 원래 행렬에서 직접 풀기"""
    xs = np.zeros(ncols)
    if not basis:
        return xs
    B = T0[np.ix_(rows, basis)]
    rhs = b0[rows]
    try:
        xb = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError:
        xb = np.linalg.lstsq(B, rhs, rcond=None)[0]
    xs[basis] = xb
    return xs


def solve_lp(model: MilpModel, lb: Optional[np.ndarray] = None, ub: Optional[np.ndarray] = None,
             max_iter: int = DEFAULT_MAX_ITER) -> Solution:
    """LP 완화 (이진 변수는 [0,1] 연속). lb/ub 로 변수 상하한 덮어쓰기 가능"""
    started = time.perf_counter()
    stats = SolveStats(nodes=0)
    A, b, senses, c = _dense(model)
    mlb, mub = model.bounds_arrays()
    lb = mlb if lb is None else np.asarray(lb, dtype=float)
    ub = mub if ub is None else np.asarray(ub, dtype=float)
    if not (np.isfinite(lb).all() and np.isfinite(ub).all()):
        raise ModelError("all variable bounds must be finite")
    n = model.num_vars

    def finish(status, x=None, duals=None):
        stats.wall_time = time.perf_counter() - started
        if x is None:
            return Solution(status, stats=stats)
        values = {j: float(x[j]) for j in range(n)}
        obj = float(c @ x) + model.obj_const
        return Solution(status, values, obj, stats, duals)

    if (lb > ub + FEAS_TOL).any():
        return finish(SolveStatus.INFEASIBLE)

    # ---------- presolve ----------
    fixed = ub - lb <= 1e-12
    free = np.nonzero(~fixed)[0]
    rhs = b - A @ lb
    Af = A[:, free]
    keep_rows = []
    for i in range(len(b)):
        if np.any(Af[i] != 0.0):
            keep_rows.append(i)
            continue
        s = senses[i]
        if (s is Sense.LE and rhs[i] < -FEAS_TOL) or (s is Sense.GE and rhs[i] > FEAS_TOL) or \
                (s is Sense.EQ and abs(rhs[i]) > FEAS_TOL):
            return finish(SolveStatus.INFEASIBLE)

    nf = len(free)
    rows_a = [Af[i] for i in keep_rows]
    rows_b = [rhs[i] for i in keep_rows]
    rows_s = [senses[i] for i in keep_rows]
    origin = list(keep_rows)
    for idx, j in enumerate(free):
        e = np.zeros(nf)
        e[idx] = 1.0
        rows_a.append(e)
        rows_b.append(ub[j] - lb[j])
        rows_s.append(Sense.LE)
        origin.append(-1)
    m = len(rows_a)

    sign = np.ones(m)
    for i in range(m):
        if rows_b[i] < 0:
            sign[i] = -1.0
            rows_a[i] = -rows_a[i]
            rows_b[i] = -rows_b[i]
            if rows_s[i] is Sense.LE:
                rows_s[i] = Sense.GE
            elif rows_s[i] is Sense.GE:
                rows_s[i] = Sense.LE

    n_slack = sum(1 for s in rows_s if s is not Sense.EQ)
    n_art = sum(1 for s in rows_s if s is not Sense.LE)
    ncols = nf + n_slack + n_art
    T = np.zeros((m + 1, ncols + 1))
    basis = [0] * m
    slack_col = [-1] * m
    art_col = [-1] * m
    si, ai = nf, nf + n_slack
    for i in range(m):
        T[i, :nf] = rows_a[i]
        T[i, -1] = rows_b[i]
        if rows_s[i] is Sense.LE:
            T[i, si] = 1.0
            slack_col[i] = si
            basis[i] = si
            si += 1
        elif rows_s[i] is Sense.GE:
            T[i, si] = -1.0
            slack_col[i] = si
            si += 1
            T[i, ai] = 1.0
            art_col[i] = ai
            basis[i] = ai
            ai += 1
        else:
            T[i, ai] = 1.0
            art_col[i] = ai
            basis[i] = ai
            ai += 1

    T0 = T[:m, :ncols].copy()
    b0 = T[:m, -1].copy()
    tab_rows = list(range(m))
    tab = _Tableau(T, basis, list(basis))
    art_start = nf + n_slack
    allowed = np.ones(ncols, dtype=bool)

    def give_up(phase: str):
        stats.iterations = tab.iterations
        logger.warning("simplex %s stopped after %d pivots (%s)", phase, tab.iterations, model.name)
        return finish(SolveStatus.ITERATION_LIMIT)

    # ---------- phase 1 ----------
    if n_art:
        costs = np.zeros(ncols)
        costs[art_start:] = 1.0
        tab.set_costs(costs)
        if tab.run(allowed, max_iter) == "iteration-limit":
            return give_up("phase 1")
        if -tab.T[-1, -1] > FEAS_TOL:
            stats.iterations = tab.iterations
            return finish(SolveStatus.INFEASIBLE)
        # 남은 인공변수는 0 수준으로 내린 뒤 기저에서 제거, 불가능한 행은 중복
        r = 0
        while r < tab.m:
            if tab.basis[r] >= art_start:
                tab.T[r, -1] = 0.0
                row = np.abs(tab.T[r, :art_start])
                c_out = int(np.argmax(row)) if art_start else -1
                if c_out >= 0 and row[c_out] > PIVOT_TOL:
                    tab.pivot(r, c_out)
                else:
                    tab.T = np.delete(tab.T, r, axis=0)
                    del tab.basis[r]
                    del origin[r]
                    del tab_rows[r]
                    sign = np.delete(sign, r)
                    slack_col.pop(r)
                    art_col.pop(r)
                    continue
            r += 1
        np.maximum(tab.T[:-1, -1], 0.0, out=tab.T[:-1, -1])
        allowed[art_start:] = False

    # ---------- phase 2 ----------
    costs = np.zeros(ncols)
    costs[:nf] = c[free]
    tab.set_costs(costs)
    status = tab.run(allowed, max_iter)
    stats.iterations = tab.iterations
    if status == "iteration-limit":
        return give_up("phase 2")
    if status == "unbounded":
        return finish(SolveStatus.UNBOUNDED)

    xs = _basic_solution(T0, b0, tab_rows, tab.basis, ncols)
    if xs.min(initial=0.0) < -FEAS_TOL:
        logger.warning("simplex basis is not primal feasible (min %.3g, %s)", xs.min(), model.name)
        return finish(SolveStatus.INFEASIBLE)
    x = lb.copy()
    x[free] += np.maximum(xs[:nf], 0.0)
    x = np.minimum(np.maximum(x, lb), ub)
    violation = row_violation(A, b, senses, x)
    if violation > FEAS_TOL:
        logger.warning("simplex point violates a row by %.3g, reporting infeasible (%s)", violation, model.name)
        return finish(SolveStatus.INFEASIBLE)

    # ---------- 쌍대 변수 ----------
    d = tab.T[-1, :-1]
    duals = np.zeros(model.num_constraints)
    for i, orig in enumerate(origin):
        if orig < 0:
            continue
        if art_col[i] >= 0 and slack_col[i] < 0:
            y = -d[art_col[i]]
        elif art_col[i] >= 0:
            y = d[slack_col[i]]
        else:
            y = -d[slack_col[i]]
        duals[orig] = sign[i] * y
    return finish(SolveStatus.OPTIMAL, x, duals)


def dual_bound(model: MilpModel, solution: Solution) -> float:
    """c0 + Σ y_i b_i + Σ_j min(d_j lb_j, d_j ub_j), d = c − Aᵀy"""
    if solution.duals is None:
        raise ModelError("solution carries no dual values")
    A, b, _, c = _dense(model)
    lb, ub = model.bounds_arrays()
    y = solution.duals
    d = c - A.T @ y
    return float(model.obj_const + y @ b + np.minimum(d * lb, d * ub).sum())
