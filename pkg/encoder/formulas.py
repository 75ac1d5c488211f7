"""
STL / TSSL / SpaTeL → MILP 재귀 인코딩
- 각 부분식의 만족 여부는 리터럴 (LinExpr: 이진변수, 1 − 이진변수, 또는 상수 0/1)
- 술어: z=1 ⇒ μ ≥ ε, z=0 ⇒ μ ≤ 0 (M 은 식의 변수 상하한에서 계산)
- require=True: 참이어야 하는 식은 직접 제약으로 (논리곱 사슬), 논리합만 이진변수 사용
"""
import logging
from typing import Callable, Dict, List, Sequence

import numpy as np

from logic.formulas import (
    Always, And, Eventually, ExistsNext, ForAllNext, Not, Or, Pred, SpatialAtom, StlFormula,
    StlTrue, TsslAnd, TsslFormula, TsslNot, TsslOr, TsslTrue, Until, ValCmp,
)
from milp.model import LinExpr, MilpModel, Sense, VarKind
from qts.tree import ROOT, Node, child_of

from .agent import EncodingContext, EncodingError

logger = logging.getLogger(__name__)

SignalFn = Callable[[int], Sequence[LinExpr]]

ONE = LinExpr.constant(1.0)
ZERO = LinExpr.constant(0.0)


def _is_const(z: LinExpr, value: float) -> bool:
    return z.is_constant() and z.const == value


def _new_binary(model: MilpModel, name: str) -> LinExpr:
    return LinExpr.var(model.add_var(VarKind.BINARY, name=name))


def _force_true(model: MilpModel, z: LinExpr, name: str):
    if _is_const(z, 1.0):
        return
    model.add_constraint(z, Sense.GE, 1.0, name)


# ============================================================
# Boolean 결합
# ============================================================

def encode_and(model: MilpModel, literals: List[LinExpr], name: str = "and") -> LinExpr:
    """z <= z_i, z >= Σz_i − (n−1)"""
    if any(_is_const(z, 0.0) for z in literals):
        return ZERO
    rest = [z for z in literals if not _is_const(z, 1.0)]
    if not rest:
        return ONE
    if len(rest) == 1:
        return rest[0]
    z = _new_binary(model, name)
    for zi in rest:
        model.add_constraint(z - zi, Sense.LE, 0.0)
    model.add_constraint(z - LinExpr.total(rest), Sense.GE, -(len(rest) - 1))
    return z


def encode_or(model: MilpModel, literals: List[LinExpr], name: str = "or") -> LinExpr:
    """z >= z_i, z <= Σz_i"""
    if any(_is_const(z, 1.0) for z in literals):
        return ONE
    rest = [z for z in literals if not _is_const(z, 0.0)]
    if not rest:
        return ZERO
    if len(rest) == 1:
        return rest[0]
    z = _new_binary(model, name)
    for zi in rest:
        model.add_constraint(z - zi, Sense.GE, 0.0)
    model.add_constraint(z - LinExpr.total(rest), Sense.LE, 0.0)
    return z


def encode_positive(model: MilpModel, mu: LinExpr, eps: float, name: str) -> LinExpr:
    """z=1 ⇒ μ ≥ ε, z=0 ⇒ μ ≤ 0"""
    lo, hi = mu.bounds(model)
    if lo >= eps:
        return ONE
    if hi <= 0.0:
        return ZERO
    z = _new_binary(model, name)
    model.add_constraint(mu - z * (eps - lo), Sense.GE, lo, f"{name}_on")
    model.add_constraint(mu - z * hi, Sense.LE, 0.0, f"{name}_off")
    return z


# ============================================================
# STL
# ============================================================

def _pred_expr(pred: Pred, signal: Sequence[LinExpr]) -> LinExpr:
    p = pred.predicate
    if p.dim != len(signal):
        raise EncodingError(f"predicate dimension {p.dim} != signal dimension {len(signal)}")
    mu = LinExpr.constant(p.offset)
    for c, x in zip(p.coeffs, signal):
        if c != 0.0:
            mu.add_inplace(x, c)
    return mu


def encode_stl(model: MilpModel, ctx: EncodingContext, f: StlFormula, t: int, signal: SignalFn,
               require: bool = False) -> LinExpr:
    """(signal, t) ⊨ f 의 리터럴. require=True 이면 참으로 강제하고 상수 1 반환"""
    if require:
        _require_stl(model, ctx, f, t, signal)
        return ONE
    key = ("stl", id(signal), f, t)
    if key in ctx.literals:
        return ctx.literals[key]
    z = _encode_stl(model, ctx, f, t, signal)
    ctx.literals[key] = z
    return z


def _encode_stl(model, ctx, f, t, signal) -> LinExpr:
    if isinstance(f, StlTrue):
        return ONE
    if isinstance(f, Pred):
        return encode_positive(model, _pred_expr(f, signal(t)), ctx.eps, f"zp_{t}")
    if isinstance(f, Not):
        if not isinstance(f.child, Pred):
            raise EncodingError("formula is not in negation normal form")
        return ONE - encode_stl(model, ctx, f.child, t, signal)
    if isinstance(f, And):
        return encode_and(model, [encode_stl(model, ctx, c, t, signal) for c in f.children], f"za_{t}")
    if isinstance(f, Or):
        return encode_or(model, [encode_stl(model, ctx, c, t, signal) for c in f.children], f"zo_{t}")
    if isinstance(f, Always):
        kids = [encode_stl(model, ctx, f.child, s, signal) for s in range(t + f.a, t + f.b + 1)]
        return encode_and(model, kids, f"zg_{t}")
    if isinstance(f, Eventually):
        kids = [encode_stl(model, ctx, f.child, s, signal) for s in range(t + f.a, t + f.b + 1)]
        return encode_or(model, kids, f"zf_{t}")
    if isinstance(f, Until):
        options = []
        for t2 in range(t + f.a, t + f.b + 1):
            parts = [encode_stl(model, ctx, f.right, t2, signal)]
            parts += [encode_stl(model, ctx, f.left, s, signal) for s in range(t, t2 + 1)]
            options.append(encode_and(model, parts, f"zu_{t}_{t2}"))
        return encode_or(model, options, f"zu_{t}")
    if isinstance(f, SpatialAtom):
        return encode_tssl(model, ctx, f.formula, t)
    raise EncodingError(f"unknown STL node {type(f).__name__}")


def _require_stl(model, ctx, f, t, signal):
    if isinstance(f, StlTrue):
        return
    if isinstance(f, Pred):
        mu = _pred_expr(f, signal(t))
        if mu.bounds(model)[0] < ctx.eps:
            model.add_constraint(mu, Sense.GE, ctx.eps, f"req_p_{t}")
        return
    if isinstance(f, Not) and isinstance(f.child, Pred):
        mu = _pred_expr(f.child, signal(t))
        if mu.bounds(model)[1] > 0.0:
            model.add_constraint(mu, Sense.LE, 0.0, f"req_n_{t}")
        return
    if isinstance(f, And):
        for c in f.children:
            _require_stl(model, ctx, c, t, signal)
        return
    if isinstance(f, Always):
        for s in range(t + f.a, t + f.b + 1):
            _require_stl(model, ctx, f.child, s, signal)
        return
    if isinstance(f, SpatialAtom):
        _require_tssl(model, ctx, f.formula, t, ROOT)
        return
    _force_true(model, encode_stl(model, ctx, f, t, signal), f"req_{t}")


# ============================================================
# TSSL (QTS 노드 값은 점유 이진변수 + 이웃 상수의 평균)
# ============================================================

def leaf_valuation(ctx: EncodingContext, t: int) -> np.ndarray:
    ids = ctx.occupancy_vars(t)
    const = ctx.neighbor_counts.get(t)
    out = np.empty(ids.shape, dtype=object)
    for (m, n), v in np.ndenumerate(ids):
        e = LinExpr.var(int(v))
        if const is not None:
            e.const += float(const[m, n])
        out[m, n] = e
    return out


def node_valuation(ctx: EncodingContext, t: int, v: Node) -> LinExpr:
    key = ("mu", t, v)
    if key in ctx.literals:
        return ctx.literals[key]
    depth = ctx.grid.depth if ctx.grid is not None else int(np.log2(ctx.occupancy_vars(t).shape[0]))
    if v.depth == depth:
        leaves = ctx.literals.get(("leaves", t))
        if leaves is None:
            leaves = leaf_valuation(ctx, t)
            ctx.literals[("leaves", t)] = leaves
        mu = leaves[v.row, v.col]
    else:
        kids = [node_valuation(ctx, t, child_of(v, lb)) for lb in ("NW", "NE", "SW", "SE")]
        mu = LinExpr.total(kids) * 0.25
    ctx.literals[key] = mu
    return mu


def _next_nodes(ctx: EncodingContext, v: Node, labels, t: int) -> List[Node]:
    depth = ctx.grid.depth if ctx.grid is not None else int(np.log2(ctx.occupancy_vars(t).shape[0]))
    if v.depth == depth:
        return [v for _ in labels]
    return [child_of(v, lb) for lb in labels]


def _valcmp_literal(model: MilpModel, ctx: EncodingContext, f: ValCmp, mu: LinExpr, name: str) -> LinExpr:
    """(μ <= d) 또는 (μ >= d), 보수는 ε 만큼 떨어진 쪽"""
    d = f.threshold
    if f.sense == "<=":
        return encode_positive(model, LinExpr.constant(d + ctx.eps) - mu, ctx.eps, name)
    return encode_positive(model, mu - (d - ctx.eps), ctx.eps, name)


def encode_tssl(model: MilpModel, ctx: EncodingContext, f: TsslFormula, t: int, v: Node = ROOT,
                require: bool = False) -> LinExpr:
    if require:
        _require_tssl(model, ctx, f, t, v)
        return ONE
    key = ("tssl", f, t, v)
    if key in ctx.literals:
        return ctx.literals[key]
    if isinstance(f, TsslTrue):
        z = ONE
    elif isinstance(f, ValCmp):
        z = _valcmp_literal(model, ctx, f, node_valuation(ctx, t, v), f"zv_{t}")
    elif isinstance(f, TsslNot):
        z = ONE - encode_tssl(model, ctx, f.child, t, v)
    elif isinstance(f, TsslAnd):
        z = encode_and(model, [encode_tssl(model, ctx, c, t, v) for c in f.children], f"zsa_{t}")
    elif isinstance(f, TsslOr):
        z = encode_or(model, [encode_tssl(model, ctx, c, t, v) for c in f.children], f"zso_{t}")
    elif isinstance(f, ForAllNext):
        kids = [encode_tssl(model, ctx, f.child, t, w) for w in _next_nodes(ctx, v, f.labels, t)]
        z = encode_and(model, kids, f"zsA_{t}")
    elif isinstance(f, ExistsNext):
        kids = [encode_tssl(model, ctx, f.child, t, w) for w in _next_nodes(ctx, v, f.labels, t)]
        z = encode_or(model, kids, f"zsE_{t}")
    else:
        raise EncodingError(f"unknown TSSL node {type(f).__name__}")
    ctx.literals[key] = z
    return z


def _require_tssl(model, ctx, f, t, v):
    if isinstance(f, TsslTrue):
        return
    if isinstance(f, ValCmp):
        mu = node_valuation(ctx, t, v)
        lo, hi = mu.bounds(model)
        if f.sense == "<=" and hi > f.threshold:
            model.add_constraint(mu, Sense.LE, f.threshold, f"req_mu_{t}")
        elif f.sense == ">=" and lo < f.threshold:
            model.add_constraint(mu, Sense.GE, f.threshold, f"req_mu_{t}")
        return
    if isinstance(f, TsslAnd):
        for c in f.children:
            _require_tssl(model, ctx, c, t, v)
        return
    if isinstance(f, ForAllNext):
        for w in _next_nodes(ctx, v, f.labels, t):
            _require_tssl(model, ctx, f.child, t, w)
        return
    _force_true(model, encode_tssl(model, ctx, f, t, v), f"req_s_{t}")


def encode_spatel(model: MilpModel, ctx: EncodingContext, patterns: Sequence[TsslFormula],
                  neighbor_occupancy: Dict[int, np.ndarray], window: Sequence[int],
                  require: bool = True) -> LinExpr:
    """창 안의 모든 단계에서 ψ1 ∧ … ∧ ψ5 (□ 를 논리곱으로 전개)"""
    window = list(window)
    if not window:
        raise EncodingError("SpaTeL window is empty")
    for t, counts in neighbor_occupancy.items():
        ctx.neighbor_counts[t] = np.asarray(counts)
    if require:
        for t in window:
            for psi in patterns:
                _require_tssl(model, ctx, psi, t, ROOT)
        return ONE
    literals = [encode_tssl(model, ctx, psi, t) for t in window for psi in patterns]
    z = encode_and(model, literals, "zspatel")
    _force_true(model, z, "spatel_top")
    return z
