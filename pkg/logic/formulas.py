"""
STL / TSSL 구문 트리 정의
- Predicate, Signal
- STL 노드 (True, Pred, Not, And, Or, Always, Eventually, Until, SpatialAtom)
- TSSL 노드 (True, ValCmp, Not, And, Or, ForAllNext, ExistsNext)
- 텍스트 출력 (to_text)
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence, Tuple, Union

import numpy as np


class FormulaError(ValueError):
    """잘못된 수식 구성"""


class SignalTooShortError(ValueError):
    """수식 horizon 에 비해 신호가 짧음"""


# ============================================================
# 신호 / 술어
# ============================================================

@dataclass(frozen=True)
class Predicate:
    """coeffs·x + offset > 0 일 때 참"""
    coeffs: Tuple[float, ...]
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def value(self, x: Sequence[float]) -> float:
        if len(x) != self.dim:
            raise FormulaError(f"predicate dimension {self.dim} != signal dimension {len(x)}")
        return float(np.dot(self.coeffs, x)) + self.offset

    def holds(self, x: Sequence[float]) -> bool:
        return self.value(x) > 0.0

    def negated_affine(self) -> "Predicate":
        return Predicate(tuple(-c for c in self.coeffs), -self.offset)


class Signal:
    """균일 샘플링된 이산시간 신호 (index 0 부터)"""

    def __init__(self, samples):
        arr = np.array(samples, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise FormulaError("signal needs at least one sample of a fixed dimension")
        arr.setflags(write=False)
        self._samples = arr

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    @property
    def dim(self) -> int:
        return self._samples.shape[1]

    def __len__(self) -> int:
        return self._samples.shape[0]

    def __getitem__(self, k: int) -> np.ndarray:
        return self._samples[k]


# ============================================================
# TSSL (공간 논리)
# ============================================================

class Label(str, Enum):
    NW = "NW"
    NE = "NE"
    SW = "SW"
    SE = "SE"


LABEL_ORDER: Tuple[Label, ...] = (Label.NW, Label.NE, Label.SW, Label.SE)


def canonical_labels(labels) -> Tuple[Label, ...]:
    chosen = {Label(lb) for lb in labels}
    if not chosen:
        raise FormulaError("label set B must be nonempty")
    return tuple(lb for lb in LABEL_ORDER if lb in chosen)


@dataclass(frozen=True)
class TsslTrue:
    pass


@dataclass(frozen=True)
class ValCmp:
    """μ(v) <= d 또는 μ(v) >= d"""
    sense: str
    threshold: float

    def __post_init__(self):
        if self.sense not in ("<=", ">="):
            raise FormulaError(f"unknown valuation comparison '{self.sense}'")
        if self.threshold < 0:
            raise FormulaError("valuation thresholds must be nonnegative")
        object.__setattr__(self, "threshold", float(self.threshold))


@dataclass(frozen=True)
class TsslNot:
    child: ValCmp

    def __post_init__(self):
        if not isinstance(self.child, ValCmp):
            raise FormulaError("TSSL negation applies to valuation comparisons only")


@dataclass(frozen=True)
class TsslAnd:
    children: Tuple["TsslFormula", ...]


@dataclass(frozen=True)
class TsslOr:
    children: Tuple["TsslFormula", ...]


@dataclass(frozen=True)
class ForAllNext:
    labels: Tuple[Label, ...]
    child: "TsslFormula"

    def __post_init__(self):
        object.__setattr__(self, "labels", canonical_labels(self.labels))


@dataclass(frozen=True)
class ExistsNext:
    labels: Tuple[Label, ...]
    child: "TsslFormula"

    def __post_init__(self):
        object.__setattr__(self, "labels", canonical_labels(self.labels))


TsslFormula = Union[TsslTrue, ValCmp, TsslNot, TsslAnd, TsslOr, ForAllNext, ExistsNext]


# ============================================================
# STL (시간 논리): SpatialAtom 으로 SpaTeL 까지 표현
# ============================================================

@dataclass(frozen=True)
class StlTrue:
    pass


@dataclass(frozen=True)
class Pred:
    predicate: Predicate


@dataclass(frozen=True)
class Not:
    """NNF 에서는 Pred 만 자식으로 가짐 (파서의 원시 트리는 예외)"""
    child: "StlFormula"


@dataclass(frozen=True)
class And:
    children: Tuple["StlFormula", ...]


@dataclass(frozen=True)
class Or:
    children: Tuple["StlFormula", ...]


def _check_interval(a: int, b: int):
    if not (0 <= a <= b):
        raise FormulaError(f"interval [{a},{b}] must satisfy 0 <= a <= b")


@dataclass(frozen=True)
class Always:
    a: int
    b: int
    child: "StlFormula"

    def __post_init__(self):
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class Eventually:
    a: int
    b: int
    child: "StlFormula"

    def __post_init__(self):
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class Until:
    a: int
    b: int
    left: "StlFormula"
    right: "StlFormula"

    def __post_init__(self):
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class SpatialAtom:
    formula: TsslFormula


StlFormula = Union[StlTrue, Pred, Not, And, Or, Always, Eventually, Until, SpatialAtom]


def conj(children: Sequence[StlFormula]) -> StlFormula:
    """빈 conjunction 은 True, 단일 원소는 그대로"""
    children = tuple(children)
    if not children:
        return StlTrue()
    if len(children) == 1:
        return children[0]
    return And(children)


def disj(children: Sequence[StlFormula]) -> StlFormula:
    children = tuple(children)
    if not children:
        raise FormulaError("empty disjunction")
    if len(children) == 1:
        return children[0]
    return Or(children)


def tssl_conj(children: Sequence[TsslFormula]) -> TsslFormula:
    children = tuple(children)
    if not children:
        return TsslTrue()
    if len(children) == 1:
        return children[0]
    return TsslAnd(children)


def subformulas(f: StlFormula) -> Iterator[StlFormula]:
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, (And, Or)):
            stack.extend(node.children)
        elif isinstance(node, (Not, Always, Eventually)):
            stack.append(node.child)
        elif isinstance(node, Until):
            stack.extend((node.left, node.right))


def is_nnf(f: StlFormula) -> bool:
    return all(not isinstance(n, Not) or isinstance(n.child, Pred) for n in subformulas(f))


def has_spatial(f: StlFormula) -> bool:
    return any(isinstance(n, SpatialAtom) for n in subformulas(f))


# ============================================================
# 텍스트 출력
# ============================================================

def _num(x: float) -> str:
    return repr(float(x))


def _pred_text(p: Predicate) -> str:
    terms = [f"{_num(c)}*x{i + 1}" for i, c in enumerate(p.coeffs) if c != 0.0]
    lhs = " + ".join(terms) if terms else "0"
    return f"{lhs} > {_num(-p.offset)}"


def to_text(f: StlFormula) -> str:
    """파서 문법으로 출력 (parse_stl 과 round-trip)"""
    if isinstance(f, StlTrue):
        return "true"
    if isinstance(f, Pred):
        return _pred_text(f.predicate)
    if isinstance(f, Not):
        return f"!({to_text(f.child)})"
    if isinstance(f, And):
        return " && ".join(f"({to_text(c)})" for c in f.children)
    if isinstance(f, Or):
        return " || ".join(f"({to_text(c)})" for c in f.children)
    if isinstance(f, Always):
        return f"G[{f.a},{f.b}]({to_text(f.child)})"
    if isinstance(f, Eventually):
        return f"F[{f.a},{f.b}]({to_text(f.child)})"
    if isinstance(f, Until):
        return f"({to_text(f.left)}) U[{f.a},{f.b}] ({to_text(f.right)})"
    if isinstance(f, SpatialAtom):
        return f"<{tssl_text(f.formula)}>"
    raise FormulaError(f"unknown STL node {type(f).__name__}")


def tssl_text(f: TsslFormula) -> str:
    if isinstance(f, TsslTrue):
        return "True"
    if isinstance(f, ValCmp):
        return f"(mu {f.sense} {f.threshold:g})"
    if isinstance(f, TsslNot):
        return f"~{tssl_text(f.child)}"
    if isinstance(f, TsslAnd):
        return " & ".join(tssl_text(c) for c in f.children)
    if isinstance(f, TsslOr):
        return "(" + " | ".join(tssl_text(c) for c in f.children) + ")"
    if isinstance(f, (ForAllNext, ExistsNext)):
        q = "A" if isinstance(f, ForAllNext) else "E"
        labels = ",".join(lb.value for lb in f.labels)
        return f"{q}{{{labels}}}o {tssl_text(f.child)}"
    raise FormulaError(f"unknown TSSL node {type(f).__name__}")
