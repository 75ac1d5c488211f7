"""
STL 텍스트 파서
- 문법: G[a,b] φ | F[a,b] φ | φ U[a,b] φ | φ && φ | φ || φ | !φ | 선형식 비교 | true/false
- 결과는 NNF (부정은 술어에만)
"""
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .formulas import (
    Always, And, Eventually, FormulaError, Not, Or, Pred, Predicate, StlFormula,
    StlTrue, Until, SpatialAtom,
)


class StlSyntaxError(ValueError):
    """위치 정보를 가진 구문 오류"""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnboundedIntervalError(StlSyntaxError):
    """무한 구간은 지원하지 않음"""


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<op>&&|\|\||>=|<=|>|<|!|\+|-|\*|\(|\)|\[|\]|,)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r")"
)


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise StlSyntaxError(f"unexpected character '{text[pos]}'", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(_Token(kind, m.group(kind), start))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


_VAR_RE = re.compile(r"x(\d+)$")


class _Parser:
    def __init__(self, text: str, dim: Optional[int]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.dim = dim
        self.max_index = 0

    # ---------- 토큰 유틸 ----------
    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _peek(self, offset: int = 1) -> _Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def _accept(self, text: str) -> bool:
        if self.tok.kind != "eof" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def _expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "eof":
            found = self.tok.text or "end of input"
            raise StlSyntaxError(f"expected '{text}' but found '{found}'", self.tok.pos)
        tok = self.tok
        self.i += 1
        return tok

    def _is_temporal(self, name: str) -> bool:
        return self.tok.kind == "ident" and self.tok.text == name and self._peek().text == "["

    # ---------- 문법 ----------
    def parse(self) -> StlFormula:
        f = self._or()
        if self.tok.kind != "eof":
            raise StlSyntaxError(f"unexpected token '{self.tok.text}'", self.tok.pos)
        return f

    def _or(self) -> StlFormula:
        items = [self._and()]
        while self._accept("||"):
            items.append(self._and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def _and(self) -> StlFormula:
        items = [self._until()]
        while self._accept("&&"):
            items.append(self._until())
        return items[0] if len(items) == 1 else And(tuple(items))

    def _until(self) -> StlFormula:
        left = self._unary()
        if self._is_temporal("U"):
            self.i += 1
            a, b = self._interval()
            right = self._unary()
            return Until(a, b, left, right)
        return left

    def _interval(self) -> Tuple[int, int]:
        self._expect("[")
        a = self._int()
        self._expect(",")
        b = self._int()
        close = self._expect("]")
        if a > b:
            raise StlSyntaxError(f"interval lower bound {a} exceeds upper bound {b}", close.pos)
        return a, b

    def _int(self) -> int:
        tok = self.tok
        if tok.kind == "ident" and tok.text.lower() in ("inf", "infinity"):
            raise UnboundedIntervalError("unbounded temporal interval", tok.pos)
        if tok.kind != "num" or not tok.text.isdigit():
            raise StlSyntaxError(f"expected an integer step index, found '{tok.text or 'end of input'}'", tok.pos)
        self.i += 1
        return int(tok.text)

    def _unary(self) -> StlFormula:
        if self._is_temporal("G"):
            self.i += 1
            a, b = self._interval()
            return Always(a, b, self._unary())
        if self._is_temporal("F"):
            self.i += 1
            a, b = self._interval()
            return Eventually(a, b, self._unary())
        if self._accept("!"):
            return Not(self._unary())
        return self._primary()

    def _primary(self) -> StlFormula:
        tok = self.tok
        if self._accept("("):
            f = self._or()
            self._expect(")")
            return f
        if tok.kind == "ident" and tok.text == "true":
            self.i += 1
            return StlTrue()
        if tok.kind == "ident" and tok.text == "false":
            self.i += 1
            return Pred(Predicate((0.0,), 0.0))
        return self._comparison()

    def _comparison(self) -> StlFormula:
        start = self.tok.pos
        lhs, lconst = self._linear()
        op = self.tok
        if op.text not in (">=", "<=", ">", "<"):
            raise StlSyntaxError(f"expected a comparison operator, found '{op.text or 'end of input'}'", op.pos)
        self.i += 1
        rhs, rconst = self._linear()
        coeffs = dict(lhs)
        for k, v in rhs.items():
            coeffs[k] = coeffs.get(k, 0.0) - v
        const = lconst - rconst
        if op.text in ("<", "<="):
            coeffs = {k: -v for k, v in coeffs.items()}
            const = -const
        return Pred(_RawPredicate(coeffs, const, start))

    def _linear(self):
        coeffs = {}
        const = 0.0
        sign = 1.0
        if self._accept("-"):
            sign = -1.0
        elif self._accept("+"):
            pass
        while True:
            coef, var = self._term()
            coef *= sign
            if var is None:
                const += coef
            else:
                coeffs[var] = coeffs.get(var, 0.0) + coef
            if self._accept("+"):
                sign = 1.0
            elif self._accept("-"):
                sign = -1.0
            else:
                break
            if self._accept("-"):
                sign = -sign
        return coeffs, const

    def _term(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            value = float(tok.text)
            if self._accept("*"):
                return value, self._var()
            return value, None
        if tok.kind == "ident":
            return 1.0, self._var()
        raise StlSyntaxError(f"expected a number or variable, found '{tok.text or 'end of input'}'", tok.pos)

    def _var(self) -> int:
        tok = self.tok
        m = _VAR_RE.match(tok.text) if tok.kind == "ident" else None
        if not m or int(m.group(1)) < 1:
            raise StlSyntaxError(f"expected a variable x1..xn, found '{tok.text or 'end of input'}'", tok.pos)
        self.i += 1
        index = int(m.group(1))
        self.max_index = max(self.max_index, index)
        return index - 1


@dataclass(frozen=True)
class _RawPredicate:
    """차원 확정 전 임시 술어"""
    coeffs: dict
    const: float
    pos: int

    def __hash__(self):
        return hash((tuple(sorted(self.coeffs.items())), self.const, self.pos))


def _finalize(f: StlFormula, dim: int) -> StlFormula:
    if isinstance(f, Pred):
        p = f.predicate
        if isinstance(p, _RawPredicate):
            vec = [0.0] * dim
            for k, v in p.coeffs.items():
                if k >= dim:
                    raise StlSyntaxError(f"variable x{k + 1} exceeds signal dimension {dim}", p.pos)
                vec[k] = v
            return Pred(Predicate(tuple(vec), p.const))
        if p.dim != dim:
            return Pred(Predicate(tuple(p.coeffs) + (0.0,) * (dim - p.dim), p.offset))
        return f
    if isinstance(f, Not):
        return Not(_finalize(f.child, dim))
    if isinstance(f, And):
        return And(tuple(_finalize(c, dim) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(_finalize(c, dim) for c in f.children))
    if isinstance(f, Always):
        return Always(f.a, f.b, _finalize(f.child, dim))
    if isinstance(f, Eventually):
        return Eventually(f.a, f.b, _finalize(f.child, dim))
    if isinstance(f, Until):
        return Until(f.a, f.b, _finalize(f.left, dim), _finalize(f.right, dim))
    return f


# ============================================================
# NNF 변환
# ============================================================

def to_nnf(f: StlFormula, negate: bool = False) -> StlFormula:
    """이중부정 제거 + De Morgan + G/F 쌍대성으로 부정을 술어까지 내림"""
    if isinstance(f, StlTrue):
        return _false_like() if negate else f
    if isinstance(f, Pred):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return to_nnf(f.child, not negate)
    if isinstance(f, And):
        kids = tuple(to_nnf(c, negate) for c in f.children)
        return Or(kids) if negate else And(kids)
    if isinstance(f, Or):
        kids = tuple(to_nnf(c, negate) for c in f.children)
        return And(kids) if negate else Or(kids)
    if isinstance(f, Always):
        child = to_nnf(f.child, negate)
        return Eventually(f.a, f.b, child) if negate else Always(f.a, f.b, child)
    if isinstance(f, Eventually):
        child = to_nnf(f.child, negate)
        return Always(f.a, f.b, child) if negate else Eventually(f.a, f.b, child)
    if isinstance(f, Until):
        if negate:
            raise FormulaError("negated until has no negation normal form in this logic")
        return Until(f.a, f.b, to_nnf(f.left), to_nnf(f.right))
    if isinstance(f, SpatialAtom):
        if negate:
            raise FormulaError("negated spatial atoms are not supported")
        return f
    raise FormulaError(f"unknown STL node {type(f).__name__}")


def _false_like() -> StlFormula:
    return Pred(Predicate((0.0,), 0.0))


def parse_raw(text: str, dim: Optional[int] = None) -> StlFormula:
    """일반 부정이 남아있는 원시 트리 (참조 평가기 검증용)"""
    parser = _Parser(text, dim)
    tree = parser.parse()
    final_dim = dim if dim is not None else max(parser.max_index, 1)
    return _finalize(tree, final_dim)


def parse_stl(text: str, dim: Optional[int] = None) -> StlFormula:
    """텍스트 → NNF 구문 트리. dim 생략 시 최대 변수 인덱스로 결정"""
    parser = _Parser(text, dim)
    tree = parser.parse()
    final_dim = dim if dim is not None else max(parser.max_index, 1)
    return _finalize(to_nnf(_finalize(tree, final_dim)), final_dim)
