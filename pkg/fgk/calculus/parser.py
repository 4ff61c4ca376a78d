"""
多項式テキストの構文解析と正準形での出力

文法:
    expr     := term (('+'|'-') term)*
    term     := factor ('*' factor)*
    factor   := '-' factor | base ('^' uint)?
    base     := rational | var | '(' expr ')'
    rational := uint ('/' uint)?
    var      := ('x'|'z'|'w') uint
単項の '-' は -1 * factor として扱う（'-z1^2' は -(z1^2)）。空白は無視する。
"""

import re
from typing import List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ

from fgk.calculus.algebra import ChartSpec, FormalFunction, Polynomial
from fgk.errors import ParseError

MAX_EXPONENT = 64

_TOKEN = re.compile(r"\s*(?:(\d+)|([xzw])(\d+)|(.))")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.tokens: List[Tuple[str, object, int]] = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            number, letter, index, other = m.groups()
            start = m.start(1) if number else m.start(2) if letter else m.start(4)
            if number is not None:
                self.tokens.append(("num", int(number), start))
            elif letter is not None:
                self.tokens.append(("var", (letter, int(index)), start))
            elif other in "+-*/^()":
                self.tokens.append((other, other, start))
            else:
                raise ParseError(f"不正な文字 {other!r}", text, start)
            pos = m.end()
        self.tokens.append(("end", None, len(stripped)))


class PolynomialParser:
    """チャートの変数名に基づく再帰下降パーサ"""

    def __init__(self, chart: ChartSpec):
        self.chart = chart
        self.ring = chart.base_ring
        self._variables = {}
        for j, name in enumerate(chart.base_names):
            self._variables[(name[0], int(name[1:]))] = self.ring.gens[j]

    def parse(self, text: str) -> Polynomial:
        self._text = text
        self._tokens = _Lexer(text).tokens
        self._pos = 0
        result = self._expr()
        kind, _, position = self._peek()
        if kind != "end":
            raise ParseError("式の後に余分な入力があります", text, position)
        return result

    def _peek(self):
        return self._tokens[self._pos]

    def _advance(self):
        token = self._tokens[self._pos]
        self._pos += 1
        return token

    def _expect(self, kind: str):
        token = self._advance()
        if token[0] != kind:
            expected = "数値" if kind == "num" else repr(kind)
            raise ParseError(f"{expected} が必要です", self._text, token[2])
        return token

    def _expr(self) -> Polynomial:
        result = self._term()
        while self._peek()[0] in ("+", "-"):
            op = self._advance()[0]
            rhs = self._term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def _term(self) -> Polynomial:
        result = self._factor()
        while self._peek()[0] == "*":
            self._advance()
            result = result * self._factor()
        return result

    def _factor(self) -> Polynomial:
        if self._peek()[0] == "-":
            self._advance()
            return -self._factor()
        base = self._base()
        if self._peek()[0] == "^":
            self._advance()
            _, exponent, position = self._expect("num")
            if exponent > MAX_EXPONENT:
                raise ParseError(f"指数が上限 {MAX_EXPONENT} を超えています", self._text, position)
            return base ** exponent
        return base

    def _base(self) -> Polynomial:
        kind, value, position = self._peek()
        if kind == "(":
            self._advance()
            inner = self._expr()
            self._expect(")")
            return inner
        if kind == "var":
            self._advance()
            if value not in self._variables:
                raise ParseError(f"未知の変数 {value[0]}{value[1]}", self._text, position)
            return self._variables[value]
        if kind == "num":
            return self.ring.ground_new(self._rational())
        raise ParseError("数値・変数・括弧のいずれかが必要です", self._text, position)

    def _rational(self):
        _, numerator, _ = self._expect("num")
        denominator = 1
        if self._peek()[0] == "/":
            self._advance()
            _, denominator, position = self._expect("num")
            if denominator == 0:
                raise ParseError("分母が 0 です", self._text, position)
        return QQ(numerator, denominator)


def parse_poly(text: str, chart: ChartSpec) -> Polynomial:
    """テキストを厳密な多項式に変換する"""
    return PolynomialParser(chart).parse(text)


# ---------------------------------------------------------------------------
# 出力
# ---------------------------------------------------------------------------

def _rational_text(c) -> str:
    numerator, denominator = int(c.numerator), int(c.denominator)
    return str(numerator) if denominator == 1 else f"{numerator}/{denominator}"


def _monomial_text(exponents: Sequence[int], names: Sequence[str]) -> str:
    factors = []
    for name, e in zip(names, exponents):
        if e == 1:
            factors.append(name)
        elif e > 1:
            factors.append(f"{name}^{e}")
    return "*".join(factors)


def _term_key(item):
    m = item[0]
    return (sum(m), tuple(-e for e in m))


def _signed_terms(p: Polynomial, names: Sequence[str], suffix: str = "") -> List[Tuple[bool, str]]:
    """(負号, 絶対値の文字列) の列を正準順で返す"""
    out = []
    for m, c in sorted(p.items(), key=_term_key):
        negative = c < 0
        magnitude = -c if negative else c
        body = "*".join(part for part in (_monomial_text(m, names), suffix) if part)
        if not body:
            out.append((negative, _rational_text(magnitude)))
        elif magnitude == 1:
            out.append((negative, body))
        else:
            out.append((negative, f"{_rational_text(magnitude)}*{body}"))
    return out


def _join(terms: List[Tuple[bool, str]]) -> str:
    if not terms:
        return "0"
    first_negative, first = terms[0]
    if first_negative:
        # 先頭の単独変数には係数 -1 を明示する
        head = f"-{first}" if first[0].isdigit() else f"-1*{first}"
    else:
        head = first
    rest = "".join(f" - {body}" if negative else f" + {body}" for negative, body in terms[1:])
    return head + rest


def format_polynomial(p: Polynomial, names: Optional[Sequence[str]] = None) -> str:
    """多項式の正準文字列（次数の昇順、同次数内は指数の辞書式降順）"""
    names = names or [str(s) for s in p.ring.symbols]
    return _join(_signed_terms(p, names))


def format_formal(F: FormalFunction) -> str:
    """形式関数を (ν 次数, ファイバー単項式) ごとにまとめて出力する"""
    chart = F.chart
    base_names, fiber_names = chart.base_names, chart.fiber_names
    groups = sorted(F.components().items(),
                    key=lambda kv: (kv[0][1], sum(kv[0][0]), tuple(-e for e in kv[0][0])))
    terms: List[Tuple[bool, str]] = []
    for (fiber, r), coefficient in groups:
        factors = []
        if r == 1:
            factors.append("nu")
        elif r > 1:
            factors.append(f"nu^{r}")
        mono = _monomial_text(fiber, fiber_names)
        if mono:
            factors.append(mono)
        suffix = "*".join(factors)
        if len(coefficient) > 1 and suffix:
            terms.append((False, f"({format_polynomial(coefficient, base_names)})*{suffix}"))
        else:
            terms.extend(_signed_terms(coefficient, base_names, suffix))
    return _join(terms)
