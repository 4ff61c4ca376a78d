"""
形式微分作用素モジュール

ν で次数づけられた多項式係数の微分作用素 A = Σ ν^r Σ_α a_{r,α} ∂^α と、
作用（単項式基底上の値）から係数を復元する多重線形リフトを提供する。

order_cap は係数が正確に分かっている微分階数の上限（None は無制限）、
nu_valid は信頼できる ν 次数の上限を表す。
"""

from itertools import product as iter_product
from typing import Callable, Dict, NamedTuple, Optional, Sequence, Tuple, Union

from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement, PolyRing

from fgk.calculus.algebra import (INFINITY, ChartSpec, FormalFunction, Monomial, Polynomial,
                                  derivative, fiber_monomial, monomial, multi_binomial,
                                  multi_factorial, multi_indices_upto, sub_indices, total_degree)
from fgk.errors import ChartMismatchError, NotNaturalError, NuOrderError

OpKey = Tuple[int, Monomial]  # (ν 次数 r, 微分多重指数 α)


def _min_cap(*caps: Optional[int]) -> Optional[int]:
    finite = [c for c in caps if c is not None]
    return min(finite) if finite else None


class NaturalityResult(NamedTuple):
    natural: bool
    grade: Optional[int]  # 最初に order(A_r) > r となる r

    def __bool__(self) -> bool:
        return self.natural


class FormalOperator:
    """ν 次数つき形式微分作用素"""

    __slots__ = ("chart", "_terms", "order_cap", "nu_valid")

    def __init__(self, chart: ChartSpec, terms: Optional[Dict[OpKey, Polynomial]] = None,
                 order_cap: Optional[int] = None, nu_valid: Optional[int] = None):
        self.chart = chart
        self.order_cap = order_cap
        self._terms: Dict[OpKey, Polynomial] = {
            key: c for key, c in (terms or {}).items()
            if c and key[0] <= chart.nu_truncation and (order_cap is None or sum(key[1]) <= order_cap)
        }
        self.nu_valid = chart.nu_truncation if nu_valid is None else min(nu_valid, chart.nu_truncation)

    # --- 構成子 -------------------------------------------------------------

    @classmethod
    def zero(cls, chart: ChartSpec) -> "FormalOperator":
        return cls(chart)

    @classmethod
    def multiplication(cls, chart: ChartSpec, f: Polynomial, nu: int = 0) -> "FormalOperator":
        return cls(chart, {(nu, (0,) * chart.n_base): f})

    @classmethod
    def identity(cls, chart: ChartSpec) -> "FormalOperator":
        return cls.multiplication(chart, chart.base_ring.one)

    @classmethod
    def partial(cls, chart: ChartSpec, alpha: Sequence[int], coefficient: Optional[Polynomial] = None,
                nu: int = 0) -> "FormalOperator":
        coefficient = chart.base_ring.one if coefficient is None else coefficient
        return cls(chart, {(nu, tuple(alpha)): coefficient})

    # --- 参照 ---------------------------------------------------------------

    @property
    def terms(self) -> Dict[OpKey, Polynomial]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def grade(self, r: int) -> Dict[Monomial, Polynomial]:
        return {alpha: c for (s, alpha), c in self._terms.items() if s == r}

    def order(self, r: int) -> int:
        """order(A_r)（A_r = 0 のときは -1）"""
        return max((sum(alpha) for (s, alpha) in self._terms if s == r), default=-1)

    def nu_order(self) -> Union[int, float]:
        return min((r for r, _ in self._terms), default=INFINITY)

    def coefficient_degree(self) -> int:
        return max((total_degree(c) for c in self._terms.values()), default=0)

    # --- 演算 ---------------------------------------------------------------

    def _check(self, other: "FormalOperator") -> None:
        if other.chart != self.chart:
            raise ChartMismatchError("異なるチャート上の作用素は演算できません")

    def __add__(self, other: "FormalOperator") -> "FormalOperator":
        self._check(other)
        terms = dict(self._terms)
        for key, c in other._terms.items():
            terms[key] = terms[key] + c if key in terms else c
        return FormalOperator(self.chart, terms, _min_cap(self.order_cap, other.order_cap),
                              min(self.nu_valid, other.nu_valid))

    def __neg__(self) -> "FormalOperator":
        return FormalOperator(self.chart, {k: -c for k, c in self._terms.items()},
                              self.order_cap, self.nu_valid)

    def __sub__(self, other: "FormalOperator") -> "FormalOperator":
        return self + (-other)

    def scale(self, c) -> "FormalOperator":
        c = QQ.convert(c)
        return FormalOperator(self.chart, {k: v * c for k, v in self._terms.items()},
                              self.order_cap, self.nu_valid)

    def __mul__(self, other) -> "FormalOperator":
        """合成 self ∘ other（ライプニッツ則で係数を並べ替える）"""
        if not isinstance(other, FormalOperator):
            return self.scale(other)
        self._check(other)
        n_nu = self.chart.nu_truncation
        cap = _min_cap(None if self.order_cap is None else self.order_cap - other.coefficient_degree(),
                       other.order_cap)
        terms: Dict[OpKey, Polynomial] = {}
        for (r1, alpha), a in self._terms.items():
            for (r2, beta), b in other._terms.items():
                r = r1 + r2
                if r > n_nu:
                    continue
                for gamma in sub_indices(alpha):
                    db = derivative(b, gamma)
                    if not db:
                        continue
                    order = tuple(x - g + y for x, g, y in zip(alpha, gamma, beta))
                    if cap is not None and sum(order) > cap:
                        continue
                    value = a * db * multi_binomial(alpha, gamma)
                    key = (r, order)
                    terms[key] = terms[key] + value if key in terms else value
        nu_valid = min(self.nu_valid + min(other.nu_order(), other.nu_valid + 1),
                       other.nu_valid + min(self.nu_order(), self.nu_valid + 1))
        return FormalOperator(self.chart, terms, cap, int(min(nu_valid, n_nu)))

    def commutator(self, other: "FormalOperator") -> "FormalOperator":
        return self * other - other * self

    def shift_nu(self, amount: int) -> "FormalOperator":
        """ν^amount を掛ける（負のときは対応する低次成分が 0 であることを要求する）"""
        if amount < 0 and any(r < -amount for r, _ in self._terms):
            raise NuOrderError(f"ν^{-amount} で割り切れない作用素です")
        terms = {(r + amount, alpha): c for (r, alpha), c in self._terms.items()}
        nu_valid = self.nu_valid + amount if amount < 0 else min(self.chart.nu_truncation, self.nu_valid + amount)
        return FormalOperator(self.chart, terms, self.order_cap, nu_valid)

    def truncate_order(self, order: int) -> "FormalOperator":
        return FormalOperator(self.chart, self._terms, _min_cap(self.order_cap, order), self.nu_valid)

    def inverse(self) -> "FormalOperator":
        """A = 1 + O(ν) の逆 Σ (1 − A)^n"""
        identity = FormalOperator.identity(self.chart)
        defect = identity - self
        if defect.nu_order() < 1:
            raise NuOrderError("A − 1 が ν⁰ 成分を持つため ν 進的に逆転できません")
        result, power = identity, identity
        for _ in range(self.chart.nu_truncation):
            power = power * defect
            if power.is_zero():
                break
            result = result + power
        return result

    def residual(self, other: "FormalOperator") -> "FormalOperator":
        """self − other を共通の有効範囲（ν 次数と微分階数）に制限したもの"""
        diff = self - other
        cap = diff.order_cap
        terms = {k: c for k, c in diff._terms.items()
                 if k[0] <= diff.nu_valid and (cap is None or sum(k[1]) <= cap)}
        return FormalOperator(self.chart, terms, cap, diff.nu_valid)

    def agrees_with(self, other: "FormalOperator") -> bool:
        return self.residual(other).is_zero()

    def apply(self, phi) -> FormalFunction:
        """ファイバー自由な（ν 次数つき）関数への作用"""
        chart = self.chart
        if isinstance(phi, PolyElement):
            phi = FormalFunction.from_polynomial(chart, phi)
        coefficients = phi.nu_coefficients()
        grades: Dict[int, Polynomial] = {}
        for (r, alpha), c in self._terms.items():
            for s, p in coefficients.items():
                if r + s > chart.nu_truncation:
                    continue
                value = c * derivative(p, alpha)
                if value:
                    grades[r + s] = grades[r + s] + value if r + s in grades else value
        return from_nu_coefficients(chart, grades)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FormalOperator):
            return NotImplemented
        return self.chart == other.chart and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.chart, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        from fgk.calculus.parser import format_polynomial
        names = self.chart.base_names
        parts = []
        for (r, alpha), c in sorted(self._terms.items()):
            d = "".join(f"d{names[i]}" * e for i, e in enumerate(alpha))
            parts.append(f"nu^{r}*({format_polynomial(c)}){'*' + d if d else ''}")
        return "FormalOperator(" + (" + ".join(parts) or "0") + ")"


def from_nu_coefficients(chart: ChartSpec, grades: Dict[int, Polynomial]) -> FormalFunction:
    """ν^r 係数（底多項式）から形式関数を作る"""
    result = FormalFunction.zero(chart)
    for r, p in sorted(grades.items()):
        if p:
            result = result + FormalFunction.from_polynomial(chart, p, nu=r)
    return result


def is_natural(A: FormalOperator) -> NaturalityResult:
    """すべての r ≤ N_ν で order(A_r) ≤ r かどうか"""
    for r in range(A.chart.nu_truncation + 1):
        if A.order(r) > r:
            return NaturalityResult(False, r)
    return NaturalityResult(True, None)


def sigma(A: FormalOperator) -> FormalFunction:
    """
    σ シンボル σ(A) = Σ_r Symb_r(A_r)

    A_r の r 階の主部 ∂^α（|α| = r）をファイバー単項式 ξ^α に置き換える。
    """
    check = is_natural(A)
    if not check:
        raise NotNaturalError(check.grade)
    chart = A.chart
    result = FormalFunction.zero(chart)
    for (r, alpha), c in sorted(A.terms.items()):
        if sum(alpha) == r and r <= chart.fiber_truncation:
            result = result + fiber_monomial(chart, alpha, c)
    valid = min(chart.fiber_truncation, A.nu_valid,
                chart.fiber_truncation if A.order_cap is None else A.order_cap)
    return result.with_valid_order(valid)


# ---------------------------------------------------------------------------
# 単項式基底上の作用からの係数復元
# ---------------------------------------------------------------------------

def lift_multilinear(evaluate: Callable[[Tuple[Polynomial, ...]], Polynomial], ring: PolyRing,
                     orders: Sequence[int], start: int = 0) -> Dict[Tuple[Monomial, ...], Polynomial]:
    """
    多重微分作用素 C(f_1,…,f_k) = Σ c_{α_1…α_k} ∂^{α_1}f_1 … ∂^{α_k}f_k の係数表を、
    単項式 x^{β_1},…,x^{β_k} 上の値から次数の低い順に求める。

    引数:
        evaluate: 単項式の組に対する作用素の値
        ring: 底変数の多項式環
        orders: 各引数の微分階数の上限
        start: 各引数の微分階数の下限（定数を消す作用素では 1）
    戻り値:
        非零係数の表
    """
    nvars = ring.ngens
    ranges = [multi_indices_upto(nvars, order, start) for order in orders]
    keys = sorted(iter_product(*ranges), key=lambda key: sum(sum(b) for b in key))
    table: Dict[Tuple[Monomial, ...], Polynomial] = {}
    for beta in keys:
        value = evaluate(tuple(monomial(ring, b) for b in beta))
        for alpha, c in table.items():
            if alpha == beta or not all(all(a <= b for a, b in zip(x, y)) for x, y in zip(alpha, beta)):
                continue
            weight = 1
            shift = [0] * nvars
            for x, y in zip(alpha, beta):
                weight *= multi_factorial(y) // multi_factorial(tuple(b - a for a, b in zip(x, y)))
                for i in range(nvars):
                    shift[i] += y[i] - x[i]
            value = value - c * monomial(ring, shift, weight)
        if value:
            denominator = 1
            for y in beta:
                denominator *= multi_factorial(y)
            table[beta] = value * QQ(1, denominator)
    return table


def lift_operator(chart: ChartSpec, action: Callable[[Polynomial], FormalFunction],
                  max_degree: int) -> FormalOperator:
    """単項式（次数 ≤ max_degree）上の作用から ν 次数ごとに作用素を復元する"""
    ring = chart.base_ring
    cache: Dict[Polynomial, Dict[int, Polynomial]] = {}

    def grade_value(r: int):
        def evaluate(args: Tuple[Polynomial, ...]) -> Polynomial:
            (p,) = args
            if p not in cache:
                cache[p] = action(p).nu_coefficients()
            return cache[p].get(r, ring.zero)
        return evaluate

    terms: Dict[OpKey, Polynomial] = {}
    for r in range(chart.nu_truncation + 1):
        for (alpha,), c in lift_multilinear(grade_value(r), ring, [max_degree]).items():
            terms[(r, alpha)] = c
    return FormalOperator(chart, terms, order_cap=max_degree)
