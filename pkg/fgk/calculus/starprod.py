"""
スター積モジュール

平坦チャート（定数テンソル g^{l̄k}）上の分離変数型 Wick スター積
φ ⋆ ψ = Σ_r (ν^r / r!) (g^{l̄k} ∂̄_l ⊗ ∂_k)^r (φ ⊗ ψ)、
左右の掛け算作用素 L_f, R_g、形式 Berezin 変換 B（B(ab) = b ⋆ a）とその対数 X = ν log B、
双対スター積 φ ∗̃ ψ = B⁻¹(Bψ ⋆ Bφ) を提供する。
"""

from functools import lru_cache
from math import factorial
from typing import Dict, Tuple, Union

from pydantic import BaseModel, ConfigDict, model_validator
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement

from fgk.calculus.algebra import ChartSpec, FormalFunction, Monomial, Polynomial, derivative
from fgk.calculus.operators import (FormalOperator, from_nu_coefficients, is_natural,
                                    lift_operator, sigma)
from fgk.calculus.poisson import PoissonTensor
from fgk.errors import NonFlatError, NuOrderError
from fgk.utils.logging_config import setup_logger

logger = setup_logger('starprod')

FunctionLike = Union[Polynomial, FormalFunction]


class StarProduct(BaseModel):
    """平坦な Wick スター積（複素チャート、定数テンソル）"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tensor: PoissonTensor

    @model_validator(mode="after")
    def _check_flat(self) -> "StarProduct":
        if not self.tensor.chart.is_complex:
            raise ValueError("スター積は複素チャートでのみ定義されます")
        if not self.tensor.is_constant():
            raise NonFlatError("Wick スター積は定数テンソル（平坦チャート）でのみ構成できます")
        return self

    @property
    def chart(self) -> ChartSpec:
        return self.tensor.chart


@lru_cache(maxsize=32)
def _wick_table(S: StarProduct) -> Tuple[Dict[Tuple[Monomial, Monomial], object], ...]:
    """
    r ごとの (L, K) → (1/r!) Σ ∏ g^{l_i k_i} の表

    L は左因子に掛かる ∂̄ の多重指数、K は右因子に掛かる ∂ の多重指数（いずれも長さ 2d）。
    """
    chart = S.chart
    d, nb = chart.dimension, chart.n_base
    g = [[S.tensor.g(l, k).LC if S.tensor.g(l, k) else QQ.zero for k in range(d)] for l in range(d)]
    zero = (0,) * nb
    level: Dict[Tuple[Monomial, Monomial], object] = {(zero, zero): QQ.one}
    tables = [dict(level)]
    for r in range(1, chart.nu_truncation + 1):
        nxt: Dict[Tuple[Monomial, Monomial], object] = {}
        for (L, K), c in level.items():
            for l in range(d):
                for k in range(d):
                    if not g[l][k]:
                        continue
                    L2 = list(L)
                    L2[chart.antiholomorphic(l)] += 1
                    K2 = list(K)
                    K2[chart.holomorphic(k)] += 1
                    key = (tuple(L2), tuple(K2))
                    nxt[key] = nxt.get(key, QQ.zero) + c * g[l][k]
        level = nxt
        tables.append({key: c * QQ(1, factorial(r)) for key, c in level.items() if c})
    return tuple(tables)


def _grades(chart: ChartSpec, phi: FunctionLike) -> Dict[int, Polynomial]:
    if isinstance(phi, PolyElement):
        phi = FormalFunction.from_polynomial(chart, phi)
    return phi.nu_coefficients()


def wick_star(phi: FunctionLike, psi: FunctionLike, S: StarProduct) -> FormalFunction:
    """φ ⋆ ψ を ν^{N_ν} まで厳密に展開する（ν 双線形）"""
    chart = S.chart
    n_nu = chart.nu_truncation
    left, right = _grades(chart, phi), _grades(chart, psi)
    out: Dict[int, Polynomial] = {}
    for r, table in enumerate(_wick_table(S)):
        for (L, K), c in table.items():
            for a, pa in left.items():
                dl = derivative(pa, L)
                if not dl:
                    continue
                for b, pb in right.items():
                    grade = r + a + b
                    if grade > n_nu:
                        continue
                    dr = derivative(pb, K)
                    if dr:
                        value = dl * dr * c
                        out[grade] = out[grade] + value if grade in out else value
    return from_nu_coefficients(chart, out)


def left_op(f: Polynomial, S: StarProduct) -> FormalOperator:
    """左スター掛け算 L_f ψ = f ⋆ ψ"""
    terms: Dict[Tuple[int, Monomial], Polynomial] = {}
    for r, table in enumerate(_wick_table(S)):
        for (L, K), c in table.items():
            coefficient = derivative(f, L)
            if coefficient:
                key = (r, K)
                terms[key] = terms[key] + coefficient * c if key in terms else coefficient * c
    return FormalOperator(S.chart, terms)


def right_op(g: Polynomial, S: StarProduct) -> FormalOperator:
    """右スター掛け算 R_g φ = φ ⋆ g"""
    terms: Dict[Tuple[int, Monomial], Polynomial] = {}
    for r, table in enumerate(_wick_table(S)):
        for (L, K), c in table.items():
            coefficient = derivative(g, K)
            if coefficient:
                key = (r, L)
                terms[key] = terms[key] + coefficient * c if key in terms else coefficient * c
    return FormalOperator(S.chart, terms)


def laplacian(S: StarProduct) -> FormalOperator:
    """Δ = g^{l̄k} ∂_k ∂̄_l"""
    chart = S.chart
    terms = {}
    for l in range(chart.dimension):
        for k in range(chart.dimension):
            entry = S.tensor.g(l, k)
            if entry:
                alpha = [0] * chart.n_base
                alpha[chart.holomorphic(k)] += 1
                alpha[chart.antiholomorphic(l)] += 1
                terms[(0, tuple(alpha))] = entry
    return FormalOperator(chart, terms)


def berezin_apply(phi: FunctionLike, S: StarProduct) -> FormalFunction:
    """Berezin 変換の直接作用：単項式 z^P z̄^Q ごとに z̄^Q ⋆ z^P を取る"""
    chart = S.chart
    ring = chart.base_ring
    d = chart.dimension
    result = FormalFunction.zero(chart)
    for a, p in _grades(chart, phi).items():
        for m, c in p.items():
            holomorphic = ring.from_dict({tuple(m[:d]) + (0,) * d: QQ.one})
            antiholomorphic = ring.from_dict({(0,) * d + tuple(m[d:]): QQ.one})
            result = result + wick_star(antiholomorphic, holomorphic, S).shift_nu(a).scale(c)
    return result


def berezin_inverse_apply(psi: FunctionLike, S: StarProduct) -> FormalFunction:
    """B⁻¹ψ = Σ_n (1 − B)^n ψ（B − 1 が ν を 1 つ以上上げるので N_ν + 1 項で止まる）"""
    chart = S.chart
    if isinstance(psi, PolyElement):
        psi = FormalFunction.from_polynomial(chart, psi)
    total, term = psi, psi
    for _ in range(chart.nu_truncation + 1):
        term = term - berezin_apply(term, S)
        if term.is_zero():
            break
        total = total + term
    return total


def berezin_transform(S: StarProduct, basis_degree: int) -> FormalOperator:
    """
    形式 Berezin 変換を作用素として求める

    次数 basis_degree 以下の単項式 z^P z̄^Q 上の値 z̄^Q ⋆ z^P から係数を ν 次数ごとに復元する。
    結果は微分階数 basis_degree まで正確（order_cap = basis_degree）。
    """
    logger.debug(f"Berezin 変換を基底次数 {basis_degree} で復元します")
    return lift_operator(S.chart, lambda p: berezin_apply(p, S), basis_degree)


def dual_star(phi: FunctionLike, psi: FunctionLike, S: StarProduct) -> FormalFunction:
    """双対スター積 φ ∗̃ ψ = B⁻¹(Bψ ⋆ Bφ)"""
    return berezin_inverse_apply(wick_star(berezin_apply(psi, S), berezin_apply(phi, S), S), S)


def log_berezin(B: FormalOperator) -> FormalOperator:
    """X = ν log B = ν Σ_{n≥1} (−1)^{n+1} (B − 1)^n / n"""
    chart = B.chart
    defect = B - FormalOperator.identity(chart)
    if defect.nu_order() < 1:
        raise NuOrderError("B − 1 が ν⁰ 成分を持つため対数を取れません")
    log_b = FormalOperator.zero(chart)
    power = FormalOperator.identity(chart)
    for n in range(1, chart.nu_truncation + 1):
        power = power * defect
        if power.is_zero():
            break
        log_b = log_b + power.scale(QQ((-1) ** (n + 1), n))
    log_b = FormalOperator(chart, log_b.terms, _cap(B, power), min(B.nu_valid, log_b.nu_valid))
    return log_b.shift_nu(1)


def _cap(B: FormalOperator, power: FormalOperator):
    return B.order_cap if power.order_cap is None else power.order_cap


def exp_natural(X: FormalOperator) -> FormalOperator:
    """exp((1/ν) X)（X = 0 mod ν を要求する）"""
    chart = X.chart
    Y = X.shift_nu(-1)
    if Y.nu_order() < 1:
        raise NuOrderError("(1/ν)X が ν⁰ 成分を持つため指数を取れません")
    result = FormalOperator.identity(chart)
    power = FormalOperator.identity(chart)
    for n in range(1, chart.nu_truncation + 1):
        power = power * Y
        if power.is_zero():
            break
        result = result + power.scale(QQ(1, factorial(n)))
    return FormalOperator(chart, result.terms, Y.order_cap, min(result.nu_valid, Y.nu_valid))


__all__ = [
    "StarProduct", "wick_star", "left_op", "right_op", "laplacian", "is_natural", "sigma",
    "berezin_apply", "berezin_inverse_apply", "berezin_transform", "dual_star",
    "log_berezin", "exp_natural",
]
