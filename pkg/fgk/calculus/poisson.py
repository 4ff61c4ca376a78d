"""
Poisson 構造モジュール

底チャート上の Poisson 括弧 {·,·}_M、零切断の形式近傍（余接チャート）上の標準括弧
{·,·}_{T*M}、ハミルトン微分 H_F = {F,·}、およびフィルトレーションを上げる微分の指数写像を提供する。

ファイバー変数 j は底変数 j の双対として並べてあるため（実チャート: x^j ↔ ξ_j、
複素チャート: z^k ↔ ζ_k, z̄^l ↔ ζ̄_l）、標準括弧は両種別とも
{F,G} = Σ_j ∂^j F ∂_j G − ∂^j G ∂_j F の同じ式で書ける。
"""

from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement

from fgk.calculus.algebra import ChartSpec, FormalFunction, Polynomial, is_constant
from fgk.errors import ChartMismatchError, NonTerminatingSeriesError
from fgk.utils.logging_config import setup_logger

logger = setup_logger('poisson')


class PoissonTensor(BaseModel):
    """
    Poisson テンソル

    実チャートでは反対称行列 η^{ij}、複素チャートでは (1,1) 型の g^{l̄k}
    （entries[l][k] = g^{l̄k}）を保持する。KP 条件の検証は groupoid モジュールが行う。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    chart: ChartSpec
    entries: Tuple[Tuple[PolyElement, ...], ...]

    @model_validator(mode="after")
    def _check_shape(self) -> "PoissonTensor":
        d = self.chart.dimension
        if len(self.entries) != d or any(len(row) != d for row in self.entries):
            raise ValueError(f"テンソルの形が {d}×{d} ではありません")
        base_ring = self.chart.base_ring
        for row in self.entries:
            for entry in row:
                if entry.ring != base_ring:
                    raise ValueError("テンソル成分はチャートの底多項式でなければなりません")
        if not self.chart.is_complex:
            for i in range(d):
                for j in range(d):
                    if self.entries[i][j] != -self.entries[j][i]:
                        raise ValueError(f"η は反対称でなければなりません: ({i + 1},{j + 1})")
        return self

    @property
    def dimension(self) -> int:
        return self.chart.dimension

    def g(self, l: int, k: int) -> Polynomial:
        """g^{l̄k}（複素チャート）"""
        return self.entries[l][k]

    def is_constant(self) -> bool:
        return all(is_constant(entry) for row in self.entries for entry in row)

    def real_form(self) -> List[List[Polynomial]]:
        """全底座標についての η^{ij}（複素チャートでは η^{z̄_l z_k} = g^{l̄k}, η^{z_k z̄_l} = −g^{l̄k}）"""
        if not self.chart.is_complex:
            return [list(row) for row in self.entries]
        chart = self.chart
        zero = chart.base_ring.zero
        eta = [[zero] * chart.n_base for _ in range(chart.n_base)]
        for l in range(self.dimension):
            for k in range(self.dimension):
                w, z = chart.antiholomorphic(l), chart.holomorphic(k)
                eta[w][z] = self.entries[l][k]
                eta[z][w] = -self.entries[l][k]
        return eta

    def negated(self) -> "PoissonTensor":
        return PoissonTensor(chart=self.chart,
                             entries=tuple(tuple(-e for e in row) for row in self.entries))


def _require_fiber_free(p: Polynomial, chart: ChartSpec) -> Polynomial:
    if p.ring == chart.base_ring:
        return p
    if p.ring == chart.ring:
        return FormalFunction.from_polynomial(chart, p).base_polynomial()
    raise ChartMismatchError("多項式の環がテンソルのチャートと一致しません")


def bracket_M(f: Polynomial, g: Polynomial, eta: PoissonTensor) -> Polynomial:
    """底チャート上の Poisson 括弧 {f,g}_M = η^{ij} ∂_i f ∂_j g"""
    chart = eta.chart
    f = _require_fiber_free(f, chart)
    g = _require_fiber_free(g, chart)
    real = eta.real_form()
    df = [f.diff(i) for i in range(chart.n_base)]
    dg = [g.diff(j) for j in range(chart.n_base)]
    result = chart.base_ring.zero
    for i, row in enumerate(real):
        if not df[i]:
            continue
        for j, entry in enumerate(row):
            if entry and dg[j]:
                result += entry * df[i] * dg[j]
    return result


def jacobi_violation(eta: PoissonTensor) -> Optional[Tuple[Tuple[int, int, int], Polynomial]]:
    """座標 (x^i, x^j, x^k), i<j<k の巡回和 {x^i,{x^j,x^k}} + … が最初に非零となる組と残差"""
    x = eta.chart.base_ring.gens
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                residual = (bracket_M(x[i], bracket_M(x[j], x[k], eta), eta)
                            + bracket_M(x[j], bracket_M(x[k], x[i], eta), eta)
                            + bracket_M(x[k], bracket_M(x[i], x[j], eta), eta))
                if residual:
                    return (i, j, k), residual
    return None


def bracket_TM(F: FormalFunction, G: FormalFunction) -> FormalFunction:
    """余接チャート上の標準括弧 {F,G} = ∂^j F ∂_j G − ∂^j G ∂_j F（有効次数を記録する）"""
    if F.chart != G.chart:
        raise ChartMismatchError("異なるチャート上の形式関数の括弧は取れません")
    result = FormalFunction(F.chart, None, min(F.valid_order, G.valid_order))
    for j in range(F.chart.n_base):
        result = result + F.diff_fiber(j) * G.diff_base(j) - G.diff_fiber(j) * F.diff_base(j)
    return result


class VarRef(NamedTuple):
    """チャート変数への参照（kind は "base" または "fiber"）"""
    kind: str
    index: int


class Derivation:
    """
    形式関数環の微分 Σ a^i ∂_i + Σ b_j ∂^j

    係数は形式関数。作用はライプニッツ則を満たすよう項ごとに適用する。
    """

    def __init__(self, chart: ChartSpec, coefficients: Optional[Dict[VarRef, FormalFunction]] = None):
        self.chart = chart
        self.coefficients: Dict[VarRef, FormalFunction] = {
            var: c for var, c in (coefficients or {}).items() if not c.is_zero()
        }

    def is_zero(self) -> bool:
        return not self.coefficients

    def __call__(self, F) -> FormalFunction:
        if isinstance(F, PolyElement):
            F = FormalFunction.from_polynomial(self.chart, F)
        if F.chart != self.chart:
            raise ChartMismatchError("微分と形式関数のチャートが一致しません")
        result = FormalFunction(self.chart, None, F.valid_order)
        for var, c in self.coefficients.items():
            partial = F.diff_base(var.index) if var.kind == "base" else F.diff_fiber(var.index)
            result = result + c * partial
        return result

    def __add__(self, other: "Derivation") -> "Derivation":
        coefficients = dict(self.coefficients)
        for var, c in other.coefficients.items():
            coefficients[var] = coefficients[var] + c if var in coefficients else c
        return Derivation(self.chart, coefficients)

    def __neg__(self) -> "Derivation":
        return Derivation(self.chart, {var: -c for var, c in self.coefficients.items()})

    def __sub__(self, other: "Derivation") -> "Derivation":
        return self + (-other)

    def scale(self, c) -> "Derivation":
        return Derivation(self.chart, {var: v.scale(c) for var, v in self.coefficients.items()})

    def commutator_on(self, other: "Derivation", F: FormalFunction) -> FormalFunction:
        """[self, other] を F に作用させた値"""
        return self(other(F)) - other(self(F))

    def __repr__(self) -> str:
        from fgk.calculus.parser import format_formal
        names = {"base": self.chart.base_names, "fiber": self.chart.fiber_names}
        body = " + ".join(f"({format_formal(c)})*d/d{names[v.kind][v.index]}"
                          for v, c in sorted(self.coefficients.items()))
        return f"Derivation({body or '0'})"


def hamiltonian(F: FormalFunction) -> Derivation:
    """ハミルトン微分 H_F = {F,·}：∂_j の係数は ∂^j F、∂^j の係数は −∂_j F"""
    coefficients: Dict[VarRef, FormalFunction] = {}
    for j in range(F.chart.n_base):
        coefficients[VarRef("base", j)] = F.diff_fiber(j)
        coefficients[VarRef("fiber", j)] = -F.diff_base(j)
    return Derivation(F.chart, coefficients)


class SeriesAutomorphism:
    """
    exp(H) = Σ H^k / k!

    各適用でフィルトレーションが上がることを前提とし、切断次数で級数が 0 になるかを
    動的に確かめる（上限 N_fib + N_ν + 1 回）。
    """

    def __init__(self, H: Derivation):
        self.H = H
        self.chart = H.chart
        self.cap = self.chart.fiber_truncation + self.chart.nu_truncation + 1

    def __call__(self, F) -> FormalFunction:
        if isinstance(F, PolyElement):
            F = FormalFunction.from_polynomial(self.chart, F)
        if self.H.is_zero():
            return F
        total, term = F, F
        for k in range(1, self.cap + 1):
            term = self.H(term).scale(QQ(1, k))
            if term.is_zero():
                return total.with_valid_order(min(total.valid_order, term.valid_order))
            total = total + term
        logger.error(f"指数級数が {self.cap} 回の適用で停止しませんでした")
        raise NonTerminatingSeriesError(
            f"exp(H) の級数が切断次数 N_fib={self.chart.fiber_truncation} で停止しません"
        )

    def inverse(self) -> "SeriesAutomorphism":
        return SeriesAutomorphism(-self.H)

    def then(self, other: Callable[[FormalFunction], FormalFunction]) -> Callable[[FormalFunction], FormalFunction]:
        """self ∘ other"""
        return lambda F: self(other(F))


def exp_derivation(H: Derivation) -> SeriesAutomorphism:
    """微分 H の指数 exp(H)"""
    return SeriesAutomorphism(H)
