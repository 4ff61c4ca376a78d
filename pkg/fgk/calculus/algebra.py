"""
代数モジュール

単一の座標チャート上での厳密な多項式演算と、ファイバー次数・ν 次数で切断された
形式関数（FormalFunction）の演算、零切断評価 E を提供する。

多項式は sympy の疎多項式環（PolyRing over QQ）の元をそのまま使う。
形式関数はファイバー次数について斉次な成分の辞書として保持し、
ν は多項式変数ではなく独立した次数として扱う。
"""

import math
from functools import lru_cache
from itertools import product as iter_product
from typing import Dict, Iterable, Iterator, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field
from sympy.polys.domains import QQ
from sympy.polys.orderings import lex
from sympy.polys.rings import PolyElement, PolyRing

from fgk.errors import ChartMismatchError, FiberVariableError, InsufficientOrderError

Polynomial = PolyElement
Monomial = Tuple[int, ...]
Scalar = Union[int, "QQ.dtype"]

INFINITY = math.inf


@lru_cache(maxsize=None)
def _names(flavor: str, dimension: int) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    if flavor == "real":
        base = tuple(f"x{i}" for i in range(1, dimension + 1))
        fiber = tuple(f"xi{i}" for i in range(1, dimension + 1))
    else:
        base = tuple(f"z{i}" for i in range(1, dimension + 1)) + \
            tuple(f"w{i}" for i in range(1, dimension + 1))
        fiber = tuple(f"zeta{i}" for i in range(1, dimension + 1)) + \
            tuple(f"zetab{i}" for i in range(1, dimension + 1))
    return base, fiber


@lru_cache(maxsize=None)
def _ring(names: Tuple[str, ...]) -> PolyRing:
    return PolyRing(list(names), QQ, lex)


class ChartSpec(BaseModel):
    """座標チャートの仕様（次元・種別・切断次数）"""
    model_config = ConfigDict(frozen=True)

    dimension: int = Field(..., ge=1, description="底空間の次元 d")
    flavor: Literal["real", "complex"] = Field(..., description="実チャート {x} または複素チャート {z, z̄}")
    fiber_truncation: int = Field(..., ge=0, description="ファイバー次数の切断 N_fib")
    nu_truncation: int = Field(0, ge=0, description="ν 次数の切断 N_ν")

    @property
    def is_complex(self) -> bool:
        return self.flavor == "complex"

    @property
    def n_base(self) -> int:
        """底変数の個数（複素チャートでは z と z̄ の 2d 個）"""
        return 2 * self.dimension if self.is_complex else self.dimension

    @property
    def base_names(self) -> Tuple[str, ...]:
        return _names(self.flavor, self.dimension)[0]

    @property
    def fiber_names(self) -> Tuple[str, ...]:
        return _names(self.flavor, self.dimension)[1]

    @property
    def base_ring(self) -> PolyRing:
        """底変数のみの多項式環"""
        return _ring(self.base_names)

    @property
    def ring(self) -> PolyRing:
        """底変数とファイバー変数を併せた多項式環（形式関数の成分が住む環）"""
        return _ring(self.base_names + self.fiber_names)

    def holomorphic(self, k: int) -> int:
        """z^{k+1} の底変数インデックス（0 始まり）"""
        return k

    def antiholomorphic(self, l: int) -> int:
        """z̄^{l+1} の底変数インデックス（0 始まり）"""
        return self.dimension + l

    def with_truncation(self, fiber_truncation: Optional[int] = None,
                        nu_truncation: Optional[int] = None) -> "ChartSpec":
        return ChartSpec(
            dimension=self.dimension,
            flavor=self.flavor,
            fiber_truncation=self.fiber_truncation if fiber_truncation is None else fiber_truncation,
            nu_truncation=self.nu_truncation if nu_truncation is None else nu_truncation,
        )


# ---------------------------------------------------------------------------
# 多項式ヘルパー
# ---------------------------------------------------------------------------

def monomial(ring: PolyRing, exponents: Sequence[int], coefficient: Scalar = 1) -> Polynomial:
    return ring.from_dict({tuple(exponents): QQ.convert(coefficient)})


def derivative(p: Polynomial, alpha: Sequence[int]) -> Polynomial:
    """多重指数 α による偏微分 ∂^α p"""
    for index, count in enumerate(alpha):
        for _ in range(count):
            if not p:
                return p
            p = p.diff(index)
    return p


def total_degree(p: Polynomial) -> int:
    """全次数（零多項式は -1）"""
    if not p:
        return -1
    return max(sum(m) for m in p.keys())


def is_constant(p: Polynomial) -> bool:
    return all(not any(m) for m in p.keys())


def multi_indices(nvars: int, degree: int) -> List[Monomial]:
    """全次数がちょうど degree の多重指数を辞書式降順で列挙する"""
    if nvars == 0:
        return [()] if degree == 0 else []
    result = []
    for head in range(degree, -1, -1):
        for tail in multi_indices(nvars - 1, degree - head):
            result.append((head,) + tail)
    return result


def multi_indices_upto(nvars: int, degree: int, start: int = 0) -> List[Monomial]:
    """全次数が start 以上 degree 以下の多重指数（次数の昇順）"""
    result: List[Monomial] = []
    for d in range(start, degree + 1):
        result.extend(multi_indices(nvars, d))
    return result


def sub_indices(alpha: Monomial) -> Iterator[Monomial]:
    """γ ≤ α（成分ごと）となる多重指数 γ をすべて列挙する"""
    return iter_product(*(range(a + 1) for a in alpha))


def multi_factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def multi_binomial(alpha: Sequence[int], gamma: Sequence[int]) -> int:
    return math.prod(math.comb(a, g) for a, g in zip(alpha, gamma))


def lift_to(ring: PolyRing, p: Polynomial, positions: Sequence[int]) -> Polynomial:
    """p の変数 j を ring の変数 positions[j] に写して埋め込む"""
    width = ring.ngens
    terms = {}
    for m, c in p.items():
        target = [0] * width
        for j, e in enumerate(m):
            if e:
                target[positions[j]] += e
        terms[tuple(target)] = c
    return ring.from_dict(terms)


# ---------------------------------------------------------------------------
# 形式関数
# ---------------------------------------------------------------------------

PartKey = Tuple[int, int]  # (ν 次数, ファイバー次数)


class FormalFunction:
    """
    切断された形式関数 Σ ν^r P_{r,n}(x, ξ)

    P_{r,n} はファイバー次数 n について斉次な chart.ring の多項式。
    valid_order はこの値が信頼できるファイバー次数の上限を表し、
    ファイバー方向の微分を含む演算で下がる。
    """

    __slots__ = ("chart", "_parts", "valid_order")

    def __init__(self, chart: ChartSpec, parts: Optional[Dict[PartKey, Polynomial]] = None,
                 valid_order: Optional[int] = None):
        self.chart = chart
        n_fib, n_nu = chart.fiber_truncation, chart.nu_truncation
        self._parts: Dict[PartKey, Polynomial] = {
            key: p for key, p in (parts or {}).items()
            if p and key[0] <= n_nu and key[1] <= n_fib
        }
        self.valid_order = n_fib if valid_order is None else min(valid_order, n_fib)

    # --- 構成子 -------------------------------------------------------------

    @classmethod
    def zero(cls, chart: ChartSpec) -> "FormalFunction":
        return cls(chart)

    @classmethod
    def constant(cls, chart: ChartSpec, value: Scalar) -> "FormalFunction":
        return cls(chart, {(0, 0): chart.ring.ground_new(QQ.convert(value))})

    @classmethod
    def one(cls, chart: ChartSpec) -> "FormalFunction":
        return cls.constant(chart, 1)

    @classmethod
    def from_ring(cls, chart: ChartSpec, p: Polynomial, nu: int = 0,
                  valid_order: Optional[int] = None) -> "FormalFunction":
        """chart.ring の任意の多項式をファイバー次数ごとに分解して形式関数にする"""
        nb = chart.n_base
        grouped: Dict[int, Dict[Monomial, object]] = {}
        for m, c in p.items():
            grouped.setdefault(sum(m[nb:]), {})[m] = c
        ring = chart.ring
        parts = {(nu, deg): ring.from_dict(terms) for deg, terms in grouped.items()}
        return cls(chart, parts, valid_order)

    @classmethod
    def from_polynomial(cls, chart: ChartSpec, p: Polynomial, nu: int = 0) -> "FormalFunction":
        """底変数の多項式（ファイバーを含まない）を形式関数として持ち上げる"""
        if p.ring is chart.ring:
            if any(sum(m[chart.n_base:]) for m in p.keys()):
                raise FiberVariableError("底関数にファイバー変数が含まれています")
            return cls(chart, {(nu, 0): p})
        if p.ring != chart.base_ring:
            raise ChartMismatchError("多項式の環がチャートの底変数環と一致しません")
        lifted = lift_to(chart.ring, p, range(chart.n_base))
        return cls(chart, {(nu, 0): lifted})

    @classmethod
    def base_variable(cls, chart: ChartSpec, j: int) -> "FormalFunction":
        return cls(chart, {(0, 0): chart.ring.gens[j]})

    @classmethod
    def fiber_variable(cls, chart: ChartSpec, j: int) -> "FormalFunction":
        return cls(chart, {(0, 1): chart.ring.gens[chart.n_base + j]})

    @classmethod
    def nu_power(cls, chart: ChartSpec, r: int) -> "FormalFunction":
        return cls(chart, {(r, 0): chart.ring.one})

    # --- 参照 ---------------------------------------------------------------

    @property
    def parts(self) -> Dict[PartKey, Polynomial]:
        return dict(self._parts)

    def items(self) -> Iterable[Tuple[PartKey, Polynomial]]:
        return self._parts.items()

    def components(self) -> Dict[Tuple[Monomial, int], Polynomial]:
        """(ファイバー多重指数, ν 次数) → 底多項式 の写像として展開する"""
        nb = self.chart.n_base
        base_ring = self.chart.base_ring
        grouped: Dict[Tuple[Monomial, int], Dict[Monomial, object]] = {}
        for (r, _), p in self._parts.items():
            for m, c in p.items():
                grouped.setdefault((m[nb:], r), {})[m[:nb]] = c
        return {key: base_ring.from_dict(terms) for key, terms in grouped.items()}

    def is_zero(self) -> bool:
        return not self._parts

    def filtration_degree(self) -> Union[int, float]:
        if not self._parts:
            return INFINITY
        return min(deg for _, deg in self._parts)

    def effective_filtration(self) -> Union[int, float]:
        """有効次数を超える未知の項も考慮したフィルトレーション次数の下界"""
        return min(self.filtration_degree(), self.valid_order + 1)

    def nu_order(self) -> Union[int, float]:
        if not self._parts:
            return INFINITY
        return min(r for r, _ in self._parts)

    def homogeneous(self, degree: int) -> "FormalFunction":
        """ファイバー次数 degree の斉次成分"""
        return FormalFunction(self.chart, {k: p for k, p in self._parts.items() if k[1] == degree},
                              self.valid_order)

    def nu_component(self, r: int) -> "FormalFunction":
        return FormalFunction(self.chart, {(0, k[1]): p for k, p in self._parts.items() if k[0] == r},
                              self.valid_order)

    def truncated(self, order: int) -> "FormalFunction":
        """ファイバー次数 order を超える成分を捨てる"""
        return FormalFunction(self.chart, {k: p for k, p in self._parts.items() if k[1] <= order},
                              min(self.valid_order, order))

    def reliable(self) -> "FormalFunction":
        """有効次数以下の成分のみを残す"""
        return self.truncated(self.valid_order)

    def residual(self, other: "FormalFunction") -> "FormalFunction":
        """差 self − other を両者の有効次数で切断したもの"""
        return (self - other).reliable()

    def agrees_with(self, other: "FormalFunction") -> bool:
        return self.residual(other).is_zero()

    def with_valid_order(self, order: int) -> "FormalFunction":
        return FormalFunction(self.chart, self._parts, order)

    def base_polynomial(self) -> Polynomial:
        """ファイバーも ν も含まない形式関数を底多項式に戻す"""
        for r, deg in self._parts:
            if deg or r:
                raise FiberVariableError("ファイバー変数または ν を含む形式関数は底多項式に戻せません")
        return self.nu_coefficients().get(0, self.chart.base_ring.zero)

    def nu_coefficients(self) -> Dict[int, Polynomial]:
        """ファイバー自由な形式関数の ν^r 係数（底多項式）"""
        nb = self.chart.n_base
        base_ring = self.chart.base_ring
        result = {}
        for (r, deg), p in sorted(self._parts.items()):
            if deg:
                raise FiberVariableError("ファイバー変数を含む形式関数です")
            result[r] = base_ring.from_dict({m[:nb]: c for m, c in p.items()})
        return result

    def is_fiber_free(self) -> bool:
        return all(deg == 0 for _, deg in self._parts)

    # --- 演算 ---------------------------------------------------------------

    def _check_chart(self, other: "FormalFunction") -> None:
        if other.chart is not self.chart and other.chart != self.chart:
            raise ChartMismatchError("異なるチャート上の形式関数は演算できません")

    def _coerce(self, other) -> "FormalFunction":
        if isinstance(other, FormalFunction):
            self._check_chart(other)
            return other
        if isinstance(other, PolyElement):
            return FormalFunction.from_polynomial(self.chart, other)
        return FormalFunction.constant(self.chart, other)

    def __add__(self, other) -> "FormalFunction":
        other = self._coerce(other)
        parts = dict(self._parts)
        for key, p in other._parts.items():
            parts[key] = parts[key] + p if key in parts else p
        return FormalFunction(self.chart, parts, min(self.valid_order, other.valid_order))

    __radd__ = __add__

    def __neg__(self) -> "FormalFunction":
        return FormalFunction(self.chart, {k: -p for k, p in self._parts.items()}, self.valid_order)

    def __sub__(self, other) -> "FormalFunction":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "FormalFunction":
        return self._coerce(other) - self

    def scale(self, c: Scalar) -> "FormalFunction":
        if not c:
            return FormalFunction(self.chart, None, self.valid_order)
        c = QQ.convert(c)
        return FormalFunction(self.chart, {k: p * c for k, p in self._parts.items()}, self.valid_order)

    def __mul__(self, other) -> "FormalFunction":
        if not isinstance(other, (FormalFunction, PolyElement)):
            return self.scale(other)
        other = self._coerce(other)
        n_fib, n_nu = self.chart.fiber_truncation, self.chart.nu_truncation
        parts: Dict[PartKey, Polynomial] = {}
        for (r1, d1), p1 in self._parts.items():
            for (r2, d2), p2 in other._parts.items():
                key = (r1 + r2, d1 + d2)
                if key[0] > n_nu or key[1] > n_fib:
                    continue
                term = p1 * p2
                parts[key] = parts[key] + term if key in parts else term
        valid = min(self.valid_order + other.effective_filtration(),
                    other.valid_order + self.effective_filtration())
        return FormalFunction(self.chart, parts, _as_order(valid, n_fib))

    def __rmul__(self, other) -> "FormalFunction":
        return self.__mul__(other)

    def __pow__(self, exponent: int) -> "FormalFunction":
        result = FormalFunction.one(self.chart)
        for _ in range(exponent):
            result = result * self
        return result

    def diff_base(self, j: int) -> "FormalFunction":
        """底変数 j による偏微分（有効次数は変わらない）"""
        return FormalFunction(self.chart, {k: p.diff(j) for k, p in self._parts.items()}, self.valid_order)

    def diff_fiber(self, j: int) -> "FormalFunction":
        """ファイバー変数 j による偏微分（ファイバー次数と有効次数が 1 下がる）"""
        index = self.chart.n_base + j
        parts = {(r, deg - 1): p.diff(index) for (r, deg), p in self._parts.items() if deg}
        return FormalFunction(self.chart, parts, self.valid_order - 1)

    def tau(self) -> "FormalFunction":
        """τ*: ファイバー変数の符号反転 ξ ↦ −ξ"""
        return FormalFunction(self.chart,
                              {(r, deg): (-p if deg % 2 else p) for (r, deg), p in self._parts.items()},
                              self.valid_order)

    def shift_nu(self, amount: int) -> "FormalFunction":
        parts = {(r + amount, deg): p for (r, deg), p in self._parts.items() if r + amount >= 0}
        return FormalFunction(self.chart, parts, self.valid_order)

    # --- 比較 ---------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, FormalFunction):
            return self.chart == other.chart and self._parts == other._parts
        if isinstance(other, (int, PolyElement)) or QQ.of_type(other):
            return self == self._coerce(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.chart, frozenset(self._parts.items())))

    def __repr__(self) -> str:
        from fgk.calculus.parser import format_formal
        return f"FormalFunction({format_formal(self)}, valid={self.valid_order})"


def _as_order(value: Union[int, float], cap: int) -> int:
    return cap if value == INFINITY else int(min(value, cap))


def zero_section_eval(F: FormalFunction) -> FormalFunction:
    """零切断評価 E(F)(x) = F(x, 0)：ファイバー次数 0 の成分だけを残す"""
    parts = {k: p for k, p in F.items() if k[1] == 0}
    valid = F.chart.fiber_truncation if F.valid_order >= 0 else F.valid_order
    return FormalFunction(F.chart, parts, valid)


def filtration_degree(F: FormalFunction) -> Union[int, float]:
    """非零項の最小ファイバー次数（零関数は +∞）"""
    return F.filtration_degree()


def fiber_monomial(chart: ChartSpec, exponents: Sequence[int], coefficient: Polynomial = None) -> FormalFunction:
    """ファイバー単項式 ξ^α に底多項式係数を掛けた形式関数"""
    ring = chart.ring
    nb = chart.n_base
    mono = monomial(ring, (0,) * nb + tuple(exponents))
    if coefficient is not None:
        mono = mono * lift_to(ring, coefficient, range(nb))
    return FormalFunction.from_ring(chart, mono)


def bidegree_component(F: FormalFunction, p: int, q: int) -> FormalFunction:
    """複素チャートで ζ について p 次、ζ̄ について q 次の成分"""
    chart = F.chart
    nb, d = chart.n_base, chart.dimension
    parts = {}
    for (r, deg), poly in F.items():
        if deg != p + q:
            continue
        terms = {m: c for m, c in poly.items() if sum(m[nb:nb + d]) == p}
        if terms:
            parts[(r, deg)] = chart.ring.from_dict(terms)
    return FormalFunction(chart, parts, F.valid_order)


class ProductChart:
    """
    チャートの n 重直積（z₍₁₎, ζ₍₁₎, …, z₍ₙ₎, ζ₍ₙ₎）

    直積チャート自体も次元 n·d の通常のチャートとして扱い、
    括弧は T*(Mⁿ) の標準括弧となる。
    """

    def __init__(self, base: ChartSpec, copies: int = 2):
        self.base = base
        self.copies = copies
        self.chart = ChartSpec(
            dimension=copies * base.dimension,
            flavor=base.flavor,
            fiber_truncation=base.fiber_truncation,
            nu_truncation=base.nu_truncation,
        )

    def position(self, copy: int, j: int) -> int:
        """コピー copy（0 始まり）の底変数 j の直積チャートでのインデックス"""
        d = self.base.dimension
        if self.base.is_complex and j >= d:
            return self.copies * d + copy * d + (j - d)
        return copy * d + j

    def embed(self, F: FormalFunction, copy: int) -> FormalFunction:
        """コピー copy の変数を使って F を直積チャートへ埋め込む"""
        if F.chart != self.base:
            raise ChartMismatchError("埋め込み元のチャートが一致しません")
        nb, nb2 = self.base.n_base, self.chart.n_base
        positions = [self.position(copy, j) for j in range(nb)] + \
            [nb2 + self.position(copy, j) for j in range(nb)]
        ring = self.chart.ring
        parts = {key: lift_to(ring, p, positions) for key, p in F.items()}
        return FormalFunction(self.chart, parts, F.valid_order)

    def diagonal(self, G: FormalFunction) -> Polynomial:
        """
        E_n(G)(x) = G(x, 0, …, x, 0)：ファイバーを 0 にし底のコピーを同一視する

        ν を含まない値を想定し、底多項式を返す。
        """
        if G.valid_order < 0:
            raise InsufficientOrderError("零切断評価に必要な有効次数が残っていません")
        nb, nb2 = self.base.n_base, self.chart.n_base
        fold = [0] * nb2
        for copy in range(self.copies):
            for j in range(nb):
                fold[self.position(copy, j)] = j
        terms: Dict[Monomial, object] = {}
        for (r, deg), p in G.items():
            if deg or r:
                continue
            for m, c in p.items():
                target = [0] * nb
                for i, e in enumerate(m[:nb2]):
                    if e:
                        target[fold[i]] += e
                key = tuple(target)
                terms[key] = terms.get(key, QQ.zero) + c
        return self.base.base_ring.from_dict({m: c for m, c in terms.items() if c})
