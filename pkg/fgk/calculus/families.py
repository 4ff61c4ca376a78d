"""
コヒーレント族と拡張アルゴリズム

多重微分作用素の族 C₀..C_{n−1} が
    性質 A: 各 C_k は第 1 引数について微分
    性質 B: C_k(…,a,b,…) − C_k(…,b,a,…) = C_{k−1}(…,{a,b}_M,…)
    定数を消す
を満たすとき、同じ性質を持つ C_n を構成する。

    D_n(f₁,…,f_n) = Σ_i ( D^i_{n−1}(f₂,…,f_n) + Σ_j C_{n−1}(f₂,…,{x^i,f_j},…,f_n) ) ∂_i f₁
    V_n(f₁,…,f_n) = D_n(f₁,f₂,…) − D_n(f₂,f₁,…) − C_{n−1}({f₁,f₂},f₃,…)
    C_n = D_n + E_n,  E_n(f₂,f₁,…) − E_n(f₁,f₂,…) = V_n

D^i は切片族 D^i_k(f₁..f_k) = C_{k+1}(f₁..f_k, x^i) を再帰的に拡張したもの、
E_n はテンソル補題の正規化（ソート済み多重指数で 0）による解。
"""

from itertools import product as iter_product
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict
from sympy.polys.rings import PolyRing

from fgk.calculus.algebra import ChartSpec, FormalFunction, Monomial, Polynomial, derivative
from fgk.calculus.checks import Case, run_identity
from fgk.calculus.coherent import chi_eval
from fgk.calculus.groupoid import GroupoidData
from fgk.calculus.operators import lift_multilinear
from fgk.calculus.parser import format_polynomial, parse_poly
from fgk.calculus.poisson import PoissonTensor, bracket_M
from fgk.calculus.sampling import random_polynomial, rng_for
from fgk.errors import ConfigError, IncoherentFamilyError, OperatorPropertyError, ParseError
from fgk.schemas import FAIL, CheckRecord, FamilySpec, FamilyTerm
from fgk.utils.logging_config import setup_logger

logger = setup_logger('families')

MultiKey = Tuple[Monomial, ...]
IndexKey = Tuple[int, ...]


class PolyDifferential:
    """
    多重微分作用素 C(f₁,…,f_k) = Σ c_{α₁…α_k} ∂^{α₁}f₁ ⋯ ∂^{α_k}f_k

    係数表を持つか、評価手続きだけを持つ（⟨F⟩ 族など）。
    """

    def __init__(self, ring: PolyRing, arity: int, terms: Optional[Dict[MultiKey, Polynomial]] = None,
                 evaluator: Optional[Callable[..., Polynomial]] = None):
        self.ring = ring
        self.arity = arity
        self.terms = None if terms is None and evaluator is not None else \
            {k: c for k, c in (terms or {}).items() if c}
        self._evaluator = evaluator

    @classmethod
    def zero(cls, ring: PolyRing, arity: int) -> "PolyDifferential":
        return cls(ring, arity, {})

    @classmethod
    def lifted(cls, ring: PolyRing, evaluate: Callable[..., Polynomial],
               orders: Sequence[int]) -> "PolyDifferential":
        """単項式上の値から係数表を復元する（定数を消す作用素を仮定）"""
        if not orders:
            return cls(ring, 0, {(): evaluate()})
        table = lift_multilinear(lambda args: evaluate(*args), ring, orders, start=1)
        return cls(ring, len(orders), table)

    @property
    def has_table(self) -> bool:
        return self.terms is not None

    def is_zero(self) -> bool:
        return self.has_table and not self.terms

    def __call__(self, *args: Polynomial) -> Polynomial:
        if len(args) != self.arity:
            raise ValueError(f"引数の数 {len(args)} が作用素の引数個数 {self.arity} と一致しません")
        if self.terms is None:
            return self._evaluator(*args)
        result = self.ring.zero
        for alphas, c in self.terms.items():
            value = c
            for f, alpha in zip(args, alphas):
                value = value * derivative(f, alpha)
                if not value:
                    break
            result += value
        return result

    def _combine(self, other: "PolyDifferential", sign: int) -> "PolyDifferential":
        if not (self.has_table and other.has_table):
            return PolyDifferential(self.ring, self.arity,
                                    evaluator=lambda *args: self(*args) + other(*args) * sign)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms[key] + c * sign if key in terms else c * sign
        return PolyDifferential(self.ring, self.arity, terms)

    def __add__(self, other: "PolyDifferential") -> "PolyDifferential":
        return self._combine(other, 1)

    def __sub__(self, other: "PolyDifferential") -> "PolyDifferential":
        return self._combine(other, -1)

    def substitute_last(self, p: Polynomial) -> "PolyDifferential":
        """最後の引数に p を代入した (arity−1) 項作用素"""
        if not self.has_table:
            return PolyDifferential(self.ring, self.arity - 1, evaluator=lambda *args: self(*args, p))
        terms: Dict[MultiKey, Polynomial] = {}
        for alphas, c in self.terms.items():
            value = derivative(p, alphas[-1])
            if value:
                key = alphas[:-1]
                terms[key] = terms[key] + c * value if key in terms else c * value
        return PolyDifferential(self.ring, self.arity - 1, terms)

    def to_terms(self, names: Optional[Sequence[str]] = None) -> List[FamilyTerm]:
        """係数表を FamilyTerm のリストにする（キーの昇順）"""
        if not self.has_table:
            raise ValueError("評価手続きだけの作用素は係数表に変換できません")
        return [FamilyTerm(coefficient=format_polynomial(c, names), derivatives=[list(a) for a in alphas])
                for alphas, c in sorted(self.terms.items())]

    def __repr__(self) -> str:
        size = "evaluator" if self.terms is None else f"{len(self.terms)} terms"
        return f"PolyDifferential(arity={self.arity}, {size})"


class CoherentFamily(BaseModel):
    """多重微分作用素の族 C₀..C_{n−1}（C_k の引数は k 個）"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tensor: PoissonTensor
    operators: Tuple[PolyDifferential, ...] = ()

    @property
    def ring(self) -> PolyRing:
        return self.tensor.chart.base_ring

    @property
    def size(self) -> int:
        return len(self.operators)

    def extended(self, operator: PolyDifferential) -> "CoherentFamily":
        if operator.arity != self.size:
            raise ValueError(f"追加する作用素の引数個数は {self.size} でなければなりません")
        return CoherentFamily(tensor=self.tensor, operators=self.operators + (operator,))

    def slice(self, i: int) -> "CoherentFamily":
        """D^i_k(f₁..f_k) = C_{k+1}(f₁..f_k, x^i), k = 0..n−2"""
        x = self.ring.gens[i]
        return CoherentFamily(tensor=self.tensor,
                              operators=tuple(C.substitute_last(x) for C in self.operators[1:]))

    def to_spec(self) -> FamilySpec:
        names = self.tensor.chart.base_names
        return FamilySpec(operators=[C.to_terms(names) for C in self.operators])


# ---------------------------------------------------------------------------
# 性質 A / B の検証
# ---------------------------------------------------------------------------

def _text(args: Sequence[Polynomial]) -> List[str]:
    return [f"f{i + 1}={format_polynomial(p)}" for i, p in enumerate(args)]


def _samples(fam: CoherentFamily, name: str, seed: int, trials: int, arity: int,
             max_degree: int) -> Iterator[Tuple[Polynomial, ...]]:
    rng = rng_for(seed, name)
    for _ in range(trials):
        yield tuple(random_polynomial(rng, fam.ring, max_degree) for _ in range(arity))


def property_a_cases(fam: CoherentFamily, seed: int, trials: int, max_degree: int = 2) -> List[Case]:
    """C_k(fg, …) = f C_k(g, …) + g C_k(f, …)"""
    cases: List[Case] = []
    for k, C in enumerate(fam.operators):
        if k == 0:
            continue
        for args in _samples(fam, f"family.property_A.{k}", seed, trials, k + 1, max_degree):
            f, g, rest = args[0], args[1], args[2:]
            cases.append(([f"C{k}"] + _text(args),
                          lambda C=C, f=f, g=g, rest=rest: C(f * g, *rest) - f * C(g, *rest) - g * C(f, *rest)))
    return cases


def property_b_cases(fam: CoherentFamily, seed: int, trials: int, max_degree: int = 2) -> List[Case]:
    """隣接する引数の交換の欠損が一つ下の作用素への括弧の挿入に等しい"""
    eta = fam.tensor
    cases: List[Case] = []
    for k in range(2, fam.size):
        C, lower = fam.operators[k], fam.operators[k - 1]
        for args in _samples(fam, f"family.property_B.{k}", seed, trials, k, max_degree):
            for p in range(k - 1):
                swapped = args[:p] + (args[p + 1], args[p]) + args[p + 2:]
                inserted = args[:p] + (bracket_M(args[p], args[p + 1], eta),) + args[p + 2:]
                cases.append(([f"C{k}", f"swap={p + 1},{p + 2}"] + _text(args),
                              lambda C=C, lower=lower, args=args, swapped=swapped, inserted=inserted:
                              C(*args) - C(*swapped) - lower(*inserted)))
    return cases


def constants_cases(fam: CoherentFamily, seed: int, trials: int, max_degree: int = 2) -> List[Case]:
    one = fam.ring.one
    cases: List[Case] = []
    for k in range(1, fam.size):
        C = fam.operators[k]
        for args in _samples(fam, f"family.constants.{k}", seed, max(1, trials // 2), k, max_degree):
            for p in range(k):
                filled = args[:p] + (one,) + args[p + 1:]
                cases.append(([f"C{k}", f"const={p + 1}"] + _text(filled), lambda C=C, filled=filled: C(*filled)))
    return cases


def phi_formula_cases(fam: CoherentFamily, seed: int, trials: int, max_degree: int = 2) -> List[Case]:
    """C_n(φ,f₂,…,f_n) = C_n(f₂,…,f_n,φ) + Σ_i C_{n−1}(f₂,…,{φ,f_i},…,f_n)"""
    eta = fam.tensor
    cases: List[Case] = []
    for k in range(2, fam.size):
        C, lower = fam.operators[k], fam.operators[k - 1]
        for args in _samples(fam, f"family.phi_formula.{k}", seed, trials, k, max_degree):
            phi, rest = args[0], args[1:]

            def residual(C=C, lower=lower, phi=phi, rest=rest):
                value = C(phi, *rest) - C(*rest, phi)
                for i in range(len(rest)):
                    value -= lower(*(rest[:i] + (bracket_M(phi, rest[i], eta),) + rest[i + 1:]))
                return value

            cases.append(([f"C{k}"] + _text(args), residual))
    return cases


_PROPERTIES = {
    "A": property_a_cases,
    "B": property_b_cases,
    "constants": constants_cases,
}


def verify_family(fam: CoherentFamily, seed: int = 0, trials: int = 10,
                  prefix: str = "family", include_phi: bool = False) -> List[CheckRecord]:
    records = [run_identity(f"{prefix}.property_{prop}", build(fam, seed, trials))
               for prop, build in _PROPERTIES.items()]
    if include_phi:
        records.append(run_identity(f"{prefix}.phi_formula", phi_formula_cases(fam, seed, trials)))
    return records


def require_coherent(fam: CoherentFamily, seed: int = 0, trials: int = 10) -> None:
    """性質 A / B・定数の消去を確認し、最初の違反を IncoherentFamilyError として送出する"""
    for prop, build in _PROPERTIES.items():
        record = run_identity(f"family.property_{prop}", build(fam, seed, trials))
        if record.status == FAIL:
            raise IncoherentFamilyError(prop, tuple(record.witness), record.residual, record.detail)


# ---------------------------------------------------------------------------
# テンソル補題
# ---------------------------------------------------------------------------

def tensor_lemma(v: Dict[IndexKey, Polynomial], d: int, n: int,
                 index_order: Optional[Sequence[int]] = None) -> Dict[IndexKey, Polynomial]:
    """
    v^K（第 1・第 2 添字で反対称、残りで対称、最初の 3 添字の巡回和 0）に対し、
    第 2 添字以降で対称な u^K で v^K = u^K − u^{K'}（K' は i₁, i₂ の交換）となるものを返す。

    正規化: K̃ = (i₁, 残りを index_order で並べたもの) とし、i₁ ≤ j₂ なら u^K = 0、
    それ以外は u^K = v^{K̃}。
    """
    if n < 2:
        raise ValueError("テンソル補題は n ≥ 2 で使います")
    order = list(index_order) if index_order is not None else list(range(d))
    rank = {index: r for r, index in enumerate(order)}
    u: Dict[IndexKey, Polynomial] = {}
    for K in iter_product(range(d), repeat=n):
        rest = tuple(sorted(K[1:], key=rank.__getitem__))
        if rank[K[0]] <= rank[rest[0]]:
            continue
        value = v.get((K[0],) + rest)
        if value:
            u[K] = value
    return u


def _unit(d: int, i: int) -> Monomial:
    return tuple(1 if j == i else 0 for j in range(d))


def _tensor_of(V: Callable[..., Polynomial], ring: PolyRing, n: int) -> Dict[IndexKey, Polynomial]:
    x = ring.gens
    tensor = {}
    for K in iter_product(range(ring.ngens), repeat=n):
        value = V(*(x[i] for i in K))
        if value:
            tensor[K] = value
    return tensor


def _check_v(V: Callable[..., Polynomial], v: Dict[IndexKey, Polynomial], fam: CoherentFamily,
             n: int, seed: int, trials: int) -> None:
    ring = fam.ring
    d = ring.ngens
    zero = ring.zero

    def fail(what: str, witness) -> None:
        raise OperatorPropertyError(f"V_{n} が{what}を満たしません: {witness}")

    for K in iter_product(range(d), repeat=n):
        swapped = (K[1], K[0]) + K[2:]
        if v.get(K, zero) + v.get(swapped, zero):
            fail("第 1・第 2 引数の反対称性", K)
        for p in range(2, n - 1):
            other = K[:p] + (K[p + 1], K[p]) + K[p + 2:]
            if v.get(K, zero) != v.get(other, zero):
                fail("第 3 引数以降の対称性", K)
        if n >= 3:
            a, b, c = K[:3]
            tail = K[3:]
            if v.get(K, zero) + v.get((b, c, a) + tail, zero) + v.get((c, a, b) + tail, zero):
                fail("巡回和の消滅", K)

    multiderivation = PolyDifferential(ring, n, {tuple(_unit(d, i) for i in K): c for K, c in v.items()})
    for args in _samples(fam, f"family.V{n}", seed, trials, n, 2):
        if V(*args) != multiderivation(*args):
            fail("多重微分性", _text(args))


# ---------------------------------------------------------------------------
# 拡張
# ---------------------------------------------------------------------------

def extend_family(fam: CoherentFamily, seed: int = 0, trials: int = 10,
                  index_order: Optional[Sequence[int]] = None, check: bool = True) -> CoherentFamily:
    """
    n 要素のコヒーレント族を n+1 要素に拡張する

    引数:
        fam: 拡張する族（性質 A / B を満たすこと）
        seed: 性質チェック用の乱数シード
        trials: 性質チェックの試行回数
        index_order: テンソル補題の正規化に使う座標の順序（既定は 0..d−1）
        check: 入力族の性質を確認するか（再帰呼び出しでは省略）
    戻り値:
        C_n を加えた族
    """
    if check:
        require_coherent(fam, seed, trials)
    n = fam.size
    ring = fam.ring
    if n == 0:
        return fam.extended(PolyDifferential.zero(ring, 0))

    logger.debug(f"C_{n} を構成します（d={ring.ngens}）")
    eta = fam.tensor
    x = ring.gens
    last = fam.operators[n - 1]
    slices = [extend_family(fam.slice(i), seed, trials, index_order, check=False).operators[-1]
              for i in range(ring.ngens)]

    def aux(*args: Polynomial) -> Polynomial:
        f1, rest = args[0], args[1:]
        total = ring.zero
        for i, D_i in enumerate(slices):
            df = f1.diff(i)
            if not df:
                continue
            inner = D_i(*rest)
            for j, fj in enumerate(rest):
                bracket = bracket_M(x[i], fj, eta)
                if bracket:
                    inner += last(*(rest[:j] + (bracket,) + rest[j + 1:]))
            total += inner * df
        return total

    D = PolyDifferential.lifted(ring, aux, list(range(1, n + 1)))
    if n == 1:
        return fam.extended(D)

    def V(*args: Polynomial) -> Polynomial:
        f1, f2, rest = args[0], args[1], args[2:]
        return D(f1, f2, *rest) - D(f2, f1, *rest) - last(bracket_M(f1, f2, eta), *rest)

    v = _tensor_of(V, ring, n)
    _check_v(V, v, fam, n, seed, trials)
    u = tensor_lemma(v, ring.ngens, n, index_order)
    E = PolyDifferential(ring, n, {tuple(_unit(ring.ngens, i) for i in K): -c for K, c in u.items()})
    return fam.extended(D + E)


# ---------------------------------------------------------------------------
# 族の構築
# ---------------------------------------------------------------------------

def family_from_spec(spec: FamilySpec, tensor: PoissonTensor) -> CoherentFamily:
    """FamilySpec（k 番目の項リストが C_k）から族を作る"""
    chart: ChartSpec = tensor.chart
    ring = chart.base_ring
    operators = []
    for k, terms in enumerate(spec.operators):
        table: Dict[MultiKey, Polynomial] = {}
        for term in terms:
            if len(term.derivatives) != k or any(len(a) != chart.n_base for a in term.derivatives):
                raise ConfigError(f"C_{k} の項の微分指数は {k} 個の長さ {chart.n_base} の多重指数でなければなりません",
                                  details=term.model_dump())
            try:
                coefficient = parse_poly(term.coefficient, chart)
            except ParseError as e:
                raise ConfigError(f"C_{k} の係数を解析できません: {e}") from e
            key = tuple(tuple(a) for a in term.derivatives)
            table[key] = table[key] + coefficient if key in table else coefficient
        operators.append(PolyDifferential(ring, k, table))
    return CoherentFamily(tensor=tensor, operators=tuple(operators))


def hamiltonian_family(phi: Polynomial, tensor: PoissonTensor, size: int) -> CoherentFamily:
    """C_k(f₁..f_k) = {f₁,{f₂,…{f_k, φ}…}}（k < size）"""
    ring = tensor.chart.base_ring

    def make(k: int) -> Callable[..., Polynomial]:
        def evaluate(*args: Polynomial) -> Polynomial:
            value = phi
            for f in reversed(args):
                value = bracket_M(f, value, tensor)
            return value
        return evaluate

    operators = tuple(PolyDifferential.lifted(ring, make(k), list(range(1, k + 1))) for k in range(size))
    return CoherentFamily(tensor=tensor, operators=operators)


def angle_family(F: FormalFunction, data: GroupoidData, size: int) -> CoherentFamily:
    """⟨F⟩ 族 C_k(f₁..f_k) = ⟨F⟩(f₁•…•f_k)（評価手続きのみ）"""
    ring = data.chart.base_ring

    def evaluate(*args: Polynomial) -> Polynomial:
        return chi_eval(F, tuple(args), data)

    return CoherentFamily(tensor=data.tensor,
                          operators=tuple(PolyDifferential(ring, k, evaluator=evaluate) for k in range(size)))


__all__ = [
    "PolyDifferential", "CoherentFamily", "verify_family", "require_coherent", "tensor_lemma",
    "extend_family", "family_from_spec", "hamiltonian_family", "angle_family",
]
