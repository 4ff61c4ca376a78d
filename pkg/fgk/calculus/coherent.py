"""
語計算モジュール

普遍包絡環の語 u = f₁•…•fₙ（底多項式の列、空列は単位 𝟏）と、
形式関数から作られる語汎関数

    ⟨F⟩(u) = E(λ(u)F),          λ(f) = H_{Sf}
    ⟪F⟫(u⊗v) = E(λ(u)ρ(v)F),    ρ(f) = −H_{Tf}

畳み込み積、c 括弧、二重チャート上の表現 λ²₀, λ²₁, λ²₂ による 𝓔₂ での一致判定、
θ による余結合性の確認を提供する。
"""

import threading
from functools import lru_cache
from itertools import product as iter_product
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from sympy.polys.rings import PolyElement, PolyRing

from fgk.calculus.algebra import FormalFunction, Polynomial, ProductChart, zero_section_eval
from fgk.calculus.checks import run_identity
from fgk.calculus.groupoid import GroupoidData
from fgk.calculus.parser import format_polynomial
from fgk.calculus.poisson import Derivation, PoissonTensor, SeriesAutomorphism, bracket_M, hamiltonian
from fgk.errors import InsufficientOrderError, WordLengthError
from fgk.schemas import CheckRecord
from fgk.utils.logging_config import setup_logger

logger = setup_logger('coherent')

WORD_CAP = 5

Word = Tuple[Polynomial, ...]
PairFunctional = Callable[[Word, Word], Polynomial]


def word(*factors: Polynomial) -> Word:
    return tuple(factors)


def format_word(u: Word) -> str:
    return "(" + ", ".join(format_polynomial(f) for f in u) + ")"


def coproduct(u: Word, cap: int = WORD_CAP) -> List[Tuple[Word, Word]]:
    """
    δ(u) = Σ u' ⊗ u''：因子の順序を保った 2ⁿ 通りの分割

    マスクを 2ⁿ−1 から 0 へ走査し、因子 i はビット (n−1−i) が立っていれば左に入る。
    """
    n = len(u)
    if n > cap:
        raise WordLengthError(f"語の長さ {n} が上限 {cap} を超えています")
    result = []
    for mask in range((1 << n) - 1, -1, -1):
        left = tuple(f for i, f in enumerate(u) if mask >> (n - 1 - i) & 1)
        right = tuple(f for i, f in enumerate(u) if not mask >> (n - 1 - i) & 1)
        result.append((left, right))
    return result


def counit(u: Word) -> int:
    """ε(𝟏) = 1, ε(f•…) = 0"""
    return 0 if u else 1


def hamiltonian_action(u: Word, phi: Polynomial, eta: PoissonTensor) -> Polynomial:
    """h(f₁•…•fₙ)φ = {f₁, {f₂, … {fₙ, φ}_M …}}"""
    for f in reversed(u):
        phi = bracket_M(f, phi, eta)
    return phi


# ---------------------------------------------------------------------------
# ⟨F⟩ と ⟪F⟫
# ---------------------------------------------------------------------------

class WordCalculus:
    """
    亜群データ上の λ, ρ の評価

    S f, T f とそのハミルトン微分を多項式ごとにメモ化する（スレッド間で共有可能）。
    """

    def __init__(self, data: GroupoidData, source: Optional[SeriesAutomorphism] = None):
        self.data = data
        self.chart = data.chart
        self.source = source or data.S
        self._lock = threading.Lock()
        self._lambda: Dict[Polynomial, Derivation] = {}
        self._rho: Dict[Polynomial, Derivation] = {}

    def lam(self, f: Polynomial) -> Derivation:
        with self._lock:
            cached = self._lambda.get(f)
        if cached is None:
            cached = hamiltonian(self.source(f))
            with self._lock:
                self._lambda[f] = cached
        return cached

    def rho(self, f: Polynomial) -> Derivation:
        with self._lock:
            cached = self._rho.get(f)
        if cached is None:
            cached = -hamiltonian(self.data.T(f))
            with self._lock:
                self._rho[f] = cached
        return cached

    def _evaluate(self, F: FormalFunction) -> Polynomial:
        if F.valid_order < 0:
            raise InsufficientOrderError(
                f"語が長すぎて有効次数が残っていません（N_fib={self.chart.fiber_truncation}）"
            )
        return zero_section_eval(F).base_polynomial()

    def angle(self, F: FormalFunction, u: Word) -> Polynomial:
        """⟨F⟩(u) = E(λ(f₁)…λ(fₙ)F)"""
        G = _coerce(F, self.chart)
        for f in reversed(u):
            G = self.lam(f)(G)
        return self._evaluate(G)

    def double_angle(self, F: FormalFunction, u: Word, v: Word) -> Polynomial:
        """⟪F⟫(u⊗v) = E(λ(u)ρ(v)F)"""
        G = _coerce(F, self.chart)
        for f in reversed(v):
            G = self.rho(f)(G)
        for f in reversed(u):
            G = self.lam(f)(G)
        return self._evaluate(G)


def _coerce(F, chart) -> FormalFunction:
    if isinstance(F, PolyElement):
        return FormalFunction.from_polynomial(chart, F)
    return F


@lru_cache(maxsize=8)
def calculus_for(data: GroupoidData) -> WordCalculus:
    return WordCalculus(data)


def chi_eval(F: FormalFunction, u: Word, data: GroupoidData,
             source: Optional[SeriesAutomorphism] = None) -> Polynomial:
    """⟨F⟩(u)（source を与えると S の代わりにその写像を使う）"""
    calculus = calculus_for(data) if source is None else WordCalculus(data, source)
    return calculus.angle(F, u)


def double_angle_eval(F: FormalFunction, u: Word, v: Word, data: GroupoidData) -> Polynomial:
    return calculus_for(data).double_angle(F, u, v)


# ---------------------------------------------------------------------------
# 語汎関数
# ---------------------------------------------------------------------------

class WordFunctional:
    """語 → 底多項式 の線形写像（各因子について微分なので零因子を含む語では 0）"""

    def __init__(self, ring: PolyRing, evaluate: Callable[[Word], Polynomial], label: str = ""):
        self.ring = ring
        self._evaluate = evaluate
        self.label = label

    def __call__(self, u: Word) -> Polynomial:
        if any(not f for f in u):
            return self.ring.zero
        return self._evaluate(u)

    def __repr__(self) -> str:
        return f"WordFunctional({self.label})"


def x_functional(f: Polynomial, ring: PolyRing) -> WordFunctional:
    """X_f(u) = k(u) f = ε(u) f"""
    return WordFunctional(ring, lambda u: f * counit(u), f"X[{format_polynomial(f)}]")


def h_functional(f: Polynomial, eta: PoissonTensor) -> WordFunctional:
    """u ↦ h(u) f"""
    return WordFunctional(eta.chart.base_ring, lambda u: hamiltonian_action(u, f, eta),
                          f"h[{format_polynomial(f)}]")


def angle_functional(F: FormalFunction, data: GroupoidData,
                     source: Optional[SeriesAutomorphism] = None) -> WordFunctional:
    return WordFunctional(data.chart.base_ring, lambda u: chi_eval(F, u, data, source), f"<{F!r}>")


def convolution(A: WordFunctional, B: WordFunctional) -> WordFunctional:
    """(AB)(u) = Σ A(u') B(u'')"""
    def evaluate(u: Word) -> Polynomial:
        total = A.ring.zero
        for left, right in coproduct(u):
            a = A(left)
            if a:
                total += a * B(right)
        return total
    return WordFunctional(A.ring, evaluate, f"({A.label})*({B.label})")


def c_bracket(A: WordFunctional, B: WordFunctional, eta: PoissonTensor) -> WordFunctional:
    """{A,B}_c(u) = Σ ( B(A(u')•u'') − A(B(u'')•u') − {A(u'), B(u'')}_M )"""
    def evaluate(u: Word) -> Polynomial:
        total = A.ring.zero
        for left, right in coproduct(u):
            a, b = A(left), B(right)
            total += B((a,) + right) - A((b,) + left) - bracket_M(a, b, eta)
        return total
    return WordFunctional(A.ring, evaluate, f"{{{A.label},{B.label}}}")


# ---------------------------------------------------------------------------
# 二重チャート
# ---------------------------------------------------------------------------

class DoubledCalculus:
    """
    直積チャート (z₍₁₎, ζ₍₁₎, z₍₂₎, ζ₍₂₎) 上の表現

        λ²₀(f) = H_{S¹f},  λ²₁(f) = H_{S²f − T¹f},  λ²₂(f) = −H_{T²f}
    """

    def __init__(self, data: GroupoidData):
        self.data = data
        self.product = ProductChart(data.chart, copies=2)
        self.chart = self.product.chart
        self._lock = threading.Lock()
        self._cache: Dict[Tuple[int, Polynomial], Derivation] = {}

    def embed(self, F: FormalFunction, copy: int) -> FormalFunction:
        return self.product.embed(_coerce(F, self.data.chart), copy)

    def source_on(self, copy: int, f: Polynomial) -> FormalFunction:
        return self.embed(self.data.S(f), copy)

    def target_on(self, copy: int, f: Polynomial) -> FormalFunction:
        return self.embed(self.data.T(f), copy)

    def lam(self, k: int, f: Polynomial) -> Derivation:
        key = (k, f)
        with self._lock:
            cached = self._cache.get(key)
        if cached is None:
            if k == 0:
                cached = hamiltonian(self.source_on(0, f))
            elif k == 1:
                cached = hamiltonian(self.source_on(1, f) - self.target_on(0, f))
            else:
                cached = -hamiltonian(self.target_on(1, f))
            with self._lock:
                self._cache[key] = cached
        return cached

    def apply(self, k: int, u: Word, G: FormalFunction) -> FormalFunction:
        for f in reversed(u):
            G = self.lam(k, f)(G)
        return G

    def triple(self, G: FormalFunction, u: Word, v: Word, w: Word) -> Polynomial:
        """⟪G⟫(u⊗v⊗w) = E₂(λ²₀(u)λ²₁(v)λ²₂(w)G)"""
        G = self.apply(0, u, self.apply(1, v, self.apply(2, w, G)))
        return self.product.diagonal(G)


@lru_cache(maxsize=8)
def doubled_for(data: GroupoidData) -> DoubledCalculus:
    return DoubledCalculus(data)


def triple_eval(G: FormalFunction, u: Word, v: Word, w: Word, data: GroupoidData) -> Polynomial:
    return doubled_for(data).triple(G, u, v, w)


# ---------------------------------------------------------------------------
# 語の列挙と検証
# ---------------------------------------------------------------------------

def words_up_to(pool: Sequence[Polynomial], max_length: int) -> List[Word]:
    """pool の因子からなる長さ max_length 以下の語（短い順）"""
    result: List[Word] = [()]
    for length in range(1, max_length + 1):
        result.extend(tuple(w) for w in iter_product(pool, repeat=length))
    return result


def _length_splits(arity: int, total: int) -> Iterator[Tuple[int, ...]]:
    """total を arity 個の長さに分ける（前の位置に長い語を置くものから）"""
    if arity == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _length_splits(arity - 1, total - head):
            yield (head,) + tail


def word_tuples(pool: Sequence[Polynomial], arity: int, max_total: int) -> Iterator[Tuple[Word, ...]]:
    """
    語の arity 組で長さの合計が max_total 以下のもの

    合計の短い順に並べ、同じ合計では先頭の語から文字を割り当てる
    （長さ 1 なら (z1, 𝟏, 𝟏), (w1, 𝟏, 𝟏), (𝟏, z1, 𝟏), … の順）。
    """
    if arity == 0:
        yield ()
        return
    for total in range(max_total + 1):
        for lengths in _length_splits(arity, total):
            yield from iter_product(*[list(iter_product(pool, repeat=n)) for n in lengths])


def _witness(*words: Word) -> List[str]:
    return [format_word(u) for u in words]


def agreement_check(F: FormalFunction, G: FormalFunction, data: GroupoidData,
                    pool: Sequence[Polynomial], max_total: int,
                    name: str = "coherent.agreement") -> CheckRecord:
    """F と G が 𝓔₂ で一致するか：⟪G⟫(u⊗v⊗w) = k(v)⟪F⟫(u⊗w)"""
    doubled = doubled_for(data)
    calculus = calculus_for(data)
    return run_identity(name, [
        (_witness(u, v, w), lambda u=u, v=v, w=w: doubled.triple(G, u, v, w)
         - calculus.double_angle(F, u, w) * counit(v))
        for u, v, w in word_tuples(pool, 3, max_total)
    ])


def coproduct_agreement_check(F: FormalFunction, G: FormalFunction, data: GroupoidData,
                              pool: Sequence[Polynomial], max_total: int,
                              name: str = "coherent.coproduct_agreement") -> CheckRecord:
    """⟪F⟫(u⊗v) = Σ ⟪G⟫(u'⊗u''⊗v)"""
    doubled = doubled_for(data)
    calculus = calculus_for(data)

    def residual(u: Word, v: Word) -> Polynomial:
        total = calculus.double_angle(F, u, v)
        for left, right in coproduct(u):
            total -= doubled.triple(G, left, right, v)
        return total

    return run_identity(name, [
        (_witness(u, v), lambda u=u, v=v: residual(u, v)) for u, v in word_tuples(pool, 2, max_total)
    ])


def agreement_instances(data: GroupoidData, f: Polynomial) -> List[Tuple[str, FormalFunction, FormalFunction]]:
    """(Sf, Sf⊗1), (Tf, 1⊗Tf), (0, 1⊗Sf − Tf⊗1)"""
    doubled = doubled_for(data)
    Sf, Tf = data.S(f), data.T(f)
    return [
        ("source", Sf, doubled.embed(Sf, 0)),
        ("target", Tf, doubled.embed(Tf, 1)),
        ("ideal", FormalFunction.zero(data.chart), doubled.source_on(1, f) - doubled.target_on(0, f)),
    ]


def lambda_commutation_check(data: GroupoidData, pool: Sequence[Polynomial], samples: Sequence[FormalFunction],
                             name: str = "coherent.lambda_commute") -> CheckRecord:
    """λ²ₐ(f) と λ²_b(g)（a ≠ b）の交換子が 0"""
    doubled = doubled_for(data)
    cases = []
    for a in range(3):
        for b in range(a + 1, 3):
            for f in pool:
                for g in pool:
                    for X in samples:
                        cases.append(([f"lambda{a}({format_polynomial(f)})", f"lambda{b}({format_polynomial(g)})", repr(X)],
                                      lambda a=a, b=b, f=f, g=g, X=X:
                                      doubled.lam(a, f).commutator_on(doubled.lam(b, g), X)))
    return run_identity(name, cases)


# ---------------------------------------------------------------------------
# θ と余結合性
# ---------------------------------------------------------------------------

def theta(C: PairFunctional) -> Callable[[Word, Word, Word], Polynomial]:
    """θ[C](u⊗v⊗w) = k(v) C(u⊗w)"""
    return lambda u, v, w: C(u, w) * counit(v)


def theta_21(C3: Callable[[Word, Word, Word], Polynomial]) -> Callable[[Word, Word, Word, Word], Polynomial]:
    return lambda u, v, w, z: C3(u, w, z) * counit(v)


def theta_22(C3: Callable[[Word, Word, Word], Polynomial]) -> Callable[[Word, Word, Word, Word], Polynomial]:
    return lambda u, v, w, z: C3(u, v, z) * counit(w)


def theta_coassoc_check(B: PairFunctional, pool: Sequence[Polynomial], max_total: int,
                        name: str = "coherent.theta_coassociativity") -> CheckRecord:
    """θ²₁θ[B] = θ²₂θ[B] = (u,v,w,z) ↦ k(v)k(w)B(u⊗z)"""
    left, right = theta_21(theta(B)), theta_22(theta(B))

    def residual(u, v, w, z):
        expected = B(u, z) * (counit(v) * counit(w))
        first = left(u, v, w, z) - right(u, v, w, z)
        return first if first else left(u, v, w, z) - expected

    return run_identity(name, [
        (_witness(*t), lambda t=t: residual(*t)) for t in word_tuples(pool, 4, max_total)
    ])
