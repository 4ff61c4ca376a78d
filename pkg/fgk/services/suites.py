"""
検証スイート

verify コマンドが実行するチェックをジョブとして組み立てる。
各ジョブはチェック名から作った乱数生成器だけを使うので、実行順序に依存しない。
"""

from collections import Counter
from typing import Callable, List, Sequence

from fgk.calculus import coherent as wc
from fgk.calculus.algebra import FormalFunction, Polynomial
from fgk.calculus.checks import Residual, residual_text, run_identity, single, skipped, witness_text
from fgk.calculus.families import angle_family, verify_family
from fgk.calculus.groupoid import (GroupoidData, d_operators, permutation_check, source_jet,
                                   verify_groupoid)
from fgk.calculus.operators import FormalOperator, is_natural, sigma
from fgk.calculus.poisson import bracket_M, bracket_TM
from fgk.calculus.sampling import (basis_monomials, random_pairs, random_polynomial, random_tuples,
                                   rng_for, variable_monomials)
from fgk.calculus.starprod import (StarProduct, berezin_apply, berezin_transform, dual_star,
                                   exp_natural, laplacian, left_op, log_berezin, right_op, wick_star)
from fgk.errors import OperatorPropertyError
from fgk.schemas import CheckRecord, ChartConfig
from fgk.services.runner import Job
from fgk.utils.logging_config import setup_logger

logger = setup_logger('suites')

STARPROD_CHECKS = (
    "starprod.associativity", "starprod.berezin_conjugation", "starprod.berezin_fixes",
    "starprod.classical_limit", "starprod.dual_associativity", "starprod.dual_reversed_bracket",
    "starprod.dual_separation", "starprod.dual_unit", "starprod.holomorphic_pointwise",
    "starprod.left_action", "starprod.left_right_commute", "starprod.log_leading",
    "starprod.log_natural", "starprod.log_roundtrip", "starprod.log_symbol",
    "starprod.sigma_commutator", "starprod.sigma_source_target", "starprod.unit",
)


def first_nonzero(*residuals: Residual) -> Residual:
    """最初の非零残差（すべて零なら None）"""
    for residual in residuals:
        if residual_text(residual) != "0":
            return residual
    return None


class SuiteContext:
    """スイートが共有する設定・亜群データ・標本"""

    def __init__(self, config: ChartConfig, data: GroupoidData):
        self.config = config
        self.data = data
        self.chart = data.chart
        self.ring = self.chart.base_ring
        self.seed = config.rng_seed
        self.trials = config.trials
        self.basis_degree = config.basis_degree
        self.word_length = min(config.word_length, self.chart.fiber_truncation)

    def ff(self, p: Polynomial) -> FormalFunction:
        return FormalFunction.from_polynomial(self.chart, p)

    def pairs(self, name: str, max_degree: int = 3):
        return random_pairs(rng_for(self.seed, name), self.ring, self.trials, max_degree)

    def triples(self, name: str, max_degree: int = 3):
        return random_tuples(rng_for(self.seed, name), self.ring, self.trials, 3, max_degree)

    def holomorphic_monomials(self, max_degree: int) -> List[Polynomial]:
        chart = self.chart
        return variable_monomials(self.ring, [chart.holomorphic(k) for k in range(chart.dimension)], max_degree)

    def antiholomorphic_monomials(self, max_degree: int) -> List[Polynomial]:
        chart = self.chart
        return variable_monomials(self.ring, [chart.antiholomorphic(l) for l in range(chart.dimension)], max_degree)

    def word_pool(self) -> List[Polynomial]:
        z, w = self.ring.gens[self.chart.holomorphic(0)], self.ring.gens[self.chart.antiholomorphic(0)]
        return [z, w, z * w]


def _w(*values) -> List[str]:
    return [witness_text(v) for v in values]


# ---------------------------------------------------------------------------
# 亜群
# ---------------------------------------------------------------------------

def groupoid_jobs(ctx: SuiteContext) -> List[Job]:
    data = ctx.data

    def d_commute() -> List[CheckRecord]:
        def compute():
            try:
                d_operators(data.tensor, check_degree=ctx.basis_degree)
            except OperatorPropertyError as e:
                return str(e)
            return None
        return [single("groupoid.d_operators_commute", compute, [f"basis_degree={ctx.basis_degree}"])]

    return [
        ("groupoid.axioms", lambda: verify_groupoid(data, ctx.basis_degree, ctx.trials, ctx.seed)),
        ("groupoid.d_operators_commute", d_commute),
        ("groupoid.permutation_invariance", lambda: [permutation_check(data.tensor, data.F)]),
    ]


# ---------------------------------------------------------------------------
# スター積
# ---------------------------------------------------------------------------

def starprod_jobs(ctx: SuiteContext) -> List[Job]:
    chart = ctx.chart
    if chart.nu_truncation == 0:
        reason = "nu_truncation = 0"
    elif not ctx.data.tensor.is_constant():
        reason = "非平坦チャート（Wick スター積は定数テンソルのみ）"
    else:
        reason = None
    if reason is not None:
        return [(name, lambda name=name: [skipped(name, reason)]) for name in STARPROD_CHECKS]

    S = StarProduct(tensor=ctx.data.tensor)
    ff = ctx.ff
    one = ctx.ring.one
    eta = ctx.data.tensor
    monomials = basis_monomials(ctx.ring, ctx.basis_degree)

    def unit():
        name = "starprod.unit"
        rng = rng_for(ctx.seed, name)
        cases = []
        for _ in range(ctx.trials):
            f = random_polynomial(rng, ctx.ring, 3)
            cases.append((_w(f), lambda f=f: first_nonzero(wick_star(one, f, S) - ff(f), wick_star(f, one, S) - ff(f))))
        return [run_identity(name, cases)]

    def classical_limit():
        name = "starprod.classical_limit"

        def residual(f, g):
            fg, gf = wick_star(f, g, S), wick_star(g, f, S)
            return first_nonzero(fg.nu_component(0) - ff(f * g), (fg - gf).nu_component(1) - ff(bracket_M(f, g, eta)))

        return [run_identity(name, [(_w(f, g), lambda f=f, g=g: residual(f, g)) for f, g in ctx.pairs(name)])]

    def associativity():
        name = "starprod.associativity"
        return [run_identity(name, [
            (_w(f, g, h), lambda f=f, g=g, h=h: wick_star(wick_star(f, g, S), h, S) - wick_star(f, wick_star(g, h, S), S))
            for f, g, h in ctx.triples(name)
        ])]

    def operators():
        name = "starprod.left_action"
        records = [run_identity(name, [
            (_w(f, g), lambda f=f, g=g: left_op(f, S).apply(g) - wick_star(f, g, S)) for f, g in ctx.pairs(name)
        ])]
        name = "starprod.left_right_commute"
        records.append(run_identity(name, [
            (_w(f, g), lambda f=f, g=g: left_op(f, S).commutator(right_op(g, S))) for f, g in ctx.pairs(name)
        ]))
        records.append(run_identity("starprod.holomorphic_pointwise", [
            (_w("L", a), lambda a=a: left_op(a, S) - FormalOperator.multiplication(chart, a))
            for a in ctx.holomorphic_monomials(ctx.basis_degree)
        ] + [
            (_w("R", b), lambda b=b: right_op(b, S) - FormalOperator.multiplication(chart, b))
            for b in ctx.antiholomorphic_monomials(ctx.basis_degree)
        ]))

        name = "starprod.sigma_commutator"

        def commutator_law(A: FormalOperator, B: FormalOperator):
            return sigma(A.commutator(B).shift_nu(-1)) - bracket_TM(sigma(A), sigma(B))

        cases = []
        for f, g in ctx.pairs(name, max_degree=2):
            cases.append((_w("LL", f, g), lambda f=f, g=g: commutator_law(left_op(f, S), left_op(g, S))))
            cases.append((_w("RR", f, g), lambda f=f, g=g: commutator_law(right_op(f, S), right_op(g, S))))
            cases.append((_w("LR", f, g), lambda f=f, g=g: commutator_law(left_op(f, S), right_op(g, S))))
        records.append(run_identity(name, cases))

        records.append(run_identity("starprod.sigma_source_target", [
            (_w("S", p), lambda p=p: sigma(left_op(p, S)) - ctx.data.S(p)) for p in monomials
        ] + [
            (_w("T", p), lambda p=p: sigma(right_op(p, S)) - ctx.data.T(p)) for p in monomials
        ]))
        return records

    def berezin():
        B = berezin_transform(S, ctx.basis_degree)
        B_inv = B.inverse()
        records = [run_identity("starprod.berezin_fixes", [
            (_w(p), lambda p=p: B.apply(p) - berezin_apply(p, S)) for p in monomials
        ] + [
            (_w(a), lambda a=a: B.apply(a) - ff(a))
            for a in ctx.holomorphic_monomials(ctx.basis_degree) + ctx.antiholomorphic_monomials(ctx.basis_degree)
        ])]

        def conjugation(p: Polynomial, expected: FormalOperator):
            conj = B * FormalOperator.multiplication(chart, p) * B_inv
            natural = is_natural(conj)
            if not natural:
                return f"not natural at grade {natural.grade}"
            return conj.residual(expected)

        low = max(ctx.basis_degree - 1, 1)
        records.append(run_identity("starprod.berezin_conjugation", [
            (_w("a", a), lambda a=a: conjugation(a, right_op(a, S))) for a in ctx.holomorphic_monomials(low)
        ] + [
            (_w("b", b), lambda b=b: conjugation(b, left_op(b, S))) for b in ctx.antiholomorphic_monomials(low)
        ]))

        X = log_berezin(B)

        def natural_residual():
            result = is_natural(X)
            return None if result else f"grade {result.grade}"

        records.append(single("starprod.log_natural", natural_residual, ["X"]))
        leading = FormalOperator(chart, {(2, alpha): c for alpha, c in X.grade(2).items()})
        records.append(single("starprod.log_leading", lambda: leading - laplacian(S).shift_nu(2), ["X_2"]))
        records.append(single("starprod.log_roundtrip", lambda: exp_natural(X).residual(B), ["exp(X/nu)"]))
        records.append(single("starprod.log_symbol", lambda: sigma(X) - ctx.data.F, ["sigma(X)", "F"]))
        return records

    def dual():
        records = []
        name = "starprod.dual_unit"
        rng = rng_for(ctx.seed, name)
        cases = []
        for _ in range(ctx.trials):
            f = random_polynomial(rng, ctx.ring, 3)
            cases.append((_w(f), lambda f=f: first_nonzero(dual_star(one, f, S) - ff(f), dual_star(f, one, S) - ff(f))))
        records.append(run_identity(name, cases))

        name = "starprod.dual_associativity"
        records.append(run_identity(name, [
            (_w(f, g, h), lambda f=f, g=g, h=h: dual_star(dual_star(f, g, S), h, S) - dual_star(f, dual_star(g, h, S), S))
            for f, g, h in ctx.triples(name, max_degree=2)
        ]))

        name = "starprod.dual_reversed_bracket"
        records.append(run_identity(name, [
            (_w(f, g), lambda f=f, g=g: (dual_star(f, g, S) - dual_star(g, f, S)).nu_component(1)
             + ff(bracket_M(f, g, eta)))
            for f, g in ctx.pairs(name)
        ]))

        name = "starprod.dual_separation"
        rng = rng_for(ctx.seed, name)
        cases = []
        for a in ctx.holomorphic_monomials(2):
            f = random_polynomial(rng, ctx.ring, 2)
            cases.append((_w("a", a, f), lambda a=a, f=f: dual_star(a, f, S) - ff(a * f)))
        for b in ctx.antiholomorphic_monomials(2):
            f = random_polynomial(rng, ctx.ring, 2)
            cases.append((_w("b", f, b), lambda b=b, f=f: dual_star(f, b, S) - ff(f * b)))
        records.append(run_identity(name, cases))
        return records

    return [
        ("starprod.unit", lambda: unit()),
        ("starprod.classical_limit", lambda: classical_limit()),
        ("starprod.associativity", lambda: associativity()),
        ("starprod.operators", operators),
        ("starprod.berezin", berezin),
        ("starprod.dual", dual),
    ]


# ---------------------------------------------------------------------------
# 語計算
# ---------------------------------------------------------------------------

def coherent_jobs(ctx: SuiteContext) -> List[Job]:
    data = ctx.data
    eta = data.tensor
    ring = ctx.ring
    pool = ctx.word_pool()
    L = ctx.word_length
    z, w, zw = pool
    sf, tf = data.S(zw), data.T(zw)
    mixed = data.S(z) * data.T(w)
    samples = [("S(z*w)", sf), ("T(z*w)", tf), ("S(z)T(w)", mixed), ("F", data.F)]
    words = wc.words_up_to(pool, L)
    unit = wc.x_functional(ring.one, ring)

    def word_cases(residual: Callable[[wc.Word], Residual], label: str, over: Sequence[wc.Word]):
        return [([label, wc.format_word(u)], lambda u=u: residual(u)) for u in over]

    def coproduct_laws():
        def counit_law(u):
            splits = wc.coproduct(u)
            via_left = [b for a, b in splits if not a]
            via_right = [a for a, b in splits if not b]
            if via_left != [u] or via_right != [u]:
                return "counit"
            if Counter((b, a) for a, b in splits) != Counter(splits):
                return "cocommutativity"
            return None

        records = [run_identity("coherent.coproduct_counit", word_cases(counit_law, "u", wc.words_up_to(pool, 3)))]
        functionals = [wc.h_functional(zw, eta), wc.angle_functional(mixed, data)]
        cases = []
        for A in functionals:
            cases += word_cases(lambda u, A=A: first_nonzero(wc.convolution(A, unit)(u) - A(u),
                                                              wc.convolution(unit, A)(u) - A(u)), A.label, words)
        records.append(run_identity("coherent.convolution_unit", cases))
        return records

    def x_representation():
        cases = []
        for f in pool:
            for g in pool:
                Xf, Xg = wc.x_functional(f, ring), wc.x_functional(g, ring)
                product, bracket = wc.convolution(Xf, Xg), wc.c_bracket(Xf, Xg, eta)
                Xfg, Xbr = wc.x_functional(f * g, ring), wc.x_functional(bracket_M(f, g, eta), ring)
                cases += word_cases(lambda u, product=product, bracket=bracket, Xfg=Xfg, Xbr=Xbr:
                                    first_nonzero(product(u) - Xfg(u), bracket(u) + Xbr(u)),
                                    f"f={witness_text(f)},g={witness_text(g)}", words)
        return [run_identity("coherent.x_representation", cases)]

    def source_angle():
        cases = []
        for f in pool:
            Sf = data.S(f)
            cases += word_cases(lambda u, f=f, Sf=Sf: wc.chi_eval(Sf, u, data) - wc.hamiltonian_action(u, f, eta),
                                f"f={witness_text(f)}", words)
        records = [run_identity("coherent.source_angle", cases)]
        cases = []
        for f in pool:
            A = wc.angle_functional(data.S(f), data)
            for g in pool:
                bracket = wc.c_bracket(A, wc.x_functional(g, ring), eta)
                cases += word_cases(lambda u, bracket=bracket: bracket(u),
                                    f"f={witness_text(f)},g={witness_text(g)}", wc.words_up_to(pool, max(L - 1, 0)))
        records.append(run_identity("coherent.source_commutes_x", cases))
        return records

    def h_representation():
        name = "coherent.h_representation"
        return [run_identity(name, [
            (_w(f, g, phi), lambda f=f, g=g, phi=phi:
             wc.hamiltonian_action((f, g), phi, eta) - wc.hamiltonian_action((g, f), phi, eta)
             - wc.hamiltonian_action((bracket_M(f, g, eta),), phi, eta))
            for f, g, phi in ctx.triples(name, max_degree=2)
        ])]

    def algebra_laws():
        pairs = [(samples[0], samples[1]), (samples[2], samples[0]), (samples[3], samples[1])]
        cases = []
        for (a, F), (b, G) in pairs:
            A, B = wc.angle_functional(F, data), wc.angle_functional(G, data)
            product, FG = wc.convolution(A, B), F * G
            cases += word_cases(lambda u, product=product, FG=FG: wc.chi_eval(FG, u, data) - product(u),
                                f"{a}*{b}", wc.words_up_to(pool, min(3, L)))
        records = [run_identity("coherent.convolution_isomorphism", cases)]
        cases = []
        for (a, F), (b, G) in pairs:
            A, B = wc.angle_functional(F, data), wc.angle_functional(G, data)
            bracket, FG = wc.c_bracket(A, B, eta), bracket_TM(F, G)
            cases += word_cases(lambda u, bracket=bracket, FG=FG: wc.chi_eval(FG, u, data) - bracket(u),
                                f"{{{a},{b}}}", wc.words_up_to(pool, min(2, L - 1)))
        records.append(run_identity("coherent.bracket_transfer", cases))
        return records

    def double_angle_laws():
        pairs = list(wc.word_tuples(pool, 2, L))
        cases = []
        for label, F in samples:
            cases += word_cases(lambda u, F=F: wc.double_angle_eval(F, u, (), data) - wc.chi_eval(F, u, data),
                                label, words)
        records = [run_identity("coherent.reduction", cases)]
        cases = []
        for f in pool:
            Sf, Tf = data.S(f), data.T(f)
            for u, v in pairs:
                cases.append((_w(f) + [wc.format_word(u), wc.format_word(v)], lambda f=f, Sf=Sf, Tf=Tf, u=u, v=v: first_nonzero(
                    wc.double_angle_eval(Sf, u, v, data) - wc.hamiltonian_action(u, f, eta) * wc.counit(v),
                    wc.double_angle_eval(Tf, u, v, data) - wc.hamiltonian_action(v, f, eta) * wc.counit(u))))
        records.append(run_identity("coherent.double_source_target", cases))
        cases = []
        for label, F in samples[:3]:
            IF = data.I(F)
            for u, v in wc.word_tuples(pool, 2, min(L, ctx.chart.fiber_truncation - 1)):
                cases.append(([label, wc.format_word(u), wc.format_word(v)],
                              lambda IF=IF, F=F, u=u, v=v:
                              wc.double_angle_eval(IF, u, v, data) - wc.double_angle_eval(F, v, u, data)))
        records.append(run_identity("coherent.dagger", cases))
        return records

    def filtration_laws():
        F = data.F
        name = "coherent.filtration_symmetric"
        records = [run_identity(name, [
            (_w(f, g, h), lambda f=f, g=g, h=h: first_nonzero(
                wc.chi_eval(F, (f, g), data) - wc.chi_eval(F, (g, f), data),
                wc.chi_eval(F, (f * h, g), data) - f * wc.chi_eval(F, (h, g), data) - h * wc.chi_eval(F, (f, g), data)))
            for f, g, h in ctx.triples(name, max_degree=2)
        ])]
        name = "coherent.source_independence"
        records.append(run_identity(name, [
            (_w(f, g), lambda f=f, g=g: wc.chi_eval(F, (f, g), data) - wc.chi_eval(F, (f, g), data, source=data.S_dual))
            for f, g in ctx.pairs(name, max_degree=2)
        ]))
        return records

    def angle_family_laws():
        size = min(4, ctx.chart.fiber_truncation + 1)
        family = angle_family(mixed + data.F, data, size)
        return verify_family(family, ctx.seed, ctx.trials, prefix="coherent.angle_family")

    def agreement():
        records = []
        for label, F, G in wc.agreement_instances(data, zw):
            records.append(wc.agreement_check(F, G, data, pool[:2], L, name=f"coherent.agreement_{label}"))
        doubled = wc.doubled_for(data)
        records.append(wc.coproduct_agreement_check(sf, doubled.embed(sf, 0), data, pool[:2], L))
        lambda_samples = [doubled.embed(sf, 0) * doubled.embed(tf, 1), doubled.embed(data.F, 1)]
        records.append(wc.lambda_commutation_check(data, pool[:2], lambda_samples))
        return records

    def theta():
        B = lambda u, v: wc.double_angle_eval(sf, u, v, data)  # noqa: E731
        return [wc.theta_coassoc_check(B, pool[:2], min(3, L))]

    return [
        ("coherent.coproduct", coproduct_laws),
        ("coherent.x_representation", x_representation),
        ("coherent.source_angle", source_angle),
        ("coherent.h_representation", h_representation),
        ("coherent.algebra", algebra_laws),
        ("coherent.double_angle", double_angle_laws),
        ("coherent.filtration", filtration_laws),
        ("coherent.angle_family", angle_family_laws),
        ("coherent.agreement", agreement),
        ("coherent.theta", theta),
    ]


def verify_jobs(config: ChartConfig, data: GroupoidData) -> List[Job]:
    ctx = SuiteContext(config, data)
    # 共有する写像は並列実行の前に作っておく
    for attribute in ("S", "T", "Q", "S_dual", "T_dual"):
        getattr(data, attribute)
    logger.info(f"検証ジョブを組み立てました（語長 {ctx.word_length}）")
    return groupoid_jobs(ctx) + starprod_jobs(ctx) + coherent_jobs(ctx)


def jet_payload(data: GroupoidData) -> List[List[str]]:
    return [[witness_text(entry) for entry in row] for row in source_jet(data)]
