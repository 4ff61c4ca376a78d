import pytest

from fgk.calculus import coherent as wc
from fgk.calculus.poisson import bracket_M
from fgk.errors import WordLengthError
from fgk.schemas import FAIL, PASS


@pytest.fixture(scope="module")
def gens(flat_chart):
    z, w = flat_chart.base_ring.gens
    return z, w


def test_coproduct_splits_preserve_order(gens):
    z, w = gens
    assert wc.coproduct((z,)) == [((z,), ()), ((), (z,))]
    splits = wc.coproduct((z, w))
    assert len(splits) == 4
    assert ((z,), (w,)) in splits
    assert ((w,), (z,)) in splits
    assert ((z, w), ()) in splits
    assert ((), (z, w)) in splits


def test_coproduct_rejects_long_words(gens):
    z, _ = gens
    with pytest.raises(WordLengthError):
        wc.coproduct((z,) * (wc.WORD_CAP + 1))


def test_counit_and_word_enumeration(gens):
    z, w = gens
    assert wc.counit(()) == 1
    assert wc.counit((z,)) == 0
    assert len(wc.words_up_to([z, w], 2)) == 1 + 2 + 4
    assert all(sum(len(u) for u in pair) <= 2 for pair in wc.word_tuples([z, w], 2, 2))
    assert wc.format_word((z, z * w)) == "(z1, z1*w1)"


def test_word_tuples_fill_the_first_word_first(gens):
    z, w = gens
    tuples = list(wc.word_tuples([z, w], 3, 1))
    assert tuples[:4] == [((), (), ()), ((z,), (), ()), ((w,), (), ()), ((), (z,), ())]
    assert len(tuples) == 1 + 3 * 2
    assert len(list(wc.word_tuples([z, w], 2, 2))) == 1 + 2 * 2 + 3 * 4


def test_x_functionals_represent_the_bracket(flat_groupoid, gens):
    z, w = gens
    ring, eta = flat_groupoid.chart.base_ring, flat_groupoid.tensor
    Xz, Xw = wc.x_functional(z, ring), wc.x_functional(w, ring)
    bracket = wc.c_bracket(Xz, Xw, eta)
    expected = wc.x_functional(bracket_M(z, w, eta), ring)
    for u in wc.words_up_to([z, w], 2):
        assert bracket(u) == -expected(u)
        assert wc.convolution(Xz, Xw)(u) == wc.x_functional(z * w, ring)(u)


def test_source_angle_is_iterated_hamiltonian_action(flat_groupoid, gens):
    z, w = gens
    eta = flat_groupoid.tensor
    for f in (z, w, z * w):
        Sf = flat_groupoid.S(f)
        for u in wc.words_up_to([z, w], 2):
            assert wc.chi_eval(Sf, u, flat_groupoid) == wc.hamiltonian_action(u, f, eta)


def test_angle_of_generating_function_pairs_first_jets(flat_groupoid, gens):
    z, w = gens
    # ⟨ζζ̄⟩(f•g) = ∂_z f ∂_w g + ∂_w f ∂_z g
    assert wc.chi_eval(flat_groupoid.F, (z, w), flat_groupoid) == 1
    assert wc.chi_eval(flat_groupoid.F, (z * w, w), flat_groupoid) == w
    assert wc.chi_eval(flat_groupoid.F, (z,), flat_groupoid) == 0


def test_double_angle_reduces_to_single(flat_groupoid, gens):
    z, w = gens
    F = flat_groupoid.S(z) * flat_groupoid.T(w)
    for u in wc.words_up_to([z, w], 2):
        assert wc.double_angle_eval(F, u, (), flat_groupoid) == wc.chi_eval(F, u, flat_groupoid)


def test_source_and_target_agree_in_doubled_chart(flat_groupoid, gens):
    z, w = gens
    for label, F, G in wc.agreement_instances(flat_groupoid, z * w):
        record = wc.agreement_check(F, G, flat_groupoid, [z, w], 2, name=f"agreement.{label}")
        assert record.status == PASS, record


def test_agreement_separates_source_from_second_copy(flat_groupoid, gens):
    z, w = gens
    Sz = flat_groupoid.S(z)
    G = wc.doubled_for(flat_groupoid).embed(Sz, 1)
    record = wc.agreement_check(Sz, G, flat_groupoid, [z, w], 2)
    assert record.status == FAIL
    assert record.witness == ["(w1)", "()", "()"]


def test_doubled_representations_commute(flat_groupoid, gens):
    z, w = gens
    doubled = wc.doubled_for(flat_groupoid)
    sample = doubled.embed(flat_groupoid.S(z * w), 0) * doubled.embed(flat_groupoid.T(z), 1)
    assert wc.lambda_commutation_check(flat_groupoid, [z, w], [sample]).status == PASS


def test_theta_maps_are_coassociative(flat_groupoid, gens):
    z, w = gens
    Sf = flat_groupoid.S(z * w)
    B = lambda u, v: wc.double_angle_eval(Sf, u, v, flat_groupoid)  # noqa: E731
    assert wc.theta_coassoc_check(B, [z, w], 3).status == PASS
    assert wc.theta(B)((z,), (), (w,)) == B((z,), (w,))
    assert wc.theta(B)((z,), (w,), ()) == 0


def test_words_with_zero_factor_vanish(flat_groupoid, gens):
    z, _ = gens
    ring = flat_groupoid.chart.base_ring
    A = wc.angle_functional(flat_groupoid.F, flat_groupoid)
    assert A((z, ring.zero)) == 0


def test_curved_agreement(curved_groupoid):
    z, w = curved_groupoid.chart.base_ring.gens
    for label, F, G in wc.agreement_instances(curved_groupoid, z):
        record = wc.agreement_check(F, G, curved_groupoid, [z, w], 2, name=f"agreement.{label}")
        assert record.status == PASS, record
