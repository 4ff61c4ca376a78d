from math import comb, factorial

import pytest

from conftest import complex_chart
from fgk.calculus.algebra import FormalFunction
from fgk.calculus.groupoid import kp_check
from fgk.calculus.operators import FormalOperator, is_natural, sigma
from fgk.calculus.sampling import random_tuples, rng_for
from fgk.calculus.starprod import (StarProduct, berezin_apply, berezin_inverse_apply, berezin_transform,
                                   dual_star, exp_natural, laplacian, left_op, log_berezin, right_op,
                                   wick_star)
from fgk.errors import NonFlatError


@pytest.fixture(scope="module")
def star(flat_tensor):
    return StarProduct(tensor=flat_tensor)


def _ff(chart, p, nu=0):
    return FormalFunction.from_polynomial(chart, p, nu=nu)


def test_separation_of_variables(flat_chart, star):
    z, w = flat_chart.base_ring.gens
    assert wick_star(z, w, star) == z * w
    assert wick_star(w, z, star) == _ff(flat_chart, z * w) + _ff(flat_chart, flat_chart.base_ring.one, nu=1)


def test_star_product_is_associative(flat_chart, star):
    rng = rng_for(0, "test.associativity")
    for f, g, h in random_tuples(rng, flat_chart.base_ring, 5, 3, 3):
        assert wick_star(wick_star(f, g, star), h, star) == wick_star(f, wick_star(g, h, star), star)


def test_star_product_needs_constant_tensor(curved_tensor):
    with pytest.raises(NonFlatError):
        StarProduct(tensor=curved_tensor)


@pytest.mark.parametrize("p, q", [(0, 0), (1, 1), (2, 1), (2, 3), (3, 3)])
def test_berezin_matches_closed_form(flat_chart, star, p, q):
    z, w = flat_chart.base_ring.gens
    expected = FormalFunction.zero(flat_chart)
    for n in range(min(p, q) + 1):
        coefficient = factorial(n) * comb(p, n) * comb(q, n)
        expected = expected + _ff(flat_chart, coefficient * z ** (p - n) * w ** (q - n), nu=n)
    assert berezin_apply(z ** p * w ** q, star) == expected


def test_berezin_inverse_undoes_berezin(flat_chart, star):
    z, w = flat_chart.base_ring.gens
    phi = z ** 2 * w ** 2 + 3 * z * w
    assert berezin_inverse_apply(berezin_apply(phi, star), star) == phi


def test_berezin_operator_is_exponential_of_laplacian(star):
    B = berezin_transform(star, basis_degree=4)
    X = log_berezin(B)
    assert is_natural(X)
    assert X.residual(laplacian(star).shift_nu(2)).is_zero()
    assert exp_natural(X).residual(B).is_zero()


def test_log_symbol_is_generating_function(star, flat_groupoid):
    X = log_berezin(berezin_transform(star, basis_degree=3))
    assert (sigma(X) - flat_groupoid.F).reliable().is_zero()


def test_left_and_right_multiplications(flat_chart, star):
    z, w = flat_chart.base_ring.gens
    assert left_op(z, star) == FormalOperator.multiplication(flat_chart, z)
    assert right_op(w, star) == FormalOperator.multiplication(flat_chart, w)
    assert left_op(z * w, star).commutator(right_op(z * w, star)).is_zero()
    assert left_op(w, star).apply(z) == wick_star(w, z, star)


def test_symbols_of_left_and_right_multiplication(flat_chart, star, flat_groupoid):
    z, w = flat_chart.base_ring.gens
    for p in (z, w, z * w, w ** 2):
        assert (sigma(left_op(p, star)) - flat_groupoid.S(p)).reliable().is_zero()
        assert (sigma(right_op(p, star)) - flat_groupoid.T(p)).reliable().is_zero()


def test_dual_star_separates_in_reverse(flat_chart, star):
    z, w = flat_chart.base_ring.gens
    assert dual_star(z, w, star) == z * w
    assert dual_star(w, z, star) == _ff(flat_chart, z * w) - _ff(flat_chart, flat_chart.base_ring.one, nu=1)


def test_dual_star_is_associative(flat_chart, star):
    rng = rng_for(1, "test.dual_associativity")
    for f, g, h in random_tuples(rng, flat_chart.base_ring, 3, 3, 2):
        assert dual_star(dual_star(f, g, star), h, star) == dual_star(f, dual_star(g, h, star), star)


def test_star_product_respects_nu_truncation():
    chart = complex_chart(nu_truncation=1)
    S = StarProduct(tensor=kp_check([[chart.base_ring.one]], chart))
    z, w = chart.base_ring.gens
    product = wick_star(w ** 2, z ** 2, S)
    assert product.nu_order() == 0
    assert set(product.nu_coefficients()) == {0, 1}
