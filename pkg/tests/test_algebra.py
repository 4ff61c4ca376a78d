import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.polys.domains import QQ

from conftest import complex_chart, real_chart
from fgk.calculus.algebra import (FormalFunction, ProductChart, bidegree_component, derivative,
                                  fiber_monomial, lift_to, monomial, multi_indices, multi_indices_upto,
                                  filtration_degree, zero_section_eval)
from fgk.calculus.parser import parse_poly
from fgk.calculus.sampling import random_tuples, rng_for
from fgk.errors import ChartMismatchError, FiberVariableError, InsufficientOrderError

CHART = complex_chart(dimension=1, fiber_truncation=3, nu_truncation=2)
RING = CHART.ring
BASE = CHART.base_ring


@st.composite
def formal_functions(draw, max_terms: int = 4):
    """チャート CHART 上の小さな形式関数"""
    terms = draw(st.lists(
        st.tuples(
            st.integers(-3, 3),
            st.tuples(*[st.integers(0, 2) for _ in range(RING.ngens)]),
            st.integers(0, CHART.nu_truncation),
        ),
        max_size=max_terms,
    ))
    result = FormalFunction.zero(CHART)
    for c, exps, r in terms:
        if c:
            result = result + FormalFunction.from_ring(CHART, monomial(RING, exps, QQ(c)), nu=r)
    return result


small = settings(max_examples=30, deadline=None)


def test_names_follow_the_flavor():
    assert CHART.base_names == ("z1", "w1")
    assert CHART.fiber_names == ("zeta1", "zetab1")
    assert real_chart(2).base_names == ("x1", "x2")
    assert real_chart(2).fiber_names == ("xi1", "xi2")


def test_multi_indices():
    assert len(multi_indices(2, 2)) == 3
    assert len(multi_indices_upto(2, 2)) == 6
    assert len(multi_indices_upto(2, 2, start=1)) == 5


def test_derivative_of_monomial():
    z, w = BASE.gens
    assert derivative(z ** 3 * w, (2, 1)) == 6 * z
    assert derivative(z * w, (2, 0)) == 0


@small
@given(formal_functions(), formal_functions())
def test_addition_and_multiplication_commute(F, G):
    assert F + G == G + F
    assert F * G == G * F


@small
@given(formal_functions(), formal_functions(), formal_functions())
def test_multiplication_distributes(F, G, H):
    assert F * (G + H) == F * G + F * H


@small
@given(formal_functions(), formal_functions())
def test_products_are_truncated(F, G):
    for r, deg in (F * G).parts:
        assert deg <= CHART.fiber_truncation
        assert r <= CHART.nu_truncation


def test_fiber_derivative_lowers_valid_order():
    F = fiber_monomial(CHART, (1, 1))
    assert F.valid_order == 3
    dF = F.diff_fiber(0)
    assert dF.valid_order == 2
    assert dF == fiber_monomial(CHART, (0, 1))


def test_tau_flips_odd_fiber_degrees():
    F = fiber_monomial(CHART, (1, 0)) + fiber_monomial(CHART, (1, 1))
    assert F.tau() == -fiber_monomial(CHART, (1, 0)) + fiber_monomial(CHART, (1, 1))


def test_zero_section_keeps_fiber_free_part():
    z, w = BASE.gens
    F = FormalFunction.from_polynomial(CHART, z * w) + fiber_monomial(CHART, (1, 0), z)
    assert zero_section_eval(F) == z * w


def test_from_polynomial_rejects_fiber_variables():
    zeta = RING.gens[2]
    with pytest.raises(FiberVariableError):
        FormalFunction.from_polynomial(CHART, zeta)


def test_chart_mismatch_is_rejected():
    other = complex_chart(dimension=1, fiber_truncation=2)
    with pytest.raises(ChartMismatchError):
        FormalFunction.one(CHART) + FormalFunction.one(other)


def test_nu_coefficients_and_shift():
    z, _ = BASE.gens
    F = FormalFunction.from_polynomial(CHART, z, nu=1)
    assert F.nu_coefficients() == {1: z}
    assert F.shift_nu(1).nu_coefficients() == {2: z}
    assert F.shift_nu(2).is_zero()


def test_bidegree_component():
    F = fiber_monomial(CHART, (2, 0)) + fiber_monomial(CHART, (1, 1))
    assert bidegree_component(F, 1, 1) == fiber_monomial(CHART, (1, 1))
    assert bidegree_component(F, 0, 2).is_zero()


def test_product_chart_embeds_copies_and_folds_diagonal():
    product = ProductChart(CHART, copies=2)
    z, w = BASE.gens
    F = FormalFunction.from_polynomial(CHART, z)
    G = FormalFunction.from_polynomial(CHART, w)
    embedded = product.embed(F, 0) * product.embed(G, 1)
    assert product.chart.base_names == ("z1", "z2", "w1", "w2")
    assert product.diagonal(embedded) == z * w


def test_diagonal_requires_valid_order():
    product = ProductChart(CHART, copies=2)
    G = FormalFunction(product.chart, None, -1)
    with pytest.raises(InsufficientOrderError):
        product.diagonal(G)


def test_lift_to_places_variables():
    z, w = BASE.gens
    lifted = lift_to(RING, z * w ** 2, [0, 1])
    assert lifted == RING.gens[0] * RING.gens[1] ** 2


@small
@given(formal_functions(), formal_functions(), formal_functions())
def test_multiplication_is_associative(F, G, H):
    assert (F * G) * H == F * (G * H)


@small
@given(formal_functions(), formal_functions())
def test_zero_section_is_multiplicative(F, G):
    assert zero_section_eval(F * G) == zero_section_eval(F) * zero_section_eval(G)


@small
@given(formal_functions(), formal_functions())
def test_filtration_degree_is_super_additive(F, G):
    assert filtration_degree(F * G) >= filtration_degree(F) + filtration_degree(G)


def test_truncated_product_agrees_with_exact_product():
    rng = rng_for(0, "test.truncation")
    for p, q in random_tuples(rng, RING, 10, 2, 3):
        exact = FormalFunction.from_ring(CHART, p * q)
        assert exact == FormalFunction.from_ring(CHART, p) * FormalFunction.from_ring(CHART, q)


def test_square_of_sum_expands():
    z, w = BASE.gens
    assert parse_poly("(z1+w1)^2", CHART) == z ** 2 + 2 * z * w + w ** 2


def test_product_beyond_fiber_truncation_vanishes():
    chart = complex_chart(dimension=1, fiber_truncation=2)
    product = fiber_monomial(chart, (2, 0)) * fiber_monomial(chart, (0, 1))
    assert product.is_zero()
    assert filtration_degree(product) == float("inf")
