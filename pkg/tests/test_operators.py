import pytest

from conftest import complex_chart
from fgk.calculus.algebra import FormalFunction, fiber_monomial
from fgk.calculus.operators import FormalOperator, is_natural, lift_multilinear, lift_operator, sigma
from fgk.errors import NotNaturalError, NuOrderError

CHART = complex_chart(dimension=1, fiber_truncation=3, nu_truncation=2)
RING = CHART.base_ring
Z, W = RING.gens


def test_composition_follows_leibniz():
    dz = FormalOperator.partial(CHART, (1, 0))
    mz = FormalOperator.multiplication(CHART, Z)
    # [∂_z, z] = 1
    assert dz.commutator(mz) == FormalOperator.identity(CHART)


def test_apply_differentiates_and_multiplies():
    A = FormalOperator.partial(CHART, (1, 1), W, nu=1)
    value = A.apply(Z ** 2 * W)
    assert value == FormalFunction.from_polynomial(CHART, 2 * Z * W, nu=1)


def test_naturality_reports_first_bad_grade():
    natural = FormalOperator.identity(CHART) + FormalOperator.partial(CHART, (1, 0), nu=1)
    assert is_natural(natural)
    unnatural = FormalOperator.partial(CHART, (1, 1), nu=1)
    result = is_natural(unnatural)
    assert not result
    assert result.grade == 1
    with pytest.raises(NotNaturalError):
        sigma(unnatural)


def test_symbol_replaces_top_derivatives_with_fibers():
    A = (FormalOperator.multiplication(CHART, Z)
         + FormalOperator.partial(CHART, (0, 1), Z, nu=1)
         + FormalOperator.partial(CHART, (1, 0), nu=2))
    expected = (FormalFunction.from_polynomial(CHART, Z)
                + fiber_monomial(CHART, (0, 1), Z))
    assert sigma(A) == expected


def test_inverse_of_unipotent_operator():
    A = FormalOperator.identity(CHART) + FormalOperator.partial(CHART, (1, 1), nu=1)
    assert (A * A.inverse()).residual(FormalOperator.identity(CHART)).is_zero()


def test_inverse_requires_nu_adic_unit():
    with pytest.raises(NuOrderError):
        FormalOperator.multiplication(CHART, Z).inverse()


def test_shift_nu_down_requires_divisibility():
    with pytest.raises(NuOrderError):
        FormalOperator.identity(CHART).shift_nu(-1)


def test_lift_multilinear_recovers_bidifferential_operator():
    def evaluate(args):
        f, g = args
        return W * f.diff(Z) * g.diff(W) + f * g

    table = lift_multilinear(evaluate, RING, [1, 1])
    assert table == {((0, 0), (0, 0)): RING.one, ((1, 0), (0, 1)): W}


def test_lift_operator_recovers_laplacian_grades():
    def action(p):
        return (FormalFunction.from_polynomial(CHART, p)
                + FormalFunction.from_polynomial(CHART, p.diff(Z).diff(W), nu=1))

    B = lift_operator(CHART, action, 3)
    assert B.order_cap == 3
    assert B.grade(0) == {(0, 0): RING.one}
    assert B.grade(1) == {(1, 1): RING.one}
