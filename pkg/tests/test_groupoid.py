import pytest
from sympy.polys.domains import QQ

from conftest import complex_chart
from fgk.calculus.algebra import FormalFunction, fiber_monomial
from fgk.calculus.groupoid import (GroupoidData, assemble, d_operators, kp_check, permutation_check,
                                   permuted_tensor, relabel, solve_F, solver_checks, source_jet,
                                   verify_groupoid)
from fgk.calculus.parser import format_formal, parse_poly
from fgk.errors import FiltrationError, KahlerPoissonViolation
from fgk.schemas import FAIL, PASS

KP_VIOLATOR = [["1", "0"], ["-z1", "1"]]


def _statuses(records):
    return {record.name: record.status for record in records}


def test_flat_and_curved_tensors_pass_kp(flat_tensor, curved_tensor):
    assert flat_tensor.is_constant()
    assert not curved_tensor.is_constant()


def test_kp_violation_reports_identity_indices_and_residual(tensor_from):
    chart = complex_chart(dimension=2)
    with pytest.raises(KahlerPoissonViolation) as info:
        tensor_from(chart, KP_VIOLATOR)
    assert info.value.identity == "holomorphic"
    assert info.value.indices == {"l": 1, "n": 2, "m": 1}
    assert info.value.residual == "1"


def test_holomorphic_dependence_of_diagonal_entry_violates_kp(tensor_from):
    chart = complex_chart(dimension=2)
    with pytest.raises(KahlerPoissonViolation) as info:
        tensor_from(chart, [["z2", "0"], ["0", "1"]])
    assert info.value.identity == "holomorphic"
    assert info.value.indices == {"l": 1, "n": 2, "m": 1}
    assert info.value.residual == "1"


def test_diagonal_two_dimensional_tensor_passes(tensor_from):
    chart = complex_chart(dimension=2, fiber_truncation=2)
    tensor = tensor_from(chart, [["1 + z1*w1", "0"], ["0", "1 + z2*w2"]])
    D, D_bar = d_operators(tensor, check_degree=2)
    assert len(D) == len(D_bar) == 2


def test_flat_source_and_target_maps(flat_chart, flat_groupoid):
    z, w = flat_chart.base_ring.gens
    zeta = FormalFunction.fiber_variable(flat_chart, 0)
    zetab = FormalFunction.fiber_variable(flat_chart, 1)
    assert flat_groupoid.S(z) == z
    assert flat_groupoid.S(w) == zeta + w
    assert flat_groupoid.T(z) == zetab + z
    assert flat_groupoid.T(w) == w


def test_flat_generating_function_is_quadratic(flat_groupoid):
    F = flat_groupoid.F
    assert format_formal(F) == "zeta1*zetab1"
    for n in range(3, flat_groupoid.chart.fiber_truncation + 1):
        assert F.homogeneous(n).is_zero()


def test_curved_generating_function(curved_groupoid):
    F = curved_groupoid.F
    assert format_formal(F.homogeneous(2)) == "(1 + z1*w1)*zeta1*zetab1"
    assert F.homogeneous(3).is_zero()
    z, w = curved_groupoid.chart.base_ring.gens
    assert F.homogeneous(4) == fiber_monomial(curved_groupoid.chart, (2, 2), QQ(-1, 12) * (1 + z * w))
    assert F.tau() == F


def test_solver_requires_second_order():
    chart = complex_chart(fiber_truncation=1)
    tensor = kp_check([[chart.base_ring.one]], chart)
    with pytest.raises(FiltrationError):
        solve_F(tensor)


@pytest.mark.parametrize("groupoid", ["flat_groupoid", "curved_groupoid"])
def test_groupoid_axioms_hold(groupoid, request):
    data = request.getfixturevalue(groupoid)
    records = verify_groupoid(data, basis_degree=2, trials=4, seed=0)
    failed = [record for record in records if record.status != PASS]
    assert failed == []
    assert "groupoid.first_jet" in _statuses(records)


def test_perturbed_generating_function_is_rejected(curved_groupoid):
    chart = curved_groupoid.chart
    perturbation = fiber_monomial(chart, (2, 2), parse_poly("z1", chart))
    perturbed = GroupoidData(tensor=curved_groupoid.tensor, F=curved_groupoid.F + perturbation)
    statuses = _statuses(solver_checks(perturbed, basis_degree=2))
    assert FAIL in statuses.values()
    assert statuses["groupoid.parity"] == PASS


def test_fourth_order_perturbation_shows_at_third_fiber_degree(curved_groupoid):
    chart = curved_groupoid.chart
    perturbed = GroupoidData(tensor=curved_groupoid.tensor, F=curved_groupoid.F + fiber_monomial(chart, (2, 2)))
    records = {record.name: record for record in solver_checks(perturbed, basis_degree=2)}
    source = records["groupoid.conjugation_source"]
    assert source.status == FAIL
    assert source.detail == "fiber_degree=3"
    assert source.residual != "0"


def test_generating_function_must_start_at_second_order(curved_groupoid):
    chart = curved_groupoid.chart
    with pytest.raises(FiltrationError):
        GroupoidData(tensor=curved_groupoid.tensor, F=FormalFunction.fiber_variable(chart, 0))


def test_first_jet_is_skew_part_of_tensor(flat_chart, flat_groupoid):
    alpha = source_jet(flat_groupoid)
    z, w = 0, 1
    # S(w) = w + ζ なので α^{wz} = 1、それ以外は 0
    assert alpha[w][z] == 1
    assert alpha[z][w] == 0
    assert alpha[z][z] == 0


def test_permutation_invariance_in_two_dimensions(tensor_from):
    chart = complex_chart(dimension=2, fiber_truncation=4)
    tensor = tensor_from(chart, [["1 + z1*w1", "0"], ["0", "2"]])
    data = assemble(tensor)
    assert permutation_check(data.tensor, data.F).status == PASS
    swapped = permuted_tensor(tensor, [1, 0])
    assert swapped.g(0, 0) == 2
    assert relabel(relabel(data.F, [1, 0]), [1, 0]) == data.F
