from itertools import product

import pytest

from fgk.calculus.families import (CoherentFamily, PolyDifferential, extend_family, family_from_spec,
                                   hamiltonian_family, require_coherent, tensor_lemma, verify_family)
from fgk.calculus.poisson import bracket_M
from fgk.calculus.sampling import random_tuples, rng_for
from fgk.errors import ConfigError, IncoherentFamilyError
from fgk.schemas import PASS, FamilySpec

REFERENCE_SPEC = [
    [{"coefficient": "x1^2 + x2^2", "derivatives": []}],
    [{"coefficient": "2*x2", "derivatives": [[1, 0]]},
     {"coefficient": "-2*x1", "derivatives": [[0, 1]]}],
]


@pytest.fixture(scope="module")
def reference(plane_tensor):
    return family_from_spec(FamilySpec.model_validate(REFERENCE_SPEC), plane_tensor)


def _all_pass(records):
    return all(record.status == PASS for record in records)


def test_reference_family_matches_hamiltonian_family(plane, plane_tensor, reference):
    x, y = plane.base_ring.gens
    expected = hamiltonian_family(x ** 2 + y ** 2, plane_tensor, 2)
    assert reference.size == 2
    for C, H in zip(reference.operators, expected.operators):
        assert C.terms == H.terms


def test_reference_family_is_coherent(reference):
    assert _all_pass(verify_family(reference, seed=0, trials=5))
    require_coherent(reference, seed=0, trials=5)


def test_extension_stays_coherent(reference):
    extended = extend_family(reference, seed=0, trials=5)
    assert extended.size == 3
    assert _all_pass(verify_family(extended, seed=1, trials=5, include_phi=True))


def test_extension_differs_from_iterated_bracket_by_symmetric_biderivation(plane, plane_tensor, reference):
    x, y = plane.base_ring.gens
    C2 = extend_family(reference, seed=0, trials=5).operators[2]
    phi = x ** 2 + y ** 2

    def deviation(f, g):
        return C2(f, g) - bracket_M(f, bracket_M(g, phi, plane_tensor), plane_tensor)

    rng = rng_for(0, "test.deviation")
    for f, g, h in random_tuples(rng, plane.base_ring, 5, 3, 2):
        assert deviation(f, g) == deviation(g, f)
        assert deviation(f * h, g) == f * deviation(h, g) + h * deviation(f, g)


def test_zero_family_extends_by_zero(plane, plane_tensor):
    ring = plane.base_ring
    zero = CoherentFamily(tensor=plane_tensor,
                          operators=(PolyDifferential.zero(ring, 0), PolyDifferential.zero(ring, 1)))
    extended = extend_family(zero, seed=0, trials=3)
    assert extended.operators[-1].is_zero()


def test_empty_family_gets_zero_function(plane_tensor):
    extended = extend_family(CoherentFamily(tensor=plane_tensor), check=False)
    assert extended.size == 1
    assert extended.operators[0]() == 0


def test_asymmetric_operator_violates_property_b(plane_tensor):
    spec = FamilySpec.model_validate([[], [], [{"coefficient": "1", "derivatives": [[1, 0], [0, 1]]}]])
    family = family_from_spec(spec, plane_tensor)
    with pytest.raises(IncoherentFamilyError) as info:
        require_coherent(family, seed=0, trials=10)
    assert info.value.prop == "B"
    with pytest.raises(IncoherentFamilyError):
        extend_family(family, seed=0, trials=10)


def test_index_orders_differ_by_symmetric_operator(plane, reference):
    default = extend_family(reference, seed=0, trials=5).operators[2]
    reordered = extend_family(reference, seed=0, trials=5, index_order=[1, 0]).operators[2]
    difference = default - reordered
    rng = rng_for(0, "test.index_order")
    for f, g in random_tuples(rng, plane.base_ring, 5, 2, 2):
        assert difference(f, g) == difference(g, f)


def test_tensor_lemma_solves_skew_part(plane):
    x, y = plane.base_ring.gens
    c = (x, y + 1)
    eps = {(0, 1): 1, (1, 0): -1}
    v = {}
    for K in product(range(2), repeat=3):
        value = eps.get(K[:2], 0) * c[K[2]]
        if value:
            v[K] = value
    u = tensor_lemma(v, 2, 3)
    zero = plane.base_ring.zero
    for K in product(range(2), repeat=3):
        swapped = (K[1], K[0], K[2])
        assert v.get(K, zero) == u.get(K, zero) - u.get(swapped, zero)
        assert u.get(K, zero) == u.get((K[0], K[2], K[1]), zero)


def test_tensor_lemma_needs_two_indices():
    with pytest.raises(ValueError):
        tensor_lemma({}, 2, 1)


@pytest.mark.parametrize("terms", [
    [[{"coefficient": "1", "derivatives": [[1, 0]]}]],
    [[], [{"coefficient": "1", "derivatives": [[1]]}]],
    [[], [{"coefficient": "x3", "derivatives": [[1, 0]]}]],
])
def test_malformed_family_spec_is_config_error(plane_tensor, terms):
    with pytest.raises(ConfigError):
        family_from_spec(FamilySpec.model_validate(terms), plane_tensor)


def test_family_round_trips_through_spec(plane_tensor, reference):
    again = family_from_spec(reference.to_spec(), plane_tensor)
    assert [C.terms for C in again.operators] == [C.terms for C in reference.operators]
