import numpy as np
import pytest

from src.lattice.odd import OddCoefficient, einsum, mask, product_table
from src.utils.reliability import OddParameterError


def _odd(gens, value=1.0, m=3, shape=(4,)):
    return OddCoefficient.monomial(gens, np.full(shape, value), m)


def test_generators_anticommute():
    e1, e2 = _odd([1]), _odd([2])
    assert np.allclose((e1 * e2).component(mask(1, 2)), 1.0)
    assert np.allclose((e2 * e1).component(mask(1, 2)), -1.0)


def test_odd_square_vanishes():
    e1 = _odd([1], 2.5)
    assert (e1 * e1).is_zero()


def test_product_is_associative():
    rng = np.random.default_rng(3)
    a = OddCoefficient(rng.standard_normal((8, 5)), 3)
    b = OddCoefficient(rng.standard_normal((8, 5)), 3)
    c = OddCoefficient(rng.standard_normal((8, 5)), 3)
    assert np.allclose(((a * b) * c).data, (a * (b * c)).data)


def test_product_table_skips_overlapping_monomials():
    for i, j, k, _ in product_table(3):
        assert i & j == 0
        assert k == i | j


def test_numpy_array_on_the_left_defers_to_coefficient():
    e1 = _odd([1])
    out = np.full(4, 3.0) * e1
    assert isinstance(out, OddCoefficient)
    assert np.allclose(out.component(mask(1)), 3.0)


def test_power_of_even_element():
    x = OddCoefficient.even(np.full(4, 4.0), 3) + _odd([1]) * _odd([2])
    root = x.power(0.5)
    assert np.allclose((root * root).data, x.data)
    assert np.allclose(root.body, 2.0)
    assert np.allclose(root.component(mask(1, 2)), 0.25)


def test_matrix_inverse_with_nilpotent_part():
    rng = np.random.default_rng(7)
    body = np.eye(2) + 0.1 * rng.standard_normal((2, 2))
    pair = OddCoefficient.monomial([1, 2], rng.standard_normal((2, 2)), 3)
    single = OddCoefficient.monomial([1], rng.standard_normal((2, 2)), 3)
    a = OddCoefficient.even(body, 3) + pair + single
    product = einsum("...ij,...jk->...ik", a, a.matrix_inverse())
    expected = OddCoefficient.even(np.eye(2), 3)
    assert np.allclose(product.data, expected.data)


def test_determinant_matches_numpy_on_body():
    rng = np.random.default_rng(11)
    m = rng.standard_normal((5, 3, 3))
    det = OddCoefficient.even(m).determinant()
    assert np.allclose(det.body, np.linalg.det(m))


def test_theta_shift_extracts_coefficient():
    x = _odd([1], 2.0) + OddCoefficient.even(np.ones(4), 3)
    shifted = x.theta_times()
    assert np.allclose(shifted.component(mask(0)), 1.0)
    assert np.allclose(shifted.component(mask(0, 1)), 2.0)
    assert np.allclose(shifted.theta_part().data, x.data)


def test_monomial_beyond_available_generators():
    with pytest.raises(OddParameterError):
        OddCoefficient.monomial([3], np.ones(2), 3)


def test_slot_count_is_checked():
    with pytest.raises(ValueError):
        OddCoefficient(np.zeros((3, 2)), 2)
