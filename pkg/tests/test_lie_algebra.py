import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gsp4bessel import lie_algebra as la
from gsp4bessel.errors import NotInAlgebra

B = la.basis_matrix
tags = st.sampled_from(la.COMPLEX_TAGS)


def test_z_matrix():
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 2], expected[2, 0] = -1j, 1j
    assert np.array_equal(B("Z"), expected)


def test_x_plus_and_minus_sum_to_h1():
    assert np.allclose(B("Xplus") + B("Xminus"), B("H1"))


@pytest.mark.parametrize("tag", la.REAL_TAGS + la.COMPLEX_TAGS)
def test_basis_in_sp4(tag):
    assert la.in_algebra(B(tag))


def test_named_brackets():
    assert np.allclose(la.bracket(B("Z"), B("Zp")), 0)
    assert np.allclose(la.bracket(B("Nplus"), B("Nminus")), B("Zp") - B("Z"))
    assert np.allclose(la.bracket(B("Xplus"), B("Xminus")), B("Z"))


def test_full_table():
    rep = la.verify_mult_table()
    assert rep.passed == 100 and rep.failed == 0
    assert rep.max_deviation < 1e-14


def test_table_antisymmetry():
    for a, b in itertools.product(la.COMPLEX_TAGS, repeat=2):
        assert np.allclose(la.combination(la.MULT_TABLE[(a, b)]), -la.combination(la.MULT_TABLE[(b, a)]))


@given(tags, tags, tags, st.integers(0, 2**31 - 1))
def test_jacobi(a, b, c, seed):
    rng = np.random.default_rng(seed)
    x, y, z = (w * B(t) for w, t in zip(rng.normal(size=3) + 1j * rng.normal(size=3), (a, b, c)))
    br = la.bracket
    total = br(x, br(y, z)) + br(y, br(z, x)) + br(z, br(x, y))
    assert np.abs(total).max() < 1e-12


def test_cartan_split_examples():
    k, pp, pm = la.cartan_split(B("Z"))
    assert np.allclose(k, B("Z")) and np.allclose(pp, 0) and np.allclose(pm, 0)
    k, pp, pm = la.cartan_split(B("Xplus"))
    assert np.allclose(k, 0) and np.allclose(pp, B("Xplus")) and np.allclose(pm, 0)
    k, pp, pm = la.cartan_split(B("H1"))
    assert np.allclose(k, 0) and np.allclose(pp, B("Xplus")) and np.allclose(pm, B("Xminus"))


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                min_size=10, max_size=10))
def test_cartan_split_sums_back(coeffs):
    x = la.combination(dict(zip(la.COMPLEX_TAGS, coeffs)))
    assert np.allclose(sum(la.cartan_split(x)), x, atol=1e-10)


def test_cartan_split_rejects_outside_algebra():
    with pytest.raises(NotInAlgebra):
        la.cartan_split(np.eye(4))


@pytest.mark.parametrize("tag", la.COMPLEX_TAGS)
def test_involution_fixes_k_and_negates_p(tag):
    sign = 1 if tag in la.K_TAGS else -1
    assert np.allclose(la.cartan_involution(B(tag)), sign * B(tag))


def _in_span(x, span_tags):
    coords = la.complex_coordinates(x)
    return all(abs(v) < 1e-12 for t, v in coords.items() if t not in span_tags)


@pytest.mark.parametrize("k", la.K_TAGS)
def test_k_preserves_p_plus_and_minus(k):
    for p in la.P_PLUS_TAGS:
        assert _in_span(la.bracket(B(k), B(p)), la.P_PLUS_TAGS)
    for p in la.P_MINUS_TAGS:
        assert _in_span(la.bracket(B(k), B(p)), la.P_MINUS_TAGS)


@pytest.mark.parametrize("family", [la.P_PLUS_TAGS, la.P_MINUS_TAGS])
def test_p_parts_are_abelian(family):
    for a, b in itertools.product(family, repeat=2):
        assert np.allclose(la.bracket(B(a), B(b)), 0)
