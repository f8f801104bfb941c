"""Tests for displacement module."""

import numpy as np
import pytest

from rankprecond import algebras, displacement, structured
from rankprecond.errors import (
    CornerMismatch,
    StructureViolation,
    UnsupportedCombination,
    UnsupportedHartleyIndex,
)
from rankprecond.util import numerical_rank

SIZES = [3, 4, 7, 16, 64]


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(11)


def _toeplitz(rng, n, complex_=False):
    a = rng.standard_normal(n)
    b = rng.standard_normal(n)
    if complex_:
        a = a + 1j * rng.standard_normal(n)
        b = b + 1j * rng.standard_normal(n)
    b[0] = a[0]
    return a, b


def _hankel(rng, n):
    c = rng.standard_normal(n)
    d = rng.standard_normal(n)
    d[0] = c[-1]
    return c, d


def _assert_commutator(dyads, a, w):
    expected = a @ w - w @ a
    scale = max(1.0, np.linalg.norm(expected))
    assert np.linalg.norm(dyads.realize() - expected) <= 1e-11 * scale


@pytest.mark.parametrize("n", SIZES)
@pytest.mark.parametrize("phi", [1.0, -1.0, 1j, np.exp(0.3j)])
def test_toeplitz_circulant(rng, n, phi):
    a, b = _toeplitz(rng, n, complex_=True)
    dyads = displacement.comm_toeplitz_circulant(a, b, phi)
    assert dyads.rho == 2
    t = structured.toeplitz(a, b).dense()
    _assert_commutator(dyads, t, algebras.shift_matrix(n, phi))
    assert numerical_rank(dyads.realize()) <= 2


def test_toeplitz_circulant_corner():
    with pytest.raises(CornerMismatch):
        displacement.comm_toeplitz_circulant([1.0, 2.0], [3.0, 4.0])


@pytest.mark.parametrize("n", SIZES)
def test_toeplitz_x(rng, n):
    a, b = _toeplitz(rng, n)
    dyads = displacement.comm_toeplitz_X(a, b)
    assert dyads.rho == 4
    x = algebras.trig_generator(algebras.TRIG_TABLE["DST1"], n)
    _assert_commutator(dyads, structured.toeplitz(a, b).dense(), x)
    assert numerical_rank(dyads.realize()) <= 4


@pytest.mark.parametrize("n", SIZES)
def test_hankel_x(rng, n):
    c, d = _hankel(rng, n)
    dyads = displacement.comm_hankel_X(c, d)
    x = algebras.trig_generator(algebras.TRIG_TABLE["DST1"], n)
    _assert_commutator(dyads, structured.hankel(c, d).dense(), x)
    assert numerical_rank(dyads.realize()) <= 4


@pytest.mark.parametrize("name", sorted(algebras.TRIG_TABLE))
@pytest.mark.parametrize("n", [3, 8, 33])
def test_trig_commutators(rng, name, n):
    x = algebras.trig_generator(algebras.TRIG_TABLE[name], n)
    a, b = _toeplitz(rng, n)
    dyads = displacement.comm_toeplitz_trig(a, b, name)
    assert dyads.rho <= 8
    _assert_commutator(dyads, structured.toeplitz(a, b).dense(), x)
    assert numerical_rank(dyads.realize()) <= 8
    c, d = _hankel(rng, n)
    dyads = displacement.comm_hankel_trig(c, d, name)
    assert dyads.rho <= 8
    _assert_commutator(dyads, structured.hankel(c, d).dense(), x)
    assert numerical_rank(dyads.realize()) <= 8


@pytest.mark.parametrize("name", ["DST1", "DCT2", "DCT1", "DST8"])
@pytest.mark.parametrize("n", [2, 5, 16])
def test_trig_toeplitz_plus_hankel(rng, name, n):
    a, b = _toeplitz(rng, n)
    c, d = _hankel(rng, n)
    matrix = structured.toeplitz(a, b) + structured.hankel(c, d)
    x = algebras.trig_generator(algebras.TRIG_TABLE[name], n)
    _assert_commutator(displacement.comm_trig(matrix, name), matrix.dense(), x)


@pytest.mark.parametrize("n", SIZES)
def test_generic_x_commutator(rng, n):
    a, b = _toeplitz(rng, n, complex_=True)
    c, d = _hankel(rng, n)
    matrix = structured.toeplitz(a, b) + structured.hankel(c, d)
    x = algebras.trig_generator(algebras.TRIG_TABLE["DST1"], n)
    _assert_commutator(displacement.comm_X(matrix), matrix.dense(), x)


@pytest.mark.parametrize("n", SIZES)
@pytest.mark.parametrize("phi", [1.0, -1.0])
def test_y_commutators(rng, n, phi):
    y = algebras.y_matrix(n, phi)
    a, b = _toeplitz(rng, n)
    dyads = displacement.comm_toeplitz_Y(a, b, phi)
    assert dyads.rho == 4
    _assert_commutator(dyads, structured.toeplitz(a, b).dense(), y)
    assert numerical_rank(dyads.realize()) <= 4
    c, d = _hankel(rng, n)
    dyads = displacement.comm_hankel_Y(c, d, phi)
    assert dyads.rho == 4
    _assert_commutator(dyads, structured.hankel(c, d).dense(), y)
    assert numerical_rank(dyads.realize()) <= 4
    matrix = structured.toeplitz(a, b) + structured.hankel(c, d)
    _assert_commutator(displacement.comm_Y(matrix, phi), matrix.dense(), y)


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("n", [3, 4, 9, 32])
def test_m_k_commutator(rng, k, n):
    a = rng.standard_normal(n)
    matrix = structured.toeplitz(a, a)
    dyads = displacement.comm_M_k(matrix, k)
    _assert_commutator(dyads, matrix.dense(), algebras.m_matrix(k, n))


@pytest.mark.parametrize("k", [5, 6])
def test_m_k_exchange(rng, k):
    n = 8
    a = rng.standard_normal(n)
    h = rng.standard_normal(2 * n - 1)
    h = h + h[::-1]
    matrix = structured.toeplitz(a, a) + structured.hankel(h[:n], h[n - 1 :])
    assert displacement.comm_M_k(matrix, k).rho == 0
    _assert_commutator(
        displacement.comm_M_k(matrix, k), matrix.dense(), algebras.m_matrix(k, n)
    )


def test_m_k_errors(rng):
    a, b = _toeplitz(rng, 6)
    with pytest.raises(StructureViolation):
        displacement.comm_M_k(structured.toeplitz(a, b), 1)
    with pytest.raises(StructureViolation):
        displacement.comm_M_k(structured.toeplitz(a, b), 5)
    c = np.ones(6)
    with pytest.raises(StructureViolation):
        displacement.comm_M_k(structured.hankel(c, c), 2)
    with pytest.raises(UnsupportedHartleyIndex):
        displacement.comm_M_k(structured.toeplitz(a, a), 3)


def test_commutator_dispatch(rng):
    n = 10
    a, b = _toeplitz(rng, n)
    t = structured.toeplitz(a, b)
    for token in ("circ:-1,0", "trig:DCT3", "hartley:2"):
        algebra_id = algebras.AlgebraId.parse(token)
        if algebra_id.family == "hartley":
            w = algebras.y_matrix(n, algebra_id.phi)
        else:
            w = algebras.generator(algebra_id, n).matrices[0]
        _assert_commutator(displacement.commutator(t, token), t.dense(), w)
    c, d = _hankel(rng, n)
    with pytest.raises(UnsupportedCombination):
        displacement.commutator(structured.hankel(c, d), "circ:1,0")


def test_dyadic_sum_helpers(rng):
    n = 5
    x, z = rng.standard_normal(n), rng.standard_normal(n)
    dyads = displacement.DyadicSum.from_outer(n, [(x, z)])
    np.testing.assert_allclose(dyads.realize(), np.outer(x, z))
    np.testing.assert_allclose(
        dyads.right_times_exchange().realize(), np.outer(x, z) @ np.eye(n)[::-1]
    )
    np.testing.assert_allclose((dyads + dyads.scaled(2)).realize(), 3 * np.outer(x, z))
    big = dyads.embedded(n + 2).realize()
    np.testing.assert_allclose(big[2:, 2:], np.outer(x, z))
    np.testing.assert_allclose(big[:2], 0)
    assert len(displacement.DyadicSum(n)) == 0


def test_theta(rng):
    n = 6
    a, b = _toeplitz(rng, n)
    pi = algebras.shift_matrix(n)
    e = np.eye(n)[0]
    expected = np.outer(e, pi @ b) - np.outer(pi @ a, e)
    np.testing.assert_allclose(displacement.theta(a, b).realize(), expected)
