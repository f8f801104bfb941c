"""Tests for oracle module."""

import numpy as np
import pytest

from rankprecond import algebras, oracle, structured
from rankprecond.errors import (
    DiagonalRequested,
    UncomputablePosition,
    UnsupportedCombination,
)


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(5)


def _toeplitz(rng, n, symmetric=False):
    a = rng.standard_normal(n)
    if symmetric:
        return structured.toeplitz(a, a)
    b = rng.standard_normal(n)
    b[0] = a[0]
    return structured.toeplitz(a, b)


def _hankel(rng, n, persymmetric=False):
    h = rng.standard_normal(2 * n - 1)
    if persymmetric:
        h = h + h[::-1]
    return structured.hankel(h[:n], h[n - 1 :])


def _transformed(matrix, token):
    t = algebras.algebra(token, matrix.n)
    return t.inverse_matrix @ matrix.dense() @ t.matrix


def _assert_entries(matrix, token):
    o = oracle.build(matrix, token)
    expected = _transformed(matrix, token)
    atol = 1e-9 * max(1.0, np.linalg.norm(expected))
    n = matrix.n
    checked = 0
    for i in range(n):
        for j in range(n):
            if o.masked(i, j):
                continue
            assert abs(o.entry(i, j) - expected[i, j]) <= atol, (i, j)
            checked += 1
    assert checked > 0
    return o, expected


@pytest.mark.parametrize("n", [8, 16, 32, 64])
@pytest.mark.parametrize("token", ["circ:1,0", "circ:-1,0", "circ:0,1"])
def test_toeplitz_circulant_entries(rng, n, token):
    o, _ = _assert_entries(_toeplitz(rng, n), token)
    assert o.rho == 2
    assert not o.uncomputable


@pytest.mark.parametrize("n", [8, 16, 32])
@pytest.mark.parametrize("token", ["circ:1,0", "circ:-1,0"])
def test_hankel_circulant_entries(rng, n, token):
    o, _ = _assert_entries(_hankel(rng, n), token)
    assert o.hankel_reduction is not None


def test_hankel_needs_real_phi(rng):
    with pytest.raises(UnsupportedCombination):
        oracle.build(_hankel(rng, 8), "circ:0,1")


@pytest.mark.parametrize("name", ["DST1", "DCT2", "DST3", "DCT4", "DCT1", "DST8"])
@pytest.mark.parametrize("n", [8, 16, 32])
def test_trig_entries(rng, name, n):
    token = f"trig:{name}"
    _assert_entries(_toeplitz(rng, n), token)
    _assert_entries(_hankel(rng, n), token)
    _assert_entries(_toeplitz(rng, n) + _hankel(rng, n), token)


@pytest.mark.parametrize("k", algebras.HARTLEY_WITH_M)
@pytest.mark.parametrize("n", [8, 16, 33])
def test_hartley_entries(rng, k, n):
    matrix = _toeplitz(rng, n, symmetric=True) + _hankel(rng, n, persymmetric=True)
    _assert_entries(matrix, f"hartley:{k}")


def test_hartley_requires_exchange_symmetry(rng):
    with pytest.raises(UnsupportedCombination):
        oracle.build(_toeplitz(rng, 8), "hartley:1")
    with pytest.raises(UnsupportedCombination):
        oracle.build(_toeplitz(rng, 8, symmetric=True), "hartley:3")


@pytest.mark.parametrize(
    "token, n, expected",
    [
        ("hartley:1", 5, {(1, 4), (2, 3)}),
        ("hartley:1", 6, {(1, 5), (2, 4)}),
        ("hartley:2", 5, {(0, 4), (1, 3)}),
        ("hartley:2", 6, {(0, 5), (1, 4), (2, 3)}),
    ],
)
def test_uncomputable_positions(token, n, expected):
    pairs = oracle.uncomputable_positions(token, n)
    assert pairs == expected | {(j, i) for i, j in expected}
    lam = algebras.algebra(token, n).eigenvalues
    for i, j in pairs:
        assert lam[i] == pytest.approx(lam[j], abs=1e-12)


def test_single_ladder_keeps_uncomputable(rng):
    n = 6
    # no Toeplitz part, so hartley:1 has the Y ladder only
    matrix = _hankel(rng, n, persymmetric=True)
    o = oracle.build(matrix, "hartley:1")
    assert len(o.ladders) == 1
    assert o.uncomputable == oracle.uncomputable_positions("hartley:1", n)
    i, j = sorted(o.uncomputable)[0]
    with pytest.raises(UncomputablePosition):
        o.entry(i, j)
    assert np.isnan(o.row(i)[j])
    assert np.isnan(o.column(j)[i])


def test_entry_errors(rng):
    o = oracle.build(_toeplitz(rng, 8), "circ:1,0")
    with pytest.raises(DiagonalRequested):
        o.entry(3, 3)
    with pytest.raises(IndexError):
        o.entry(0, 8)
    t = _toeplitz(rng, 8)
    with pytest.raises(UnsupportedCombination):
        oracle.build(t + _hankel(rng, 8), "circ:1,0")


@pytest.mark.parametrize("token", ["circ:1,0", "circ:-1,0", "trig:DST1", "trig:DCT2"])
def test_rows_and_columns(rng, token):
    n = 12
    matrix = _toeplitz(rng, n)
    o = oracle.build(matrix, token)
    expected = _transformed(matrix, token)
    for k in (0, 5, n - 1):
        row, column = o.row(k), o.column(k)
        assert np.isnan(row[k]) and np.isnan(column[k])
        mask = np.arange(n) != k
        np.testing.assert_allclose(row[mask], expected[k, mask], atol=1e-9)
        np.testing.assert_allclose(column[mask], expected[mask, k], atol=1e-9)


@pytest.mark.parametrize("token", ["circ:1,0", "circ:-1,0"])
def test_hankel_rows_and_columns(rng, token):
    n = 10
    matrix = _hankel(rng, n)
    o = oracle.build(matrix, token)
    expected = _transformed(matrix, token)
    for k in (0, 3, n - 1):
        mask = np.arange(n) != k
        np.testing.assert_allclose(o.row(k)[mask], expected[k, mask], atol=1e-9)
        np.testing.assert_allclose(o.column(k)[mask], expected[mask, k], atol=1e-9)


@pytest.mark.parametrize(
    "token",
    ["circ:1,0", "circ:-1,0", "circ:0,1", "trig:DCT2", "trig:DST1", "hartley:1"],
)
def test_diag_entries(rng, token):
    n = 16
    if token.startswith("hartley"):
        matrix = _toeplitz(rng, n, symmetric=True)
    else:
        matrix = _toeplitz(rng, n)
    np.testing.assert_allclose(
        oracle.diag_entries(matrix, token),
        np.diag(_transformed(matrix, token)),
        atol=1e-10,
    )


@pytest.mark.parametrize("token", ["circ:1,0", "circ:-1,0"])
def test_hankel_diag_entries(rng, token):
    matrix = _hankel(rng, 9)
    np.testing.assert_allclose(
        oracle.diag_entries(matrix, token),
        np.diag(_transformed(matrix, token)),
        atol=1e-10,
    )


def test_kms_oracle_is_real_for_trig():
    o = oracle.build(structured.kms(16, 0.5), "trig:DST1")
    assert not np.iscomplexobj(o.row(0))
