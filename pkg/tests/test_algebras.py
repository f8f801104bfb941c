"""Tests for algebras module."""

import numpy as np
import pytest
import scipy.fft

from rankprecond import algebras
from rankprecond.algebras import AlgebraId
from rankprecond.errors import DimensionMismatch, NotAOneSpace, UnsupportedHartleyIndex

CIRCULANTS = ["circ:1,0", "circ:-1,0", "circ:0,1", "circ:0.6,0.8"]
TRIGS = [f"trig:{name}" for name in algebras.TRIG_TABLE]
HARTLEYS = [f"hartley:{k}" for k in range(1, 9)]


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(3)


def test_parse_and_token():
    assert AlgebraId.parse("circ:1,0") == AlgebraId.circulant(1.0)
    assert AlgebraId.parse("circ:-1") == AlgebraId.circulant(-1.0)
    assert AlgebraId.parse("trig:dst1") == AlgebraId.trig("DST1")
    assert AlgebraId.parse("hartley:5") == AlgebraId.hartley(5)
    assert AlgebraId.circulant(-1.0).token == "circ:-1,0"
    assert AlgebraId.hartley(5).phi == 1.0
    assert AlgebraId.hartley(6).phi == -1.0
    assert AlgebraId.trig("DCT2").mu == (1, 1, 1, 1)
    assert AlgebraId.trig("DCT2").phi is None


@pytest.mark.parametrize(
    "token", ["circ:2,0", "trig:DCT9", "hartley:9", "foo:1", "circ"]
)
def test_parse_errors(token):
    with pytest.raises(ValueError):
        AlgebraId.parse(token)


def test_too_small():
    with pytest.raises(DimensionMismatch):
        algebras.algebra("circ:1,0", 1)


@pytest.mark.parametrize("token", CIRCULANTS + TRIGS + HARTLEYS)
@pytest.mark.parametrize("n", [2, 5, 8])
def test_fast_transforms_match_dense(rng, token, n):
    alg = algebras.algebra(token, n)
    x = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    V = alg.matrix
    np.testing.assert_allclose(alg.inverse_matrix @ V, np.eye(n), atol=1e-10)
    np.testing.assert_allclose(alg.forward(x), np.linalg.solve(V, x), atol=1e-10)
    np.testing.assert_allclose(alg.inverse(x), V @ x, atol=1e-10)
    np.testing.assert_allclose(alg.adjoint(x), V.conj().T @ x, atol=1e-10)
    np.testing.assert_allclose(alg.transpose(x), V.T @ x, atol=1e-10)


@pytest.mark.parametrize("token", CIRCULANTS + HARTLEYS)
def test_unitary_families(token):
    alg = algebras.algebra(token, 7)
    assert alg.unitary
    np.testing.assert_allclose(alg.matrix.conj().T @ alg.matrix, np.eye(7), atol=1e-12)


def test_non_normal_trig_algebras():
    unitary = [t for t in TRIGS if algebras.algebra(t, 6).unitary]
    assert len(unitary) == 9
    assert not algebras.algebra("trig:DCT1", 6).unitary


@pytest.mark.parametrize(
    "name, transform, kind",
    [
        ("DST1", scipy.fft.dst, 1),
        ("DCT2", scipy.fft.dct, 2),
        ("DST2", scipy.fft.dst, 2),
        ("DCT4", scipy.fft.dct, 4),
        ("DST4", scipy.fft.dst, 4),
    ],
)
@pytest.mark.parametrize("n", [4, 9, 16])
def test_orthogonal_trig_bases_match_scipy(name, transform, kind, n):
    alg = algebras.algebra(f"trig:{name}", n)
    assert alg.unitary
    # Column k of the reference holds the k-th basis vector.
    reference = transform(np.eye(n), type=kind, norm="ortho")
    signs = np.sign(np.sum(alg.matrix * reference, axis=0))
    np.testing.assert_allclose(alg.matrix, reference * signs, atol=1e-10)


@pytest.mark.parametrize("token", CIRCULANTS + TRIGS)
@pytest.mark.parametrize("n", [3, 8])
def test_generator_is_diagonalized(token, n):
    alg = algebras.algebra(token, n)
    spec = algebras.generator(token, n)
    w = spec.matrices[0]
    np.testing.assert_allclose(
        alg.inverse_matrix @ w @ alg.matrix, np.diag(spec.eigenvalues[0]), atol=1e-10
    )
    np.testing.assert_allclose(
        algebras.generator_eigenvalues(token, n), spec.eigenvalues[0]
    )


@pytest.mark.parametrize("token", HARTLEYS)
@pytest.mark.parametrize("n", [5, 6, 8])
def test_hartley_diagonalizes_y(token, n):
    alg = algebras.algebra(token, n)
    y = algebras.y_matrix(n, alg.phi)
    np.testing.assert_allclose(
        alg.matrix.T @ y @ alg.matrix, np.diag(alg.eigenvalues), atol=1e-10
    )


@pytest.mark.parametrize("k", algebras.HARTLEY_WITH_M)
@pytest.mark.parametrize("n", [5, 6, 8])
def test_hartley_second_generator(k, n):
    alg = algebras.algebra(AlgebraId.hartley(k), n)
    m = algebras.m_matrix(k, n)
    np.testing.assert_allclose(
        alg.matrix.T @ m @ alg.matrix, np.diag(alg.second_eigenvalues), atol=1e-10
    )
    spec = alg.generator()
    for matrix, values in zip(spec.matrices, spec.eigenvalues):
        np.testing.assert_allclose(
            alg.matrix.T @ matrix @ alg.matrix, np.diag(values), atol=1e-10
        )


@pytest.mark.parametrize("k", [3, 4, 7, 8])
def test_hartley_without_second_generator(k):
    with pytest.raises(UnsupportedHartleyIndex):
        algebras.m_matrix(k, 6)
    with pytest.raises(UnsupportedHartleyIndex):
        algebras.generator(AlgebraId.hartley(k), 6)


def test_circulant_eigenvalues():
    n = 6
    alg = algebras.algebra("circ:-1,0", n)
    theta = np.exp(1j * np.pi / n)
    expected = theta * np.exp(-2j * np.pi * np.arange(n) / n)
    np.testing.assert_allclose(alg.eigenvalues, expected, atol=1e-14)


@pytest.mark.parametrize("token", CIRCULANTS + TRIGS + ["hartley:1", "hartley:2"])
@pytest.mark.parametrize("n", [4, 7])
def test_element_from_first_row(rng, token, n):
    x = rng.standard_normal(n)
    if algebras.AlgebraId.parse(token).family == "circ":
        x = x + 1j * rng.standard_normal(n)
    d = algebras.element_from_first_row(token, x)
    element = algebras.algebra(token, n).dense_element(d)
    np.testing.assert_allclose(element[0], x, atol=1e-10)


def test_hartley_3_is_not_a_one_space():
    with pytest.raises(NotAOneSpace):
        algebras.element_from_first_row("hartley:3", np.ones(6))


def test_transform_apply(rng):
    x = rng.standard_normal(8)
    y = algebras.transform_apply("trig:DST1", x)
    np.testing.assert_allclose(
        algebras.transform_apply("trig:DST1", y, "inverse"), x, atol=1e-12
    )
    with pytest.raises(ValueError):
        algebras.transform_apply("trig:DST1", x, "sideways")


def test_describe():
    summary = algebras.describe("hartley:1", 6)
    assert summary["family"] == "hartley"
    assert summary["phi"] == 1.0
    assert len(summary["eigenvalues"]) == 6
    assert "second_eigenvalues" in summary
    assert algebras.describe("trig:DCT2", 4)["mu"] == [1, 1, 1, 1]
