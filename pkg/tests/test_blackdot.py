"""Tests for blackdot module."""

import numpy as np
import pytest

from rankprecond import algebras, blackdot, oracle, structured
from rankprecond.blackdot import AlgebraPlusLowRank
from rankprecond.errors import DenseCapExceeded, DimensionMismatch, RankBudgetExhausted
from rankprecond.explicit import precond_KMS


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(13)


def _relative_error(matrix, preconditioner):
    dense = matrix.dense()
    return np.linalg.norm(dense - preconditioner.dense()) / np.linalg.norm(dense)


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.9])
def test_kms_recovers_explicit_splitting(lam):
    n = 32
    kms = structured.kms(n, lam)
    pr = blackdot.optimal_rank_preconditioner(kms, "circ:1,0", epsilon=1e-8)
    assert pr.achieved_rank <= 3
    assert _relative_error(kms, pr) <= 1e-7
    np.testing.assert_allclose(pr.d, precond_KMS(n, lam).d, atol=1e-6)


@pytest.mark.parametrize(
    "token", ["circ:-1,0", "trig:DST1", "trig:DCT2", "hartley:1", "hartley:5"]
)
def test_kms_in_other_algebras(token):
    kms = structured.kms(32, 0.5)
    pr = blackdot.optimal_rank_preconditioner(kms, token, epsilon=1e-9)
    assert pr.achieved_rank <= 16
    assert _relative_error(kms, pr) <= 1e-6


def test_toeplitz_plus_hankel_trig(rng):
    n = 24
    lam = 0.6
    t = structured.kms(n, lam)
    h = structured.hankel_from_symbol(structured.ZetaLambda(lam), n)
    matrix = t + h
    pr = blackdot.optimal_rank_preconditioner(matrix, "trig:DST1", epsilon=1e-10)
    assert _relative_error(matrix, pr) <= 1e-7


def test_cross_skeleton_reproduces_off_diagonal():
    n = 20
    matrix = structured.kms(n, 0.7)
    o = oracle.build(matrix, "circ:1,0")
    skeleton, residual = blackdot.cross_approximate(o, 1e-10, 16)
    assert residual <= 1e-8
    assert set(skeleton.rows).isdisjoint(skeleton.cols)
    t = algebras.algebra("circ:1,0", n)
    expected = t.inverse_matrix @ matrix.dense() @ t.matrix
    approx = skeleton.U @ skeleton.V
    off = ~np.eye(n, dtype=bool)
    np.testing.assert_allclose(approx[off], expected[off], atol=1e-8)


def test_rank_budget_exhausted(rng):
    n = 48
    a = rng.standard_normal(n)
    matrix = structured.toeplitz(a, a)
    o = oracle.build(matrix, "circ:1,0")
    with pytest.raises(RankBudgetExhausted) as info:
        blackdot.cross_approximate(o, 1e-14, 2)
    assert info.value.skeleton.U.shape == (n, 2)
    assert info.value.residual > 0
    # the driver falls back to the best-effort skeleton
    pr = blackdot.optimal_rank_preconditioner(
        matrix, "circ:1,0", epsilon=1e-14, r_max=2
    )
    assert pr.rank == 2


def _persymmetric_hankel(n):
    return structured.hankel(0.5 ** np.arange(n)[::-1], 0.5 ** np.arange(n))


@pytest.mark.parametrize("token", ["hartley:1", "hartley:5", "circ:1,0"])
@pytest.mark.parametrize("n", [8, 16, 32])
def test_cross_success_is_accurate(token, n):
    matrix = _persymmetric_hankel(n)
    o = oracle.build(matrix, token)
    t = algebras.algebra(token, n)
    expected = t.inverse_matrix @ matrix.dense() @ t.matrix
    mask = ~np.eye(n, dtype=bool)
    for i, j in o.uncomputable:
        mask[i, j] = False
    # a reported success must hold on every computable entry
    try:
        skeleton, _ = blackdot.cross_approximate(o, 1e-10, n)
    except RankBudgetExhausted as exc:
        assert exc.residual > 1e-10
        return
    error = np.max(np.abs((skeleton.U @ skeleton.V - expected)[mask]))
    assert error <= 1e-6 * np.max(np.abs(expected[mask]))


def test_hankel_through_reversed_toeplitz():
    n = 16
    matrix = _persymmetric_hankel(n)
    pr = blackdot.optimal_rank_preconditioner(
        matrix.reversed_toeplitz, "circ:1,0", epsilon=1e-8
    )
    assert pr.achieved_rank <= 3
    assert _relative_error(matrix, pr.replace(flip=True)) <= 1e-7


def test_disjoint_pivots_cannot_fake_success(rng):
    n = 8
    a = rng.standard_normal(n)
    o = oracle.build(structured.toeplitz(a, a), "circ:1,0")
    # at most n / 2 disjoint pivots fit, fewer than the off-diagonal rank
    with pytest.raises(RankBudgetExhausted) as info:
        blackdot.cross_approximate(o, 1e-12, n)
    assert len(info.value.skeleton.rows) <= n // 2
    assert info.value.residual > 1e-12


@pytest.mark.parametrize("token", ["circ:1,0", "circ:-1,0"])
def test_queries_scale_linearly(token):
    per_size = []
    for n in [32, 64, 128]:
        o = oracle.build(structured.kms(n, 0.5), token)
        skeleton, _ = blackdot.cross_approximate(o, 1e-10, 16)
        rank = max(len(skeleton.rows), 1)
        assert skeleton.queries <= 32 * n * rank**2
        per_size.append(skeleton.queries / n)
    assert per_size[-1] <= 2 * per_size[0]


def test_positivity_repair_after_cross(caplog):
    n = 32
    kms = structured.kms(n, 0.9)
    delta = 0.999 * np.linalg.eigvalsh(kms.dense())[0]
    with caplog.at_level("WARNING"):
        pr = blackdot.optimal_rank_preconditioner(
            kms, "circ:1,0", epsilon=1e-10, delta=delta
        )
    assert pr.corrections <= pr.achieved_rank
    assert np.min(pr.d.real) >= delta - 1e-12
    assert "remainder has rank" not in caplog.text


def test_cross_arguments():
    o = oracle.build(structured.kms(8, 0.5), "circ:1,0")
    with pytest.raises(ValueError):
        blackdot.cross_approximate(o, 0.0, 4)
    with pytest.raises(ValueError):
        blackdot.cross_approximate(o, 1e-8, 0)


def test_identity_has_rank_zero():
    pr = blackdot.optimal_rank_preconditioner(structured.identity(16), "circ:1,0")
    assert pr.achieved_rank == 0
    np.testing.assert_allclose(pr.d, np.ones(16), atol=1e-12)


def test_zero_r_diag_mode():
    n = 16
    kms = structured.kms(n, 0.5)
    o = oracle.build(kms, "circ:1,0")
    skeleton, _ = blackdot.cross_approximate(o, 1e-8, 8)
    pr = blackdot.assemble(o, skeleton, diag_mode="zero_R_diag")
    np.testing.assert_allclose(
        pr.d, algebras.element_from_first_row("circ:1,0", kms.row(0)), atol=1e-12
    )
    with pytest.raises(ValueError):
        blackdot.assemble(o, skeleton, diag_mode="sideways")


def test_positivity_repair(caplog):
    G = np.ones((4, 1))
    pr = AlgebraPlusLowRank("circ:1,0", [-1.0, 0.5, 2.0, -0.1], G, G)
    repaired = blackdot.positivity_repair(pr, 0.25)
    np.testing.assert_allclose(repaired.d, [0.25, 0.5, 2.0, 0.25])
    assert repaired.corrections == 2
    assert pr.corrections == 0
    with caplog.at_level("WARNING"):
        blackdot.positivity_repair(pr, 0.25)
    assert "repaired" in caplog.text
    assert blackdot.positivity_repair(repaired, 0.25).corrections == 2


def test_matvec_and_flip(rng):
    n = 12
    d = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    G = rng.standard_normal((n, 2))
    H = rng.standard_normal((n, 2))
    pr = AlgebraPlusLowRank("circ:0,1", d, G, H)
    x = rng.standard_normal(n)
    np.testing.assert_allclose(pr.matvec(x), pr.dense() @ x, atol=1e-10)
    flipped = pr.replace(flip=True)
    np.testing.assert_allclose(flipped.dense(), pr.dense()[::-1])
    np.testing.assert_allclose(flipped.matvec(x), flipped.dense() @ x, atol=1e-10)
    t = algebras.algebra("circ:0,1", n)
    np.testing.assert_allclose(pr.algebra_part(), t.dense_element(d), atol=1e-12)
    np.testing.assert_allclose(pr.low_rank(), G @ H.T)


def test_json_roundtrip(rng):
    n = 8
    pr = AlgebraPlusLowRank(
        "trig:DCT2",
        rng.standard_normal(n),
        rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2)),
        rng.standard_normal((n, 2)),
        epsilon_target=1e-8,
        corrections=1,
        flip=True,
    )
    back = AlgebraPlusLowRank.from_json(pr.to_json())
    assert back.algebra == pr.algebra
    assert back.flip and back.corrections == 1 and back.achieved_rank == 2
    assert back.epsilon_target == 1e-8
    np.testing.assert_allclose(back.dense(), pr.dense())


def test_from_splitting(rng):
    n = 6
    d = rng.standard_normal(n)
    left = rng.standard_normal((n, 1))
    right = rng.standard_normal((n, 1))
    pr = AlgebraPlusLowRank.from_splitting("trig:DST1", d, left, right)
    expected = algebras.algebra("trig:DST1", n).dense_element(d) + left @ right.T
    np.testing.assert_allclose(pr.dense(), expected, atol=1e-12)
    assert AlgebraPlusLowRank.from_splitting("trig:DST1", d).rank == 0


def test_shape_errors():
    with pytest.raises(DimensionMismatch):
        AlgebraPlusLowRank("circ:1,0", np.ones(4), np.ones((4, 2)), np.ones((4, 1)))
    with pytest.raises(DenseCapExceeded):
        AlgebraPlusLowRank("circ:1,0", np.ones(8)).dense(cap=4)
