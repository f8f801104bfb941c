"""Entry oracle for the transformed matrix V^{-1} A V.

A bounded-rank commutator [A, W] = sum_k x_k z_k^T with a generator
W = V diag(lambda) V^{-1} gives, off the diagonal,

    (V^{-1} A V)_ij = sum_k (V^{-1} x_k)_i (V^T z_k)_j / (lambda_j - lambda_i).

After transforming the 2 rho dyad vectors once, every entry costs rho + 1
multiplications.
"""

import logging
from collections import namedtuple

import numpy as np

from rankprecond.algebras import AlgebraId, HARTLEY_WITH_M, algebra
from rankprecond.displacement import (
    comm_M_k,
    comm_Y,
    comm_toeplitz_circulant,
    comm_trig,
)
from rankprecond.errors import (
    DegenerateDenominator,
    DiagonalRequested,
    DimensionMismatch,
    StructureViolation,
    UncomputablePosition,
    UnsupportedCombination,
)

logger = logging.getLogger(__name__)

# Denominators |lambda_j - lambda_i| at or below this fraction of max|lambda|
# are treated as zero.
DENOMINATOR_TOL = 1e-12

Ladder = namedtuple("Ladder", ["name", "xhat", "ycon", "eigenvalues", "tol"])

HankelReduction = namedtuple(
    "HankelReduction", ["phase", "remap", "inner", "inner_diagonal"]
)


def _tolerance(eigenvalues):
    return DENOMINATOR_TOL * max(float(np.max(np.abs(eigenvalues))), 1e-300)


def _ladder(name, dyads, transform, eigenvalues):
    n = transform.n
    if dyads.rho == 0:
        xhat = np.zeros((n, 0))
        ycon = np.zeros((n, 0))
    else:
        xhat = np.asarray(transform.forward(dyads.left))
        ycon = np.conj(transform.adjoint(dyads.right))
    for x in (xhat, ycon):
        x.setflags(write=False)
    eigenvalues = np.asarray(eigenvalues)
    return Ladder(name, xhat, ycon, eigenvalues, _tolerance(eigenvalues))


def _coincidences(eigenvalues, tol):
    """Off-diagonal pairs (i, j) with |lambda_i - lambda_j| <= tol."""
    order = np.argsort(np.real(eigenvalues), kind="stable")
    values = np.asarray(eigenvalues)[order]
    pairs = set()
    for a in range(len(values)):
        b = a + 1
        while b < len(values) and np.real(values[b] - values[a]) <= tol:
            if abs(values[b] - values[a]) <= tol:
                i, j = int(order[a]), int(order[b])
                pairs.add((i, j))
                pairs.add((j, i))
            b += 1
    return pairs


def _magnitude(matrix):
    parts = (matrix.toeplitz_part or ()) + (matrix.hankel_part or ())
    return max([1.0] + [float(np.max(np.abs(x))) for x in parts])


class EntryOracle(object):
    """Answers off-diagonal entries of V^{-1} A V from transformed dyads.

    Use `build` to construct one. Instances are not modified after
    construction and may be queried from several threads.

    Attributes
    ----------
    algebra : AlgebraId
        Algebra whose transform defines the coordinates.
    n : int
        Dimension.
    matrix : StructuredMatrix
        The source matrix A.
    ladders : tuple of Ladder
        Transformed dyads and generator eigenvalues, tried in order.
    hankel_reduction : HankelReduction or None
        Phase table, index remap and inner Toeplitz oracle used for Hankel
        matrices against phi-circulants.
    uncomputable : frozenset of tuple
        Off-diagonal positions that no ladder can answer.
    """

    def __init__(self, matrix, algebra_id, ladders=(), hankel_reduction=None):
        self.matrix = matrix
        self.algebra = AlgebraId.parse(algebra_id)
        self.n = matrix.n
        self.ladders = tuple(ladders)
        self.hankel_reduction = hankel_reduction
        if hankel_reduction is not None:
            self.uncomputable = frozenset()
        else:
            blocked = None
            for ladder in self.ladders:
                pairs = _coincidences(ladder.eigenvalues, ladder.tol)
                blocked = pairs if blocked is None else blocked & pairs
            self.uncomputable = frozenset(blocked or ())

    @property
    def rho(self):
        """Number of dyads per ladder."""
        if self.hankel_reduction is not None:
            return self.hankel_reduction.inner.rho
        return max([ladder.xhat.shape[1] for ladder in self.ladders] or [0])

    @property
    def dtype(self):
        if self.hankel_reduction is not None:
            return np.dtype(complex)
        arrays = [a for ladder in self.ladders for a in ladder[1:4]]
        return np.result_type(float, *arrays)

    def _check_index(self, i):
        if not 0 <= i < self.n:
            raise IndexError(f"Index {i} out of range for n={self.n}.")

    def entry(self, i, j):
        """Entry (i, j) of V^{-1} A V for i != j.

        Raises
        ------
        DiagonalRequested
            If i == j.
        UncomputablePosition
            If (i, j) belongs to the uncomputable set.
        DegenerateDenominator
            If every ladder denominator vanishes at (i, j).
        """
        self._check_index(i)
        self._check_index(j)
        if i == j:
            raise DiagonalRequested(f"Diagonal entry ({i}, {i}) requested.")
        if self.hankel_reduction is not None:
            red = self.hankel_reduction
            mi = red.remap[i]
            if mi == j:
                inner = red.inner_diagonal[mi]
            else:
                inner = red.inner.entry(mi, j)
            return red.phase[i] * inner
        if (i, j) in self.uncomputable:
            raise UncomputablePosition(f"Position ({i}, {j}) is not computable.")
        for ladder in self.ladders:
            den = ladder.eigenvalues[j] - ladder.eigenvalues[i]
            if abs(den) > ladder.tol:
                return (ladder.xhat[i] @ ladder.ycon[j]) / den
        raise DegenerateDenominator(f"All denominators vanish at ({i}, {j}).")

    def _ladder_line(self, k, along_row):
        out = np.full(self.n, np.nan, dtype=self.dtype)
        pending = np.ones(self.n, dtype=bool)
        pending[k] = False
        for ladder in self.ladders:
            lam = ladder.eigenvalues
            den = lam - lam[k] if along_row else lam[k] - lam
            ok = pending & (np.abs(den) > ladder.tol)
            if not np.any(ok):
                continue
            if along_row:
                out[ok] = (ladder.ycon[ok] @ ladder.xhat[k]) / den[ok]
            else:
                out[ok] = (ladder.xhat[ok] @ ladder.ycon[k]) / den[ok]
            pending &= ~ok
        return out

    def row(self, i):
        """Row i of V^{-1} A V with NaN at the diagonal and at uncomputable
        positions."""
        self._check_index(i)
        red = self.hankel_reduction
        if red is None:
            return self._ladder_line(i, along_row=True)
        mi = red.remap[i]
        inner = red.inner._ladder_line(mi, along_row=True)
        inner[mi] = red.inner_diagonal[mi]
        out = red.phase[i] * inner
        out[i] = np.nan
        return out

    def column(self, j):
        """Column j of V^{-1} A V with NaN at masked positions."""
        self._check_index(j)
        red = self.hankel_reduction
        if red is None:
            return self._ladder_line(j, along_row=False)
        inner = red.inner._ladder_line(j, along_row=False)
        inner[j] = red.inner_diagonal[j]
        out = red.phase * inner[red.remap]
        out[j] = np.nan
        return out

    def masked(self, i, j):
        """True when (i, j) is on the diagonal or uncomputable."""
        return i == j or (i, j) in self.uncomputable

    def __repr__(self):
        return (
            f"EntryOracle(algebra={self.algebra.token!r}, n={self.n}, "
            f"rho={self.rho}, ladders={len(self.ladders)})"
        )


def _hankel_circulant_tables(transform):
    """Phase and remap with V^* J V e_j = c_j e_{m(j)}, m(j) = (s - j) mod n.

    theta^{-2} = omega^s needs an integer s, which holds for phi = 1 (s = 0)
    and phi = -1 (s = 1) only.
    """
    phi = transform.id.param
    if abs(phi - 1) <= 1e-12:
        s = 0
    elif abs(phi + 1) <= 1e-12:
        s = 1
    else:
        raise UnsupportedCombination(
            f"Hankel matrices need phi in {{1, -1}}, got {transform.id.token}."
        )
    n = transform.n
    j = np.arange(n)
    remap = (s - j) % n
    omega = np.exp(-2j * np.pi / n)
    c = transform.theta ** (n - 1) * omega ** (((n - 1) * j) % n)
    phase = c[remap]
    remap.setflags(write=False)
    phase.setflags(write=False)
    return phase, remap


def _build_hartley(matrix, algebra_id, transform):
    k = algebra_id.param
    if k not in HARTLEY_WITH_M:
        raise UnsupportedCombination(f"hartley:{k} has no entry oracle.")
    if not matrix.commutes_with_exchange(tol=1e-12 * _magnitude(matrix)):
        raise UnsupportedCombination(
            "Hartley oracles need symmetric Toeplitz plus persymmetric Hankel A."
        )
    lam_y = transform.eigenvalues
    dyads = comm_Y(matrix, transform.phi)
    if k in (5, 6):
        lam_yj = lam_y + transform.second_eigenvalues
        first = _ladder("Y+J", dyads, transform, lam_yj)
        second = Ladder("Y", first.xhat, first.ycon, lam_y, _tolerance(lam_y))
        return [first, second]
    ladders = [_ladder("Y", dyads, transform, lam_y)]
    try:
        m_dyads = comm_M_k(matrix, k)
    except (StructureViolation, DimensionMismatch) as exc:
        logger.debug("Single ladder for hartley:%d: %s", k, exc)
        return ladders
    ladders.append(
        _ladder(f"M{k}", m_dyads, transform, transform.second_eigenvalues)
    )
    return ladders


def build(matrix, algebra_id):
    """Preprocess A for entry queries in the coordinates of an algebra.

    Parameters
    ----------
    matrix : StructuredMatrix
        Toeplitz, Hankel or Toeplitz-plus-Hankel matrix A.
    algebra_id : AlgebraId or str
        Algebra identifier or token.

    Returns
    -------
    oracle : EntryOracle

    Raises
    ------
    UnsupportedCombination
        If no bounded-rank ladder exists for the pair: Hankel parts with
        phi-circulants for phi other than 1 or -1, Toeplitz-plus-Hankel with
        phi-circulants, Hartley indices 3, 4, 7, 8, or a Hartley algebra with
        A not commuting with J.
    """
    algebra_id = AlgebraId.parse(algebra_id)
    transform = algebra(algebra_id, matrix.n)
    if algebra_id.family == "circ":
        if matrix.kind == "toeplitz+hankel":
            raise UnsupportedCombination(
                "Toeplitz-plus-Hankel matrices have no phi-circulant oracle."
            )
        if matrix.kind == "hankel":
            phase, remap = _hankel_circulant_tables(transform)
            inner = build(matrix.reversed_toeplitz, algebra_id)
            inner_diagonal = diag_entries(matrix.reversed_toeplitz, algebra_id)
            inner_diagonal.setflags(write=False)
            logger.debug("Hankel reduction for %s, n=%d.", algebra_id.token, matrix.n)
            return EntryOracle(
                matrix,
                algebra_id,
                hankel_reduction=HankelReduction(phase, remap, inner, inner_diagonal),
            )
        dyads = comm_toeplitz_circulant(*matrix.toeplitz_part, algebra_id.param)
        ladders = [_ladder("Pi", dyads, transform, transform.eigenvalues)]
    elif algebra_id.family == "trig":
        dyads = comm_trig(matrix, algebra_id.mu)
        ladders = [_ladder("X", dyads, transform, transform.eigenvalues)]
    else:
        ladders = _build_hartley(matrix, algebra_id, transform)
    oracle = EntryOracle(matrix, algebra_id, ladders)
    logger.debug(
        "Built %s oracle for %s, n=%d: ladders=%s, uncomputable=%d.",
        algebra_id.token,
        matrix.kind,
        matrix.n,
        [ladder.name for ladder in ladders],
        len(oracle.uncomputable),
    )
    return oracle


def uncomputable_positions(algebra_id, n):
    """Off-diagonal pairs (i, j) with coinciding generator eigenvalues.

    For Hartley algebras these are the positions where lambda_i(Y_phi)
    equals lambda_j(Y_phi), which a single Y_phi ladder cannot answer.

    Returns
    -------
    pairs : set of tuple
    """
    lam = algebra(algebra_id, n).eigenvalues
    return _coincidences(lam, _tolerance(lam))


def _fejer_diagonal(matrix, transform):
    # v_j^* T v_j = sum_d (1 - |d|/n) t_d theta^{-d} omega^{-dj}, folded mod n.
    n = matrix.n
    a, b = matrix.toeplitz_part
    d = np.arange(-(n - 1), n)
    t = np.concatenate([b[:0:-1], a])
    c = (1 - np.abs(d) / n) * t * transform.theta ** (-d.astype(float))
    g = np.zeros(n, dtype=complex)
    np.add.at(g, d % n, c)
    return n * np.fft.ifft(g)


def diag_entries(matrix, algebra_id):
    """Diagonal of V^{-1} A V.

    Toeplitz matrices against phi-circulants use an O(n log n) weighted
    coefficient sum; Hankel matrices against phi = 1 or -1 go through the
    reduced oracle. Everything else applies A to the n transform columns.

    Parameters
    ----------
    matrix : StructuredMatrix
        The matrix A.
    algebra_id : AlgebraId or str
        Algebra identifier or token.

    Returns
    -------
    d : ndarray
        Length-n vector, real when A and the transform are real.
    """
    algebra_id = AlgebraId.parse(algebra_id)
    transform = algebra(algebra_id, matrix.n)
    if algebra_id.family == "circ" and matrix.kind == "toeplitz":
        return _fejer_diagonal(matrix, transform)
    if algebra_id.family == "circ" and matrix.kind == "hankel":
        try:
            phase, remap = _hankel_circulant_tables(transform)
        except UnsupportedCombination:
            pass
        else:
            inner_matrix = matrix.reversed_toeplitz
            inner = build(inner_matrix, algebra_id)
            inner_diagonal = _fejer_diagonal(inner_matrix, transform)
            d = np.empty(matrix.n, dtype=complex)
            for i in range(matrix.n):
                mi = remap[i]
                value = inner_diagonal[mi] if mi == i else inner.entry(mi, i)
                d[i] = phase[i] * value
            return d
    v = transform.matrix
    d = np.einsum("ik,ki->i", transform.inverse_matrix, matrix.matmat(v))
    if not matrix.is_complex and not np.iscomplexobj(v):
        d = np.real(d)
    return d
