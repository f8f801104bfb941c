"""Dyadic decompositions of commutators [A, W] of Toeplitz and Hankel
matrices with the algebra generators."""

import logging

import numpy as np

from rankprecond.algebras import AlgebraId, TRIG_TABLE
from rankprecond.errors import (
    CornerMismatch,
    DimensionMismatch,
    StructureViolation,
    UnsupportedCombination,
    UnsupportedHartleyIndex,
)
from rankprecond.structured import StructuredMatrix
from rankprecond.util import as_vector, unit

logger = logging.getLogger(__name__)


class DyadicSum(object):
    """Sum of dyads x_k y_k^*, stored as the columns of `left` and `right`.

    Parameters
    ----------
    n : int
        Dimension.
    left, right : ndarray
        Arrays of shape (n, rho).
    """

    def __init__(self, n, left=None, right=None):
        self.n = int(n)
        if left is None:
            left = np.zeros((n, 0))
            right = np.zeros((n, 0))
        left, right = np.asarray(left), np.asarray(right)
        if left.shape != right.shape or left.shape[0] != n:
            raise DimensionMismatch(
                f"Dyad factors of shapes {left.shape} and {right.shape}."
            )
        self.left = left
        self.right = right

    @classmethod
    def from_outer(cls, n, pairs):
        """Build from pairs (x, z) meaning the dyads x z^T."""
        if not pairs:
            return cls(n)
        left = np.column_stack([np.asarray(x) for x, _ in pairs])
        right = np.column_stack([np.conj(np.asarray(z)) for _, z in pairs])
        return cls(n, left, right)

    @property
    def rho(self):
        return self.left.shape[1]

    def __len__(self):
        return self.rho

    @property
    def dyads(self):
        return list(zip(self.left.T, self.right.T))

    def realize(self):
        """Dense sum of the dyads."""
        return self.left @ self.right.conj().T

    def __add__(self, other):
        if other.n != self.n:
            raise DimensionMismatch(f"Cannot add n={self.n} and n={other.n}.")
        return DyadicSum(
            self.n,
            np.hstack([self.left, other.left]),
            np.hstack([self.right, other.right]),
        )

    def scaled(self, c):
        return DyadicSum(self.n, c * self.left, self.right)

    def right_times_exchange(self):
        """Decomposition of D J."""
        return DyadicSum(self.n, self.left, self.right[::-1])

    def embedded(self, n):
        """Decomposition of 0 (+) D in dimension n > self.n."""
        pad = n - self.n
        zeros = np.zeros((pad, self.rho))
        return DyadicSum(
            n, np.vstack([zeros, self.left]), np.vstack([zeros, self.right])
        )

    def __repr__(self):
        return f"DyadicSum(n={self.n}, rho={self.rho})"


def _pair(first, second, names):
    first, second = as_vector(first), as_vector(second)
    if len(first) != len(second):
        raise DimensionMismatch(
            f"len({names[0]})={len(first)} but len({names[1]})={len(second)}."
        )
    return first, second


def _toeplitz_pair(a, b):
    a, b = _pair(a, b, "ab")
    if abs(a[0] - b[0]) > 1e-12 * max(1.0, abs(a[0])):
        raise CornerMismatch(f"Toeplitz corner: a[0]={a[0]} but b[0]={b[0]}.")
    return a, b


def _hankel_pair(c, d):
    c, d = _pair(c, d, "cd")
    if abs(c[-1] - d[0]) > 1e-12 * max(1.0, abs(d[0])):
        raise CornerMismatch(f"Hankel corner: c[-1]={c[-1]} but d[0]={d[0]}.")
    return c, d


def _shift(x, phi=1.0):
    # Pi_phi x = (x_1, ..., x_{n-1}, phi x_0)
    return np.concatenate([x[1:], [phi * x[0]]])


def _shift_t(x, phi=1.0):
    # Pi_phi^T x = (phi x_{n-1}, x_0, ..., x_{n-2})
    return np.concatenate([[phi * x[-1]], x[:-1]])


def _zhe(a, b, phi):
    # Column vector g of Zhe_phi(a, b) = g e_1^T.
    return phi * b[::-1] - _shift(a, phi)


def comm_toeplitz_circulant(a, b, phi=1.0):
    """[T_n(a, b), Pi_phi] = g e_1^T - e_n (J g)^T with g = phi J b - Pi_phi a.

    Parameters
    ----------
    a, b : array_like
        First column and first row of the Toeplitz matrix.
    phi : complex
        Corner of the shift.

    Returns
    -------
    dyads : DyadicSum
        Exactly two dyads.

    Raises
    ------
    CornerMismatch
        If a[0] != b[0].
    """
    a, b = _toeplitz_pair(a, b)
    n = len(a)
    g = _zhe(a, b, phi)
    return DyadicSum.from_outer(n, [(g, unit(n, 0)), (-unit(n, n - 1), g[::-1])])


def theta(a, b):
    """Theta(a, b) = e_1 (Pi b)^T - (Pi a) e_1^T with Pi = Pi_1."""
    a, b = _pair(a, b, "ab")
    n = len(a)
    e = unit(n, 0)
    return DyadicSum.from_outer(n, [(e, _shift(b)), (-_shift(a), e)])


def comm_toeplitz_X(a, b):
    """[T_n(a, b), X] = Theta(a, b) - J Theta(a, b)^T J, X the DST-I generator.

    Returns four dyads living on the border rows and columns.
    """
    a, b = _toeplitz_pair(a, b)
    n = len(a)
    first, last = unit(n, 0), unit(n, n - 1)
    pa, pb = _shift(a), _shift(b)
    return DyadicSum.from_outer(
        n,
        [(first, pb), (-pa, first), (-pb[::-1], last), (last, pa[::-1])],
    )


def comm_hankel_X(c, d):
    """[H_n(c, d), X] for the Hankel matrix with first row c and last column d.

    Uses H_n(c, d) = T_n(d, Jc) J and XJ = JX.
    """
    c, d = _hankel_pair(c, d)
    return comm_toeplitz_X(d, c[::-1]).right_times_exchange()


def _comm_m_mu(matrix, mu):
    # [A, M_mu] for M_mu = X_mu - X = e_1 m1^T + e_n m2^T.
    mu1, mu2, mu3, mu4 = mu
    n = matrix.n
    first, last = unit(n, 0), unit(n, n - 1)
    m1 = mu1 * first
    m1[1] += mu2 - 1
    m2 = mu4 * last
    m2[n - 2] += mu3 - 1
    pairs = []
    for e, m, idx in ((first, m1, 0), (last, m2, n - 1)):
        if not np.any(m):
            continue
        row_combo = sum(m[k] * matrix.row(k) for k in np.flatnonzero(m))
        pairs.append((matrix.column(idx), m))
        pairs.append((-e, row_combo))
    return DyadicSum.from_outer(n, pairs)


def comm_toeplitz_trig(a, b, mu):
    """[T_n(a, b), X_mu] as at most eight dyads.

    Parameters
    ----------
    a, b : array_like
        Defining vectors of the Toeplitz matrix.
    mu : tuple or str
        (mu1, mu2, mu3, mu4) or a DST/DCT name.
    """
    mu = _mu(mu)
    a, b = _toeplitz_pair(a, b)
    matrix = StructuredMatrix(len(a), toeplitz=(a, b))
    return comm_toeplitz_X(a, b) + _comm_m_mu(matrix, mu)


def comm_hankel_trig(c, d, mu):
    """[H_n(c, d), X_mu] as at most eight dyads."""
    mu = _mu(mu)
    c, d = _hankel_pair(c, d)
    matrix = StructuredMatrix(len(c), hankel=(c, d))
    return comm_hankel_X(c, d) + _comm_m_mu(matrix, mu)


def _mu(mu):
    if isinstance(mu, str):
        return TRIG_TABLE[mu.upper()]
    return tuple(mu)


def comm_X(matrix):
    """[A, X] for any Toeplitz, Hankel or Toeplitz-plus-Hankel A.

    The commutator vanishes away from the border rows and columns, so it is
    written as e_1 r_0^T + e_n r_{n-1}^T + c_0 e_1^T + c_{n-1} e_n^T with the
    corners carried by the row terms.
    """
    n = matrix.n
    first, last = unit(n, 0), unit(n, n - 1)
    if n == 1:
        return DyadicSum(n)

    r0 = _x_times(matrix.row(0)) - matrix.row(1)
    rl = _x_times(matrix.row(n - 1)) - matrix.row(n - 2)
    c0 = matrix.column(1) - _x_times(matrix.column(0))
    cl = matrix.column(n - 2) - _x_times(matrix.column(n - 1))
    c0[[0, n - 1]] = 0
    cl[[0, n - 1]] = 0
    return DyadicSum.from_outer(n, [(first, r0), (last, rl), (c0, first), (cl, last)])


def comm_trig(matrix, mu):
    """[A, X_mu] for Toeplitz, Hankel or Toeplitz-plus-Hankel A."""
    mu = _mu(mu)
    if matrix.kind == "toeplitz":
        return comm_toeplitz_trig(*matrix.toeplitz_part, mu)
    if matrix.kind == "hankel":
        return comm_hankel_trig(*matrix.hankel_part, mu)
    return comm_X(matrix) + _comm_m_mu(matrix, mu)


def comm_toeplitz_Y(a, b, phi):
    """[T_n(a, b), Y_phi] with Y_phi = Pi_phi + Pi_phi^T, four dyads."""
    a, b = _toeplitz_pair(a, b)
    n = len(a)
    first, last = unit(n, 0), unit(n, n - 1)
    g_ab = _zhe(a, b, phi)
    g_ba = _zhe(b, a, phi)
    return DyadicSum.from_outer(
        n,
        [
            (g_ab, first),
            (-last, g_ab[::-1]),
            (-first, g_ba),
            (g_ba[::-1], last),
        ],
    )


def comm_hankel_Y(c, d, phi):
    """[H_n(c, d), Y_phi] = e_1 p^T - p e_1^T + e_n q^T - q e_n^T with
    p = Pi_1^T c - phi d and q = Pi_1 d - phi c."""
    c, d = _hankel_pair(c, d)
    n = len(c)
    first, last = unit(n, 0), unit(n, n - 1)
    p = _shift_t(c) - phi * d
    q = _shift(d) - phi * c
    return DyadicSum.from_outer(n, [(first, p), (-p, first), (last, q), (-q, last)])


def comm_Y(matrix, phi):
    """[A, Y_phi] for Toeplitz, Hankel or Toeplitz-plus-Hankel A."""
    out = DyadicSum(matrix.n)
    if matrix.toeplitz_part is not None:
        out = out + comm_toeplitz_Y(*matrix.toeplitz_part, phi)
    if matrix.hankel_part is not None:
        out = out + comm_hankel_Y(*matrix.hankel_part, phi)
    return out


def comm_M_k(matrix, k):
    """[A, M_k] for the second Hartley generator.

    For k = 5, 6 the generator is J and the commutator vanishes on matrices
    commuting with J. For k = 1, 2 the result has six dyads and requires a
    symmetric Toeplitz A of order at least 3.

    Parameters
    ----------
    matrix : StructuredMatrix
        The matrix A.
    k : int
        Hartley index.

    Returns
    -------
    dyads : DyadicSum

    Raises
    ------
    StructureViolation
        If A does not satisfy the structural requirement for k.
    UnsupportedHartleyIndex
        For k in {3, 4, 7, 8}.
    """
    n = matrix.n
    if k in (5, 6):
        if not matrix.commutes_with_exchange(tol=1e-12):
            raise StructureViolation(
                "[A, J] != 0: A must be symmetric Toeplitz plus persymmetric Hankel."
            )
        return DyadicSum(n)
    if k not in (1, 2):
        raise UnsupportedHartleyIndex(f"No second generator for hartley:{k}.")
    if matrix.kind != "toeplitz" or not matrix.is_symmetric(tol=1e-12):
        raise StructureViolation(
            f"[A, M_{k}] has bounded rank only for symmetric Toeplitz A."
        )
    if n < 3:
        raise DimensionMismatch(f"M_{k} needs n >= 3, got n={n}.")
    s, sigma = (0.5, -1.0) if k == 1 else (-0.5, 1.0)
    a = matrix.toeplitz_part[0]
    first = unit(n, 0)
    # tau = s X'(I + sigma J') of order n - 1 applied to the first column tail.
    w_tail = a[1:]
    tau_w = s * _x_times(w_tail + sigma * w_tail[::-1])
    w = np.concatenate([[0], tau_w])
    border = DyadicSum.from_outer(n, [(first, w), (-w, first)])
    inner = comm_toeplitz_X(a[:-1], a[:-1])
    twisted = DyadicSum(
        n - 1,
        s * inner.left,
        inner.right + sigma * inner.right[::-1],
    )
    return border + twisted.embedded(n)


def _x_times(v):
    # X v for the DST-I generator.
    out = np.zeros_like(v)
    out[:-1] += v[1:]
    out[1:] += v[:-1]
    return out


def commutator(matrix, algebra_id):
    """[A, W] for the primary generator W of an algebra.

    Raises
    ------
    UnsupportedCombination
        For Hankel parts against phi-circulants.
    """
    algebra_id = AlgebraId.parse(algebra_id)
    if algebra_id.family == "circ":
        if matrix.kind != "toeplitz":
            raise UnsupportedCombination(
                f"[A, Pi_phi] has unbounded rank for {matrix.kind} A."
            )
        return comm_toeplitz_circulant(*matrix.toeplitz_part, algebra_id.param)
    if algebra_id.family == "trig":
        return comm_trig(matrix, algebra_id.mu)
    return comm_Y(matrix, algebra_id.phi)
