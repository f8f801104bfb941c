"""Black-dot splitting: cross approximation of the off-diagonal part of the
transformed matrix, giving A = P + R + E with P in the algebra."""

import logging
from collections import namedtuple

import numpy as np

from rankprecond.algebras import AlgebraId, algebra, element_from_first_row
from rankprecond.errors import (
    DenseCapExceeded,
    DimensionMismatch,
    RankBudgetExhausted,
)
from rankprecond.oracle import build, diag_entries
from rankprecond.structured import DENSE_CAP
from rankprecond.util import (
    matrix_from_json,
    matrix_to_json,
    vector_from_json,
    vector_to_json,
)

logger = logging.getLogger(__name__)

DIAG_MODES = ("oracle_diag", "zero_R_diag")

# Consecutive negligible residual rows before checking convergence.
PROBES = 3

# Rows and columns sampled by the convergence check.
CHECKS = 8

Skeleton = namedtuple("Skeleton", ["U", "V", "rows", "cols", "queries"])
Skeleton.__doc__ = """Low-rank factors with R_hat = U @ V.

U has shape (n, r), V has shape (r, n); rows and cols are the pivot indices
and queries counts the oracle entries evaluated.
"""


def _columns(x, n):
    x = np.asarray(x)
    if x.size == 0:
        return np.zeros((n, 0), dtype=x.dtype)
    return x.reshape(n, -1)


def _tidy(x, tol=1e-12):
    x = np.asarray(x)
    scale = max(1.0, np.max(np.abs(x), initial=0.0))
    if np.iscomplexobj(x) and np.all(np.abs(x.imag) <= tol * scale):
        return x.real.copy()
    return x


class AlgebraPlusLowRank(object):
    """Preconditioner V (diag(d) + G H^*) V^{-1}, optionally multiplied by J
    on the left.

    Parameters
    ----------
    algebra : AlgebraId or str
        Algebra of P = V diag(d) V^{-1}.
    d : array_like
        Eigenvalues of P.
    G, H : array_like, optional
        Factors of shape (n, r) of the transformed remainder G H^*.
    epsilon_target : float, optional
        Tolerance the splitting was built for; 0 for exact splittings.
    achieved_rank : int, optional
        Rank of the remainder, defaults to the number of columns of G.
    corrections : int, optional
        Number of eigenvalues replaced by positivity repair.
    flip : bool, optional
        Represent J (P + R) instead of P + R.
    """

    def __init__(
        self,
        algebra,
        d,
        G=None,
        H=None,
        epsilon_target=0.0,
        achieved_rank=None,
        corrections=0,
        flip=False,
    ):
        self.algebra = AlgebraId.parse(algebra)
        self.d = np.atleast_1d(np.asarray(d))
        self.n = len(self.d)
        if G is None:
            G = np.zeros((self.n, 0))
            H = np.zeros((self.n, 0))
        self.G = _columns(G, self.n)
        self.H = _columns(H, self.n)
        if self.G.shape != self.H.shape:
            raise DimensionMismatch(
                f"G has shape {self.G.shape} but H has {self.H.shape}."
            )
        self.epsilon_target = float(epsilon_target)
        if achieved_rank is None:
            achieved_rank = self.G.shape[1]
        self.achieved_rank = int(achieved_rank)
        self.corrections = int(corrections)
        self.flip = bool(flip)

    @property
    def transform(self):
        return algebra(self.algebra, self.n)

    @property
    def rank(self):
        return self.G.shape[1]

    def low_rank(self):
        """The transformed remainder G H^* as a dense array."""
        return self.G @ self.H.conj().T

    def algebra_part(self, cap=DENSE_CAP):
        """P = V diag(d) V^{-1} as a dense array."""
        if self.n > cap:
            raise DenseCapExceeded(f"n={self.n} is above the dense cap {cap}.")
        return _tidy(self.transform.dense_element(self.d))

    def dense(self, cap=DENSE_CAP):
        """The represented matrix as a dense array.

        Raises
        ------
        DenseCapExceeded
            If n is above `cap`.
        """
        out = self.algebra_part(cap)
        if self.rank:
            t = self.transform
            out = out + _tidy(t.matrix @ self.low_rank() @ t.inverse_matrix)
        return out[::-1] if self.flip else out

    def matvec(self, x):
        """Apply the represented matrix to `x` in O(n log n + n r) for fast
        transforms."""
        t = self.transform
        y = t.forward(np.asarray(x))
        z = self.d * y
        if self.rank:
            z = z + self.G @ (self.H.conj().T @ y)
        out = t.inverse(z)
        return out[::-1] if self.flip else out

    def replace(self, **fields):
        """Copy with some fields replaced."""
        values = dict(
            algebra=self.algebra,
            d=self.d,
            G=self.G,
            H=self.H,
            epsilon_target=self.epsilon_target,
            achieved_rank=self.achieved_rank,
            corrections=self.corrections,
            flip=self.flip,
        )
        values.update(fields)
        return AlgebraPlusLowRank(**values)

    def to_json(self):
        """Serialize with complex values as [re, im] pairs."""
        return {
            "algebra": self.algebra.token,
            "n": self.n,
            "d": vector_to_json(self.d),
            "G": matrix_to_json(self.G),
            "H": matrix_to_json(self.H),
            "epsilon_target": self.epsilon_target,
            "achieved_rank": self.achieved_rank,
            "corrections": self.corrections,
            "flip": self.flip,
        }

    @classmethod
    def from_json(cls, obj):
        d = vector_from_json(obj["d"])
        n = obj.get("n", len(d))
        G = _tidy(_columns(matrix_from_json(obj["G"], n), n))
        H = _tidy(_columns(matrix_from_json(obj["H"], n), n))
        return cls(
            obj["algebra"],
            d,
            G,
            H,
            epsilon_target=obj.get("epsilon_target", 0.0),
            achieved_rank=obj.get("achieved_rank"),
            corrections=obj.get("corrections", 0),
            flip=obj.get("flip", False),
        )

    @classmethod
    def from_splitting(cls, algebra_id, d, left=None, right=None, **kwargs):
        """Build from a remainder sum_k left_k right_k^* given in original
        coordinates.

        The factors are mapped to G = V^{-1} left and H = V^* right.
        """
        algebra_id = AlgebraId.parse(algebra_id)
        n = len(d)
        if left is None or np.asarray(left).size == 0:
            return cls(algebra_id, d, **kwargs)
        t = algebra(algebra_id, n)
        left = _columns(left, n)
        right = _columns(right, n)
        G = _tidy(t.forward(left))
        H = _tidy(t.adjoint(right))
        kwargs.setdefault("achieved_rank", left.shape[1])
        return cls(algebra_id, d, G, H, **kwargs)

    def __repr__(self):
        return (
            f"AlgebraPlusLowRank(algebra={self.algebra.token!r}, n={self.n}, "
            f"rank={self.achieved_rank}, flip={self.flip})"
        )


def _weights(x):
    out = np.abs(x)
    out[np.isnan(out)] = -1.0
    return out


def _fresh_row(n, rows, skipped, us):
    for p in range(n):
        if p in rows or p in skipped:
            continue
        if any(np.isnan(u[p]) for u in us):
            continue
        return p
    return None


def _sample(rng, pool):
    if len(pool) <= CHECKS:
        return pool
    return sorted(int(p) for p in rng.choice(pool, CHECKS, replace=False))


def _sampled_residual(oracle, us, vs, rows, cols, skipped, rng):
    """Residual entries on up to CHECKS sampled rows and columns.

    Returns
    -------
    queries : int
        Oracle entries evaluated.
    worst : float
        Largest residual modulus over every sampled off-diagonal entry.
    best : float
        Largest modulus at a position the next pivot may use.
    row : int or None
        Pivot row holding `best`.
    """
    n = oracle.n
    blocked = sorted(set(rows) | set(cols))
    closed = sorted(set(blocked) | skipped)
    pool = [p for p in range(n) if p not in closed]
    open_cols = [q for q in range(n) if q not in cols]
    queries, worst, best, best_row = 0, 0.0, 0.0, None
    for p in _sample(rng, pool):
        r = oracle.row(p)
        queries += n
        for u, v in zip(us, vs):
            r = r - u[p] * v
        weights = _weights(r)
        worst = max(worst, weights.max(initial=0.0))
        weights[blocked] = -1.0
        q = int(np.argmax(weights))
        if weights[q] > best:
            best, best_row = weights[q], p
    for q in _sample(rng, open_cols):
        c = oracle.column(q)
        queries += n
        for u, v in zip(us, vs):
            c = c - v[q] * u
        weights = _weights(c)
        weights[rows] = -1.0
        worst = max(worst, weights.max(initial=0.0))
        if q in blocked:
            continue
        weights[closed] = -1.0
        p = int(np.argmax(weights))
        if weights[p] > best:
            best, best_row = weights[p], p
    return queries, worst, best, best_row


def _complete(oracle, U, V):
    """Fill the unknown entries left by masked positions.

    Rows of U and columns of V touched by diagonal or uncomputable entries
    are refitted by least squares against the fully known factor.
    """
    queries = 0
    bad_rows = np.flatnonzero(np.isnan(U).any(axis=1))
    good_cols = ~np.isnan(V).any(axis=0)
    for p in bad_rows:
        row = oracle.row(p)
        queries += oracle.n
        ok = good_cols & ~np.isnan(row)
        U[p] = np.linalg.lstsq(V[:, ok].T, row[ok], rcond=None)[0]
    for q in np.flatnonzero(~good_cols):
        col = oracle.column(q)
        queries += oracle.n
        ok = ~np.isnan(col)
        V[:, q] = np.linalg.lstsq(U[ok], col[ok], rcond=None)[0]
    return queries


def cross_approximate(oracle, epsilon, r_max):
    """Adaptive cross approximation of the off-diagonal part of V^{-1} A V.

    Pivot rows and columns are kept disjoint so the pivot block never
    touches the diagonal. At step k the pivot column is the largest entry of
    the residual row and the next row is the largest entry of the residual
    column, ties going to the lowest index. After PROBES consecutive rows
    with |pivot| (n - k) <= epsilon max(||R_hat||_F, ||A||_F), the residual
    is evaluated on CHECKS sampled rows and columns; iteration resumes from
    the largest sampled entry above the tolerance and stops otherwise, or
    when the rank reaches `r_max`. A sampled entry above the tolerance that
    no admissible pivot can remove counts as failure.

    Parameters
    ----------
    oracle : EntryOracle
        Entry oracle of A.
    epsilon : float
        Relative tolerance, positive.
    r_max : int
        Rank budget, at least 1.

    Returns
    -------
    skeleton : Skeleton
        Factors with R_hat = U @ V.
    residual_estimate : float
        Relative residual estimate at the stopping step.

    Raises
    ------
    RankBudgetExhausted
        If the tolerance is not met at rank `r_max`, or a sampled residual
        entry above it lies where the disjoint pivots cannot reach. The
        best-effort skeleton and estimate are attached to the exception.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}.")
    if r_max < 1:
        raise ValueError(f"r_max must be at least 1, got {r_max}.")
    n = oracle.n
    reference = oracle.matrix.frobenius_norm()
    us, vs, rows, cols = [], [], [], []
    queries = 0
    frob2 = 0.0
    skipped = set()
    estimate = 0.0
    converged = True
    rng = np.random.default_rng(0)
    i = 0

    while True:
        k = len(us)
        scale = max(np.sqrt(frob2), reference)
        if i is None:
            count, worst, best, i = _sampled_residual(
                oracle, us, vs, rows, cols, skipped, rng
            )
            queries += count
            if best * (n - k) <= epsilon * scale:
                estimate = worst * (n - k)
                converged = estimate <= epsilon * scale
                break
            logger.debug("Residual check resumes at row %d, rank %d.", i, k)
        r = oracle.row(i)
        queries += n
        for u, v in zip(us, vs):
            r = r - u[i] * v
        weights = _weights(r)
        weights[rows + cols + [i]] = -1.0
        j = int(np.argmax(weights))
        if weights[j] < 0:
            logger.debug("No admissible pivot column in row %d at rank %d.", i, k)
            skipped.add(i)
            i = None
            continue
        delta = r[j]
        estimate = abs(delta) * (n - k)
        if estimate <= epsilon * scale:
            skipped.add(i)
            if len(skipped) >= PROBES:
                i = None
            else:
                i = _fresh_row(n, rows, skipped, us)
            continue
        if k == r_max:
            converged = False
            break
        skipped.clear()
        v = r / delta
        c = oracle.column(j)
        queries += n
        for u_, v_ in zip(us, vs):
            c = c - v_[j] * u_
        cn, vn = np.nan_to_num(c), np.nan_to_num(v)
        frob2 += np.vdot(cn, cn).real * np.vdot(vn, vn).real
        for u_, v_ in zip(us, vs):
            frob2 += (
                2
                * abs(np.vdot(np.nan_to_num(u_), cn))
                * abs(np.vdot(np.nan_to_num(v_), vn))
            )
        us.append(c)
        vs.append(v)
        rows.append(i)
        cols.append(j)
        logger.debug("Cross step %d: pivot (%d, %d) = %.3e.", k, i, j, abs(delta))
        weights = _weights(c)
        weights[rows + cols] = -1.0
        i = int(np.argmax(weights))
        if weights[i] <= 0:
            i = _fresh_row(n, rows, skipped, us)

    dtype = oracle.dtype
    U = np.array(us, dtype=dtype).T.reshape(n, len(us))
    V = np.array(vs, dtype=dtype).reshape(len(vs), n)
    queries += _complete(oracle, U, V)
    skeleton = Skeleton(U, V, tuple(rows), tuple(cols), queries)
    residual = estimate / max(np.sqrt(frob2), reference, 1e-300)
    logger.debug(
        "Cross approximation: rank %d, %d queries, residual estimate %.3e.",
        len(rows),
        queries,
        residual,
    )
    if not converged:
        raise RankBudgetExhausted(
            f"Tolerance not met at rank {len(rows)} (budget {r_max}), "
            f"residual estimate {residual:.3e}.",
            skeleton=skeleton,
            residual=residual,
        )
    return skeleton, residual


def assemble(oracle, skeleton, diag_mode="oracle_diag", epsilon_target=0.0):
    """Combine a skeleton with algebra eigenvalues into a preconditioner.

    Parameters
    ----------
    oracle : EntryOracle
        Oracle the skeleton was computed from.
    skeleton : Skeleton
        Output of `cross_approximate`.
    diag_mode : {"oracle_diag", "zero_R_diag"}
        "oracle_diag" sets d = diag(V^{-1} A V) - diag(R_hat) so the split is
        exact on the diagonal; "zero_R_diag" skips the diagonal computation
        and takes the algebra element sharing the first row of A.
    epsilon_target : float, optional
        Recorded tolerance.

    Returns
    -------
    preconditioner : AlgebraPlusLowRank
    """
    if diag_mode not in DIAG_MODES:
        raise ValueError(f"diag_mode must be one of {DIAG_MODES}, got {diag_mode!r}.")
    U, V = skeleton.U, skeleton.V
    if diag_mode == "oracle_diag":
        d = diag_entries(oracle.matrix, oracle.algebra) - np.einsum("ik,ki->i", U, V)
    else:
        d = element_from_first_row(oracle.algebra, oracle.matrix.row(0))
    return AlgebraPlusLowRank(
        oracle.algebra,
        _tidy(d),
        _tidy(U),
        _tidy(V.conj().T),
        epsilon_target=epsilon_target,
    )


def positivity_repair(preconditioner, delta):
    """Replace eigenvalues of P below `delta` by `delta`.

    For Hermitian A > epsilon I with a Hermitian remainder of rank r, at most
    r eigenvalues of P can fall below zero, so more corrections than the
    achieved rank are logged as a warning.

    Returns
    -------
    preconditioner : AlgebraPlusLowRank
        Copy with repaired eigenvalues and the correction count recorded.
    """
    d = np.array(preconditioner.d, copy=True)
    low = np.real(d) < delta
    count = int(np.sum(low))
    if count:
        d = d.astype(complex) if np.iscomplexobj(d) else d
        d[low] = delta
    if count > preconditioner.achieved_rank:
        logger.warning(
            "%d eigenvalues repaired but the remainder has rank %d.",
            count,
            preconditioner.achieved_rank,
        )
    logger.debug("Positivity repair: %d corrections at delta=%g.", count, delta)
    return preconditioner.replace(
        d=_tidy(d), corrections=preconditioner.corrections + count
    )


def optimal_rank_preconditioner(
    matrix,
    algebra_id,
    epsilon=1e-8,
    r_max=32,
    diag_mode="oracle_diag",
    delta=None,
):
    """Build oracle, cross-approximate, assemble and optionally repair.

    When the rank budget runs out the best-effort skeleton is used and a
    warning is logged.

    Parameters
    ----------
    matrix : StructuredMatrix
        The matrix A.
    algebra_id : AlgebraId or str
        Target algebra.
    epsilon : float, optional
        Cross approximation tolerance.
    r_max : int, optional
        Rank budget.
    diag_mode : str, optional
        See `assemble`.
    delta : float, optional
        Positivity threshold; no repair when None.

    Returns
    -------
    preconditioner : AlgebraPlusLowRank
    """
    oracle = build(matrix, algebra_id)
    try:
        skeleton, _ = cross_approximate(oracle, epsilon, r_max)
    except RankBudgetExhausted as exc:
        logger.warning("%s Using the best-effort skeleton.", exc)
        skeleton = exc.skeleton
    preconditioner = assemble(oracle, skeleton, diag_mode, epsilon_target=epsilon)
    if delta is not None:
        preconditioner = positivity_repair(preconditioner, delta)
    return preconditioner
