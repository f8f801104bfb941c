"""Krylov solvers preconditioned with algebra-plus-low-rank matrices."""

import logging
import time
from collections import namedtuple

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from rankprecond.errors import (
    DenseCapExceeded,
    NonHermitianInput,
    NotConverged,
    SingularCapacitance,
    SingularDiagonal,
)
from rankprecond.structured import DENSE_CAP, StructuredMatrix
from rankprecond.util import vector_to_json

logger = logging.getLogger(__name__)

DIAGONAL_TOL = 1e-14
CAPACITANCE_COND = 1e14


class SolveReport(
    namedtuple(
        "SolveReport",
        [
            "x",
            "iterations",
            "residual_history",
            "converged",
            "cluster_outliers",
            "wall_time",
        ],
    )
):
    """Outcome of a Krylov solve.

    `residual_history` holds relative residual norms, starting with the
    initial residual. `cluster_outliers` is None when the spectrum was not
    computed.
    """

    __slots__ = ()

    def to_json(self, include_solution=False):
        out = {
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "converged": bool(self.converged),
            "cluster_outliers": self.cluster_outliers,
            "wall_time": self.wall_time,
        }
        if include_solution:
            out["x"] = vector_to_json(self.x)
        return out


def _real_like(reference, x, tol=1e-10):
    if np.iscomplexobj(reference) or not np.iscomplexobj(x):
        return x
    if np.all(np.abs(x.imag) <= tol * max(1.0, np.max(np.abs(x), initial=0.0))):
        return x.real
    return x


class PreconditionedOperator(LinearOperator):
    """The inverse (P + R)^{-1} of a preconditioner as a LinearOperator.

    P^{-1} = V diag(1/d) V^{-1} and the rank-r remainder is handled with
    the Woodbury identity through the capacitance matrix I + H^* D^{-1} G,
    factorized once.

    Parameters
    ----------
    preconditioner : AlgebraPlusLowRank
        Preconditioner to invert.

    Raises
    ------
    SingularDiagonal
        If an eigenvalue of P vanishes.
    SingularCapacitance
        If the capacitance matrix is numerically singular.
    """

    def __init__(self, preconditioner):
        self.preconditioner = preconditioner
        d = preconditioner.d
        scale = np.max(np.abs(d), initial=0.0)
        small = np.abs(d) <= DIAGONAL_TOL * scale
        if scale == 0 or np.any(small):
            count = int(np.count_nonzero(small)) if scale else len(d)
            raise SingularDiagonal(f"{count} eigenvalues of P vanish.")
        self._dinv = 1.0 / d
        self._factor = None
        if preconditioner.rank:
            G, H = preconditioner.G, preconditioner.H
            capacitance = np.eye(preconditioner.rank) + H.conj().T @ (
                self._dinv[:, None] * G
            )
            cond = np.linalg.cond(capacitance)
            if not np.isfinite(cond) or cond > CAPACITANCE_COND:
                raise SingularCapacitance(f"Capacitance condition number {cond:.2e}.")
            self._factor = scipy.linalg.lu_factor(capacitance)
        n = preconditioner.n
        trial = self._apply(np.linspace(1.0, 2.0, n))
        super().__init__(dtype=trial.dtype, shape=(n, n))

    def _apply(self, y):
        pr = self.preconditioner
        y = np.asarray(y)
        if pr.flip:
            y = y[::-1]
        t = pr.transform
        z = self._dinv * t.forward(y)
        if self._factor is not None:
            w = scipy.linalg.lu_solve(self._factor, pr.H.conj().T @ z)
            z = z - self._dinv * (pr.G @ w)
        return _real_like(y, t.inverse(z))

    def _matvec(self, x):
        x = np.asarray(x)
        if x.ndim == 2:
            return np.column_stack([self._apply(col) for col in x.T])
        return self._apply(x)


def apply_inverse(preconditioner, y):
    """Apply (P + R)^{-1} to `y` with the Woodbury identity.

    Parameters
    ----------
    preconditioner : AlgebraPlusLowRank
        Preconditioner, possibly with the exchange flag set.
    y : array_like
        Right-hand side.

    Returns
    -------
    x : ndarray
        Solution of (P + R) x = y, or of J (P + R) x = y when flipped.
    """
    return PreconditionedOperator(preconditioner).matvec(y)


def as_operator(A):
    """Wrap a StructuredMatrix or array as a LinearOperator."""
    if isinstance(A, StructuredMatrix):
        return LinearOperator(shape=A.shape, matvec=A.matvec, dtype=A.dtype)
    return aslinearoperator(A)


def _inverse(preconditioner):
    if preconditioner is None:
        return lambda y: y
    return PreconditionedOperator(preconditioner).matvec


def _check_hermitian(A):
    if isinstance(A, StructuredMatrix):
        scale = max(1.0, A.frobenius_norm() / np.sqrt(A.n))
        ok = A.is_hermitian(1e-12 * scale)
    elif isinstance(A, np.ndarray):
        ok = np.allclose(
            A, A.conj().T, rtol=1e-12, atol=1e-12 * max(1.0, np.max(np.abs(A)))
        )
    else:
        ok = True
    if not ok:
        raise NonHermitianInput("Conjugate gradients need a Hermitian matrix.")


def _dense(A, cap):
    n = A.shape[0]
    if n > cap:
        raise DenseCapExceeded(f"n={n} is above the dense cap {cap}.")
    if isinstance(A, StructuredMatrix):
        return A.dense(cap)
    return np.asarray(A)


def spectrum(A, preconditioner=None, cap=DENSE_CAP):
    """Eigenvalues of P^{-1} A from a dense generalized eigensolve.

    Raises
    ------
    DenseCapExceeded
        If n is above `cap`.
    """
    a = _dense(A, cap)
    if preconditioner is None:
        values = scipy.linalg.eigvals(a)
    else:
        values = scipy.linalg.eigvals(a, preconditioner.dense(cap))
    return _real_like(a, np.sort_complex(values))


def cluster_report(A, preconditioner, epsilon=1e-8, cap=DENSE_CAP):
    """Count eigenvalues of P^{-1} A outside the disc |z - 1| <= epsilon.

    Returns
    -------
    outliers : int
        Number of eigenvalues with |z - 1| > epsilon.
    condition_estimate : float
        Ratio of the largest to the smallest eigenvalue modulus.
    """
    values = spectrum(A, preconditioner, cap)
    outliers = int(np.count_nonzero(np.abs(values - 1) > epsilon))
    moduli = np.abs(values)
    smallest = np.min(moduli)
    condition = float(np.max(moduli) / smallest) if smallest > 0 else float("inf")
    logger.debug(
        "%d outliers at epsilon=%g, condition %.3e.", outliers, epsilon, condition
    )
    return outliers, condition


def _finish(
    A,
    preconditioner,
    x,
    iterations,
    history,
    converged,
    start,
    outlier_epsilon,
    dense_cap,
    raise_on_failure,
    name,
):
    outliers = None
    if outlier_epsilon is not None and A.shape[0] <= dense_cap:
        outliers = cluster_report(A, preconditioner, outlier_epsilon, dense_cap)[0]
    report = SolveReport(
        x=x,
        iterations=iterations,
        residual_history=np.asarray(history, dtype=float),
        converged=converged,
        cluster_outliers=outliers,
        wall_time=time.perf_counter() - start,
    )
    logger.debug("%s: %d iterations, residual %.3e.", name, iterations, history[-1])
    if not converged and raise_on_failure:
        raise NotConverged(
            f"{name} stopped after {iterations} iterations "
            f"at residual {history[-1]:.3e}.",
            report,
        )
    return report


def pcg(
    A,
    preconditioner=None,
    b=None,
    tol=1e-10,
    maxit=1000,
    x0=None,
    outlier_epsilon=None,
    dense_cap=DENSE_CAP,
    raise_on_failure=True,
):
    """Preconditioned conjugate gradients.

    Parameters
    ----------
    A : StructuredMatrix or ndarray
        Hermitian positive definite matrix.
    preconditioner : AlgebraPlusLowRank, optional
        Hermitian positive definite preconditioner.
    b : array_like
        Right-hand side.
    tol : float, optional
        Stop when ||b - A x|| <= tol ||b||.
    maxit : int, optional
        Maximum number of iterations.
    x0 : array_like, optional
        Initial guess, zero by default.
    outlier_epsilon : float, optional
        When set, count the eigenvalues of P^{-1} A outside the disc of
        that radius around 1 (dense, n <= dense_cap).
    raise_on_failure : bool, optional
        Raise NotConverged instead of returning an unconverged report.

    Returns
    -------
    report : SolveReport

    Raises
    ------
    NonHermitianInput
        If A is not Hermitian.
    NotConverged
        If the tolerance is not reached in `maxit` iterations; the report
        is attached to the exception.
    """
    start = time.perf_counter()
    _check_hermitian(A)
    operator = as_operator(A)
    psolve = _inverse(preconditioner)
    b = np.asarray(b)
    x = np.zeros(operator.shape[0], dtype=np.result_type(b, operator.dtype))
    if x0 is not None:
        x = x + np.asarray(x0)
    normb = np.linalg.norm(b)
    if normb == 0:
        return _finish(
            A,
            preconditioner,
            x,
            0,
            [0.0],
            True,
            start,
            outlier_epsilon,
            dense_cap,
            raise_on_failure,
            "pcg",
        )

    r = b - operator.matvec(x)
    history = [np.linalg.norm(r) / normb]
    converged = history[-1] <= tol
    iterations = 0
    z = psolve(r)
    p = z
    rz = np.vdot(r, z)
    while not converged and iterations < maxit:
        Ap = operator.matvec(p)
        pAp = np.vdot(p, Ap)
        if pAp == 0:
            break
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        iterations += 1
        history.append(np.linalg.norm(r) / normb)
        if history[-1] <= tol:
            converged = True
            break
        z = psolve(r)
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    x = _real_like(b, x)
    return _finish(
        A,
        preconditioner,
        x,
        iterations,
        history,
        converged,
        start,
        outlier_epsilon,
        dense_cap,
        raise_on_failure,
        "pcg",
    )


def _givens(a, b):
    # Unitary rotation [[c, s], [-conj(s), c]] with real c zeroing b.
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, 1.0
    r = np.hypot(abs(a), abs(b))
    return abs(a) / r, (a / abs(a)) * np.conj(b) / r


def gmres(
    A,
    preconditioner=None,
    b=None,
    tol=1e-10,
    maxit=1000,
    restart=50,
    x0=None,
    outlier_epsilon=None,
    dense_cap=DENSE_CAP,
    raise_on_failure=True,
):
    """Restarted GMRES on the left-preconditioned system P^{-1} A x = P^{-1} b.

    Convergence is measured on the preconditioned residual
    ||P^{-1}(b - A x)|| / ||P^{-1} b||. Parameters and errors are those of
    `pcg`, plus `restart`, the Krylov dimension of a cycle.
    """
    if restart < 1:
        raise ValueError("restart must be positive.")
    start = time.perf_counter()
    operator = as_operator(A)
    psolve = _inverse(preconditioner)
    b = np.asarray(b)
    n = operator.shape[0]
    x = np.zeros(n, dtype=complex)
    if x0 is not None:
        x = x + np.asarray(x0)
    normb = np.linalg.norm(psolve(b))
    if normb == 0:
        return _finish(
            A,
            preconditioner,
            _real_like(b, x),
            0,
            [0.0],
            True,
            start,
            outlier_epsilon,
            dense_cap,
            raise_on_failure,
            "gmres",
        )

    r = psolve(b - operator.matvec(x))
    gamma = np.linalg.norm(r)
    history = [gamma / normb]
    iterations = 0
    while history[-1] > tol and iterations < maxit:
        m = min(restart, maxit - iterations)
        V = np.zeros((n, m + 1), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        g[0] = gamma
        V[:, 0] = r / gamma
        for j in range(m):
            w = psolve(operator.matvec(V[:, j])).astype(complex)
            for i in range(j + 1):
                H[i, j] = np.vdot(V[:, i], w)
                w = w - H[i, j] * V[:, i]
            h_next = np.linalg.norm(w)
            H[j + 1, j] = h_next
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -np.conj(sn[i]) * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]
            iterations += 1
            history.append(abs(g[j + 1]) / normb)
            if history[-1] <= tol or h_next == 0:
                break
            V[:, j + 1] = w / h_next
        k = j + 1
        y = scipy.linalg.solve_triangular(H[:k, :k], g[:k])
        x = x + V[:, :k] @ y
        r = psolve(b - operator.matvec(x))
        gamma = np.linalg.norm(r)
        history[-1] = gamma / normb
        if gamma == 0:
            break
    x = _real_like(b, x)
    return _finish(
        A,
        preconditioner,
        x,
        iterations,
        history,
        history[-1] <= tol,
        start,
        outlier_epsilon,
        dense_cap,
        raise_on_failure,
        "gmres",
    )
