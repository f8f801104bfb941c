"""Closed-form algebra-plus-low-rank splittings of structured matrices."""

import logging
import warnings
from collections import namedtuple

import numpy as np
import scipy.linalg
import scipy.special

from rankprecond.algebras import AlgebraId, HARTLEY_PHI, algebra
from rankprecond.blackdot import AlgebraPlusLowRank, optimal_rank_preconditioner
from rankprecond.errors import (
    FitFailed,
    IllConditionedChi,
    KroneckerLowRankWarning,
    PoleAtPhi,
    UnsupportedCombination,
)
from rankprecond.oracle import diag_entries
from rankprecond.structured import (
    RationalPQ,
    circulant,
    hankel_from_symbol,
    powers,
    toeplitz_from_symbol,
)
from rankprecond.util import unit

logger = logging.getLogger(__name__)

POLE_TOL = 1e-12
MAX_POWER = 12
RHO_CAP = 400

Splitting = namedtuple("Splitting", ["phi", "row", "left", "right"])
Splitting.__doc__ = """A = C_phi(row) + left @ right^*, in original coordinates."""


class ExpSumFit(
    namedtuple(
        "ExpSumFit", ["terms", "alpha", "n", "epsilon", "achieved_relative_error"]
    )
):
    """Exponential sum k^(-alpha) ~ sum_i a_i exp(-b_i k) on k = 1..n."""

    __slots__ = ()

    @property
    def rho(self):
        return len(self.terms)

    @property
    def a(self):
        return np.array([t[0] for t in self.terms])

    @property
    def b(self):
        return np.array([t[1] for t in self.terms])

    def evaluate(self, k):
        k = np.asarray(k, dtype=float)
        return np.exp(-np.multiply.outer(k, self.b)) @ self.a

    @property
    def envelope_constant(self):
        """rho / (log(1/eps) (log(1/eps) + log n))."""
        le = np.log(1 / self.epsilon)
        return self.rho / (le * (le + np.log(max(self.n, 2))))


def _phi(phi):
    phi = complex(phi)
    if abs(abs(phi) - 1) > 1e-12:
        raise ValueError(f"phi must have unit modulus, got {phi}.")
    return phi.real if phi.imag == 0 else phi


def _compress(left, right, rtol=1e-13, atol=0.0):
    """Truncated SVD of left @ right^* through two thin QR factorizations."""
    left = np.asarray(left)
    right = np.asarray(right)
    n = left.shape[0]
    if left.shape[1] == 0:
        return np.zeros((n, 0)), np.zeros((n, 0))
    q1, r1 = scipy.linalg.qr(left, mode="economic")
    q2, r2 = scipy.linalg.qr(right, mode="economic")
    u, s, wh = np.linalg.svd(r1 @ r2.conj().T)
    tol = max(rtol * (s[0] if s.size else 0.0), atol)
    keep = s > max(tol, 1e-300)
    return q1 @ (u[:, keep] * s[keep]), q2 @ wh.conj().T[:, keep]


def _check_pole(lam, n, phi, label="phi"):
    if abs(lam ** n - phi) < POLE_TOL:
        raise PoleAtPhi(f"lambda^n = {lam ** n} hits {label} = {phi}.")


def _z_split(n, lam, phi):
    # Z_n(lam) = C_phi(x) + (lam^n - phi)^{-1} p (J lam p)^T
    _check_pole(lam, n, phi)
    p = powers(n, lam)
    tail = lam * p[::-1]
    x = np.concatenate([[phi], tail[1:]]) / (phi - lam ** n)
    left = (p / (lam ** n - phi))[:, None]
    right = np.conj(tail)[:, None]
    return Splitting(phi, x, left, right)


def _kms_split(n, lam, phi):
    # K_n(lam) = C_phi(xi) + R_1 + R_2 with rank R_1 = rank R_2 = 1
    phibar = np.conj(phi)
    _check_pole(lam, n, phi)
    _check_pole(lam, n, phibar, "conj(phi)")
    z = _z_split(n, lam, phi)
    p = powers(n, lam)
    tail = lam * p[::-1]
    xi = z.row + phibar / (phibar - lam ** n) * p - unit(n, 0)
    left = np.column_stack([z.left[:, 0], tail / (lam ** n - phibar)])
    right = np.column_stack([z.right[:, 0], np.conj(p)])
    return Splitting(phi, xi, left, right)


def _chi(q, lam, phi, n):
    """Coefficients, in kappa = k / n, of the polynomial chi with
    chi(k) - conj(phi) lam^n chi(k + n) = q(k) for all k.

    Degree deg q + 1 is allowed so the system stays solvable when
    conj(phi) lam^n = 1.
    """
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    degree = len(q)
    c = np.conj(phi) * lam ** n
    m = 4 * (degree + 1)
    nodes = 0.5 * (1 - np.cos(np.pi * (np.arange(m) + 0.5) / m))
    exponents = np.arange(degree + 1)
    system = nodes[:, None] ** exponents - c * (nodes[:, None] + 1) ** exponents
    rhs = np.polynomial.polynomial.polyval(n * nodes, q)
    scale = np.linalg.norm(system, axis=0)
    scale[scale == 0] = 1.0
    coeffs = np.linalg.lstsq(system / scale, rhs, rcond=None)[0] / scale
    residual = np.linalg.norm(system @ coeffs - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if residual > 1e-8:
        raise IllConditionedChi(
            f"chi system residual {residual:.2e} for degree {degree - 1}."
        )
    return coeffs


def _triangular_split(n, q, lam, phi):
    """Split the lower triangular Toeplitz L with L[i, j] = q(i - j) lam^(i - j).

    With chi from `_chi`, L = C_phi(x) + R where the first column of C_phi(x)
    is chi(k) lam^k and R[i, j] = -conj(phi) chi(n + i - j) lam^(n + i - j),
    a matrix of rank at most deg q + 2.
    """
    phibar = np.conj(phi)
    coeffs = _chi(q, lam, phi, n)
    k = np.arange(n)
    column = np.polynomial.polynomial.polyval(k / n, coeffs) * lam ** k
    x = np.concatenate([column[:1], phibar * column[:0:-1]])
    # chi(n + i - j) = sum_d coeffs_d (t_i + s_j)^d with t = i/n, s = (n - j)/n
    degree = len(coeffs) - 1
    t = k / n
    s = (n - k) / n
    a = np.arange(degree + 1)
    mixing = np.zeros((degree + 1, degree + 1), dtype=complex)
    for i in a:
        for j in range(degree + 1 - i):
            mixing[i, j] = coeffs[i + j] * scipy.special.comb(i + j, i)
    tp = (lam ** k)[:, None] * t[:, None] ** a
    sp = (lam ** (n - k))[:, None] * s[:, None] ** a
    left = -phibar * tp @ mixing
    return Splitting(phi, _real_if_close(x), left, np.conj(sp))


def _decay_term(n, lam, phi):
    """Splitting of Z_n(lam) that stays exact when lam^n hits phi.

    Exponential sum terms with tiny exponents round lam to 1.
    """
    if abs(lam ** n - phi) < POLE_TOL:
        return _triangular_split(n, np.ones(1), lam, phi)
    return _z_split(n, lam, phi)


def _real_if_close(x, tol=1e-14):
    x = np.asarray(x)
    scale = max(1.0, np.max(np.abs(x), initial=0.0))
    if np.iscomplexobj(x) and np.all(np.abs(x.imag) <= tol * scale):
        return x.real
    return x


def _transposed(split):
    # C_phibar(x)^T is the phi-circulant whose first row is its first column.
    column = np.concatenate([split.row[:1], split.phi * split.row[:0:-1]])
    return Splitting(
        np.conj(split.phi), column, np.conj(split.right), np.conj(split.left)
    )


def _combine(n, phi, parts, shift=0.0):
    """Sum c_k S_k + shift I of splittings."""
    row = shift * unit(n, 0, dtype=complex)
    lefts, rights = [], []
    for c, split in parts:
        row = row + c * split.row
        lefts.append(c * split.left)
        rights.append(split.right)
    if lefts:
        left, right = np.hstack(lefts), np.hstack(rights)
    else:
        left = right = np.zeros((n, 0))
    return Splitting(phi, _real_if_close(row), left, right)


def _finish(split, epsilon_target=0.0, atol=0.0, flip=False, algebra_id=None):
    n = len(split.row)
    if algebra_id is None:
        algebra_id = AlgebraId.circulant(split.phi)
        d = algebra(algebra_id, n).element_from_first_row(split.row)
    else:
        d = diag_entries(circulant(split.row, split.phi), algebra_id)
    left, right = _compress(split.left, split.right, atol=atol)
    d = _real_if_close(d, tol=1e-10)
    return AlgebraPlusLowRank.from_splitting(
        algebra_id,
        d,
        left,
        right,
        epsilon_target=epsilon_target,
        achieved_rank=left.shape[1],
        flip=flip,
    )


def precond_Z(n, lam, phi=1.0):
    """Splitting Z_n(lam) = P_phi + R with P_phi = C_phi(x_phi(lam)) and
    rank R = 1, where x_phi(lam) = (phi - lam^n)^{-1} J Pi_phi p(lam).

    The eigenvalues of P_phi are 1 / (1 - (lam / theta) e^{2 pi i k / n})
    with theta the principal n-th root of phi.

    Raises
    ------
    PoleAtPhi
        If |lam^n - phi| < 1e-12.
    """
    return _finish(_z_split(n, lam, _phi(phi)))


def precond_KMS(n, lam, phi=1.0):
    """Splitting K_n(lam) = Q_phi + R with Q_phi = C_phi(xi_phi(lam)) and
    rank R = 2, where

        xi_phi(lam) = ((phi - lam^n)^{-1} J Pi_phi
                       + conj(phi) (conj(phi) - lam^n)^{-1}) p(lam) - e_1.

    Q_phi is the optimal rank phi-circulant preconditioner of the KMS matrix
    and Q_phi^{-1} K_n(lam) has at most three distinct eigenvalues.

    Raises
    ------
    PoleAtPhi
        If lam^n is within 1e-12 of phi or conj(phi).
    """
    return _finish(_kms_split(n, float(lam), _phi(phi)))


def precond_hartley_kms(n, lam, hartley_id):
    """KMS splitting K_n(lam) = H + R with H a symmetric phi-circulant,
    phi = +1 or -1 according to the Hartley index, so that H belongs to the
    Hartley-type algebra; rank R = 2."""
    hartley_id = AlgebraId.parse(hartley_id)
    if hartley_id.family != "hartley":
        raise ValueError(f"Expected a Hartley algebra, got {hartley_id.token}.")
    phi = HARTLEY_PHI[hartley_id.param]
    return _finish(_kms_split(n, float(lam), phi), algebra_id=hartley_id)


def _rational_parts(spec, n, phi, hermitian):
    terms = spec.terms()
    if not hermitian:
        return [(c, _z_split(n, lam, phi)) for c, lam in terms], 0.0
    complex_roots = np.any(np.abs(np.imag(spec.roots)) > 0)
    if complex_roots or np.any(np.abs(np.imag([c for c, _ in terms])) > 1e-14):
        raise ValueError("The Hermitian variant needs real roots and residuals.")
    parts = []
    shift = 0.0
    for c, lam in terms:
        c, lam = float(np.real(c)), float(np.real(lam))
        parts.append((c / 2, _kms_split(n, lam, phi)))
        shift += c / 2
    return parts, shift


def precond_rational(p_coeffs, q_roots, n, phi=1.0, residuals=None, hermitian=False):
    """Splitting of T_n(p/q) = -sum_k rho_k / z_k Z_n(1/z_k).

    Each term contributes a phi-circulant and a rank-one remainder, so the
    remainder has rank at most deg q. With `hermitian`, the symmetric matrix
    of Re(p/q) is split term by term through KMS splittings, doubling the
    bound.

    Parameters
    ----------
    p_coeffs : array_like
        Numerator coefficients, constant term first.
    q_roots : array_like
        Distinct nonzero roots of the denominator.
    n : int
        Matrix size.
    phi : complex, optional
        Algebra parameter.
    residuals : array_like, optional
        Partial-fraction residuals; checked against p(z_k)/q'(z_k).
    hermitian : bool, optional
        Split the Hermitian real-part matrix instead.

    Raises
    ------
    DuplicateRoots, DegreeViolation
        From the symbol validation.
    ValueError
        If supplied residuals disagree with the computed ones.
    """
    phi = _phi(phi)
    spec = RationalPQ(p_coeffs, q_roots)
    if residuals is not None:
        given = np.asarray(residuals, dtype=complex)
        if not np.allclose(given, spec.residuals, rtol=1e-8, atol=1e-12):
            raise ValueError(
                f"Supplied residuals {given} disagree with {spec.residuals}."
            )
    parts, shift = _rational_parts(spec, n, phi, hermitian)
    return _finish(_combine(n, phi, parts, shift))


def precond_power(n, p, phi=1.0, symmetric=False):
    """Splitting of the Toeplitz matrix with entries (i - j)^p below the
    diagonal (|i - j|^p when `symmetric`), 0^p on the diagonal.

    A polynomial chi of degree at most p + 1 with
    chi(k) - conj(phi) chi(k + n) = k^p gives P_phi with first column chi(k)
    and a remainder of rank at most p + 2 (2(p + 2) when symmetric).

    Raises
    ------
    IllConditionedChi
        If p > 12 or the chi system is not satisfied to 1e-8.
    """
    phi = _phi(phi)
    if p < 0 or int(p) != p:
        raise ValueError(f"p must be a non-negative integer, got {p}.")
    if p > MAX_POWER:
        raise IllConditionedChi(f"p={p} exceeds the conditioning guard {MAX_POWER}.")
    q = unit(int(p) + 1, int(p))
    lower = _triangular_split(n, q, 1.0, phi)
    if not symmetric:
        return _finish(lower)
    upper = _transposed(_triangular_split(n, q, 1.0, np.conj(phi)))
    diagonal = 1.0 if p == 0 else 0.0
    return _finish(_combine(n, phi, [(1.0, lower), (1.0, upper)], -diagonal))


def exp_sum_fit(alpha, n, epsilon, rho_cap=RHO_CAP):
    """Fit k^(-alpha) by sum_i a_i exp(-b_i k) on k = 1..n to relative
    accuracy epsilon.

    The integral k^(-alpha) = Gamma(alpha)^{-1} int t^(alpha-1) e^(-kt) dt is
    discretized by the trapezoidal rule on a geometric grid in t, then terms
    are dropped greedily while the bound still holds.

    Parameters
    ----------
    alpha : float
        Positive exponent.
    n : int
        Largest k.
    epsilon : float
        Relative accuracy in (0, 1/2).
    rho_cap : int, optional
        Largest number of terms accepted.

    Returns
    -------
    fit : ExpSumFit

    Raises
    ------
    FitFailed
        If the bound is not met within `rho_cap` terms.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}.")
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}.")
    n = int(n)
    if n <= 2:
        b = alpha * np.log(2) if n == 2 else 1.0
        return ExpSumFit(((float(np.exp(b)), float(b)),), alpha, n, epsilon, 0.0)

    k = np.arange(1, n + 1, dtype=float)
    target = k ** (-alpha)
    log_gamma = scipy.special.gammaln(alpha)
    step = np.pi ** 2 / (np.log(1 / epsilon) + 3)
    lo = (np.log(epsilon / 4) + scipy.special.gammaln(alpha + 1)) / alpha - np.log(n)
    hi = 0.0
    while np.exp(hi) - alpha * hi < np.log(4 / epsilon) + max(log_gamma, 0.0):
        hi += 0.5

    for attempt in range(8):
        s = np.arange(lo, hi + step, step)
        a = step * np.exp(alpha * s - log_gamma)
        b = np.exp(s)
        basis = np.exp(-np.multiply.outer(k, b))
        approx = basis @ a
        error = np.max(np.abs(target - approx) / target)
        if error <= epsilon / 2:
            break
        step *= 0.7
        lo -= 1.0
        hi += 0.5
    else:
        raise FitFailed(f"No exponential sum for alpha={alpha}, n={n}, eps={epsilon}.")

    keep = np.ones(len(a), dtype=bool)
    for i in np.argsort(a * np.exp(-b)):
        trial = approx - a[i] * basis[:, i]
        if np.max(np.abs(target - trial) / target) <= epsilon:
            approx = trial
            keep[i] = False
    error = float(np.max(np.abs(target - approx) / target))
    terms = tuple((float(ai), float(bi)) for ai, bi in zip(a[keep], b[keep]))
    if len(terms) > rho_cap:
        raise FitFailed(f"{len(terms)} terms exceed the cap {rho_cap}.")
    logger.debug(
        "Exponential sum for alpha=%g, n=%d, eps=%g: %d terms, error %.2e.",
        alpha,
        n,
        epsilon,
        len(terms),
        error,
    )
    return ExpSumFit(terms, float(alpha), n, float(epsilon), error)


def precond_power_decay(n, alpha, phi=1.0, epsilon=1e-8, symmetric=False, diagonal=1.0):
    """Splitting of the Toeplitz matrix with entries (i - j)^(-alpha) below
    the diagonal (|i - j|^(-alpha) when `symmetric`) through an exponential
    sum fit: each term mu^(i - j) is a Z_n(mu) (a KMS matrix when symmetric)
    and splits exactly."""
    phi = _phi(phi)
    if n < 2:
        return _finish(
            Splitting(phi, np.array([diagonal]), np.zeros((1, 0)), np.zeros((1, 0)))
        )
    fit = exp_sum_fit(alpha, n - 1, epsilon / 2)
    parts = []
    for a, b in fit.terms:
        lam = float(np.exp(-b))
        parts.append((a, _decay_term(n, lam, phi)))
        if symmetric:
            parts.append((a, _transposed(_decay_term(n, lam, np.conj(phi)))))
    shift = diagonal - sum(a for a, _ in parts)
    scale = max(abs(diagonal), 1.0)
    return _finish(
        _combine(n, phi, parts, shift),
        epsilon_target=epsilon,
        atol=epsilon / 2 * scale,
    )


def precond_log(n, z0, phi=1.0, epsilon=1e-8):
    """Splitting of T_n(f) for f = log(z0 - e^{i theta}) with |z0| = 1.

    Off the diagonal T_n(f)[i, j] = (i - j)^{-1} Z_n(1/z0)[i, j]; with
    1/k ~ sum_m a_m exp(-b_m k) each term is a Z_n(exp(-b_m) / z0), split
    into a phi-circulant and a rank-one remainder. The constant log z0 is a
    multiple of the identity. The result satisfies
    ||T_n(f) - P_phi - R||_C <= epsilon ||T_n(f)||_C.

    Raises
    ------
    FitFailed
        Propagated from the exponential sum fit.
    """
    phi = _phi(phi)
    z0 = complex(z0)
    if abs(abs(z0) - 1) > 1e-12:
        raise ValueError(f"z0 must lie on the unit circle, got |z0|={abs(z0)}.")
    log_z0 = np.log(z0)
    if n < 2:
        return _finish(
            Splitting(phi, np.array([log_z0]), np.zeros((1, 0)), np.zeros((1, 0)))
        )
    fit = exp_sum_fit(1.0, n - 1, epsilon / 2)
    parts = [(a, _decay_term(n, np.exp(-b) / z0, phi)) for a, b in fit.terms]
    shift = log_z0 - sum(a for a, _ in fit.terms)
    scale = max(abs(log_z0), 1.0)
    return _finish(
        _combine(n, phi, parts, shift),
        epsilon_target=epsilon,
        atol=epsilon / 2 * scale,
    )


def precond_generalized_kms(terms, n, phi=1.0, epsilon=1e-8):
    """Splitting of G_n = sum_k gamma_k K_n(f_k, lam_k), where
    K_n(f, lam)[i, j] = f(|i - j|) lam^|i - j| for a polynomial f.

    Each term splits its lower and upper triangles exactly, with a remainder
    of rank at most 2 (deg f_k + 2).

    Parameters
    ----------
    terms : list of tuple
        Triples (gamma, f_coeffs, lam), f_coeffs constant term first.
    n : int
        Matrix size.
    phi : complex, optional
        Algebra parameter.
    epsilon : float, optional
        Truncation tolerance of the combined remainder, relative to the
        largest singular value.
    """
    phi = _phi(phi)
    parts = []
    shift = 0.0
    for gamma, f, lam in terms:
        if gamma == 0:
            continue
        f = np.atleast_1d(np.asarray(f, dtype=float))
        if len(f) - 1 > MAX_POWER:
            raise IllConditionedChi(f"deg f = {len(f) - 1} exceeds {MAX_POWER}.")
        lower = _triangular_split(n, f, float(lam), phi)
        upper = _transposed(_triangular_split(n, f, float(lam), np.conj(phi)))
        parts.extend([(gamma, lower), (gamma, upper)])
        shift -= gamma * f[0]
    split = _combine(n, phi, parts, shift)
    left, right = _compress(split.left, split.right, rtol=max(epsilon, 1e-13))
    return _finish(Splitting(phi, split.row, left, right), epsilon_target=epsilon)


def _target(phi_or_id):
    if isinstance(phi_or_id, (AlgebraId, str)):
        return AlgebraId.parse(phi_or_id)
    return AlgebraId.circulant(phi_or_id)


def precond_hankel(spec, n, target=1.0, epsilon=1e-8):
    """Splitting of H_n(f) = J T(H) through the Toeplitz matrix T(H).

    The result carries `flip` so it represents J (P + R). For zeta, KMS and
    rational symbols the entries of T(H) are f_{n-1-k}, sums of
    lam^(n-1) Z_n(1/lam), which split exactly. Other symbols go through the
    cross approximation.

    Parameters
    ----------
    spec : SymbolSpec
        Symbol of the Hankel matrix.
    n : int
        Matrix size.
    target : complex or AlgebraId or str, optional
        phi of the circulant algebra, or an algebra identifier.
    epsilon : float, optional
        Tolerance for the cross approximation path.

    Warns
    -----
    KroneckerLowRankWarning
        For rational symbols, whose Hankel matrices have rank equal to the
        number of poles.
    """
    algebra_id = _target(target)
    if spec.variant == "rational":
        warnings.warn(
            f"H_n of a rational symbol has rank {len(spec.roots)}; "
            "a low-rank approximation may serve better.",
            KroneckerLowRankWarning,
        )
    if algebra_id.family == "circ" and spec.variant in ("zeta", "kms", "rational"):
        phi = _phi(algebra_id.param)
        if spec.variant == "rational":
            terms = spec.terms()
        else:
            terms = [(1.0, spec["lam"])]
        if any(lam == 0 for _, lam in terms):
            raise UnsupportedCombination("Hankel splitting needs nonzero lambda.")
        parts = [(c * lam ** (n - 1), _z_split(n, 1 / lam, phi)) for c, lam in terms]
        return _finish(_combine(n, phi, parts), flip=True)
    reversed_toeplitz = hankel_from_symbol(spec, n).reversed_toeplitz
    pr = optimal_rank_preconditioner(reversed_toeplitz, algebra_id, epsilon=epsilon)
    return pr.replace(flip=True)


def precond_symbol(spec, n, phi=1.0, epsilon=1e-8):
    """Explicit splitting matching a symbol description.

    zeta goes to `precond_Z`, kms to `precond_KMS`, rational to
    `precond_rational`, power to `precond_power` for non-positive integer
    exponents and `precond_power_decay` otherwise, log to `precond_log`.
    Symbols given by Fourier coefficients fall back to the cross
    approximation in the phi-circulant algebra.
    """
    variant = spec.variant
    if variant == "zeta":
        return precond_Z(n, spec["lam"], phi)
    if variant == "kms":
        return precond_KMS(n, spec["lam"], phi)
    if variant == "rational":
        residuals = spec.residuals if "residuals" in spec else None
        return precond_rational(spec.p, spec.roots, n, phi, residuals=residuals)
    if variant == "power":
        alpha = spec["alpha"]
        if alpha <= 0 and float(alpha).is_integer():
            p = int(-alpha)
            pr = precond_power(n, p, phi, symmetric=spec["symmetric"])
            default = 1.0 if p == 0 else 0.0
            if spec["diagonal"] != default:
                pr = pr.replace(d=pr.d + (spec["diagonal"] - default))
            return pr
        return precond_power_decay(
            n,
            alpha,
            phi,
            epsilon,
            symmetric=spec["symmetric"],
            diagonal=spec["diagonal"],
        )
    if variant == "log":
        return precond_log(n, spec.z0, phi, epsilon)
    matrix = toeplitz_from_symbol(spec, n)
    return optimal_rank_preconditioner(
        matrix, AlgebraId.circulant(phi), epsilon=epsilon
    )
