"""Toeplitz, Hankel and Toeplitz-plus-Hankel matrices stored by their
defining vectors."""

import logging
from functools import cached_property

import numpy as np
import scipy.fft
import scipy.linalg

from rankprecond.errors import (
    CornerMismatch,
    DegreeViolation,
    DenseCapExceeded,
    DimensionMismatch,
    DuplicateRoots,
    QuadratureUnderResolved,
)
from rankprecond.util import (
    as_vector,
    complex_from_json,
    complex_to_json,
    frozen,
    maybe_real,
    unit,
    vector_from_json,
    vector_to_json,
)

logger = logging.getLogger(__name__)

DENSE_CAP = 4096


class StructuredMatrix(object):
    """Sum of an optional Toeplitz part and an optional Hankel part.

    The Toeplitz part T_n(a, b) has first column `a` and first row `b`.
    The Hankel part H_n(u, v) has first row `u` and last column `v`.
    Instances are immutable; use the module-level constructors.

    Parameters
    ----------
    n : int
        Dimension.
    toeplitz : tuple of array_like, optional
        Defining vectors (a, b) of the Toeplitz part.
    hankel : tuple of array_like, optional
        Defining vectors (u, v) of the Hankel part.

    Raises
    ------
    DimensionMismatch
        If a defining vector does not have length `n`.
    CornerMismatch
        If a[0] != b[0] or u[n-1] != v[0].
    """

    def __init__(self, n, toeplitz=None, hankel=None):
        if n < 1:
            raise DimensionMismatch("Matrix dimension must be positive.")
        self.n = int(n)
        self.toeplitz_part = None
        self.hankel_part = None
        if toeplitz is not None:
            a, b = (frozen(as_vector(x, n).copy()) for x in toeplitz)
            if not _same_corner(a[0], b[0]):
                raise CornerMismatch(f"Toeplitz corner: a[0]={a[0]} but b[0]={b[0]}.")
            self.toeplitz_part = (a, b)
        if hankel is not None:
            u, v = (frozen(as_vector(x, n).copy()) for x in hankel)
            if not _same_corner(u[-1], v[0]):
                raise CornerMismatch(f"Hankel corner: u[-1]={u[-1]} but v[0]={v[0]}.")
            self.hankel_part = (u, v)

    @property
    def kind(self):
        if self.toeplitz_part is not None and self.hankel_part is not None:
            return "toeplitz+hankel"
        if self.hankel_part is not None:
            return "hankel"
        return "toeplitz"

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def is_complex(self):
        parts = (self.toeplitz_part or ()) + (self.hankel_part or ())
        return any(np.iscomplexobj(x) for x in parts)

    @property
    def dtype(self):
        return np.dtype(complex) if self.is_complex else np.dtype(float)

    @cached_property
    def antidiagonals(self):
        """Values h[0..2n-2] with H[i, j] = h[i + j], or None."""
        if self.hankel_part is None:
            return None
        u, v = self.hankel_part
        return frozen(np.concatenate([u, v[1:]]))

    @cached_property
    def _toeplitz_symbol_fft(self):
        a, b = self.toeplitz_part
        m = scipy.fft.next_fast_len(2 * self.n - 1)
        c = np.zeros(m, dtype=np.result_type(a, b))
        c[: self.n] = a
        if self.n > 1:
            c[m - self.n + 1 :] = b[:0:-1]
        return m, scipy.fft.fft(c)

    @cached_property
    def reversed_toeplitz(self):
        """The Toeplitz matrix T(H) = JH of the Hankel part."""
        if self.hankel_part is None:
            return None
        u, v = self.hankel_part
        return StructuredMatrix(self.n, toeplitz=(u[::-1], v))

    def toeplitz_vectors(self):
        """Return (a, b) of the Toeplitz part, zeros when absent."""
        if self.toeplitz_part is None:
            zero = np.zeros(self.n)
            return zero, zero
        return self.toeplitz_part

    def _toeplitz_matmat(self, x):
        m, symbol = self._toeplitz_symbol_fft
        xf = scipy.fft.fft(x, n=m, axis=0)
        y = scipy.fft.ifft(symbol.reshape((-1,) + (1,) * (x.ndim - 1)) * xf, axis=0)
        return y[: self.n]

    def matmat(self, x):
        """Apply the matrix to a vector or to the columns of a matrix.

        Parameters
        ----------
        x : array_like
            Array of shape (n,) or (n, k).

        Returns
        -------
        y : ndarray
            Product A @ x, computed with FFT circulant embedding.

        Raises
        ------
        DimensionMismatch
            If the leading dimension of `x` is not n.
        """
        x = np.asarray(x)
        if x.shape[0] != self.n:
            raise DimensionMismatch(
                f"Expected leading dimension {self.n}, got {x.shape[0]}."
            )
        y = np.zeros(x.shape, dtype=complex)
        if self.toeplitz_part is not None:
            y += self._toeplitz_matmat(x)
        if self.hankel_part is not None:
            y += self.reversed_toeplitz._toeplitz_matmat(x)[::-1]
        return maybe_real(
            y, x, *((self.toeplitz_part or ()) + (self.hankel_part or ()))
        )

    def matvec(self, x):
        x = np.asarray(x)
        if x.ndim != 1:
            raise DimensionMismatch("matvec expects a one-dimensional vector.")
        return self.matmat(x)

    def __matmul__(self, x):
        return self.matmat(x)

    def dense(self, cap=None):
        """Full n-by-n array.

        Raises
        ------
        DenseCapExceeded
            If n is above `cap` (module default DENSE_CAP).
        """
        cap = DENSE_CAP if cap is None else cap
        if self.n > cap:
            raise DenseCapExceeded(f"n={self.n} is above the dense cap {cap}.")
        out = np.zeros((self.n, self.n), dtype=self.dtype)
        if self.toeplitz_part is not None:
            out += scipy.linalg.toeplitz(*self.toeplitz_part)
        if self.hankel_part is not None:
            out += scipy.linalg.hankel(*self.hankel_part)
        return out

    def row(self, i):
        """Row `i` as a vector, without forming the matrix."""
        n = self.n
        out = np.zeros(n, dtype=self.dtype)
        if self.toeplitz_part is not None:
            a, b = self.toeplitz_part
            out += np.concatenate([a[i::-1], b[1 : n - i]])
        if self.hankel_part is not None:
            out += self.antidiagonals[i : i + n]
        return out

    def column(self, j):
        """Column `j` as a vector, without forming the matrix."""
        n = self.n
        out = np.zeros(n, dtype=self.dtype)
        if self.toeplitz_part is not None:
            a, b = self.toeplitz_part
            out += np.concatenate([b[j:0:-1], a[: n - j]])
        if self.hankel_part is not None:
            out += self.antidiagonals[j : j + n]
        return out

    def diagonal(self):
        out = np.zeros(self.n, dtype=self.dtype)
        if self.toeplitz_part is not None:
            out += self.toeplitz_part[0][0]
        if self.hankel_part is not None:
            out += self.antidiagonals[::2]
        return out

    def frobenius_norm(self):
        """Frobenius norm from the defining vectors; O(n) for a single part."""
        n = self.n
        total = 0.0
        if self.toeplitz_part is not None:
            a, b = self.toeplitz_part
            weights = n - np.arange(n)
            total += np.sum(weights * np.abs(a) ** 2)
            total += np.sum(weights[1:] * np.abs(b[1:]) ** 2)
        if self.hankel_part is not None:
            s = np.arange(2 * n - 1)
            weights = np.minimum(s + 1, 2 * n - 1 - s)
            total += np.sum(weights * np.abs(self.antidiagonals) ** 2)
        if self.kind == "toeplitz+hankel":
            t = StructuredMatrix(n, toeplitz=self.toeplitz_part)
            h = self.antidiagonals
            cross = sum(np.vdot(t.row(i), h[i : i + n]) for i in range(n))
            total += 2 * np.real(cross)
        return float(np.sqrt(max(total, 0.0)))

    def transpose(self):
        toeplitz = None
        if self.toeplitz_part is not None:
            a, b = self.toeplitz_part
            toeplitz = (b, a)
        return StructuredMatrix(self.n, toeplitz=toeplitz, hankel=self.hankel_part)

    def conj_transpose(self):
        t = self.transpose()
        return StructuredMatrix(
            self.n,
            toeplitz=_conj_pair(t.toeplitz_part),
            hankel=_conj_pair(t.hankel_part),
        )

    def is_symmetric(self, tol=0.0):
        if self.toeplitz_part is None:
            return True
        a, b = self.toeplitz_part
        return bool(np.all(np.abs(a - b) <= tol))

    def is_persymmetric(self, tol=0.0):
        if self.hankel_part is None:
            return True
        h = self.antidiagonals
        return bool(np.all(np.abs(h - h[::-1]) <= tol))

    def commutes_with_exchange(self, tol=0.0):
        """True when JA = AJ, i.e. symmetric Toeplitz part and persymmetric
        Hankel part."""
        return self.is_symmetric(tol) and self.is_persymmetric(tol)

    def is_hermitian(self, tol=0.0):
        if self.toeplitz_part is not None:
            a, b = self.toeplitz_part
            if not np.all(np.abs(a - np.conj(b)) <= tol):
                return False
        if self.hankel_part is not None:
            if not np.all(np.abs(np.imag(self.antidiagonals)) <= tol):
                return False
        return True

    def _combine(self, other, sign):
        if not isinstance(other, StructuredMatrix):
            return NotImplemented
        if other.n != self.n:
            raise DimensionMismatch(f"Cannot add n={self.n} and n={other.n}.")
        return StructuredMatrix(
            self.n,
            toeplitz=_add_pairs(self.toeplitz_part, other.toeplitz_part, sign),
            hankel=_add_pairs(self.hankel_part, other.hankel_part, sign),
        )

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return StructuredMatrix(
            self.n,
            toeplitz=_scale_pair(self.toeplitz_part, scalar),
            hankel=_scale_pair(self.hankel_part, scalar),
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __repr__(self):
        return f"StructuredMatrix(kind={self.kind!r}, n={self.n})"

    def to_json(self):
        """Serialize as {kind, n, a, b, u, v} with [re, im] pairs."""
        out = {"kind": self.kind, "n": self.n}
        if self.toeplitz_part is not None:
            out["a"], out["b"] = (vector_to_json(x) for x in self.toeplitz_part)
        if self.hankel_part is not None:
            out["u"], out["v"] = (vector_to_json(x) for x in self.hankel_part)
        return out

    @classmethod
    def from_json(cls, obj):
        toeplitz = hankel = None
        if "a" in obj:
            toeplitz = (vector_from_json(obj["a"]), vector_from_json(obj["b"]))
        if "u" in obj:
            hankel = (vector_from_json(obj["u"]), vector_from_json(obj["v"]))
        return cls(obj["n"], toeplitz=toeplitz, hankel=hankel)


def _same_corner(x, y):
    return abs(x - y) <= 1e-12 * max(1.0, abs(x), abs(y))


def _conj_pair(pair):
    if pair is None:
        return None
    return tuple(np.conj(x) for x in pair)


def _scale_pair(pair, scalar):
    if pair is None:
        return None
    return tuple(scalar * x for x in pair)


def _add_pairs(first, second, sign):
    if second is None:
        return first
    if first is None:
        return _scale_pair(second, sign)
    return tuple(x + sign * y for x, y in zip(first, second))


def toeplitz(a, b):
    """Toeplitz matrix T_n(a, b) with first column `a` and first row `b`.

    Raises
    ------
    DimensionMismatch
        If `a` and `b` differ in length.
    CornerMismatch
        If a[0] != b[0].
    """
    a, b = as_vector(a), as_vector(b)
    if len(a) != len(b):
        raise DimensionMismatch(f"len(a)={len(a)} but len(b)={len(b)}.")
    return StructuredMatrix(len(a), toeplitz=(a, b))


def hankel(u, v):
    """Hankel matrix H_n(u, v) with first row `u` and last column `v`.

    Raises
    ------
    DimensionMismatch
        If `u` and `v` differ in length.
    CornerMismatch
        If u[n-1] != v[0].
    """
    u, v = as_vector(u), as_vector(v)
    if len(u) != len(v):
        raise DimensionMismatch(f"len(u)={len(u)} but len(v)={len(v)}.")
    return StructuredMatrix(len(u), hankel=(u, v))


def powers(n, lam):
    """The vector p(lam) = (1, lam, ..., lam^(n-1))."""
    return lam ** np.arange(n)


def identity(n):
    e = unit(n, 0)
    return toeplitz(e, e)


def exchange(n):
    """The exchange matrix J as a Hankel matrix."""
    e = unit(n, 0)
    return hankel(e[::-1], e)


def z_matrix(n, lam):
    """Lower triangular Toeplitz Z_n(lam) = T_n(p(lam), e_1)."""
    p = powers(n, lam)
    return toeplitz(p, unit(n, 0, dtype=p.dtype))


def kms(n, lam):
    """Kac-Murdock-Szego matrix with entries lam^|i-j|."""
    p = powers(n, lam)
    return toeplitz(p, p)


def circulant(x, phi=1.0):
    """The phi-circulant matrix whose first row is `x`."""
    x = as_vector(x)
    phi = complex(phi)
    phi = phi.real if phi.imag == 0 else phi
    return toeplitz(np.concatenate([x[:1], phi * x[:0:-1]]), x)


def fourier_coefficients(func, n, quadrature_points):
    """Fourier coefficients f_k, |k| < n, by trapezoidal quadrature.

    Parameters
    ----------
    func : callable
        Vectorized symbol f(theta) on [0, 2 pi).
    n : int
        Matrix size.
    quadrature_points : int
        Number of equispaced nodes; at least 4n.

    Returns
    -------
    a, b : ndarray
        Coefficients f_0..f_{n-1} and f_0, f_{-1}, ..., f_{-(n-1)}.

    Raises
    ------
    QuadratureUnderResolved
        If `quadrature_points` is below 4n.
    """
    if quadrature_points < 4 * n:
        raise QuadratureUnderResolved(
            f"{quadrature_points} quadrature points for n={n}; need at least {4 * n}."
        )
    theta = 2 * np.pi * np.arange(quadrature_points) / quadrature_points
    coeffs = scipy.fft.fft(np.asarray(func(theta), dtype=complex)) / quadrature_points
    a = coeffs[:n]
    b = np.concatenate([coeffs[:1], coeffs[: -n : -1]])
    logger.debug("Quadrature with %d nodes for n=%d.", quadrature_points, n)
    return a, b


class SymbolSpec(dict):
    """Base class of symbol descriptions. Subclasses fill the dict with their
    JSON fields and implement `coefficients`."""

    variant = None

    def coefficients(self, n, quadrature_points):
        raise NotImplementedError

    def to_json(self):
        return dict(self)


class ZetaLambda(SymbolSpec):
    """The symbol 1/(1 - lam e^{i theta}), generating Z_n(lam).

    Parameters
    ----------
    lam : float
        Real parameter.
    """

    variant = "zeta"

    def __init__(self, lam):
        self["variant"] = self.variant
        self["lam"] = float(lam)

    def coefficients(self, n, quadrature_points):
        return powers(n, self["lam"]), unit(n, 0)


class KmsKappa(SymbolSpec):
    """The symbol 2 Re zeta_lam - 1, generating the KMS matrix."""

    variant = "kms"

    def __init__(self, lam):
        self["variant"] = self.variant
        self["lam"] = float(lam)

    def coefficients(self, n, quadrature_points):
        p = powers(n, self["lam"])
        return p, p


class RationalPQ(SymbolSpec):
    """Rational symbol p(z)/q(z) with simple nonzero roots of q.

    The generated Toeplitz matrix is -sum_k rho_k / z_k Z_n(1/z_k), the
    power-series expansion of the partial fractions rho_k / (z - z_k).

    Parameters
    ----------
    p : list of complex
        Numerator coefficients, constant term first.
    q_roots : list of complex
        Roots of the monic denominator.
    residuals : list of complex, optional
        Partial-fraction residuals; computed as p(z_k)/q'(z_k) when absent.

    Raises
    ------
    DuplicateRoots
        If two roots coincide or a root is zero.
    DegreeViolation
        If deg p >= deg q.
    """

    variant = "rational"

    def __init__(self, p, q_roots, residuals=None):
        p = np.atleast_1d(np.asarray(p, dtype=complex))
        roots = np.atleast_1d(np.asarray(q_roots, dtype=complex))
        if np.any(np.abs(roots) == 0):
            raise DuplicateRoots("Denominator roots must be nonzero.")
        gaps = np.abs(roots[:, None] - roots[None, :]) + np.eye(len(roots))
        if np.any(gaps < 1e-12):
            raise DuplicateRoots(f"Denominator roots are not distinct: {roots}.")
        if len(p) - 1 >= len(roots):
            raise DegreeViolation(
                f"deg p = {len(p) - 1} must be below deg q = {len(roots)}."
            )
        self["variant"] = self.variant
        self["p"] = [complex_to_json(c) for c in p]
        self["q_roots"] = [complex_to_json(z) for z in roots]
        if residuals is not None:
            self["residuals"] = [complex_to_json(r) for r in residuals]

    @property
    def p(self):
        return np.array([complex_from_json(c) for c in self["p"]])

    @property
    def roots(self):
        return np.array([complex_from_json(z) for z in self["q_roots"]])

    @property
    def residuals(self):
        if "residuals" in self:
            return np.array([complex_from_json(r) for r in self["residuals"]])
        return partial_fraction_residuals(self.p, self.roots)

    def terms(self):
        """Pairs (c_k, lam_k) with T = sum_k c_k Z_n(lam_k)."""
        return [(-rho / z, 1 / z) for rho, z in zip(self.residuals, self.roots)]

    def coefficients(self, n, quadrature_points):
        a = np.zeros(n, dtype=complex)
        for c, lam in self.terms():
            a += c * powers(n, lam)
        b = unit(n, 0, dtype=complex) * a[0]
        if np.all(a.imag == 0):
            return a.real, b.real
        return a, b


def partial_fraction_residuals(p, roots):
    """Residuals rho_i = p(z_i) / prod_{j != i} (z_i - z_j)."""
    values = np.polynomial.polynomial.polyval(roots, p)
    out = np.empty(len(roots), dtype=complex)
    for i, z in enumerate(roots):
        out[i] = values[i] / np.prod(z - np.delete(roots, i))
    return out


class PowerAlpha(SymbolSpec):
    """Coefficients f_k = k^(-alpha) for k >= 1.

    Parameters
    ----------
    alpha : float
        Exponent. Non-positive integers give polynomial growth k^p.
    symmetric : bool, optional
        Mirror the coefficients to negative indices; otherwise the matrix is
        lower triangular.
    diagonal : float, optional
        Value of f_0. Defaults to 0^p for alpha = -p <= 0 and to 1 otherwise.
    """

    variant = "power"

    def __init__(self, alpha, symmetric=False, diagonal=None):
        alpha = float(alpha)
        if diagonal is None:
            diagonal = 1.0 if alpha >= 0 else 0.0
        self["variant"] = self.variant
        self["alpha"] = alpha
        self["symmetric"] = bool(symmetric)
        self["diagonal"] = float(diagonal)

    def coefficients(self, n, quadrature_points):
        k = np.arange(1, n, dtype=float)
        a = np.concatenate([[self["diagonal"]], k ** (-self["alpha"])])
        if self["symmetric"]:
            return a, a.copy()
        return a, unit(n, 0) * a[0]


class LogSingularity(SymbolSpec):
    """Logarithmic singularity at z0: f_0 = log z0 and f_k = 1 / (k z0^k) for k >= 1.

    Parameters
    ----------
    z0 : complex
        Point on the unit circle.
    """

    variant = "log"

    def __init__(self, z0):
        z0 = complex(z0)
        if abs(abs(z0) - 1) > 1e-12:
            raise ValueError(f"z0 must lie on the unit circle, got |z0|={abs(z0)}.")
        self["variant"] = self.variant
        self["z0"] = complex_to_json(z0)

    @property
    def z0(self):
        return complex_from_json(self["z0"])

    def coefficients(self, n, quadrature_points):
        z0 = self.z0
        k = np.arange(1, n)
        a = np.concatenate([[np.log(z0)], z0 ** (-k) / k])
        b = unit(n, 0, dtype=complex) * a[0]
        if np.all(a.imag == 0):
            return a.real, b.real
        return a, b


class FourierCoefficients(SymbolSpec):
    """Symbol given by a callable f(theta) or by explicit coefficients.

    Parameters
    ----------
    func : callable, optional
        Vectorized f(theta); coefficients come from quadrature.
    a, b : array_like, optional
        Explicit coefficients f_0..f_{n-1} and f_0, f_{-1}, ...; at least n
        values are needed for a matrix of size n.
    """

    variant = "fourier"

    def __init__(self, func=None, a=None, b=None):
        if (func is None) == (a is None):
            raise ValueError("Provide either a callable or explicit coefficients.")
        self.func = func
        self["variant"] = self.variant
        if a is not None:
            b = a if b is None else b
            self["a"] = vector_to_json(a)
            self["b"] = vector_to_json(b)

    def coefficients(self, n, quadrature_points):
        if self.func is not None:
            return fourier_coefficients(self.func, n, quadrature_points)
        a, b = vector_from_json(self["a"]), vector_from_json(self["b"])
        if len(a) < n or len(b) < n:
            raise DimensionMismatch(f"{min(len(a), len(b))} coefficients for n={n}.")
        return a[:n], b[:n]

    def to_json(self):
        if self.func is not None:
            raise ValueError("A callable symbol cannot be serialized.")
        return dict(self)


SYMBOLS = {
    cls.variant: cls
    for cls in (ZetaLambda, KmsKappa, RationalPQ, PowerAlpha, LogSingularity)
}


def symbol_from_json(obj):
    """Build a SymbolSpec from its JSON description.

    Parameters
    ----------
    obj : dict
        Mapping with a "variant" key and the variant fields.

    Returns
    -------
    spec : SymbolSpec
    """
    obj = dict(obj)
    variant = obj.pop("variant", None)
    if variant == "fourier":
        a = vector_from_json(obj["a"])
        b = vector_from_json(obj["b"]) if "b" in obj else a
        return FourierCoefficients(a=a, b=b)
    if variant == "rational":
        residuals = obj.get("residuals")
        return RationalPQ(
            [complex_from_json(c) for c in obj["p"]],
            [complex_from_json(z) for z in obj["q_roots"]],
            None if residuals is None else [complex_from_json(r) for r in residuals],
        )
    if variant == "log":
        return LogSingularity(complex_from_json(obj["z0"]))
    if variant not in SYMBOLS:
        raise ValueError(f"Unknown symbol variant {variant!r}.")
    return SYMBOLS[variant](**obj)


def toeplitz_from_symbol(spec, n, quadrature_points=None):
    """Toeplitz matrix T_n(f) with entries f_{i-j} for the symbol `spec`.

    Closed-form coefficients are used when the variant has them; callables
    are integrated with the trapezoidal rule.

    Parameters
    ----------
    spec : SymbolSpec
        Symbol description.
    n : int
        Matrix size.
    quadrature_points : int, optional
        Quadrature nodes, default 4n.

    Returns
    -------
    matrix : StructuredMatrix

    Raises
    ------
    QuadratureUnderResolved
        If `quadrature_points` is below 4n.
    """
    quadrature_points = 4 * n if quadrature_points is None else quadrature_points
    if quadrature_points < 4 * n:
        raise QuadratureUnderResolved(
            f"{quadrature_points} quadrature points for n={n}; need at least {4 * n}."
        )
    a, b = spec.coefficients(n, quadrature_points)
    return toeplitz(a, b)


def hankel_from_symbol(spec, n, quadrature_points=None):
    """Hankel matrix H_n(f) with entries f_{i+j} for i + j <= n - 1 and zero
    below the main antidiagonal."""
    quadrature_points = 4 * n if quadrature_points is None else quadrature_points
    a, _ = spec.coefficients(n, quadrature_points)
    v = unit(n, 0, dtype=a.dtype) * a[-1]
    return hankel(a, v)
