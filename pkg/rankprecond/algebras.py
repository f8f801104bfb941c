"""Matrix algebras: phi-circulants, the sixteen trigonometric algebras and
the eight Hartley-type algebras."""

import logging
from collections import namedtuple
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft
import scipy.linalg

from rankprecond.errors import (
    DimensionMismatch,
    NotAOneSpace,
    UnsupportedHartleyIndex,
)
from rankprecond.util import principal_root

logger = logging.getLogger(__name__)

# (mu1, mu2, mu3, mu4) of the tridiagonal generator X_mu.
TRIG_TABLE = {
    "DCT1": (0, 2, 2, 0),
    "DCT3": (0, 2, 1, 0),
    "DCT5": (0, 2, 1, 1),
    "DCT7": (0, 2, 1, -1),
    "DST3": (0, 1, 2, 0),
    "DST1": (0, 1, 1, 0),
    "DST7": (0, 1, 1, 1),
    "DST5": (0, 1, 1, -1),
    "DCT6": (1, 1, 2, 0),
    "DCT8": (1, 1, 1, 0),
    "DCT2": (1, 1, 1, 1),
    "DCT4": (1, 1, 1, -1),
    "DST8": (-1, 1, 2, 0),
    "DST6": (-1, 1, 1, 0),
    "DST4": (-1, 1, 1, 1),
    "DST2": (-1, 1, 1, -1),
}

HARTLEY_PHI = {1: 1.0, 2: -1.0, 3: -1.0, 4: 1.0, 5: 1.0, 6: -1.0, 7: 1.0, 8: -1.0}

# Hartley indices with a second generator M_k.
HARTLEY_WITH_M = (1, 2, 5, 6)

GeneratorSpec = namedtuple("GeneratorSpec", ["names", "matrices", "eigenvalues"])


def _fmt(x):
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


class AlgebraId(namedtuple("AlgebraId", ["family", "param"])):
    """Tagged algebra identifier.

    `family` is "circ", "trig" or "hartley"; `param` is the unit-modulus
    complex phi, the DST/DCT name, or the Hartley index 1..8. String tokens
    are "circ:<re>,<im>", "trig:DST1" and "hartley:5".
    """

    __slots__ = ()

    def __new__(cls, family, param):
        if family == "circ":
            phi = complex(param)
            phi = complex(phi.real + 0.0, phi.imag + 0.0)
            if abs(abs(phi) - 1) > 1e-12:
                raise ValueError(f"phi must have unit modulus, got |phi|={abs(phi)}.")
            param = phi
        elif family == "trig":
            param = str(param).upper()
            if param not in TRIG_TABLE:
                raise ValueError(f"Unknown trigonometric algebra {param!r}.")
        elif family == "hartley":
            param = int(param)
            if param not in HARTLEY_PHI:
                raise ValueError(f"Hartley index must be in 1..8, got {param}.")
        else:
            raise ValueError(f"Unknown algebra family {family!r}.")
        return super().__new__(cls, family, param)

    @classmethod
    def parse(cls, token):
        """Build an identifier from its string token."""
        if isinstance(token, AlgebraId):
            return token
        try:
            family, value = str(token).split(":", 1)
        except ValueError:
            raise ValueError(f"Malformed algebra token {token!r}.")
        family = family.strip().lower()
        if family == "circ":
            parts = [float(p) for p in value.split(",")]
            if len(parts) == 1:
                parts.append(0.0)
            if len(parts) != 2:
                raise ValueError(f"Malformed phi in {token!r}.")
            return cls("circ", complex(*parts))
        return cls(family, value.strip())

    @classmethod
    def circulant(cls, phi=1.0):
        return cls("circ", phi)

    @classmethod
    def trig(cls, name):
        return cls("trig", name)

    @classmethod
    def hartley(cls, k):
        return cls("hartley", k)

    @property
    def token(self):
        if self.family == "circ":
            return f"circ:{_fmt(self.param.real)},{_fmt(self.param.imag)}"
        return f"{self.family}:{self.param}"

    @property
    def phi(self):
        """phi of the underlying shift, None for trigonometric algebras."""
        if self.family == "circ":
            return self.param
        if self.family == "hartley":
            return HARTLEY_PHI[self.param]
        return None

    @property
    def mu(self):
        return TRIG_TABLE[self.param] if self.family == "trig" else None

    def __str__(self):
        return self.token


def _broadcast(v, x):
    return v.reshape((-1,) + (1,) * (np.ndim(x) - 1))


def _check(x, n):
    x = np.asarray(x)
    if x.shape[0] != n:
        raise DimensionMismatch(f"Expected leading dimension {n}, got {x.shape[0]}.")
    return x


def shift_matrix(n, phi=1.0):
    """The phi-shift Pi_phi: ones on the superdiagonal, phi at (n-1, 0)."""
    out = np.eye(n, k=1, dtype=complex if np.iscomplexobj(phi) else float)
    out[n - 1, 0] = phi
    return out


def exchange_matrix(n):
    return np.eye(n)[::-1]


def trig_generator(mu, n):
    """Tridiagonal X_mu with first row (mu1, mu2) and last row (mu3, mu4)."""
    mu1, mu2, mu3, mu4 = mu
    out = np.eye(n, k=1) + np.eye(n, k=-1)
    out[0, 0] = mu1
    out[n - 1, n - 1] = mu4
    if n > 1:
        out[0, 1] = mu2
        out[n - 1, n - 2] = mu3
    return out


def y_matrix(n, phi):
    """Y_phi = Pi_phi + Pi_phi^T."""
    pi = shift_matrix(n, phi)
    return pi + pi.T


def m_matrix(k, n):
    """Second Hartley generator M_k.

    M_k = J + (0 (+) tau) with tau = s X (I + sigma J) of order n - 1, where
    (s, sigma) is (1/2, -1) for k = 1 and (-1/2, 1) for k = 2; M_5 = M_6 = J.

    Raises
    ------
    UnsupportedHartleyIndex
        For k outside {1, 2, 5, 6}.
    """
    if k not in HARTLEY_WITH_M:
        raise UnsupportedHartleyIndex(f"No second generator for hartley:{k}.")
    out = exchange_matrix(n)
    if k in (5, 6):
        return out
    if n < 3:
        raise DimensionMismatch(f"M_{k} needs n >= 3, got n={n}.")
    s, sigma = (0.5, -1.0) if k == 1 else (-0.5, 1.0)
    m = n - 1
    x = trig_generator(TRIG_TABLE["DST1"], m)
    out[1:, 1:] += s * x @ (np.eye(m) + sigma * exchange_matrix(m))
    return out


def hartley_y_eigenvalues(n, phi):
    """Eigenvalues of Y_phi in the natural column order of the Hartley
    transforms: 2cos(2 pi j / n) for phi = 1 and 2cos((2j + 1) pi / n) for
    phi = -1."""
    j = np.arange(n)
    if phi > 0:
        return 2 * np.cos(2 * np.pi * j / n)
    return 2 * np.cos((2 * j + 1) * np.pi / n)


def _cas(x):
    return np.cos(x) + np.sin(x)


def _e1(n):
    s = 1 / np.sqrt(2)
    out = np.zeros((n, n))
    out[0, 0] = 1
    m = (n - 2) // 2 if n % 2 == 0 else (n - 1) // 2
    for r in range(1, m + 1):
        out[r, r] = s
        out[r, n - r] = s
    for r in range(n - m, n):
        out[r, n - r] = -s
        out[r, r] = s
    if n % 2 == 0:
        out[n // 2, n // 2] = 1
    return out


def _e2(n):
    s = 1 / np.sqrt(2)
    out = np.zeros((n, n))
    m = n // 2
    for r in range(m):
        out[r, r] = s
        out[r, n - 1 - r] = -s
    for r in range(n - m, n):
        out[r, n - 1 - r] = s
        out[r, r] = s
    if n % 2 == 1:
        out[m, m] = 1
    return out


def hartley_matrix(k, n):
    """Real orthogonal transform H_k of the Hartley-type algebra k.

    H_1 = cas(2 pi ij / n), K = H_2 = cas(pi i (2j + 1) / n) and
    G = H_3 = cas(pi (2i + 1)(2j + 1) / (2n)), all scaled by 1/sqrt(n);
    H_4 = K^T, H_5 = K^T E_1, H_6 = G E_2, H_7 = H_1 E_1^T, H_8 = K E_2^T.
    """
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    scale = 1 / np.sqrt(n)
    if k in (1, 7):
        h = _cas(2 * np.pi * i * j / n) * scale
        return h if k == 1 else h @ _e1(n).T
    if k in (2, 4, 5, 8):
        K = _cas(np.pi * i * (2 * j + 1) / n) * scale
        if k == 2:
            return K
        if k == 4:
            return K.T
        if k == 5:
            return K.T @ _e1(n)
        return K @ _e2(n).T
    G = _cas(np.pi * (2 * i + 1) * (2 * j + 1) / (2 * n)) * scale
    return G if k == 3 else G @ _e2(n)


class Algebra(object):
    """Algebra of matrices V diag(lambda) V^{-1} for a fixed transform V.

    Subclasses provide the transform; `forward` applies V^{-1}, `inverse`
    applies V, `adjoint` applies V* and `transpose` applies V^T, along the
    first axis of their argument.
    """

    unitary = True

    def __init__(self, algebra_id, n):
        if n < 2:
            raise DimensionMismatch(f"Algebras need n >= 2, got n={n}.")
        self.id = algebra_id
        self.n = int(n)

    @cached_property
    def matrix(self):
        raise NotImplementedError

    @cached_property
    def inverse_matrix(self):
        return np.linalg.inv(self.matrix)

    @property
    def first_row(self):
        return self.matrix[0]

    def forward(self, x):
        return self.inverse_matrix @ _check(x, self.n)

    def inverse(self, x):
        return self.matrix @ _check(x, self.n)

    def adjoint(self, x):
        return self.matrix.conj().T @ _check(x, self.n)

    def transpose(self, x):
        return self.matrix.T @ _check(x, self.n)

    def dense_element(self, eigenvalues):
        """The algebra element V diag(eigenvalues) V^{-1} as a dense array."""
        return (self.matrix * eigenvalues[None, :]) @ self.inverse_matrix

    def element_from_first_row(self, x):
        """Eigenvalues of the algebra element whose first row is `x`.

        Raises
        ------
        NotAOneSpace
            If a first-row entry of V vanishes.
        """
        x = _check(x, self.n)
        v0 = self.first_row
        if np.min(np.abs(v0)) <= 1e-12:
            raise NotAOneSpace(f"{self.id.token} is not determined by first rows.")
        return self.transpose(x) / v0

    def generator(self):
        raise NotImplementedError


class CirculantAlgebra(Algebra):
    """phi-circulants, diagonalized by F_phi = diag(theta^i) F with
    theta the principal n-th root of phi."""

    @cached_property
    def theta(self):
        return principal_root(self.id.param, self.n)

    @cached_property
    def delta(self):
        return self.theta ** np.arange(self.n)

    @cached_property
    def eigenvalues(self):
        omega = np.exp(-2j * np.pi / self.n)
        return self.theta * omega ** np.arange(self.n)

    @cached_property
    def matrix(self):
        n = self.n
        phase = np.outer(np.arange(n), np.arange(n)) % n
        return self.delta[:, None] * np.exp(-2j * np.pi * phase / n) / np.sqrt(n)

    @cached_property
    def inverse_matrix(self):
        return self.matrix.conj().T

    @property
    def first_row(self):
        return np.full(self.n, 1 / np.sqrt(self.n))

    def forward(self, x):
        x = _check(x, self.n)
        return scipy.fft.ifft(
            _broadcast(self.delta.conj(), x) * x, axis=0, norm="ortho"
        )

    def inverse(self, x):
        x = _check(x, self.n)
        return _broadcast(self.delta, x) * scipy.fft.fft(x, axis=0, norm="ortho")

    def adjoint(self, x):
        return self.forward(x)

    def transpose(self, x):
        x = _check(x, self.n)
        return scipy.fft.fft(_broadcast(self.delta, x) * x, axis=0, norm="ortho")

    def element_from_first_row(self, x):
        return np.sqrt(self.n) * self.transpose(x)

    def generator(self):
        return GeneratorSpec(
            ("Pi",), (shift_matrix(self.n, self.id.param),), (self.eigenvalues,)
        )


class TrigAlgebra(Algebra):
    """Algebra generated by the tridiagonal X_mu.

    X_mu is symmetrized by a diagonal D, D X_mu D^{-1} = Q diag(lambda) Q^T,
    so V = D^{-1} Q. V is orthogonal exactly when mu2 = mu3 = 1.
    """

    @cached_property
    def mu(self):
        return TRIG_TABLE[self.id.param]

    @cached_property
    def symmetrizer(self):
        x = trig_generator(self.mu, self.n)
        d = np.ones(self.n)
        for i in range(self.n - 1):
            d[i + 1] = d[i] * np.sqrt(x[i, i + 1] / x[i + 1, i])
        return d

    @cached_property
    def _eig(self):
        x = trig_generator(self.mu, self.n)
        off = np.sqrt(np.diag(x, 1) * np.diag(x, -1))
        w, q = scipy.linalg.eigh_tridiagonal(np.diag(x).astype(float), off)
        w, q = w[::-1], q[:, ::-1]
        for col in range(self.n):
            lead = np.flatnonzero(np.abs(q[:, col]) > 1e-10)[0]
            if q[lead, col] < 0:
                q[:, col] = -q[:, col]
        return w, q

    @property
    def unitary(self):
        return bool(np.allclose(self.symmetrizer, 1))

    @cached_property
    def eigenvalues(self):
        return self._eig[0]

    @cached_property
    def matrix(self):
        return self._eig[1] / self.symmetrizer[:, None]

    @cached_property
    def inverse_matrix(self):
        return self._eig[1].T * self.symmetrizer[None, :]

    def forward(self, x):
        x = _check(x, self.n)
        return self._eig[1].T @ (_broadcast(self.symmetrizer, x) * x)

    def inverse(self, x):
        x = _check(x, self.n)
        return (self._eig[1] @ x) / _broadcast(self.symmetrizer, x)

    def adjoint(self, x):
        x = _check(x, self.n)
        return self._eig[1].T @ (x / _broadcast(self.symmetrizer, x))

    transpose = adjoint

    def element_from_first_row(self, x):
        """Eigenvalues of tau_mu(x) = sum_k x_k P_k(X_mu), where the
        polynomials P_0 = 1, P_1 = (t - mu1)/mu2, P_{k+1} = t P_k - P_{k-1}
        give e_1^T P_k(X_mu) = e_{k+1}^T."""
        x = _check(x, self.n)
        mu1, mu2 = self.mu[:2]
        t = self.eigenvalues
        prev, cur = np.ones(self.n), (t - mu1) / mu2
        out = x[0] * prev + x[1] * cur
        for k in range(2, self.n):
            prev, cur = cur, t * cur - prev
            out = out + x[k] * cur
        return out

    def generator(self):
        return GeneratorSpec(
            ("X",), (trig_generator(self.mu, self.n),), (self.eigenvalues,)
        )


class HartleyAlgebra(Algebra):
    """Hartley-type algebra k, diagonalizing Y_phi with phi = 1 for
    k in {1, 4, 5, 7} and phi = -1 otherwise."""

    @property
    def k(self):
        return self.id.param

    @property
    def phi(self):
        return HARTLEY_PHI[self.k]

    @cached_property
    def matrix(self):
        return hartley_matrix(self.k, self.n)

    @cached_property
    def inverse_matrix(self):
        return self.matrix.T

    @cached_property
    def eigenvalues(self):
        return hartley_y_eigenvalues(self.n, self.phi)

    @cached_property
    def second_eigenvalues(self):
        """Eigenvalues of M_k (J for k = 5, 6) read off diag(V^T M_k V)."""
        m = m_matrix(self.k, self.n)
        return np.einsum("ij,ik,kj->j", self.matrix, m, self.matrix)

    def forward(self, x):
        return self.matrix.T @ _check(x, self.n)

    adjoint = forward
    transpose = forward

    def element_from_first_row(self, x):
        if self.k == 3:
            raise NotAOneSpace("hartley:3 is not determined by first rows.")
        return super().element_from_first_row(x)

    def generator(self):
        """(Y_phi, M_k) for k = 1, 2 and the single Y_phi + J for k = 5, 6.

        Raises
        ------
        UnsupportedHartleyIndex
            For k in {3, 4, 7, 8}.
        """
        if self.k not in HARTLEY_WITH_M:
            raise UnsupportedHartleyIndex(f"No second generator for hartley:{self.k}.")
        y = y_matrix(self.n, self.phi)
        if self.k in (5, 6):
            return GeneratorSpec(
                ("Y+J",),
                (y + exchange_matrix(self.n),),
                (self.eigenvalues + self.second_eigenvalues,),
            )
        return GeneratorSpec(
            ("Y", f"M{self.k}"),
            (y, m_matrix(self.k, self.n)),
            (self.eigenvalues, self.second_eigenvalues),
        )


FAMILIES = {"circ": CirculantAlgebra, "trig": TrigAlgebra, "hartley": HartleyAlgebra}


@lru_cache(maxsize=64)
def _algebra(algebra_id, n):
    logger.debug("Building %s transform for n=%d.", algebra_id.token, n)
    return FAMILIES[algebra_id.family](algebra_id, n)


def algebra(algebra_id, n):
    """Shared, cached transform object for an algebra at size n.

    Parameters
    ----------
    algebra_id : AlgebraId or str
        Identifier or token.
    n : int
        Dimension, at least 2.

    Returns
    -------
    algebra : Algebra
    """
    return _algebra(AlgebraId.parse(algebra_id), int(n))


def generator(algebra_id, n):
    """Defining generator(s) and their eigenvalues, as a GeneratorSpec."""
    return algebra(algebra_id, n).generator()


def generator_eigenvalues(algebra_id, n):
    """Eigenvalues of the primary generator (Pi_phi, X_mu or Y_phi), aligned
    with the transform columns."""
    return algebra(algebra_id, n).eigenvalues


def transform_apply(algebra_id, x, direction="forward"):
    """Apply V^{-1} ("forward") or V ("inverse") to `x`."""
    x = np.asarray(x)
    alg = algebra(algebra_id, x.shape[0])
    if direction == "forward":
        return alg.forward(x)
    if direction == "inverse":
        return alg.inverse(x)
    raise ValueError(f"Unknown direction {direction!r}.")


def element_from_first_row(algebra_id, x):
    x = np.asarray(x)
    return algebra(algebra_id, x.shape[0]).element_from_first_row(x)


def describe(algebra_id, n):
    """Summary of an algebra at size n, as a plain dict."""
    alg = algebra(algebra_id, n)
    out = {
        "algebra": alg.id.token,
        "family": alg.id.family,
        "n": alg.n,
        "unitary": alg.unitary,
        "eigenvalues": alg.eigenvalues,
    }
    if alg.id.family == "trig":
        out["mu"] = list(alg.mu)
    else:
        out["phi"] = alg.id.phi
    if alg.id.family == "hartley" and alg.k in HARTLEY_WITH_M:
        out["second_eigenvalues"] = alg.second_eigenvalues
    return out
