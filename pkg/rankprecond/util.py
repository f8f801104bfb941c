"""Utility functions."""

import numpy as np

from rankprecond.errors import DimensionMismatch


def complex_to_json(value):
    """Encode a complex scalar as a [re, im] pair."""
    value = complex(value)
    return [value.real, value.imag]


def complex_from_json(value):
    """Decode a [re, im] pair. Plain numbers are accepted as real values."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"Expected a [re, im] pair, got {value!r}.")
        return complex(value[0], value[1])
    return complex(value)


def vector_to_json(x):
    """Encode a vector as a list of [re, im] pairs.

    Parameters
    ----------
    x : array_like
        One-dimensional real or complex vector.

    Returns
    -------
    encoded : list of list
        One [re, im] pair per entry.
    """
    return [complex_to_json(item) for item in np.asarray(x).ravel()]


def vector_from_json(encoded):
    """Decode a vector whose entries are numbers or [re, im] pairs.

    The result is real when every imaginary part is zero.
    """
    values = np.array([complex_from_json(item) for item in encoded], dtype=complex)
    if np.all(values.imag == 0):
        return values.real
    return values


def matrix_to_json(matrix):
    """Encode a matrix as a list of rows of [re, im] pairs."""
    return [vector_to_json(row) for row in np.atleast_2d(matrix)]


def matrix_from_json(encoded, n):
    """Decode a matrix stored as a list of rows, with `n` rows."""
    if not encoded:
        return np.zeros((n, 0), dtype=complex)
    return np.array([vector_from_json(row) for row in encoded], dtype=complex)


def as_vector(x, n=None):
    """Return `x` as a one-dimensional float or complex array.

    Parameters
    ----------
    x : array_like
        Input values.
    n : int, optional
        Expected length.

    Returns
    -------
    x : ndarray
        Float array for real input, complex array otherwise.

    Raises
    ------
    DimensionMismatch
        If `x` is not one-dimensional or its length is not `n`.
    """
    x = np.asarray(x)
    x = x.astype(complex) if np.iscomplexobj(x) else x.astype(float)
    x = np.atleast_1d(x)
    if x.ndim != 1:
        raise DimensionMismatch("Expected a one-dimensional vector.")
    if n is not None and len(x) != n:
        raise DimensionMismatch(f"Expected length {n}, got {len(x)}.")
    return x


def frozen(x):
    """Mark an array read-only and return it."""
    x.setflags(write=False)
    return x


def unit(n, k, dtype=float):
    """Canonical basis vector with a one at (0-based) position `k`."""
    e = np.zeros(n, dtype=dtype)
    e[k] = 1
    return e


def principal_root(phi, n):
    """Principal n-th root of a unit-modulus complex number."""
    return np.exp(1j * np.angle(complex(phi)) / n)


def maybe_real(x, *inputs):
    """Drop the imaginary part of `x` when every input is real."""
    if all(not np.iscomplexobj(item) for item in inputs):
        return np.real(x)
    return x


def numerical_rank(matrix, tol=1e-10):
    """Number of singular values above `tol` times the largest one."""
    s = np.linalg.svd(np.asarray(matrix), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))
