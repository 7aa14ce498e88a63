"""
Exact and floating-point analysis of nonnegative rational matrices.

Decisions of the form "leading eigenvalue < 1" are made exactly with
rational arithmetic. Eigenvalue magnitudes are floating estimates.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import networkx as nx
import numpy as np

from .utils import parse_rational, format_rational

logger = logging.getLogger(__name__)

_ZERO = Fraction(0)
_ONE = Fraction(1)


class SpectralError(ValueError):
    """Error for invalid input to a matrix operation"""


class DimensionMismatchError(SpectralError):
    """Error for matrices whose shapes do not chain"""


class BitSizeError(SpectralError):
    """Error for exact elimination exceeding the configured bit-size guard"""


class SingularMatrixError(SpectralError):
    """Error for inverting a singular matrix"""


class NotContractingError(SpectralError):
    """Error for asking a contraction vector of a non-contracting matrix"""


def _as_fraction(value):
    if isinstance(value, float):
        raise ValueError("Matrix entries must be exact rationals, got float {}"
                         .format(value))
    return parse_rational(value)


def _zeros(rows, cols):
    return np.full((rows, cols), _ZERO, dtype=object)


class NonnegMatrix:
    """
    Dense matrix of nonnegative rationals.

    Parameters
    ----------
    entries : sequence of sequences or numpy.ndarray
        Rows of entries given as ints, Fractions or "p/q" strings.
    shape : tuple of int, optional
        Needed only when ``entries`` is empty, to fix the column count.
    """

    __slots__ = ('_entries',)

    def __init__(self, entries, shape=None):
        if isinstance(entries, np.ndarray) and entries.ndim == 2:
            rows = [list(row) for row in entries]
            if shape is None:
                shape = entries.shape
        else:
            rows = [list(row) for row in entries]
        if shape is None:
            shape = (len(rows), len(rows[0]) if rows else 0)
        nrows, ncols = shape
        if len(rows) != nrows or any(len(row) != ncols for row in rows):
            raise SpectralError("Ragged or mis-shaped matrix entries for "
                                "shape {}".format(shape))

        array = _zeros(nrows, ncols)
        for i, row in enumerate(rows):
            for j, value in enumerate(row):
                value = _as_fraction(value)
                if value < 0:
                    raise SpectralError("Negative entry {} at ({}, {})"
                                        .format(value, i, j))
                array[i, j] = value
        array.flags.writeable = False
        self._entries = array

    @classmethod
    def _wrap(cls, array):
        matrix = cls.__new__(cls)
        array = np.array(array, dtype=object)
        array.flags.writeable = False
        matrix._entries = array
        return matrix

    @classmethod
    def zeros(cls, rows, cols=None):
        cols = rows if cols is None else cols
        return cls._wrap(_zeros(rows, cols))

    @classmethod
    def identity(cls, n):
        array = _zeros(n, n)
        for i in range(n):
            array[i, i] = _ONE
        return cls._wrap(array)

    @property
    def shape(self):
        return self._entries.shape

    @property
    def rows(self):
        return self._entries.shape[0]

    @property
    def cols(self):
        return self._entries.shape[1]

    @property
    def entries(self):
        """Copy of the entries as a numpy object array of Fractions."""
        return self._entries.copy()

    def is_square(self):
        return self.rows == self.cols

    def is_zero(self):
        return all(value == 0 for value in self._entries.flat)

    def __getitem__(self, index):
        return self._entries[index]

    def __matmul__(self, other):
        if not isinstance(other, NonnegMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise DimensionMismatchError(
                "Cannot multiply {} by {}".format(self.shape, other.shape))
        if self.cols == 0:
            return NonnegMatrix.zeros(self.rows, other.cols)
        return NonnegMatrix._wrap(self._entries.dot(other._entries))

    def __pow__(self, exponent):
        if not self.is_square():
            raise SpectralError("Only square matrices have powers")
        if exponent < 0:
            raise SpectralError("Negative powers are not supported")
        result = NonnegMatrix.identity(self.rows)
        base = self
        while exponent:
            if exponent & 1:
                result = result @ base
            base = base @ base
            exponent >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, NonnegMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and bool(np.all(self._entries == other._entries)))

    __hash__ = None

    def to_float(self):
        return np.array(self._entries, dtype=float).reshape(self.shape)

    def to_strings(self):
        """Rows of "p/q" strings, as printed in reports."""
        return [[format_rational(v) for v in row] for row in self._entries]

    def to_dict(self):
        return {'shape': list(self.shape), 'entries': self.to_strings()}

    def __repr__(self):
        return 'NonnegMatrix({})'.format(self.to_strings())


def _require_square(W):
    if not W.is_square():
        raise SpectralError("Expected a square matrix, got shape {}"
                            .format(W.shape))


def power_lambda(W, tol=1e-9, max_iterations=10000):
    """
    Estimate the leading eigenvalue of a nonnegative matrix.

    The support graph is split into strongly connected components; the
    spectral radius is the largest radius of the irreducible diagonal
    blocks. Each block is handled by power iteration on ``B + eps*I``
    bracketed by Collatz-Wielandt bounds, falling back to the Gelfand
    formula if the bracket does not close within ``max_iterations``.

    Parameters
    ----------
    W : NonnegMatrix
        Square matrix.
    tol : float
        Absolute accuracy of the returned estimate.
    max_iterations : int
        Iteration cap before the Gelfand fallback.

    Returns
    -------
    float
    """

    _require_square(W)
    n = W.rows
    if n == 0:
        return 0.0

    A = W.to_float()
    support = nx.DiGraph()
    support.add_nodes_from(range(n))
    support.add_edges_from(zip(*np.nonzero(A)))

    radius = 0.0
    for component in nx.strongly_connected_components(support):
        idx = sorted(component)
        if len(idx) == 1:
            value = float(A[idx[0], idx[0]])
        else:
            value = _irreducible_radius(A[np.ix_(idx, idx)], tol,
                                        max_iterations)
        radius = max(radius, value)
    return radius


def _irreducible_radius(B, tol, max_iterations):
    n = B.shape[0]
    eps = max(np.abs(B).sum(axis=1).max() / 2, tol)
    shifted = B + eps * np.eye(n)
    target = tol / 8

    x = np.ones(n)
    for _ in range(max_iterations):
        y = shifted @ x
        ratios = y / x
        lower, upper = ratios.min(), ratios.max()
        if upper - lower <= target:
            return max(0.0, float((lower + upper) / 2 - eps))
        x = y / y.max()

    logger.debug("Power iteration stalled on a %d x %d block, using the "
                 "Gelfand formula", n, n)
    return _gelfand_radius(B, tol)


def _gelfand_radius(B, tol, steps=64):
    """Estimate sp(B) as ||B^(2^k)||^(1/2^k) with rescaling at each squaring."""

    M = np.array(B, dtype=float)
    log_scale = 0.0
    estimate = None
    for k in range(steps):
        norm = np.abs(M).sum(axis=1).max()
        if norm == 0:
            return 0.0
        M = M / norm
        log_scale += math.log(norm)
        previous, estimate = estimate, math.exp(log_scale / 2**k)
        if previous is not None and abs(previous - estimate) <= tol / 8:
            break
        M = M @ M
        log_scale *= 2
    return estimate


def _lcm(a, b):
    return a * b // math.gcd(a, b)


def exact_inverse(matrix, max_bits=4096):
    """
    Invert a square rational matrix by fraction-free Gauss-Jordan elimination.

    Parameters
    ----------
    matrix : array_like
        Square matrix of rationals (entries may be negative).
    max_bits : int
        Largest bit length allowed for any intermediate integer.

    Returns
    -------
    numpy.ndarray
        Object array of Fractions.

    Raises
    ------
    SingularMatrixError, BitSizeError
    """

    rows = [[_as_fraction(v) if not isinstance(v, Fraction) else v
             for v in row] for row in np.asarray(matrix, dtype=object)]
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise SpectralError("Expected a square matrix")
    if n == 0:
        return _zeros(0, 0)

    scale = reduce(_lcm, (v.denominator for row in rows for v in row), 1)
    A = [[int(v * scale) for v in row] + [int(i == j) for j in range(n)]
         for i, row in enumerate(rows)]

    # after step k every entry is a minor of order k + 1 of the scaled
    # matrix, so the division by the previous pivot leaves no remainder
    previous = 1
    for k in range(n):
        pivot = next((i for i in range(k, n) if A[i][k] != 0), None)
        if pivot is None:
            raise SingularMatrixError("Matrix is singular")
        if pivot != k:
            A[k], A[pivot] = A[pivot], A[k]
        row_k = A[k]
        a_kk = row_k[k]
        for i in range(n):
            if i == k:
                continue
            row_i = A[i]
            a_ik = row_i[k]
            for j in range(2 * n):
                quotient, remainder = divmod(a_kk * row_i[j] - a_ik * row_k[j],
                                             previous)
                if remainder:
                    raise SpectralError("Inexact division during elimination")
                row_i[j] = quotient
        previous = a_kk
        largest = max(abs(v) for row in A for v in row).bit_length()
        if largest > max_bits:
            raise BitSizeError("Elimination entries reached {} bits, above the "
                               "guard of {}".format(largest, max_bits))

    # the left block is now previous times the identity
    det = previous
    inverse = _zeros(n, n)
    for i in range(n):
        for j in range(n):
            inverse[i, j] = Fraction(A[i][n + j] * scale, det)
    return inverse


def _identity_minus(W):
    n = W.rows
    M = -W.entries
    for i in range(n):
        M[i, i] = M[i, i] + 1
    return M


def is_contracting(W, max_bits=4096):
    """
    Decide exactly whether sp(W) < 1.

    For nonnegative W this holds iff I - W is invertible with a
    nonnegative inverse.
    """

    _require_square(W)
    if W.rows == 0:
        return True
    try:
        inverse = exact_inverse(_identity_minus(W), max_bits=max_bits)
    except SingularMatrixError:
        return False
    return all(value >= 0 for value in inverse.flat)


def contraction_vector(W, max_bits=4096):
    """
    Return v = (I - W)^-1 1, which satisfies Wv = v - 1 exactly.

    Returns
    -------
    numpy.ndarray
        Object array of positive Fractions.

    Raises
    ------
    NotContractingError
        If sp(W) >= 1.
    """

    _require_square(W)
    n = W.rows
    if n == 0:
        return np.empty(0, dtype=object)
    try:
        inverse = exact_inverse(_identity_minus(W), max_bits=max_bits)
    except SingularMatrixError:
        raise NotContractingError("I - W is singular, W is not contracting")
    if any(value < 0 for value in inverse.flat):
        raise NotContractingError("(I - W)^-1 has a negative entry, W is not "
                                  "contracting")

    v = np.array([sum(inverse[i, :], _ZERO) for i in range(n)], dtype=object)
    Wv = W[:, :].dot(v)
    if any(Wv[i] != v[i] - 1 for i in range(n)):
        raise SpectralError("Contraction vector failed the exact check")
    return v


def block_product(blocks):
    """Exact product B_1 B_2 ... B_k of a dimension-chained list."""

    if not blocks:
        raise SpectralError("Need at least one block")
    for left, right in zip(blocks[:-1], blocks[1:]):
        if left.cols != right.rows:
            raise DimensionMismatchError(
                "Block shapes {} and {} do not chain"
                .format(left.shape, right.shape))
    return reduce(lambda a, b: a @ b, blocks)


@dataclass(frozen=True)
class CyclicInvarianceReport:
    products: tuple
    values: tuple
    spread: float
    agree: bool

    def to_dict(self):
        return {'values': list(self.values), 'spread': self.spread,
                'agree': self.agree,
                'products': [p.to_dict() for p in self.products]}


def cyclic_sp_invariance(blocks, tol=1e-9, max_iterations=10000):
    """
    Compare the leading eigenvalues of every cyclic rotation of a product.

    Parameters
    ----------
    blocks : list of NonnegMatrix
        B_1 ... B_k with B_i.cols == B_(i+1).rows and B_k.cols == B_1.rows.
    tol : float

    Returns
    -------
    CyclicInvarianceReport
    """

    blocks = list(blocks)
    if not blocks:
        raise SpectralError("Need at least one block")
    k = len(blocks)
    for i, block in enumerate(blocks):
        following = blocks[(i + 1) % k]
        if block.cols != following.rows:
            raise DimensionMismatchError(
                "Block {} has {} columns but block {} has {} rows"
                .format(i, block.cols, (i + 1) % k, following.rows))

    products = tuple(block_product(blocks[i:] + blocks[:i]) for i in range(k))
    values = tuple(power_lambda(p, tol=tol, max_iterations=max_iterations)
                   for p in products)
    spread = max(values) - min(values)
    return CyclicInvarianceReport(products=products, values=values,
                                  spread=spread, agree=spread <= tol)


def is_nilpotent(W):
    """True iff W^m = 0 exactly, with m the size of W."""
    _require_square(W)
    if W.rows == 0:
        return True
    return (W ** W.rows).is_zero()
