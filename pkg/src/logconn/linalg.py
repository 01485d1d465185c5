"""Dense exact linear algebra over Q.

Matrices are numpy object arrays holding gmpy2.mpq entries. Rank, kernels
and inverses go through sympy's DomainMatrix over QQ.
"""
import numpy as np
from gmpy2 import mpq
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .errors import UsageError

ZERO = mpq(0)
ONE = mpq(1)


def q(x):
    """Coerce an int, Fraction, str or mpq into an mpq."""
    if isinstance(x, float):
        raise UsageError(f"refusing inexact float {x!r}")
    return mpq(x)


def zeros(rows, cols=None):
    cols = rows if cols is None else cols
    out = np.empty((rows, cols), dtype=object)
    out.fill(ZERO)
    return out


def eye(s):
    out = zeros(s)
    for i in range(s):
        out[i, i] = ONE
    return out


def asmat(rows, shape=None):
    """Build a matrix from nested lists of exact scalars."""
    if isinstance(rows, np.ndarray):
        out = np.empty(rows.shape, dtype=object)
        for idx, v in np.ndenumerate(rows):
            out[idx] = q(v)
        return out
    rows = [list(r) for r in rows]
    if shape is None:
        shape = (len(rows), len(rows[0]) if rows else 0)
    out = zeros(*shape)
    for i, r in enumerate(rows):
        if len(r) != shape[1]:
            raise UsageError("ragged matrix")
        for j, v in enumerate(r):
            out[i, j] = q(v)
    return out


def mm(a, b):
    if a.shape[1] == 0:
        return zeros(a.shape[0], b.shape[1])
    return a @ b


def is_zero(a):
    return all(v == 0 for v in a.flat)


def equal(a, b):
    return a.shape == b.shape and all(x == y for x, y in zip(a.flat, b.flat))


def kron(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    out = zeros(ra * rb, ca * cb)
    for i in range(ra):
        for j in range(ca):
            if a[i, j] != 0:
                out[i * rb:(i + 1) * rb, j * cb:(j + 1) * cb] = a[i, j] * b
    return out


def to_dm(a):
    rows, cols = a.shape
    elems = {}
    for (i, j), v in np.ndenumerate(a):
        if v != 0:
            elems.setdefault(i, {})[j] = QQ(mpq(v))
    return DomainMatrix(elems, (rows, cols), QQ)


def from_dm(dm):
    rows, cols = dm.shape
    out = zeros(rows, cols)
    for i, row in dm.to_sdm().items():
        for j, v in row.items():
            out[i, j] = mpq(v)
    return out


def rank(a):
    if 0 in a.shape:
        return 0
    return to_dm(a).rank()


def sparse_rank(entries, shape):
    """Rank of a sparse matrix given as {row: {col: value}}."""
    if 0 in shape or not entries:
        return 0
    elems = {i: {j: QQ(mpq(v)) for j, v in row.items() if v != 0}
             for i, row in entries.items()}
    elems = {i: row for i, row in elems.items() if row}
    if not elems:
        return 0
    return DomainMatrix(elems, shape, QQ).rank()


def nullspace(a):
    """Columns spanning the right kernel, in reduced (rref) form."""
    rows, cols = a.shape
    if cols == 0:
        return zeros(0, 0)
    if rows == 0 or is_zero(a):
        return eye(cols)
    ns = to_dm(a).nullspace()
    if ns.shape[0] == 0 or ns.shape[1] == 0:
        return zeros(cols, 0)
    return from_dm(ns).T.copy()


def left_nullspace(a):
    """Rows spanning the left kernel: y with y a = 0."""
    return nullspace(a.T).T.copy()


def inverse(a):
    s = a.shape[0]
    if a.shape != (s, s):
        raise UsageError("inverse of a non-square matrix")
    if s == 0:
        return zeros(0)
    dm = to_dm(a)
    if dm.rank() != s:
        raise UsageError("matrix is singular")
    return from_dm(dm.inv())


def column_basis(a):
    """Linearly independent columns of a spanning its column space (pivots)."""
    if 0 in a.shape:
        return zeros(a.shape[0], 0)
    _, pivots = to_dm(a).rref()
    return a[:, list(pivots)].copy()


def pseudo_left_inverse(b):
    """Some L with L b = I, for b of full column rank."""
    t = b.shape[1]
    if t == 0:
        return zeros(0, b.shape[0])
    gram = mm(b.T, b)
    return mm(inverse(gram), b.T)


def power(a, k):
    out = eye(a.shape[0])
    for _ in range(k):
        out = mm(out, a)
    return out


def nilpotency_index(a):
    """Smallest m with a^m = 0, or None when a is not nilpotent."""
    s = a.shape[0]
    p = eye(s)
    for m in range(s + 1):
        if is_zero(p):
            return m
        p = mm(p, a)
    return None


def is_nilpotent(a):
    return nilpotency_index(a) is not None


def commutator(a, b):
    return mm(a, b) - mm(b, a)


def is_strictly_upper(a):
    s = a.shape[0]
    return all(a[i, j] == 0 for i in range(s) for j in range(i + 1))


def charpoly(a):
    if a.shape[0] == 0:
        return [ONE]
    return [mpq(c) for c in to_dm(a).charpoly()]


def to_pairs(a):
    """Sparse serialisation: [row, col, numerator, denominator] per nonzero."""
    return [[int(i), int(j), int(mpq(v).numerator), int(mpq(v).denominator)]
            for (i, j), v in np.ndenumerate(a) if v != 0]
