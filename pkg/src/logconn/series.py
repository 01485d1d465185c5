"""Truncated normal-crossing rings K[[x1..xn]]/(x1...xr) and their series.

A monomial is stored as a tuple of exponents. When the ring carries the
auxiliary variable u, the u-degree is appended as one extra component.
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
import math

import numpy as np

from . import linalg as la
from .errors import UsageError


@dataclass(frozen=True)
class RingSpec:
    """Ring data. `weights` (default all 1) sets the graded degree used for
    truncation; `u_trunc` (default None) adds the variable u with u-degree
    bounded by it."""

    n: int
    r: int
    trunc: int
    weights: tuple = None
    u_trunc: int = None

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.r <= self.n:
            raise UsageError(f"need 1 <= r <= n, got n={self.n}, r={self.r}")
        if self.trunc < 0:
            raise UsageError("truncation bound must be >= 0")
        if self.u_trunc is not None and self.u_trunc < 0:
            raise UsageError("u truncation bound must be >= 0")
        w = tuple(self.weights) if self.weights is not None else (1,) * self.n
        if len(w) != self.n or any(int(x) < 1 for x in w):
            raise UsageError("weights must be n positive integers")
        object.__setattr__(self, "weights", tuple(int(x) for x in w))

    @property
    def has_u(self):
        return self.u_trunc is not None

    @property
    def key_len(self):
        return self.n + (1 if self.has_u else 0)

    @property
    def uniform(self):
        return all(w == 1 for w in self.weights)

    def wdeg(self, key):
        return sum(w * k for w, k in zip(self.weights, key))

    def udeg(self, key):
        return key[self.n] if self.has_u else 0

    def admits(self, key):
        if len(key) != self.key_len or min(key) < 0:
            return False
        if min(key[:self.r]) != 0:
            return False
        if self.has_u and key[self.n] > self.u_trunc:
            return False
        return self.wdeg(key) <= self.trunc

    def sort_key(self, key):
        return (self.wdeg(key), self.udeg(key), key)

    def monomials(self):
        return _monomials(self)

    def zero_key(self):
        return (0,) * self.key_len

    def with_trunc(self, trunc):
        return RingSpec(self.n, self.r, trunc, self.weights, self.u_trunc)

    def with_u(self, u_trunc):
        return RingSpec(self.n, self.r, self.trunc, self.weights, u_trunc)

    def without_u(self):
        return RingSpec(self.n, self.r, self.trunc, self.weights, None)

    def describe(self):
        out = {"n": self.n, "r": self.r, "trunc": self.trunc}
        if not self.uniform:
            out["weights"] = list(self.weights)
        if self.has_u:
            out["u_trunc"] = self.u_trunc
        return out


@lru_cache(maxsize=256)
def _monomials(ring):
    ranges = []
    for w in ring.weights:
        ranges.append(range(ring.trunc // w + 1))
    if ring.has_u:
        ranges.append(range(ring.u_trunc + 1))
    keys = [k for k in product(*ranges) if ring.admits(k)]
    keys.sort(key=ring.sort_key)
    return tuple(keys)


def add_keys(a, b):
    return tuple(x + y for x, y in zip(a, b))


def sub_keys(a, b):
    return tuple(x - y for x, y in zip(a, b))


def divides(a, b):
    return all(x <= y for x, y in zip(a, b))


@dataclass(frozen=True)
class Derivation:
    """Log(i) is x_i d/dx_i - x_{i+1} d/dx_{i+1} for i < r and the
    "absolute" x_r d/dx_r for i = r; Partial(j) is d/dx_j for j > r."""

    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in ("log", "partial"):
            raise UsageError(f"unknown derivation kind {self.kind!r}")

    @property
    def name(self):
        return f"{self.kind}{self.index}"

    @classmethod
    def parse(cls, name):
        for kind in ("log", "partial"):
            if name.startswith(kind) and name[len(kind):].isdigit():
                return cls(kind, int(name[len(kind):]))
        raise UsageError(f"bad derivation name {name!r}")

    def check(self, ring):
        if self.kind == "log" and not 1 <= self.index <= ring.r:
            raise UsageError(f"{self.name} invalid for r={ring.r}")
        if self.kind == "partial" and not ring.r < self.index <= ring.n:
            raise UsageError(f"{self.name} invalid for n={ring.n}, r={ring.r}")

    def loss(self, ring):
        """Degree lost when applying the derivation."""
        return ring.weights[self.index - 1] if self.kind == "partial" else 0

    def act(self, ring, key):
        """Images of x^key as a list of (key, factor)."""
        i = self.index - 1
        if self.kind == "partial":
            if key[i] == 0:
                return []
            k2 = list(key)
            k2[i] -= 1
            return [(tuple(k2), key[i])]
        if self.index < ring.r:
            c = key[i] - key[i + 1]
            return [(key, c)] if c else []
        out = [(key, key[i])] if key[i] else []
        if ring.has_u and key[ring.n] > 0:
            k2 = list(key)
            k2[ring.n] -= 1
            out.append((tuple(k2), key[ring.n]))
        return out

    def eigen(self, ring, key):
        """Eigenvalue on x^key for log derivations, ignoring u."""
        i = self.index - 1
        return key[i] - key[i + 1] if self.index < ring.r else key[i]


def basis_derivations(ring, family):
    """Basis derivations for a family in canonical order."""
    fam = str(getattr(family, "value", family))
    out = [Derivation("log", i) for i in range(1, ring.r)]
    if fam in ("absolute", "u-extended"):
        out.append(Derivation("log", ring.r))
    elif fam != "relative":
        raise UsageError(f"unknown family {family!r}")
    out.extend(Derivation("partial", j) for j in range(ring.r + 1, ring.n + 1))
    return out


class Series:
    """An element of a truncated ring; coefficients are kept canonical."""

    __slots__ = ("ring", "_c")

    def __init__(self, ring, coeffs=None, strict=True):
        self.ring = ring
        c = {}
        for k, v in (coeffs or {}).items():
            k = tuple(int(x) for x in k)
            if not ring.admits(k):
                if strict:
                    raise UsageError(f"inadmissible monomial {k} for {ring}")
                continue
            v = la.q(v)
            if v != 0:
                c[k] = c.get(k, 0) + v
        self._c = {k: v for k, v in c.items() if v != 0}

    @classmethod
    def _raw(cls, ring, c):
        s = cls.__new__(cls)
        s.ring = ring
        s._c = c
        return s

    @classmethod
    def monomial(cls, ring, key, coeff=1):
        return cls(ring, {tuple(key): coeff})

    @classmethod
    def constant(cls, ring, value):
        return cls(ring, {ring.zero_key(): value})

    def items(self):
        return sorted(self._c.items(), key=lambda kv: self.ring.sort_key(kv[0]))

    def coeff(self, key):
        return self._c.get(tuple(key), la.ZERO)

    def __len__(self):
        return len(self._c)

    def is_zero(self):
        return not self._c

    def _same(self, other):
        if not isinstance(other, Series):
            raise UsageError("expected a Series")
        if other.ring != self.ring:
            raise UsageError("series live in different rings")

    def __add__(self, other):
        self._same(other)
        c = dict(self._c)
        for k, v in other._c.items():
            t = c.get(k, 0) + v
            if t:
                c[k] = t
            else:
                c.pop(k, None)
        return Series._raw(self.ring, c)

    def __neg__(self):
        return Series._raw(self.ring, {k: -v for k, v in self._c.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a):
        a = la.q(a)
        if a == 0:
            return Series._raw(self.ring, {})
        return Series._raw(self.ring, {k: a * v for k, v in self._c.items()})

    def __mul__(self, other):
        if not isinstance(other, Series):
            return self.scale(other)
        self._same(other)
        ring = self.ring
        c = {}
        for ka, va in self._c.items():
            for kb, vb in other._c.items():
                k = add_keys(ka, kb)
                if ring.admits(k):
                    c[k] = c.get(k, 0) + va * vb
        return Series._raw(ring, {k: v for k, v in c.items() if v != 0})

    __rmul__ = scale

    def __eq__(self, other):
        return isinstance(other, Series) and self.ring == other.ring and self._c == other._c

    def __hash__(self):
        return hash((self.ring, frozenset(self._c.items())))

    def __repr__(self):
        if not self._c:
            return "0"
        parts = [f"{v}*x^{k}" for k, v in self.items()]
        return " + ".join(parts)

    def derive(self, theta):
        theta.check(self.ring)
        c = {}
        for k, v in self._c.items():
            for k2, f in theta.act(self.ring, k):
                c[k2] = c.get(k2, 0) + f * v
        return Series._raw(self.ring, {k: v for k, v in c.items() if v != 0})

    def truncate(self, degree):
        r = self.ring
        return Series._raw(r, {k: v for k, v in self._c.items() if r.wdeg(k) <= degree})

    def terms(self):
        return self.items()


def apply_derivation(theta, f):
    return f.derive(theta)


def valuation(f):
    """Minimal graded degree of a nonzero term; math.inf for zero."""
    if f.is_zero():
        return math.inf
    return min(f.ring.wdeg(k) for k, _ in f.items())


def delta(f, pair):
    """Minimal degree of a term with k_i != k_j; math.inf if none."""
    i, j = pair
    ring = f.ring
    if i == j or not (1 <= i <= ring.n and 1 <= j <= ring.n):
        raise UsageError(f"bad index pair {pair}")
    degs = [ring.wdeg(k) for k, _ in f.items() if k[i - 1] != k[j - 1]]
    return min(degs) if degs else math.inf


class SeriesMatrix:
    """A matrix with Series entries, stored as its coefficient matrices.

    `blocks` maps each monomial key to a rows x cols mpq matrix.
    """

    __slots__ = ("ring", "shape", "blocks")

    def __init__(self, ring, shape, blocks=None):
        self.ring = ring
        self.shape = tuple(shape)
        self.blocks = {}
        for k, m in (blocks or {}).items():
            k = tuple(k)
            if m.shape != self.shape:
                raise UsageError("block shape mismatch")
            if not ring.admits(k):
                raise UsageError(f"inadmissible monomial {k}")
            if not la.is_zero(m):
                self.blocks[k] = m

    @classmethod
    def _raw(cls, ring, shape, blocks):
        out = cls.__new__(cls)
        out.ring = ring
        out.shape = shape
        out.blocks = blocks
        return out

    @classmethod
    def zeros(cls, ring, rows, cols=None):
        cols = rows if cols is None else cols
        return cls._raw(ring, (rows, cols), {})

    @classmethod
    def identity(cls, ring, s):
        return cls.constant(ring, la.eye(s))

    @classmethod
    def constant(cls, ring, mat):
        mat = la.asmat(mat) if not isinstance(mat, np.ndarray) else mat
        return cls(ring, mat.shape, {ring.zero_key(): mat})

    @classmethod
    def from_entries(cls, ring, shape, entries):
        """Build from {(i, j): Series}."""
        blocks = {}
        for (i, j), s in entries.items():
            if s.ring != ring:
                raise UsageError("entry in a different ring")
            for k, v in s._c.items():
                if k not in blocks:
                    blocks[k] = la.zeros(*shape)
                blocks[k][i, j] += v
        return cls(ring, shape, blocks)

    @classmethod
    def column(cls, ring, entries):
        return cls.from_entries(ring, (len(entries), 1),
                                {(i, 0): s for i, s in enumerate(entries)})

    def entry(self, i, j):
        return Series._raw(self.ring, {k: m[i, j] for k, m in self.blocks.items() if m[i, j] != 0})

    def keys(self):
        return sorted(self.blocks, key=self.ring.sort_key)

    def items(self):
        return [(k, self.blocks[k]) for k in self.keys()]

    def coeff(self, key):
        m = self.blocks.get(tuple(key))
        return m.copy() if m is not None else la.zeros(*self.shape)

    def constant_term(self):
        return self.coeff(self.ring.zero_key())

    def is_zero(self):
        return not self.blocks

    def is_constant(self):
        return all(k == self.ring.zero_key() for k in self.blocks)

    def _check(self, other):
        if not isinstance(other, SeriesMatrix):
            raise UsageError("expected a SeriesMatrix")
        if other.ring != self.ring:
            raise UsageError("matrices live in different rings")

    def __add__(self, other):
        self._check(other)
        if other.shape != self.shape:
            raise UsageError("shape mismatch")
        blocks = dict(self.blocks)
        for k, m in other.blocks.items():
            t = blocks[k] + m if k in blocks else m
            if la.is_zero(t):
                blocks.pop(k, None)
            else:
                blocks[k] = t
        return SeriesMatrix._raw(self.ring, self.shape, blocks)

    def __neg__(self):
        return SeriesMatrix._raw(self.ring, self.shape, {k: -m for k, m in self.blocks.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a):
        a = la.q(a)
        if a == 0:
            return SeriesMatrix.zeros(self.ring, *self.shape)
        return SeriesMatrix._raw(self.ring, self.shape, {k: a * m for k, m in self.blocks.items()})

    def __matmul__(self, other):
        self._check(other)
        if self.shape[1] != other.shape[0]:
            raise UsageError(f"cannot multiply {self.shape} by {other.shape}")
        ring = self.ring
        shape = (self.shape[0], other.shape[1])
        if self.shape[1] == 0:
            return SeriesMatrix.zeros(ring, *shape)
        right = sorted(other.blocks.items(), key=lambda kv: ring.wdeg(kv[0]))
        rdeg = [ring.wdeg(k) for k, _ in right]
        acc = {}
        for ka, ma in self.blocks.items():
            budget = ring.trunc - ring.wdeg(ka)
            for (kb, mb), d in zip(right, rdeg):
                if d > budget:
                    break
                k = add_keys(ka, kb)
                if not ring.admits(k):
                    continue
                p = ma @ mb
                if k in acc:
                    acc[k] += p
                else:
                    acc[k] = p
        return SeriesMatrix._raw(ring, shape, {k: m for k, m in acc.items() if not la.is_zero(m)})

    def cmul(self, mat):
        """Right multiplication by a constant matrix."""
        shape = (self.shape[0], mat.shape[1])
        out = {k: la.mm(m, mat) for k, m in self.blocks.items()}
        return SeriesMatrix._raw(self.ring, shape, {k: m for k, m in out.items() if not la.is_zero(m)})

    def lmul(self, mat):
        """Left multiplication by a constant matrix."""
        shape = (mat.shape[0], self.shape[1])
        out = {k: la.mm(mat, m) for k, m in self.blocks.items()}
        return SeriesMatrix._raw(self.ring, shape, {k: m for k, m in out.items() if not la.is_zero(m)})

    def series_scale(self, f):
        ring = self.ring
        acc = {}
        for ka, ma in self.blocks.items():
            for kb, v in f._c.items():
                k = add_keys(ka, kb)
                if ring.admits(k):
                    acc[k] = acc[k] + v * ma if k in acc else v * ma
        return SeriesMatrix._raw(ring, self.shape, {k: m for k, m in acc.items() if not la.is_zero(m)})

    @property
    def T(self):
        return SeriesMatrix._raw(self.ring, self.shape[::-1], {k: m.T.copy() for k, m in self.blocks.items()})

    def derive(self, theta):
        theta.check(self.ring)
        acc = {}
        for k, m in self.blocks.items():
            for k2, f in theta.act(self.ring, k):
                acc[k2] = acc[k2] + f * m if k2 in acc else f * m
        return SeriesMatrix._raw(self.ring, self.shape, {k: m for k, m in acc.items() if not la.is_zero(m)})

    def truncate(self, degree):
        r = self.ring
        return SeriesMatrix._raw(r, self.shape, {k: m for k, m in self.blocks.items() if r.wdeg(k) <= degree})

    def map_keys(self, ring, fn):
        """Re-home the matrix in `ring`, sending key k to fn(k) (None drops it)."""
        blocks = {}
        for k, m in self.blocks.items():
            k2 = fn(k)
            if k2 is None or not ring.admits(k2):
                continue
            blocks[k2] = blocks[k2] + m if k2 in blocks else m
        return SeriesMatrix(ring, self.shape, blocks)

    def submatrix(self, rows, cols):
        rows, cols = list(rows), list(cols)
        out = {k: m[np.ix_(rows, cols)] if rows and cols else la.zeros(len(rows), len(cols))
               for k, m in self.blocks.items()}
        return SeriesMatrix(self.ring, (len(rows), len(cols)), out)

    def inverse(self):
        if self.shape[0] != self.shape[1]:
            raise UsageError("inverse of a non-square matrix")
        s = self.shape[0]
        c0inv = la.inverse(self.constant_term())
        v = self.lmul(c0inv) - SeriesMatrix.identity(self.ring, s)
        # v has no constant term, hence is nilpotent in the truncated ring
        total = SeriesMatrix.identity(self.ring, s)
        term = total
        neg_v = -v
        while True:
            term = term @ neg_v
            if term.is_zero():
                break
            total = total + term
        return total.cmul(c0inv)

    def __eq__(self, other):
        if not isinstance(other, SeriesMatrix):
            return NotImplemented
        if self.ring != other.ring or self.shape != other.shape:
            return False
        if self.blocks.keys() != other.blocks.keys():
            return False
        return all(la.equal(m, other.blocks[k]) for k, m in self.blocks.items())

    __hash__ = None

    def nnz(self):
        return sum(int(sum(1 for v in m.flat if v != 0)) for m in self.blocks.values())

    def max_degree(self):
        return max((self.ring.wdeg(k) for k in self.blocks), default=-1)

    def __repr__(self):
        return f"SeriesMatrix({self.shape}, {len(self.blocks)} monomials)"


def block_diag(*mats):
    ring = mats[0].ring
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    blocks = {}
    r0 = c0 = 0
    for m in mats:
        for k, b in m.blocks.items():
            if k not in blocks:
                blocks[k] = la.zeros(rows, cols)
            blocks[k][r0:r0 + m.shape[0], c0:c0 + m.shape[1]] = b
        r0 += m.shape[0]
        c0 += m.shape[1]
    return SeriesMatrix(ring, (rows, cols), blocks)


def kron(a, b):
    """Kronecker product of two series matrices."""
    ring = a.ring
    shape = (a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    acc = {}
    for ka, ma in a.blocks.items():
        for kb, mb in b.blocks.items():
            k = add_keys(ka, kb)
            if ring.admits(k):
                p = la.kron(ma, mb)
                acc[k] = acc[k] + p if k in acc else p
    return SeriesMatrix._raw(ring, shape, {k: m for k, m in acc.items() if not la.is_zero(m)})
