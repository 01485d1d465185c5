"""Trigonalization, the nilpotent Sylvester solver, gauge recursions and the
reductions of a connection to linear data."""
from dataclasses import dataclass
from math import factorial

import numpy as np

from . import linalg as la
from .connection import (Connection, Family, LinearData, conjugate, effective_degree,
                         gauge, require_nr)
from .errors import NotNilpotentError, UsageError
from .series import Derivation, RingSpec, SeriesMatrix, basis_derivations, divides, sub_keys


class GaugeTransform:
    """Change of frame e' = e U with U having identity constant term."""

    __slots__ = ("U",)

    def __init__(self, U):
        s = U.shape[0]
        if U.shape != (s, s) or not la.equal(U.constant_term(), la.eye(s)):
            raise UsageError("gauge transform needs identity constant term")
        self.U = U

    @property
    def ring(self):
        return self.U.ring

    @classmethod
    def identity(cls, ring, s):
        return cls(SeriesMatrix.identity(ring, s))

    def apply(self, C):
        return gauge(C, self.U)

    def inverse(self):
        return GaugeTransform(self.U.inverse())

    def compose(self, other):
        """Apply self first, then other."""
        return GaugeTransform(self.U @ other.U)

    def residuals(self, C, C2):
        """M U + theta(U) - U M' per derivation, at each derivation's accuracy."""
        out = {}
        for (d, m), m2 in zip(C.items(), C2.matrices):
            res = m @ self.U + self.U.derive(d) - self.U @ m2
            out[d.name] = res.truncate(effective_degree(C.ring, d))
        return out

    def verify(self, C, C2):
        return all(r.is_zero() for r in self.residuals(C, C2).values())

    def certificate(self, C, C2):
        res = self.residuals(C, C2)
        return {
            "residual_nonzero_terms": {k: v.nnz() for k, v in sorted(res.items())},
            "degrees_checked": {d.name: effective_degree(C.ring, d) for d in C.derivations},
            "zero": all(v.is_zero() for v in res.values()),
        }


def _check_commuting_nilpotent(mats):
    for i, m in enumerate(mats):
        if not la.is_nilpotent(m):
            raise NotNilpotentError(f"matrix {i} is not nilpotent", m)
        for m2 in mats[:i]:
            if not la.is_zero(la.commutator(m, m2)):
                raise UsageError("matrices do not commute")


def nilpotent_trigonalize(mats, dim=None):
    """Basis P with P^-1 M P strictly upper triangular for every M.

    Builds the flag V_1 < V_2 < ... where V_{j+1} = {v : M v in V_j for all M}.
    """
    mats = [la.asmat(m) for m in mats]
    if dim is None:
        if not mats:
            raise UsageError("dimension needed for an empty family")
        dim = mats[0].shape[0]
    _check_commuting_nilpotent(mats)
    basis = la.zeros(dim, 0)
    while basis.shape[1] < dim:
        ann = la.left_nullspace(basis) if basis.shape[1] else la.eye(dim)
        if mats:
            cond = np.vstack([la.mm(ann, m) for m in mats])
            layer = la.nullspace(cond)
        else:
            layer = la.eye(dim)
        grown = basis
        for j in range(layer.shape[1]):
            cand = np.hstack([grown, layer[:, j:j + 1]])
            if la.rank(cand) > grown.shape[1]:
                grown = cand
        if grown.shape[1] == basis.shape[1]:
            raise UsageError("flag construction stalled; input not commuting nilpotent")
        basis = grown
    P = basis
    Pinv = la.inverse(P)
    return P, [la.mm(la.mm(Pinv, m), P) for m in mats]


def sylvester_solve(H0, c, rhs):
    """X with H0 X - X H0 + c X = rhs, for nilpotent H0 and c != 0."""
    H0 = la.asmat(H0)
    rhs = la.asmat(rhs)
    c = la.q(c)
    if c == 0:
        raise UsageError("sylvester_solve needs c != 0")
    if not la.is_nilpotent(H0):
        raise NotNilpotentError("H0 is not nilpotent", H0)
    out = la.zeros(*rhs.shape)
    term = rhs / c
    # ad(H0) is nilpotent of index <= 2m - 1, so the series stops
    while not la.is_zero(term):
        out = out + term
        term = -(la.mm(H0, term) - la.mm(term, H0)) / c
    return out


@dataclass
class NormalForm:
    gauge: GaugeTransform
    matrix: SeriesMatrix
    pivot: int
    stabilized: bool
    achieved_degree: int


def balanced(key, pivot):
    return key[pivot - 1] == key[pivot]


def gauge_normal_form(C, pivot):
    """Gauge the pivot matrix H of Log(pivot) to H0 + X with X on balanced
    monomials, solving H U + d(U) = U (H0 + X) monomial by monomial."""
    ring = C.ring
    if not 1 <= pivot < ring.r:
        raise UsageError(f"pivot must pair two crossing variables, got {pivot}")
    theta = Derivation("log", pivot)
    H = C.matrix(theta)
    H0 = H.constant_term()
    if not la.is_nilpotent(H0):
        raise NotNilpotentError("pivot residue is not nilpotent", H0)
    if not la.is_strictly_upper(H0):
        raise UsageError("pivot residue must be strictly upper triangular; trigonalize first")
    s = C.rank
    zero = ring.zero_key()
    U = {zero: la.eye(s)}
    X = {}
    hb = H.blocks
    for key in ring.monomials():
        if key == zero:
            continue
        rhs = -hb[key].copy() if key in hb else la.zeros(s)
        for beta, ub in U.items():
            if beta == zero or beta == key or not divides(beta, key):
                continue
            alpha = sub_keys(key, beta)
            if alpha in hb:
                rhs -= hb[alpha] @ ub
            if alpha in X:
                rhs += ub @ X[alpha]
        if la.is_zero(rhs):
            continue
        c = key[pivot - 1] - key[pivot]
        if c == 0:
            X[key] = -rhs
        else:
            U[key] = sylvester_solve(H0, c, rhs)
    Um = SeriesMatrix(ring, (s, s), U)
    M = SeriesMatrix(ring, (s, s), {zero: H0, **X})
    top = max((ring.wdeg(k) for k in U if k != zero), default=0)
    stabilized = all(ring.wdeg(k) < ring.trunc for k in U if k != zero) or ring.trunc == 0
    return NormalForm(GaugeTransform(Um), M, pivot, stabilized, top)


def partial_derivations(C):
    return [d for d in C.derivations if d.kind == "partial"]


def katz_project(C, v):
    """P(v) = sum_k (-1)^|k| x^k nabla(D)^k v / k! over the partial directions."""
    ring = C.ring
    parts = partial_derivations(C)
    if not parts:
        return v
    idx = [d.index - 1 for d in parts]
    ws = [ring.weights[i] for i in idx]
    N = ring.trunc
    layers = {(0,) * len(parts): v}
    order = sorted(_exponents(ws, N), key=lambda k: (sum(w * x for w, x in zip(ws, k)), k))
    total = v
    for k in order:
        if not any(k):
            continue
        j = next(i for i, x in enumerate(k) if x)
        prev = list(k)
        prev[j] -= 1
        deg = sum(w * x for w, x in zip(ws, k))
        g = C.apply(parts[j], layers[tuple(prev)]).truncate(N - deg)
        layers[k] = g
        coeff = la.q((-1) ** sum(k)) / np.prod([factorial(x) for x in k], dtype=object)

        def shift(key, k=k):
            out = list(key)
            for i, x in zip(idx, k):
                out[i] += x
            return tuple(out)

        total = total + g.map_keys(ring, shift).scale(coeff)
    return total


def _exponents(ws, N):
    out = [()]
    for w in ws:
        out = [e + (x,) for e in out for x in range(N // w + 1)]
    return [e for e in out if sum(w * x for w, x in zip(ws, e)) <= N]


def katz_frame(C):
    return GaugeTransform(katz_project(C, SeriesMatrix.identity(C.ring, C.rank)))


def base_ring(ring):
    return RingSpec(ring.r, ring.r, ring.trunc, ring.weights[:ring.r], ring.u_trunc)


def _drop_partial_key(ring):
    n, r = ring.n, ring.r

    def fn(key):
        if any(key[r:n]):
            return None
        return key[:r] + key[n:]
    return fn


def base_extend(C, ring):
    """Pull a connection over (r, r) back to `ring` with zero partial matrices."""
    if base_ring(ring) != C.ring:
        raise UsageError("connection does not live on the base of the target ring")
    n, r = ring.n, ring.r
    mats = {}
    for d, m in C.items():
        mats[d] = m.map_keys(ring, lambda k: k[:r] + (0,) * (n - r) + k[r:])
    return Connection(ring, C.family, mats, rank=C.rank)


@dataclass
class SmoothDescent:
    connection: Connection
    gauge: GaugeTransform


def descend_smooth(C, check=True):
    """Descend along the smooth directions using the Katz frame."""
    ring = C.ring
    if ring.n == ring.r:
        raise UsageError("descend_smooth needs n > r")
    if check:
        require_nr(C)
    Q = katz_frame(C)
    G = Q.apply(C)
    drop = _drop_partial_key(ring)
    bring = base_ring(ring)
    mats = {}
    for d, m in G.items():
        if d.kind == "partial":
            if not m.truncate(effective_degree(ring, d)).is_zero():
                raise UsageError(f"Katz frame is not horizontal for {d.name}")
            continue
        if any(any(k[ring.r:ring.n]) for k in m.blocks):
            raise UsageError(f"{d.name} matrix depends on smooth variables after projection")
        mats[d] = m.map_keys(bring, drop)
    return SmoothDescent(Connection(bring, C.family, mats, rank=C.rank), Q)


def crossing_ring(ring):
    """Ring of the subring A = image of x_{n-1} -> x_{n-1} x_n, with the merged
    variable weighted by the sum of the two old weights."""
    n = ring.n
    if ring.r != n or n < 2:
        raise UsageError("crossing descent needs r = n >= 2")
    w = ring.weights[:n - 2] + (ring.weights[n - 2] + ring.weights[n - 1],)
    return RingSpec(n - 1, n - 1, ring.trunc, w, ring.u_trunc)


def _h_inverse(ring):
    n = ring.n

    def fn(key):
        if key[n - 2] != key[n - 1]:
            return None
        return key[:n - 1] + key[n:]
    return fn


def _h(ring):
    n = ring.n

    def fn(key):
        return key[:n - 1] + (key[n - 2],) + key[n - 1:]
    return fn


def h_embed(m, ring):
    """Image of a matrix over the subring A inside the ring B."""
    return m.map_keys(ring, _h(ring))


@dataclass
class CrossingDescent:
    connection: Connection
    nilpotent: SeriesMatrix
    gauge: GaugeTransform
    stabilized: bool


def descend_crossing(C, check=True):
    """Normalize at pivot n-1 and read the result over the balanced subring."""
    ring = C.ring
    aring = crossing_ring(ring)
    n = ring.n
    if check:
        require_nr(C)
    res = [m.constant_term() for d, m in C.items() if d.kind == "log"]
    P, _ = nilpotent_trigonalize(res, C.rank)
    Pinv = la.inverse(P)
    nf = gauge_normal_form(conjugate(C, P, Pinv), n - 1)
    V = GaugeTransform(nf.gauge.U.cmul(Pinv).lmul(P))
    G = V.apply(C)
    back = _h_inverse(ring)
    mats = {}
    nil = None
    for d, m in G.items():
        bad = [k for k in m.blocks if k[n - 2] != k[n - 1]]
        if bad:
            raise UsageError(f"{d.name} not balanced after normalization at {bad[0]}")
        am = m.map_keys(aring, back)
        if d.index == n - 1:
            nil = am
        elif d.index == n:
            mats[Derivation("log", n - 1)] = am
        else:
            mats[d] = am
    if not la.is_zero(la.power(nil.constant_term(), C.rank)):
        raise NotNilpotentError("normalized pivot is not nilpotent", nil.constant_term())
    return CrossingDescent(Connection(aring, C.family, mats, rank=C.rank), nil, V, nf.stabilized)


def crossing_expand(C, nil, ring):
    """Quasi-inverse of descend_crossing: tensor up along h and let the pivot
    act through `nil`."""
    if crossing_ring(ring) != C.ring:
        raise UsageError("connection does not live on the crossing subring")
    n = ring.n
    mats = {Derivation("log", n - 1): h_embed(nil, ring)}
    for d, m in C.items():
        target = Derivation("log", n) if d.index == n - 1 else d
        mats[target] = h_embed(m, ring)
    return Connection(ring, C.family, mats, rank=C.rank)


@dataclass
class Reduction:
    linear_data: LinearData
    gauge: GaugeTransform
    stabilized: bool


def _reduce(C):
    ring = C.ring
    if ring.n > ring.r:
        sd = descend_smooth(C, check=False)
        red = _reduce(sd.connection)
        lifted = _extend_matrix(red.gauge.U, ring)
        return Reduction(red.linear_data, sd.gauge.compose(GaugeTransform(lifted)), red.stabilized)
    if ring.n == 1:
        mats = []
        for d, m in C.items():
            if not m.is_constant():
                raise UsageError(f"{d.name} matrix is not constant at the base of the recursion")
            mats.append(m.constant_term())
        return Reduction(LinearData(C.rank, tuple(mats)), GaugeTransform.identity(ring, C.rank), True)
    cd = descend_crossing(C, check=False)
    red = _reduce(cd.connection)
    W = red.gauge.U
    nil = (W.inverse() @ cd.nilpotent @ W)
    if not nil.is_constant():
        raise UsageError("pivot endomorphism did not become constant; truncation too small?")
    mats = list(red.linear_data.nilpotents)
    pos = len(mats) - 1 if C.family is not Family.RELATIVE else len(mats)
    mats.insert(pos, nil.constant_term())
    total = cd.gauge.compose(GaugeTransform(h_embed(W, ring)))
    return Reduction(LinearData(C.rank, tuple(mats)), total, cd.stabilized and red.stabilized)


def _extend_matrix(m, ring):
    n, r = ring.n, ring.r
    return m.map_keys(ring, lambda k: k[:r] + (0,) * (n - r) + k[r:])


def reduce_with_gauge(C, check=True):
    """Linear data of C together with a gauge taking C to its constant model."""
    if check:
        require_nr(C)
    return _reduce(C)


def reduce_to_linear_data(C):
    return reduce_with_gauge(C).linear_data


def expand_from_linear_data(L, ring, family=None):
    """Constant connection: log matrices from L in order, partial matrices zero."""
    if family is None:
        family = Family.RELATIVE if len(L.nilpotents) == ring.r - 1 else Family.ABSOLUTE
    derivs = basis_derivations(ring, family)
    logs = [d for d in derivs if d.kind == "log"]
    if len(logs) != len(L.nilpotents):
        raise UsageError(f"{len(L.nilpotents)} matrices given, family needs {len(logs)}")
    it = iter(L.nilpotents)
    mats = [SeriesMatrix.constant(ring, next(it)) if d.kind == "log" else SeriesMatrix.zeros(ring, L.dim)
            for d in derivs]
    return Connection(ring, family, mats, rank=L.dim)
