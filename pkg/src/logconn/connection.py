"""Integrable log connections on free modules over a truncated ring.

Convention: the matrix M_theta has the coordinates of nabla(theta)(e_j) in
column j, so nabla(theta) acts on coordinate columns as v -> theta(v) + M v.
"""
from dataclasses import dataclass, field
from enum import Enum
import random

import numpy as np

from . import linalg as la
from .errors import NotIntegrableError, NotNilpotentError, UsageError
from .series import Derivation, SeriesMatrix, basis_derivations, kron


class Family(str, Enum):
    RELATIVE = "relative"
    ABSOLUTE = "absolute"
    UEXTENDED = "u-extended"


def as_family(value):
    try:
        return Family(getattr(value, "value", value))
    except ValueError:
        raise UsageError(f"unknown family {value!r}") from None


class Connection:
    """A free module of rank s with one s x s matrix per basis derivation."""

    __slots__ = ("ring", "family", "rank", "derivations", "matrices")

    def __init__(self, ring, family, matrices, rank=None):
        family = as_family(family)
        if family is Family.UEXTENDED and not ring.has_u:
            raise UsageError("u-extended connections need a ring with u_trunc")
        if family is not Family.UEXTENDED and ring.has_u:
            raise UsageError("only u-extended connections live over a u-ring")
        derivs = basis_derivations(ring, family)
        if isinstance(matrices, dict):
            named = {(d.name if isinstance(d, Derivation) else str(d)): m for d, m in matrices.items()}
            extra = set(named) - {d.name for d in derivs}
            if extra:
                raise UsageError(f"derivations {sorted(extra)} not in the {family.value} basis")
            if rank is None:
                if not named:
                    raise UsageError("rank needed when no matrices are given")
                rank = next(iter(named.values())).shape[0]
            matrices = [named.get(d.name, SeriesMatrix.zeros(ring, rank)) for d in derivs]
        matrices = tuple(matrices)
        if len(matrices) != len(derivs):
            raise UsageError(f"{family.value} family over {ring} needs {len(derivs)} matrices")
        if rank is None:
            if not matrices:
                raise UsageError("rank needed when the family has no derivations")
            rank = matrices[0].shape[0]
        for m in matrices:
            if m.ring != ring:
                raise UsageError("matrix over a different ring")
            if m.shape != (rank, rank):
                raise UsageError(f"matrix shape {m.shape} does not match rank {rank}")
        self.ring = ring
        self.family = family
        self.rank = rank
        self.derivations = tuple(derivs)
        self.matrices = matrices

    @property
    def u_trunc(self):
        return self.ring.u_trunc

    def matrix(self, theta):
        if isinstance(theta, str):
            theta = Derivation.parse(theta)
        for d, m in zip(self.derivations, self.matrices):
            if d == theta:
                return m
        raise UsageError(f"{theta.name} is not a basis derivation of this connection")

    def items(self):
        return list(zip(self.derivations, self.matrices))

    def apply(self, theta, v):
        """nabla(theta) applied to a module element given as a column."""
        return v.derive(theta) + self.matrix(theta) @ v

    def with_matrices(self, matrices):
        return Connection(self.ring, self.family, matrices, rank=self.rank)

    def __eq__(self, other):
        if not isinstance(other, Connection):
            return NotImplemented
        return (self.ring == other.ring and self.family == other.family
                and self.rank == other.rank and self.matrices == other.matrices)

    __hash__ = None

    def __repr__(self):
        return f"Connection({self.family.value}, rank={self.rank}, ring={self.ring})"


def unit(ring, family=Family.RELATIVE, rank=1):
    return Connection(ring, family, [SeriesMatrix.zeros(ring, rank)] * len(basis_derivations(ring, family)), rank=rank)


def constant_connection(ring, family, mats, rank=None):
    """Connection whose matrices are the given constant matrices, in basis order."""
    mats = [m if isinstance(m, np.ndarray) else la.asmat(m) for m in mats]
    return Connection(ring, family, [SeriesMatrix.constant(ring, m) for m in mats], rank=rank)


def effective_degree(ring, *derivations):
    return ring.trunc - max((d.loss(ring) for d in derivations), default=0)


@dataclass
class IntegrabilityReport:
    passed: bool
    pair: tuple = None
    residual: SeriesMatrix = None
    degree: int = None

    def __bool__(self):
        return self.passed


def integrability_residual(C, theta, eta):
    m_t, m_e = C.matrix(theta), C.matrix(eta)
    res = m_e.derive(theta) - m_t.derive(eta) + m_t @ m_e - m_e @ m_t
    return res.truncate(effective_degree(C.ring, theta, eta))


def check_integrability(C):
    """Checks theta(M_eta) - eta(M_theta) + [M_theta, M_eta] = 0 on all pairs.

    A failing pair is reported as (theta, eta) with theta the later basis
    derivation.
    """
    ds = C.derivations
    for j in range(len(ds)):
        for i in range(j):
            res = integrability_residual(C, ds[j], ds[i])
            if not res.is_zero():
                return IntegrabilityReport(False, (ds[j].name, ds[i].name), res,
                                           effective_degree(C.ring, ds[i], ds[j]))
    return IntegrabilityReport(True, degree=effective_degree(C.ring, *ds))


def require_integrable(C):
    rep = check_integrability(C)
    if not rep.passed:
        raise NotIntegrableError(f"connection is not integrable at pair {rep.pair}",
                                 rep.pair, rep.residual)


class ResidueSet:
    """Constant terms of the log matrices, keyed by derivation name."""

    def __init__(self, items):
        self.items = list(items)

    def names(self):
        return [d.name for d, _ in self.items]

    def matrices(self):
        return [m for _, m in self.items]

    def __getitem__(self, name):
        for d, m in self.items:
            if d.name == name:
                return m
        raise KeyError(name)

    def __len__(self):
        return len(self.items)

    def commute(self):
        ms = self.matrices()
        return all(la.is_zero(la.commutator(a, b)) for i, a in enumerate(ms) for b in ms[:i])


def residues(C):
    return ResidueSet((d, m.constant_term()) for d, m in C.items() if d.kind == "log")


def _x_constant_part(C, m):
    """Coefficients of the x-free part of m, indexed by u-degree."""
    n = C.ring.n
    return {k[n]: b for k, b in m.blocks.items() if not any(k[:n])}


def _poly_mat_power_zero(parts, s):
    """Is the u-polynomial matrix sum parts[j] u^j nilpotent (untruncated)?"""
    power = {0: la.eye(s)}
    for _ in range(s):
        nxt = {}
        for a, pa in power.items():
            for b, pb in parts.items():
                nxt[a + b] = nxt[a + b] + la.mm(pa, pb) if a + b in nxt else la.mm(pa, pb)
        power = {k: v for k, v in nxt.items() if not la.is_zero(v)}
    return not power


@dataclass
class NilpotenceReport:
    passed: bool
    witness: object = None
    where: str = None
    combinations_checked: int = 0

    def __bool__(self):
        return self.passed


def check_nilpotent_residues(C, samples=8, seed=0, assume_integrable=False):
    """True iff every residue is nilpotent; also spot-checks combinations."""
    if not assume_integrable:
        require_integrable(C)
    rs = residues(C)
    for d, m in rs.items:
        if not la.is_nilpotent(m):
            return NilpotenceReport(False, m, d.name)
    if C.family is Family.UEXTENDED:
        for d, full in C.items():
            if d.kind != "log":
                continue
            parts = _x_constant_part(C, full)
            if parts and not _poly_mat_power_zero(parts, C.rank):
                return NilpotenceReport(False, parts.get(0, la.zeros(C.rank)), f"{d.name} (u-polynomial part)")
    rng = random.Random(seed)
    mats = rs.matrices()
    checked = 0
    if len(mats) > 1:
        for _ in range(samples):
            coeffs = [rng.randint(-5, 5) for _ in mats]
            comb = la.zeros(C.rank)
            for c, m in zip(coeffs, mats):
                comb = comb + c * m
            checked += 1
            if not la.is_nilpotent(comb):
                return NilpotenceReport(False, comb, f"combination {coeffs}", checked)
    return NilpotenceReport(True, combinations_checked=checked)


def require_nr(C):
    """Precondition of the ^nr category: integrable with nilpotent residues."""
    require_integrable(C)
    rep = check_nilpotent_residues(C, assume_integrable=True)
    if not rep.passed:
        raise NotNilpotentError(
            f"residue {rep.where} is not nilpotent; outside the nilpotent-residue "
            "category kernels and cokernels need not be free", rep.witness)


def _same_kind(c1, c2):
    if c1.ring != c2.ring or c1.family != c2.family:
        raise UsageError("connections differ in ring or family")


def tensor(c1, c2):
    _same_kind(c1, c2)
    i1 = SeriesMatrix.identity(c1.ring, c1.rank)
    i2 = SeriesMatrix.identity(c1.ring, c2.rank)
    mats = [kron(a, i2) + kron(i1, b) for a, b in zip(c1.matrices, c2.matrices)]
    return Connection(c1.ring, c1.family, mats, rank=c1.rank * c2.rank)


def dual(C):
    return C.with_matrices([-m.T for m in C.matrices])


def direct_sum(*cs):
    from .series import block_diag
    for c in cs[1:]:
        _same_kind(cs[0], c)
    mats = [block_diag(*ms) for ms in zip(*(c.matrices for c in cs))]
    return Connection(cs[0].ring, cs[0].family, mats, rank=sum(c.rank for c in cs))


def restrict(C):
    """Forget the absolute derivation."""
    if C.family is not Family.ABSOLUTE:
        raise UsageError("restrict needs an absolute connection")
    mats = {d: m for d, m in C.items() if not (d.kind == "log" and d.index == C.ring.r)}
    return Connection(C.ring, Family.RELATIVE, mats, rank=C.rank)


def pullback_from_log_point(L, ring):
    """The absolute connection with constant last log matrix N, others zero."""
    if len(L.nilpotents) != 1:
        raise UsageError("pullback needs exactly one nilpotent endomorphism")
    derivs = basis_derivations(ring, Family.ABSOLUTE)
    mats = []
    for d in derivs:
        if d.kind == "log" and d.index == ring.r:
            mats.append(SeriesMatrix.constant(ring, L.nilpotents[0]))
        else:
            mats.append(SeriesMatrix.zeros(ring, L.dim))
    return Connection(ring, Family.ABSOLUTE, mats, rank=L.dim)


def extend_u(C, u_trunc):
    if C.family is not Family.ABSOLUTE:
        raise UsageError("extend_u needs an absolute connection")
    uring = C.ring.with_u(u_trunc)
    mats = [m.map_keys(uring, lambda k: k + (0,)) for m in C.matrices]
    return Connection(uring, Family.UEXTENDED, mats, rank=C.rank)


def set_u_zero(C):
    if C.family is not Family.UEXTENDED:
        raise UsageError("set_u_zero needs a u-extended connection")
    ring = C.ring.without_u()
    n = ring.n
    mats = {}
    for d, m in C.items():
        if d.kind == "log" and d.index == ring.r:
            continue
        mats[d] = m.map_keys(ring, lambda k: k[:n] if k[n] == 0 else None)
    return Connection(ring, Family.RELATIVE, mats, rank=C.rank)


def gauge(C, U, Uinv=None):
    """Matrices in the frame e' = e U: M' = U^-1 (M U + theta(U))."""
    if Uinv is None:
        Uinv = U.inverse()
    mats = [Uinv @ (m @ U + U.derive(d)) for d, m in C.items()]
    return C.with_matrices(mats)


def conjugate(C, P, Pinv=None):
    """Change of frame by a constant invertible matrix P."""
    if Pinv is None:
        Pinv = la.inverse(P)
    return C.with_matrices([m.cmul(P).lmul(Pinv) for m in C.matrices])


@dataclass(eq=False)
class LinearData:
    """A rational vector space with commuting nilpotent endomorphisms."""

    dim: int
    nilpotents: tuple = field(default_factory=tuple)

    def __post_init__(self):
        mats = []
        for m in self.nilpotents:
            m = la.asmat(m)
            if m.shape != (self.dim, self.dim):
                raise UsageError(f"matrix shape {m.shape} does not match dim {self.dim}")
            if not la.is_nilpotent(m):
                raise NotNilpotentError("linear data matrix is not nilpotent", m)
            mats.append(m)
        for i, a in enumerate(mats):
            for b in mats[:i]:
                if not la.is_zero(la.commutator(a, b)):
                    raise UsageError("linear data matrices do not commute")
        self.nilpotents = tuple(mats)

    def __eq__(self, other):
        return (isinstance(other, LinearData) and self.dim == other.dim
                and len(self.nilpotents) == len(other.nilpotents)
                and all(la.equal(a, b) for a, b in zip(self.nilpotents, other.nilpotents)))

    def __repr__(self):
        return f"LinearData(dim={self.dim}, nilpotents={[m.tolist() for m in self.nilpotents]})"

    @classmethod
    def zero(cls, dim, count):
        return cls(dim, tuple(la.zeros(dim) for _ in range(count)))
