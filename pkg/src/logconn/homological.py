"""Kernels, cokernels, sections, de Rham cohomology, Ext^1, the pushforward to
the log point, the u-bicomplex comparison, G_a representations and the
rank-1 lift."""
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from . import linalg as la
from .connection import (Connection, Family, LinearData, check_integrability,
                         check_nilpotent_residues, dual, effective_degree, extend_u, gauge,
                         require_integrable, require_nr, restrict, tensor)
from .errors import NotNilpotentError, UsageError
from .normal_form import descend_smooth, expand_from_linear_data, reduce_with_gauge
from .series import Derivation, Series, SeriesMatrix, add_keys, block_diag


# -- morphisms ---------------------------------------------------------------

@dataclass
class HorizontalMorphism:
    source: Connection
    target: Connection
    mat: SeriesMatrix

    def __post_init__(self):
        s, t = self.source, self.target
        if s.ring != t.ring or s.family != t.family:
            raise UsageError("morphism ends differ in ring or family")
        if self.mat.ring != s.ring or self.mat.shape != (t.rank, s.rank):
            raise UsageError(f"morphism matrix must be {t.rank} x {s.rank} over the common ring")


@dataclass
class HorizontalityReport:
    passed: bool
    residuals: dict

    def __bool__(self):
        return self.passed


def horizontality_residuals(phi):
    """theta(Phi) + M_tgt Phi - Phi M_src for every basis derivation."""
    out = {}
    for (d, ms), mt in zip(phi.source.items(), phi.target.matrices):
        res = phi.mat.derive(d) + mt @ phi.mat - phi.mat @ ms
        out[d.name] = res.truncate(effective_degree(phi.source.ring, d))
    return out


def check_horizontal(phi):
    res = horizontality_residuals(phi)
    return HorizontalityReport(all(r.is_zero() for r in res.values()), res)


def _induced_on_sub(basis, mat):
    """Matrix of mat restricted to the invariant column span of basis."""
    left = la.pseudo_left_inverse(basis)
    return la.mm(left, la.mm(mat, basis))


def _induced_on_quotient(proj, mat):
    """Matrix induced on the quotient with surjection proj (rows)."""
    right = la.pseudo_left_inverse(proj.T).T
    return la.mm(proj, la.mm(mat, right))


@dataclass
class KernelCokernel:
    kernel: Connection
    cokernel: Connection
    image: Connection
    inclusion: HorizontalMorphism
    projection: HorizontalMorphism
    certificates: dict = field(default_factory=dict)


def _constant_intertwiner(phi, r1, r2):
    m = r2.gauge.U.inverse() @ phi.mat @ r1.gauge.U
    if not m.is_constant():
        raise UsageError("morphism is not horizontal: transported map is not constant")
    return m.constant_term()


def kernel_cokernel(phi):
    """Kernel, cokernel and image of a horizontal morphism in the category of
    connections with nilpotent residues."""
    src, tgt = phi.source, phi.target
    if src.family is Family.UEXTENDED:
        raise UsageError("kernel_cokernel supports relative and absolute families")
    require_nr(src)
    require_nr(tgt)
    if not check_horizontal(phi):
        raise UsageError("morphism is not horizontal")
    r1 = reduce_with_gauge(src, check=False)
    r2 = reduce_with_gauge(tgt, check=False)
    phi0 = _constant_intertwiner(phi, r1, r2)
    L1, L2 = r1.linear_data, r2.linear_data
    K = la.nullspace(phi0)
    if K.shape[1] == 0:
        K = la.zeros(src.rank, 0)
    Q = la.left_nullspace(phi0)
    if Q.shape[0] == 0:
        Q = la.zeros(0, tgt.rank)
    Im = la.column_basis(phi0)
    ker_ld = LinearData(K.shape[1], tuple(_induced_on_sub(K, n) for n in L1.nilpotents))
    cok_ld = LinearData(Q.shape[0], tuple(_induced_on_quotient(Q, n) for n in L2.nilpotents))
    img_ld = LinearData(Im.shape[1], tuple(_induced_on_sub(Im, n) for n in L2.nilpotents))
    ring, fam = src.ring, src.family
    kernel = expand_from_linear_data(ker_ld, ring, fam)
    coker = expand_from_linear_data(cok_ld, ring, fam)
    image = expand_from_linear_data(img_ld, ring, fam)
    inc = HorizontalMorphism(kernel, src, r1.gauge.U.cmul(K))
    proj = HorizontalMorphism(tgt, coker, r2.gauge.U.inverse().lmul(Q))
    deg = effective_degree(ring, *src.derivations)
    certs = {
        "inclusion_horizontal": check_horizontal(inc).passed,
        "projection_horizontal": check_horizontal(proj).passed,
        "composite_phi_inclusion_zero": (phi.mat @ inc.mat).truncate(deg).is_zero(),
        "composite_projection_phi_zero": (proj.mat @ phi.mat).truncate(deg).is_zero(),
        "rank_identity": src.rank - kernel.rank == tgt.rank - coker.rank == image.rank,
        "kernel_nilpotent": check_nilpotent_residues(kernel).passed,
        "cokernel_nilpotent": check_nilpotent_residues(coker).passed,
        "ranks": {"source": src.rank, "target": tgt.rank, "kernel": kernel.rank,
                  "cokernel": coker.rank, "image": image.rank},
    }
    return KernelCokernel(kernel, coker, image, inc, proj, certs)


# -- truncated complexes -----------------------------------------------------

class TruncatedSpace:
    """E_N (optionally with u) with the connection's operators as sparse maps."""

    def __init__(self, C):
        self.C = C
        self.ring = C.ring
        self.keys = C.ring.monomials()
        self.s = C.rank
        self.index = {(k, a): i for i, (k, a) in enumerate((k, a) for k in self.keys for a in range(self.s))}
        self.elements = [(k, a) for k in self.keys for a in range(self.s)]

    def __len__(self):
        return len(self.elements)

    def operator(self, theta, include_matrix=True, include_derivation=True):
        """Columns of nabla(theta) as {col: {row: value}}."""
        ring, s = self.ring, self.s
        M = self.C.matrix(theta) if include_matrix else None
        cols = {}
        for col, (k, a) in enumerate(self.elements):
            out = {}
            if include_derivation:
                for k2, f in theta.act(ring, k):
                    row = self.index[(k2, a)]
                    out[row] = out.get(row, 0) + f
            if include_matrix:
                for kappa, blk in M.blocks.items():
                    k2 = add_keys(kappa, k)
                    if not ring.admits(k2):
                        continue
                    for b in range(s):
                        v = blk[b, a]
                        if v != 0:
                            row = self.index[(k2, b)]
                            out[row] = out.get(row, 0) + v
            cols[col] = {r: v for r, v in out.items() if v != 0}
        return cols


def koszul(dim, ops, allowed=None, grading=None):
    """Koszul complex on commuting operators, as a quotient by disallowed cells.

    Returns per-degree cell lists and sparse differentials; cells are
    (vector index, subset of operator indices).
    """
    m = len(ops)
    cells = []
    for p in range(m + 1):
        level = [(v, I) for I in combinations(range(m), p) for v in range(dim)
                 if allowed is None or allowed(v, I)]
        cells.append(level)
    index = [{c: i for i, c in enumerate(level)} for level in cells]
    diffs = []
    for p in range(m):
        entries = {}
        for col, (v, I) in enumerate(cells[p]):
            for a in range(m):
                if a in I:
                    continue
                J = tuple(sorted(I + (a,)))
                sign = -1 if sum(1 for b in I if b < a) % 2 else 1
                for row_v, val in ops[a].get(v, {}).items():
                    row = index[p + 1].get((row_v, J))
                    if row is None:
                        continue
                    entries.setdefault(row, {})
                    entries[row][col] = entries[row].get(col, 0) + sign * val
        diffs.append(entries)
    return cells, diffs


def cohomology_dims(cells, diffs, select=None):
    """Cohomology dimensions, optionally of the subcomplex of selected cells."""
    m = len(cells) - 1
    keep = [[select(c) if select else True for c in level] for level in cells]
    dims = [sum(k) for k in keep]
    ranks = []
    for p in range(m):
        ent = {r: {c: v for c, v in row.items() if keep[p][c]} for r, row in diffs[p].items()
               if keep[p + 1][r]}
        ranks.append(la.sparse_rank(ent, (len(cells[p + 1]), len(cells[p]))))
    out = []
    for p in range(m + 1):
        rin = ranks[p - 1] if p > 0 else 0
        rout = ranks[p] if p < m else 0
        out.append(dims[p] - rin - rout)
    return dims, out


@dataclass
class CohomologyReport:
    dims: list
    stabilized: list
    previous: list = None
    graded: dict = field(default_factory=dict)
    truncation: dict = field(default_factory=dict)
    cochain_dims: list = None

    def euler_ok(self):
        if self.cochain_dims is None:
            return True
        e = sum((-1) ** i * d for i, d in enumerate(self.dims))
        return e == sum((-1) ** i * d for i, d in enumerate(self.cochain_dims))

    def as_dict(self):
        return {
            "dims": list(self.dims),
            "stabilized": list(self.stabilized),
            "previous": None if self.previous is None else list(self.previous),
            "graded": {str(k): list(v) for k, v in sorted(self.graded.items())},
            "truncation": dict(self.truncation),
            "euler_characteristic_ok": self.euler_ok(),
        }


def retruncate(C, trunc):
    ring = C.ring.with_trunc(trunc)
    mats = [m.map_keys(ring, lambda k: k) for m in C.matrices]
    return Connection(ring, C.family, mats, rank=C.rank)


def _linear_koszul(L, degree_cap=None):
    ops = []
    for n in L.nilpotents:
        cols = {}
        for a in range(L.dim):
            cols[a] = {b: n[b, a] for b in range(L.dim) if n[b, a] != 0}
        ops.append(cols)
    cells, diffs = koszul(L.dim, ops)
    return cohomology_dims(cells, diffs)


def _u_weight_allowed(space, r_slot):
    ring = space.ring

    def allowed(v, I):
        k, _ = space.elements[v]
        w = ring.udeg(k) + (1 if r_slot in I else 0)
        return w <= ring.u_trunc
    return allowed


def _r_slot(C):
    return C.derivations.index(Derivation("log", C.ring.r))


def _connection_complex(C):
    space = TruncatedSpace(C)
    ops = [space.operator(d) for d in C.derivations]
    allowed = None
    if C.ring.has_u:
        allowed = _u_weight_allowed(space, _r_slot(C))
    cells, diffs = koszul(len(space), ops, allowed)
    return space, cells, diffs


def _graded(C):
    """Cohomology of each homogeneous slice of the associated graded complex."""
    ring = C.ring
    res = {d.name: m.constant_term() for d, m in C.items()}
    by_deg = {}
    for k in ring.monomials():
        by_deg.setdefault(ring.wdeg(k), []).append(k)
    out = {}
    s = C.rank
    for deg, keys in sorted(by_deg.items()):
        elems = [(k, a) for k in keys for a in range(s)]
        idx = {e: i for i, e in enumerate(elems)}
        ops = []
        for d in C.derivations:
            cols = {}
            for col, (k, a) in enumerate(elems):
                c = d.eigen(ring, k)
                out_col = {}
                if c:
                    out_col[col] = la.q(c)
                for b in range(s):
                    v = res[d.name][b, a]
                    if v != 0:
                        row = idx[(k, b)]
                        out_col[row] = out_col.get(row, 0) + v
                cols[col] = {r: v for r, v in out_col.items() if v != 0}
            ops.append(cols)
        cells, diffs = koszul(len(elems), ops)
        out[deg] = cohomology_dims(cells, diffs)[1]
    return out


def de_rham_cohomology(C, family=None):
    """Cohomology of the truncated de Rham (Koszul) complex of C.

    LinearData inputs give the complex on V built from its nilpotents; a single
    nilpotent is the log point.
    """
    if isinstance(C, LinearData):
        dims, h = _linear_koszul(C)
        return CohomologyReport(h, [True] * len(h), list(h), {0: list(h)},
                                {"kind": "linear-data"}, dims)
    if family is not None and Family(getattr(family, "value", family)) != C.family:
        if Family(getattr(family, "value", family)) is Family.RELATIVE and C.family is Family.ABSOLUTE:
            C = restrict(C)
        else:
            raise UsageError(f"cannot view a {C.family.value} connection as {family}")
    require_integrable(C)
    trunc_info = C.ring.describe()
    if C.ring.n > C.ring.r:
        C = descend_smooth(C, check=False).connection
        trunc_info["descended_to"] = C.ring.describe()
    _, cells, diffs = _connection_complex(C)
    dims, h = cohomology_dims(cells, diffs)
    if C.ring.trunc > 0:
        _, c2, d2 = _connection_complex(retruncate(C, C.ring.trunc - 1))
        prev = cohomology_dims(c2, d2)[1]
        stab = [a == b for a, b in zip(h, prev)]
    else:
        prev, stab = None, [False] * len(h)
    graded = _graded(C) if not C.ring.has_u else {}
    return CohomologyReport(h, stab, prev, graded, trunc_info, dims)


@dataclass
class Sections:
    dim: int
    basis: SeriesMatrix


def horizontal_sections(C):
    """Basis of the horizontal sections (columns)."""
    if C.family is not Family.UEXTENDED:
        red = reduce_with_gauge(C)
        mats = red.linear_data.nilpotents
        K = la.nullspace(np.vstack(mats)) if mats else la.eye(C.rank)
        return Sections(K.shape[1], red.gauge.U.cmul(K))
    require_integrable(C)
    space = TruncatedSpace(C)
    rows = {}
    r0 = 0
    for d in C.derivations:
        acc = effective_degree(C.ring, d)
        op = space.operator(d)
        for col, entries in op.items():
            for row, v in entries.items():
                k, _ = space.elements[row]
                if C.ring.wdeg(k) <= acc:
                    rows.setdefault(r0 + row, {})[col] = v
        r0 += len(space)
    shape = (max(r0, 1), len(space))
    dense = la.zeros(*shape)
    for r, row in rows.items():
        for c, v in row.items():
            dense[r, c] = v
    K = la.nullspace(dense)
    cols = {}
    for j in range(K.shape[1]):
        for i, (k, a) in enumerate(space.elements):
            v = K[i, j]
            if v != 0:
                cols.setdefault(k, la.zeros(C.rank, K.shape[1]))[a, j] = v
    return Sections(K.shape[1], SeriesMatrix(C.ring, (C.rank, K.shape[1]), cols))


# -- log point ---------------------------------------------------------------

def pushforward_log_point(C):
    """Horizontal sections of restrict(C) with the operator induced by the
    absolute derivation."""
    if C.family is not Family.ABSOLUTE:
        raise UsageError("pushforward needs an absolute connection")
    red = reduce_with_gauge(C)
    mats = red.linear_data.nilpotents
    rel, last = mats[:-1], mats[-1]
    K = la.nullspace(np.vstack(rel)) if rel else la.eye(C.rank)
    if K.shape[1] == 0:
        return LinearData(0, (la.zeros(0),))
    N = _induced_on_sub(K, last)
    if not la.is_nilpotent(N):
        raise NotNilpotentError("induced operator is not nilpotent", N)
    return LinearData(K.shape[1], (N,))


@dataclass
class GaRep:
    """Polynomial matrix sum_k coeffs[k] t^k."""

    coeffs: list

    def evaluate(self, t):
        t = la.q(t)
        out = la.zeros(*self.coeffs[0].shape)
        for k, c in enumerate(self.coeffs):
            out = out + c * t ** k
        return out

    def degree(self):
        return len(self.coeffs) - 1


def ga_rep(N):
    N = la.asmat(N)
    m = la.nilpotency_index(N)
    if m is None:
        raise NotNilpotentError("ga_rep needs a nilpotent matrix", N)
    coeffs = [la.eye(N.shape[0])]
    for k in range(1, max(m, 1)):
        coeffs.append(la.mm(coeffs[-1], N) / k)
    return GaRep(coeffs)


def homomorphism_law_holds(rep):
    """exp(N(t+s)) = exp(Nt) exp(Ns), compared coefficient by coefficient."""
    c = rep.coeffs
    d = len(c) - 1
    for a in range(2 * d + 1):
        for b in range(2 * d + 1):
            lhs = c[a + b] * comb(a + b, a) if a + b <= d else la.zeros(*c[0].shape)
            rhs = la.mm(c[a], c[b]) if a <= d and b <= d else la.zeros(*c[0].shape)
            if not la.equal(lhs, rhs):
                return False
    return True


def nilpotent_log(rep):
    """The nilpotent N with rep = exp(N t)."""
    if not isinstance(rep, GaRep):
        rep = GaRep([la.asmat(c) for c in rep])
    s = rep.coeffs[0].shape[0]
    A = rep.evaluate(1) - la.eye(s)
    out = la.zeros(s)
    term = la.eye(s)
    for k in range(1, s + 1):
        term = la.mm(term, A)
        out = out + term * la.q((-1) ** (k + 1)) / k
    check = ga_rep(out) if la.is_nilpotent(out) else None
    if check is None or len(check.coeffs) != len(rep.coeffs) or not all(
            la.equal(a, b) for a, b in zip(check.coeffs, rep.coeffs)):
        raise UsageError("polynomial matrix is not of the form exp(N t)")
    return out


# -- Ext^1 -------------------------------------------------------------------

def _hom_operator(N1, N2):
    """phi -> N2 phi - phi N1 on column-major vec(phi)."""
    s1, s2 = N1.shape[0], N2.shape[0]
    return la.kron(-N1.T, la.eye(s2)) + la.kron(la.eye(s1), N2)


def _constant_h1(L1, L2):
    """H^1 of the Koszul complex of Hom(L1, L2): dimension and representatives."""
    s1, s2 = L1.dim, L2.dim
    ops = [_hom_operator(a, b) for a, b in zip(L1.nilpotents, L2.nilpotents)]
    m, D = len(ops), s1 * s2
    if m == 0 or D == 0:
        return 0, []
    d0 = np.vstack(ops)
    pairs = list(combinations(range(m), 2))
    d1 = la.zeros(len(pairs) * D, m * D)
    for row, (a, b) in enumerate(pairs):
        # (d beta)_{ab} = op_a beta_b - op_b beta_a
        d1[row * D:(row + 1) * D, b * D:(b + 1) * D] = ops[a]
        d1[row * D:(row + 1) * D, a * D:(a + 1) * D] = -ops[b]
    Z = la.nullspace(d1) if pairs else la.eye(m * D)
    B = la.column_basis(d0)
    reps = []
    span = B
    for j in range(Z.shape[1]):
        cand = np.hstack([span, Z[:, j:j + 1]])
        if la.rank(cand) > span.shape[1]:
            span = cand
            reps.append(Z[:, j])
    return len(reps), reps


@dataclass
class Ext1Result:
    dim: int
    cocycles: list
    extensions: list
    h1_dim: int


def _unvec(vec, s2, s1):
    m = la.zeros(s2, s1)
    for i in range(s1):
        for j in range(s2):
            m[j, i] = vec[i * s2 + j]
    return m


def assemble_extension(L1, L2, blocks):
    """Constant extension [[N2, B], [0, N1]] of L1 by L2."""
    mats = []
    s1, s2 = L1.dim, L2.dim
    for n1, n2, b in zip(L1.nilpotents, L2.nilpotents, blocks):
        m = la.zeros(s1 + s2)
        m[:s2, :s2] = n2
        m[:s2, s2:] = b
        m[s2:, s2:] = n1
        mats.append(m)
    return LinearData(s1 + s2, tuple(mats))


def ext1(C1, C2):
    """Ext^1(C1, C2) as H^1 of Hom(C1, C2) with assembled extensions."""
    if isinstance(C1, LinearData):
        L1, L2 = C1, C2
        dim, reps = _constant_h1(L1, L2)
        D, m = L1.dim * L2.dim, len(L1.nilpotents)
        cocycles = [[_unvec(r[a * D:(a + 1) * D], L2.dim, L1.dim) for a in range(m)] for r in reps]
        exts = [assemble_extension(L1, L2, c) for c in cocycles]
        return Ext1Result(dim, cocycles, exts, de_rham_cohomology(_hom_linear(L1, L2)).dims[1])
    require_nr(C1)
    require_nr(C2)
    if C1.ring != C2.ring or C1.family != C2.family:
        raise UsageError("ext1 needs connections over the same ring and family")
    r1 = reduce_with_gauge(C1, check=False)
    r2 = reduce_with_gauge(C2, check=False)
    L1, L2 = r1.linear_data, r2.linear_data
    dim, reps = _constant_h1(L1, L2)
    D = L1.dim * L2.dim
    logs = [d for d in C1.derivations if d.kind == "log"]
    cocycles, exts = [], []
    ring = C1.ring
    W = block_diag(r2.gauge.U, r1.gauge.U)
    Winv = W.inverse()
    for r in reps:
        blocks = [_unvec(r[a * D:(a + 1) * D], L2.dim, L1.dim) for a in range(len(logs))]
        E0 = expand_from_linear_data(assemble_extension(L1, L2, blocks), ring, C1.family)
        cocycles.append(blocks)
        exts.append(gauge(E0, Winv, W))
    h1 = de_rham_cohomology(tensor(dual(C1), C2)).dims
    return Ext1Result(dim, cocycles, exts, h1[1] if len(h1) > 1 else 0)


def _hom_linear(L1, L2):
    return LinearData(L1.dim * L2.dim, tuple(_hom_operator(a, b) for a, b in zip(L1.nilpotents, L2.nilpotents)))


# -- u-bicomplex -------------------------------------------------------------

@dataclass
class BicomplexReport:
    total: CohomologyReport
    relative: CohomologyReport
    equal_by_degree: list
    column_exact: bool
    column_details: dict
    kernel_acyclic: bool
    verdict: str

    def as_dict(self):
        return {
            "total": self.total.as_dict(),
            "relative": self.relative.as_dict(),
            "equal_by_degree": list(self.equal_by_degree),
            "column_exact": self.column_exact,
            "column_details": {str(k): v for k, v in sorted(self.column_details.items())},
            "kernel_of_p_u_acyclic": self.kernel_acyclic,
            "verdict": self.verdict,
        }


def _total_dims(C):
    space, cells, diffs = _connection_complex(C)
    return space, cells, diffs, cohomology_dims(cells, diffs)


def u_bicomplex_cohomology(C, u_trunc):
    """Compare the total complex of extend_u(C) with the relative complex.

    The u-direction is truncated by weight: u^i has weight i and u^i du weight
    i + 1, which keeps the vertical maps u^i -> i u^(i-1) du inside the
    truncation.
    """
    if C.family is not Family.ABSOLUTE:
        raise UsageError("bicomplex needs an absolute connection")
    require_nr(C)
    if C.ring.n > C.ring.r:
        C = descend_smooth(C, check=False).connection
    CU = extend_u(C, u_trunc)
    space, cells, diffs, (cdims, h) = _total_dims(CU)
    if C.ring.trunc > 0:
        prev = _total_dims(extend_u(retruncate(C, C.ring.trunc - 1), u_trunc))[3][1]
        stab = [a == b for a, b in zip(h, prev)]
    else:
        prev, stab = None, [False] * len(h)
    info = CU.ring.describe()
    info["u_weight_truncation"] = True
    total = CohomologyReport(h, stab, prev, {}, info, cdims)
    rel = de_rham_cohomology(restrict(C))
    m_rel = len(rel.dims)
    equal = []
    for p in range(len(h)):
        rd = rel.dims[p] if p < m_rel else 0
        rs = rel.stabilized[p] if p < m_rel else True
        equal.append(h[p] == rd if (stab[p] and rs) else None)
    # vertical differential alone: the u-derivative in the absolute slot
    r_slot = _r_slot(CU)
    vert = [dict() for _ in CU.derivations]
    vert[r_slot] = space.operator(CU.derivations[r_slot], include_matrix=False, include_derivation=True)
    # keep only the u-lowering part of the derivation
    for col, entries in vert[r_slot].items():
        k, _ = space.elements[col]
        vert[r_slot][col] = {row: v for row, v in entries.items()
                             if space.ring.udeg(space.elements[row][0]) < space.ring.udeg(k)}
    allowed = _u_weight_allowed(space, r_slot)
    vcells, vdiffs = koszul(len(space), vert, allowed)
    details = {}
    exact = True
    max_col = len(CU.derivations) + u_trunc
    for c in range(max_col + 1):
        def in_col(cell, c=c):
            v, I = cell
            return len(I) + space.ring.udeg(space.elements[v][0]) == c
        dims, hv = cohomology_dims(vcells, vdiffs, in_col)
        bottom = sum(1 for v, I in vcells[c] if in_col((v, I)) and r_slot not in I
                     and space.ring.udeg(space.elements[v][0]) == 0) if c < len(vcells) else 0
        off_bottom = [hv[p] for p in range(len(hv)) if p != c]
        ok = all(x == 0 for x in off_bottom) and (hv[c] if c < len(hv) else 0) == bottom
        details[c] = {"cohomology": hv, "bottom_expected": bottom, "exact_off_bottom": ok}
        exact = exact and ok

    def positive_weight(cell):
        v, I = cell
        return space.ring.udeg(space.elements[v][0]) + (1 if r_slot in I else 0) >= 1
    kernel_h = cohomology_dims(cells, diffs, positive_weight)[1]
    acyclic = all(x == 0 for x in kernel_h)
    checked = [e for e in equal if e is not None]
    if checked and all(checked) and exact and acyclic:
        verdict = "equal on stabilized degrees"
    elif not checked:
        verdict = "no stabilized degrees"
    else:
        verdict = "mismatch"
    return BicomplexReport(total, rel, equal, exact, details, acyclic, verdict)


# -- rank-1 lifting ----------------------------------------------------------

def lift_rank1(C):
    """The unique absolute connection with nilpotent residues restricting to C."""
    if C.family is not Family.RELATIVE:
        raise UsageError("lift_rank1 needs a relative connection")
    if C.rank != 1:
        raise UsageError("lift_rank1 handles rank 1 only")
    require_nr(C)
    red = reduce_with_gauge(C, check=False)
    U = red.gauge.U
    ring = C.ring
    top = Derivation("log", ring.r)
    m_top = -(U.derive(top) @ U.inverse())
    mats = {d: m for d, m in C.items()}
    mats[top] = m_top
    lift = Connection(ring, Family.ABSOLUTE, mats, rank=1)
    if not check_integrability(lift) or not check_nilpotent_residues(lift, assume_integrable=True):
        raise UsageError("internal consistency failure: lift is not in the nilpotent-residue category")
    return lift


@dataclass
class LiftVerdict:
    valid: bool
    reason: str
    alpha: Series = None


def lift_uniqueness(C, candidate, lift=None):
    """Decide whether `candidate` is a valid lift, via its difference with the
    canonical lift: alpha must be killed by the relative derivations, hence
    constant, and a nonzero constant breaks nilpotence of the residue."""
    if lift is None:
        lift = lift_rank1(C)
    if candidate.family is not Family.ABSOLUTE or candidate.ring != C.ring or candidate.rank != 1:
        return LiftVerdict(False, "candidate is not a rank-1 absolute connection on the same ring")
    if restrict(candidate) != C:
        return LiftVerdict(False, "candidate does not restrict to the given connection")
    top = Derivation("log", C.ring.r)
    alpha = (candidate.matrix(top) - lift.matrix(top)).entry(0, 0)
    if alpha.is_zero():
        return LiftVerdict(True, "candidate equals the canonical lift", alpha)
    for d in C.derivations:
        da = alpha.derive(d).truncate(effective_degree(C.ring, d))
        if not da.is_zero():
            return LiftVerdict(False, f"integrability fails: {d.name}(alpha) != 0", alpha)
    if alpha.ring.zero_key() in dict(alpha.items()) and len(alpha) == 1:
        return LiftVerdict(False, "alpha is a nonzero constant: residue not nilpotent", alpha)
    return LiftVerdict(False, "alpha not constant although killed by all derivations", alpha)
