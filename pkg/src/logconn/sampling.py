"""Random objects of the nilpotent-residue category, for tests and demos."""
import random

from . import linalg as la
from .connection import Family, LinearData, gauge
from .homological import HorizontalMorphism
from .normal_form import expand_from_linear_data
from .series import SeriesMatrix, basis_derivations


def random_unimodular(rng, s, spread=2):
    low, up = la.eye(s), la.eye(s)
    for i in range(s):
        for j in range(s):
            if i > j:
                low[i, j] = la.q(rng.randint(-spread, spread))
            elif i < j:
                up[i, j] = la.q(rng.randint(-spread, spread))
    return la.mm(low, up)


def random_jordan(rng, s):
    """Strictly upper nilpotent matrix of a random Jordan type."""
    m = la.zeros(s)
    for i in range(s - 1):
        if rng.random() < 0.6:
            m[i, i + 1] = la.ONE
    return m


def jordan_from_partition(parts):
    s = sum(parts)
    m = la.zeros(s)
    pos = 0
    for p in parts:
        for i in range(pos, pos + p - 1):
            m[i, i + 1] = la.ONE
        pos += p
    return m


def partitions(d, largest=None):
    largest = d if largest is None else largest
    if d == 0:
        yield ()
        return
    for p in range(min(d, largest), 0, -1):
        for rest in partitions(d - p, p):
            yield (p,) + rest


def random_linear_data(rng, dim, count, conjugate=True):
    """Commuting nilpotents built as polynomials without constant term in one
    nilpotent matrix."""
    base = random_jordan(rng, dim)
    if conjugate and dim:
        P = random_unimodular(rng, dim)
        base = la.mm(la.mm(P, base), la.inverse(P))
    powers = [la.power(base, k) for k in range(1, dim + 1)]
    mats = []
    for _ in range(count):
        m = la.zeros(dim)
        for pw in powers:
            m = m + la.q(rng.randint(-2, 2)) * pw
        mats.append(m)
    return LinearData(dim, tuple(mats))


def random_gauge_matrix(rng, ring, s, density=0.35, spread=2):
    """Random s x s matrix over ring with identity constant term."""
    blocks = {}
    for key in ring.monomials()[1:]:
        if rng.random() < density:
            m = la.zeros(s)
            for i in range(s):
                for j in range(s):
                    if rng.random() < 0.6:
                        m[i, j] = la.q(rng.randint(-spread, spread))
            blocks[key] = m
    return SeriesMatrix(ring, (s, s), {ring.zero_key(): la.eye(s), **blocks})


def random_nr_connection(rng, ring, family, rank, density=0.35):
    """Gauge transform of a random constant nilpotent model; returns (C, L)."""
    family = Family(getattr(family, "value", family))
    nlogs = sum(1 for d in basis_derivations(ring, family) if d.kind == "log")
    L = random_linear_data(rng, rank, nlogs)
    C0 = expand_from_linear_data(L, ring, family)
    V = random_gauge_matrix(rng, ring, rank, density)
    return gauge(C0, V), L


def _block_diag(a, b):
    out = la.zeros(a.shape[0] + b.shape[0])
    out[:a.shape[0], :a.shape[0]] = a
    out[a.shape[0]:, a.shape[0]:] = b
    return out


def random_horizontal_morphism(rng, ring, family, max_part=2):
    """Horizontal map between two random objects that share a summand.

    The source is A + B and the target A + C in gauged frames; the map is the
    projection onto A followed by the inclusion.  Returns (morphism, rank of A)."""
    family = Family(getattr(family, "value", family))
    nlogs = sum(1 for d in basis_derivations(ring, family) if d.kind == "log")
    a, b, c = (random_linear_data(rng, rng.randint(0, max_part), nlogs) for _ in range(3))
    L1 = LinearData(a.dim + b.dim, tuple(_block_diag(x, y) for x, y in zip(a.nilpotents, b.nilpotents)))
    L2 = LinearData(a.dim + c.dim, tuple(_block_diag(x, y) for x, y in zip(a.nilpotents, c.nilpotents)))
    phi0 = la.zeros(L2.dim, L1.dim)
    for i in range(a.dim):
        phi0[i, i] = la.ONE
    U1 = random_gauge_matrix(rng, ring, L1.dim)
    U2 = random_gauge_matrix(rng, ring, L2.dim)
    C1 = gauge(expand_from_linear_data(L1, ring, family), U1)
    C2 = gauge(expand_from_linear_data(L2, ring, family), U2)
    mat = U2.inverse() @ SeriesMatrix.constant(ring, phi0) @ U1
    return HorizontalMorphism(C1, C2, mat), a.dim


def make_rng(seed):
    return random.Random(seed)
