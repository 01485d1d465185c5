from math import factorial
import random

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from logconn import (Connection, Derivation, GaugeTransform, LinearData, RingSpec, SeriesMatrix,
                     UsageError, base_extend, crossing_expand, descend_crossing, descend_smooth,
                     expand_from_linear_data, gauge_normal_form, katz_project, nilpotent_trigonalize,
                     pullback_from_log_point, reduce_to_linear_data, reduce_with_gauge, restrict,
                     sylvester_solve, tensor, unit)
from logconn import linalg as la
from logconn.errors import NotNilpotentError
from logconn.normal_form import katz_frame
from logconn.sampling import random_jordan, random_linear_data, random_nr_connection


def test_trigonalize_single_lower():
    P, (T,) = nilpotent_trigonalize([[[0, 0], [1, 0]]])
    assert T.tolist() == [[0, 1], [0, 0]]
    assert la.is_strictly_upper(T)


def test_trigonalize_upper_family_accepted():
    mats = [[[0, 1, 2], [0, 0, 3], [0, 0, 0]], [[0, 0, 1], [0, 0, 0], [0, 0, 0]]]
    P, conj = nilpotent_trigonalize(mats)
    assert all(la.is_strictly_upper(m) for m in conj)


def test_trigonalize_rejects_bad_input():
    with pytest.raises(NotNilpotentError):
        nilpotent_trigonalize([[[1, 0], [0, 0]]])
    with pytest.raises(UsageError):
        nilpotent_trigonalize([[[0, 1], [0, 0]], [[0, 0], [1, 0]]])


@given(st.integers(0, 10 ** 6), st.integers(1, 5), st.integers(1, 3))
def test_trigonalize_property(seed, dim, count):
    L = random_linear_data(random.Random(seed), dim, count)
    P, conj = nilpotent_trigonalize(L.nilpotents, dim)
    Pinv = la.inverse(P)
    for m, t in zip(L.nilpotents, conj):
        assert la.is_strictly_upper(t)
        assert la.equal(la.mm(la.mm(Pinv, m), P), t)


def test_sylvester_examples():
    R = la.asmat([[1, 2], [3, 4]])
    assert la.equal(sylvester_solve(la.zeros(2), 5, R), R / 5)
    X = sylvester_solve([[0, 1], [0, 0]], 1, [[0, 0], [1, 0]])
    assert X.tolist() == [[-1, -2], [1, 1]]
    with pytest.raises(UsageError):
        sylvester_solve([[0, 1], [0, 0]], 0, [[0, 0], [1, 0]])


@given(st.integers(0, 10 ** 6), st.integers(1, 5))
def test_sylvester_matches_linear_solve(seed, s):
    rng = random.Random(seed)
    H0 = random_jordan(rng, s)
    c = rng.choice([-3, -1, 2, 7])
    R = la.asmat([[rng.randint(-4, 4) for _ in range(s)] for _ in range(s)])
    X = sylvester_solve(H0, c, R)
    # independent route: vec(H0 X - X H0 + c X) = (I x H0 - H0^T x I + c I) vec X
    H = sp.Matrix(H0.tolist())
    I = sp.eye(s)
    op = sp.kronecker_product(I, H) - sp.kronecker_product(H.T, I) + c * sp.eye(s * s)
    vec = op.LUsolve(sp.Matrix(R.T.reshape(s * s).tolist()))
    assert [[sp.Rational(int(v.numerator), int(v.denominator)) for v in row] for row in X.tolist()] == \
        sp.Matrix(vec).reshape(s, s).T.tolist()


def test_normal_form_exponential_example():
    ring = RingSpec(2, 2, 6)
    H = SeriesMatrix(ring, (1, 1), {(1, 0): la.asmat([[1]])})
    C = Connection(ring, "relative", {"log1": H})
    nf = gauge_normal_form(C, 1)
    U = nf.gauge.U
    for k in range(7):
        assert U.coeff((k, 0))[0, 0] == la.q((-1) ** k) / factorial(k)
    assert all(key[1] == 0 for key in U.blocks)
    assert nf.matrix.is_zero()
    assert (H @ U + U.derive(Derivation("log", 1))).is_zero()


def test_normal_form_constant_fixed_point():
    ring = RingSpec(2, 2, 4)
    H0 = [[0, 1], [0, 0]]
    C = Connection(ring, "relative", {"log1": SeriesMatrix.constant(ring, la.asmat(H0))})
    nf = gauge_normal_form(C, 1)
    assert nf.gauge.U == SeriesMatrix.identity(ring, 2)
    assert nf.matrix == C.matrix("log1")


def test_normal_form_requires_triangular_residue():
    ring = RingSpec(2, 2, 3)
    C = Connection(ring, "relative", {"log1": SeriesMatrix.constant(ring, la.asmat([[0, 0], [1, 0]]))})
    with pytest.raises(UsageError):
        gauge_normal_form(C, 1)
    C = Connection(ring, "relative", {"log1": SeriesMatrix.constant(ring, la.asmat([[1]]))})
    with pytest.raises(NotNilpotentError):
        gauge_normal_form(C, 1)


def check_normal_form(C, pivot):
    res = [m.constant_term() for d, m in C.items() if d.kind == "log"]
    P, _ = nilpotent_trigonalize(res, C.rank)
    from logconn.connection import conjugate
    Ct = conjugate(C, P)
    nf = gauge_normal_form(Ct, pivot)
    H, U, M = Ct.matrix(f"log{pivot}"), nf.gauge.U, nf.matrix
    assert (H @ U + U.derive(Derivation("log", pivot)) - U @ M).is_zero()
    assert la.equal(U.constant_term(), la.eye(C.rank))
    assert all(k[pivot - 1] == k[pivot] for k in M.blocks)
    assert all(k[pivot - 1] != k[pivot] for k in U.blocks if any(k))
    assert la.equal(M.constant_term(), H.constant_term())


@given(st.integers(0, 10 ** 6), st.sampled_from([(2, 2), (3, 3), (3, 2)]), st.integers(1, 3))
def test_normal_form_property(seed, shape, rank):
    rng = random.Random(seed)
    C, _ = random_nr_connection(rng, RingSpec(*shape, 4), "relative", rank)
    check_normal_form(C, 1)
    if shape == (3, 3):
        check_normal_form(C, 2)


def test_katz_examples():
    ring = RingSpec(2, 1, 4)
    C = unit(ring)
    x2 = SeriesMatrix(ring, (1, 1), {(0, 1): la.asmat([[1]])})
    assert katz_project(C, x2).is_zero()
    e = SeriesMatrix.identity(ring, 1)
    assert katz_project(C, e) == e


@given(st.integers(0, 10 ** 6), st.sampled_from([(3, 2), (2, 1), (3, 1)]), st.integers(1, 3))
def test_katz_properties(seed, shape, rank):
    rng = random.Random(seed)
    ring = RingSpec(*shape, 4)
    C, _ = random_nr_connection(rng, ring, "relative", rank)
    Q = katz_frame(C).U
    for d in C.derivations:
        if d.kind == "partial":
            assert C.apply(d, Q).truncate(ring.trunc - 1).is_zero()
    assert katz_project(C, Q) == Q
    # P(e) = e modulo the smooth variables
    assert all(k[ring.r:ring.n] != (0,) * (ring.n - ring.r) or k == ring.zero_key() for k in Q.blocks)


def test_descend_smooth_trivial_and_pullback(rng):
    ring = RingSpec(3, 2, 3)
    sd = descend_smooth(unit(ring, rank=2))
    assert sd.connection == unit(RingSpec(2, 2, 3), rank=2)
    base, _ = random_nr_connection(rng, RingSpec(2, 2, 3), "relative", 2)
    assert descend_smooth(base_extend(base, ring)).connection == base


@given(st.integers(0, 10 ** 6), st.sampled_from(["relative", "absolute"]))
def test_descend_smooth_round_trip(seed, fam):
    rng = random.Random(seed)
    ring = RingSpec(3, 2, 3)
    C, _ = random_nr_connection(rng, ring, fam, 2)
    sd = descend_smooth(C)
    assert sd.gauge.verify(C, base_extend(sd.connection, ring))


def test_descend_crossing_trivial():
    cd = descend_crossing(unit(RingSpec(2, 2, 3)))
    assert (cd.connection.ring.n, cd.connection.ring.r) == (1, 1)
    assert cd.connection == unit(cd.connection.ring)
    assert cd.nilpotent.is_zero()


def test_descend_crossing_pullback():
    ring = RingSpec(3, 3, 3)
    N = la.asmat([[0, 1], [0, 0]])
    # constant N on the pivot pair over a trivial base: the pullback along the crossing
    C = Connection(ring, "relative", {"log2": SeriesMatrix.constant(ring, N)})
    cd = descend_crossing(C)
    assert cd.connection == unit(cd.connection.ring, rank=2)
    assert cd.nilpotent == SeriesMatrix.constant(cd.connection.ring, N)


@given(st.integers(0, 10 ** 6), st.sampled_from([(2, "relative"), (3, "relative"), (3, "absolute")]))
def test_descend_crossing_round_trip(seed, shape):
    n, fam = shape
    rng = random.Random(seed)
    ring = RingSpec(n, n, 4)
    C, _ = random_nr_connection(rng, ring, fam, 2)
    cd = descend_crossing(C)
    assert cd.gauge.verify(C, crossing_expand(cd.connection, cd.nilpotent, ring))


def test_reduce_examples():
    ring = RingSpec(3, 3, 3)
    assert reduce_to_linear_data(unit(ring)) == LinearData.zero(1, 2)
    N = la.asmat([[0, 1], [0, 0]])
    C = restrict(pullback_from_log_point(LinearData(2, (N,)), ring))
    assert reduce_to_linear_data(C) == LinearData(2, (la.zeros(2), la.zeros(2)))
    E = expand_from_linear_data(LinearData(2, (N,)), RingSpec(2, 2, 3))
    assert E.matrix("log1") == SeriesMatrix.constant(E.ring, N)
    assert reduce_to_linear_data(E) == LinearData(2, (N,))


@given(st.integers(0, 10 ** 6), st.sampled_from([(2, 2), (3, 3), (3, 2), (2, 1)]),
       st.sampled_from(["relative", "absolute"]), st.integers(1, 3))
def test_reduce_round_trips(seed, shape, fam, rank):
    rng = random.Random(seed)
    ring = RingSpec(*shape, 3)
    C, L = random_nr_connection(rng, ring, fam, rank)
    red = reduce_with_gauge(C)
    assert red.linear_data == L
    assert red.gauge.verify(C, expand_from_linear_data(red.linear_data, ring, C.family))
    assert reduce_to_linear_data(expand_from_linear_data(L, ring, C.family)) == L
    for a, b in zip(red.linear_data.nilpotents, L.nilpotents):
        assert la.nilpotency_index(a) == la.nilpotency_index(b)


def charpolys(L, rng):
    out = [tuple(la.charpoly(m)) for m in L.nilpotents]
    for _ in range(3):
        comb = sum((rng.randint(-3, 3) * m for m in L.nilpotents), la.zeros(L.dim))
        out.append(tuple(la.charpoly(comb)))
    return out


def test_reduce_tensor_is_kronecker_sum(rng):
    ring = RingSpec(3, 3, 3)
    C1, L1 = random_nr_connection(rng, ring, "relative", 2)
    C2, L2 = random_nr_connection(rng, ring, "relative", 2)
    LT = reduce_to_linear_data(tensor(C1, C2))
    expected = LinearData(4, tuple(la.kron(a, la.eye(2)) + la.kron(la.eye(2), b)
                                   for a, b in zip(L1.nilpotents, L2.nilpotents)))
    assert charpolys(LT, random.Random(1)) == charpolys(expected, random.Random(1))


def test_gauge_transform_requires_identity_constant():
    ring = RingSpec(2, 2, 2)
    with pytest.raises(UsageError):
        GaugeTransform(SeriesMatrix.constant(ring, la.asmat([[2]])))
