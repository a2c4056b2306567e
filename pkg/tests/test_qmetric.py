import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasimet import qmetric as q
from quasimet.errors import InputError

import oracles

# a, b, c with d(a,b)=1, d(b,a)=2, d(b,c)=1, d(c,b)=2, d(a,c)=2, d(c,a)=4
ABC = [[0, 1, 2], [2, 0, 1], [4, 2, 0]]


@pytest.fixture
def abc():
    return q.validate(ABC, labels=["a", "b", "c"])


@pytest.fixture
def two():
    return q.validate([[0, 1.3], [0.7, 0]], labels=["x", "y"])


def test_single_point_is_valid():
    assert q.validate([[0]]).n == 1


def test_three_point_example_valid(abc):
    assert oracles.is_quasimetric(ABC)
    assert abc.dist("a", "c") == 2


def test_violation_reports_triple():
    bad = [row[:] for row in ABC]
    bad[0][2] = 5
    with pytest.raises(q.ViolationError) as info:
        q.validate(bad)
    kinds = {(v.kind, v.indices) for v in info.value.violations}
    assert ("triangle", (0, 1, 2)) in kinds
    v = next(v for v in info.value.violations if v.indices == (0, 1, 2))
    assert v.slack == -3


def test_positivity_violation():
    with pytest.raises(q.ViolationError) as info:
        q.validate([[0, 0], [1, 0]])
    assert info.value.violations[0].kind == "positivity"


@pytest.mark.parametrize("bad", [[[0, 1]], [[0, float("nan")], [1, 0]], [[0, -1], [1, 0]], [[0, float("inf")], [1, 0]]])
def test_malformed_input(bad):
    with pytest.raises(InputError):
        q.validate(bad)


def test_float_tolerance():
    d = [[0, 1, 2 + 1e-12], [1, 0, 1], [1, 1, 0]]
    q.validate(d, arithmetic="float")
    with pytest.raises(q.ViolationError):
        q.validate(d, 0, arithmetic="float")


def test_rational_reads_decimal_literal(two):
    assert two.dist("x", "y") == Fraction(13, 10)


def test_triangular(abc):
    assert q.triangular(abc, "a", "a", "a") == 0
    assert q.triangular(abc, "a", "a", "c") == 0
    assert q.triangular(abc, "a", "b", "c") == 0
    assert q.triangular(abc, "c", "b", "a") == 0
    assert q.triangular(abc, "b", "a", "c") == 3


def test_symmetrize(abc, two):
    assert q.symmetrize(abc).dist("a", "c") == 3
    s = q.symmetrize(two)
    assert s.dist("x", "y") == 1 and s.dist("y", "x") == 1
    assert q.symmetrize(s) == s


def test_balls(two, abc):
    assert q.ball(two, "x", 1.0, q.FORWARD).members == {0}
    assert q.ball(two, "x", 1.0, q.BACKWARD).members == {0, 1}
    assert q.ball(two, "x", 1.0, q.SYMMETRIC).members == {0}
    for kind in (q.FORWARD, q.BACKWARD, q.SYMMETRIC):
        assert q.ball(abc, "b", 10, kind).members == {0, 1, 2}


def test_chain_length(abc):
    assert q.chain_length(abc, ["a", "b"]) == 1
    assert q.chain_length(abc, ["a", "b", "c"]) == 2
    assert q.chain_length(abc, ["c", "b", "a"]) == 4


def test_is_minimizing(abc):
    assert q.is_minimizing(abc, ["c", "a"])
    assert q.is_minimizing(abc, ["a", "b", "c"])
    assert not q.is_minimizing(abc, ["a", "b", "a", "c"])


def test_short_chain_rejected(abc):
    with pytest.raises(InputError):
        q.chain_length(abc, ["a"])


def test_to_json(abc):
    assert abc.to_json() == {"labels": ["a", "b", "c"], "d": [[0, 1, 2], [2, 0, 1], [4, 2, 0]]}


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10 ** 6))
def test_validator_matches_oracle(n, seed):
    rng = random.Random(seed)
    d = [[Fraction(rng.randint(1, 6)) if i != j else Fraction(0) for j in range(n)] for i in range(n)]
    expected = oracles.is_quasimetric(d)
    try:
        q.validate(d)
        got = True
    except q.ViolationError:
        got = False
    assert got == expected


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10 ** 6))
def test_triangular_nonnegative_and_symmetrization_valid(n, seed):
    d = oracles.random_quasimetric(random.Random(seed), n)
    s = q.validate(d)
    assert all(v >= 0 for v in s.triangular_tensor().ravel())
    sym = q.symmetrize(s)
    assert sym.is_symmetric()
    q.validate(sym.d)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 6), st.integers(0, 10 ** 6))
def test_minimizing_characterizations_agree(n, seed):
    rng = random.Random(seed)
    s = q.validate(oracles.random_quasimetric(rng, n, denom=1, hi=3))
    for _ in range(20):
        k = rng.randint(2, 5)
        chain = [rng.randrange(n)]
        while len(chain) < k:
            p = rng.randrange(n)
            if p != chain[-1]:
                chain.append(p)
        assert q.minimizing_by_length(s, chain) == q.minimizing_by_triples(s, chain)


def test_float_mode_matrix_is_float():
    s = q.validate(np.array([[0.0, 1.5], [2.5, 0.0]]), arithmetic="float")
    assert not s.exact and s.d.dtype == float
