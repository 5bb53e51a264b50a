import itertools

import pytest
from hypothesis import given, strategies as st

from statgenus import zmod
from statgenus.cyclotomic import CycloNumber


def _brute_kernel_size(a, p, T, ncols):
    mod = p ** T
    return sum(
        1
        for x in itertools.product(range(mod), repeat=ncols)
        if all(sum(r[j] * x[j] for j in range(ncols)) % mod == 0 for r in a)
    )


@pytest.mark.parametrize(
    "a",
    [[[1, 2, 0], [0, 3, 3]], [[3, 0, 6]], [[0, 0, 0]], [[1, 1, 1], [2, 2, 2]], [[9, 3, 0], [0, 0, 1]]],
)
def test_kernel_matches_enumeration(a):
    p, T, n = 3, 2, 3
    gens = zmod.kernel(a, p, T, n)
    assert zmod.span_order(gens, p, T, n) == _brute_kernel_size(a, p, T, n)
    for g in gens:
        assert all(sum(r[j] * g[j] for j in range(n)) % 9 == 0 for r in a)


def test_inverse_and_solve():
    a = [[1, 3], [2, 4]]
    inv = zmod.inverse(a, 5, 2)
    assert zmod.matmul(a, inv, 25) == zmod.identity(2)


def test_roots_of_unity_sum_to_zero():
    for p, n in [(3, 1), (3, 2), (5, 1)]:
        total = CycloNumber.zero(p, n)
        for e in range(p ** n):
            total = total + CycloNumber.root_of_unity(p, n, e)
        assert not total


def test_zeta_has_exact_order():
    z = CycloNumber.root_of_unity(3, 2, 1)
    acc = CycloNumber.integer(3, 2, 1)
    for k in range(1, 10):
        acc = acc * z
        assert acc.is_rational() == (k == 9)
    assert acc.rational_value() == 1


def test_gauss_sum_squared_is_minus_three():
    # (zeta - zeta^2)^2 = -3 in Z[zeta_3]
    g = CycloNumber.root_of_unity(3, 1, 1) - CycloNumber.root_of_unity(3, 1, 2)
    assert (g * g).rational_value() == -3


def test_rational_value_rejects_irrational():
    with pytest.raises(ValueError):
        CycloNumber.root_of_unity(3, 1, 1).rational_value()


exps = st.lists(st.integers(0, 26), min_size=1, max_size=4)


def _num(es):
    out = CycloNumber.zero(3, 3)
    for e in es:
        out = out + CycloNumber.root_of_unity(3, 3, e)
    return out


@given(exps, exps, exps)
def test_ring_axioms(a, b, c):
    x, y, z = _num(a), _num(b), _num(c)
    assert x * y == y * x
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_root_exponents_add(a, b):
    lhs = CycloNumber.root_of_unity(5, 1, a) * CycloNumber.root_of_unity(5, 1, b)
    assert lhs == CycloNumber.root_of_unity(5, 1, a + b)
