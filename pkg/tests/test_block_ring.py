import pytest

from statgenus.abelian_core import AbelianPGroup
from statgenus.block_ring import (
    TrivialBlockError,
    ie_exponent,
    mj_module,
    mj_ring,
    nontrivial_blocks,
    primitive_idempotents,
    residue_functional,
)


def _blocks(text):
    return nontrivial_blocks(AbelianPGroup.parse(text))


@pytest.mark.parametrize(
    "text, count",
    # orbits of characters under Galois: one per cyclic quotient
    [("3", 2), ("9", 3), ("27", 4), ("3x3", 5), ("9x3", 8), ("5", 2), ("5x5", 7)],
)
def test_block_count(text, count):
    assert len(primitive_idempotents(AbelianPGroup.parse(text))) == count


@pytest.mark.parametrize(
    "text, exponents",
    [
        ("3", [1]),
        ("9", [2, 3]),
        ("27", [4, 6, 9]),
        ("3x3", [2, 2, 2, 2]),
        ("5", [1]),
        ("25", [4, 5]),
    ],
)
def test_ie_exponent_values(text, exponents):
    assert [ie_exponent(b) for b in _blocks(text)] == exponents


def test_trivial_block_is_refused():
    A = AbelianPGroup.parse("3")
    trivial = [b for b in primitive_idempotents(A) if b.is_trivial][0]
    with pytest.raises(TrivialBlockError):
        ie_exponent(trivial)


@pytest.mark.parametrize("text", ["3", "9", "3x3", "27"])
def test_mj_order_is_p_to_the_j(text):
    for b in _blocks(text):
        for j in range(1, ie_exponent(b) + 1):
            assert mj_module(b, j).order == b.p ** j


def test_m1_is_trivial_module():
    for b in _blocks("9"):
        M = mj_module(b, 1)
        for g in M.actions:
            assert [[x % 3 for x in row] for row in g] == [[1]]


@pytest.mark.parametrize("text", ["9", "3x3"])
def test_residue_functional_is_invariant(text):
    for b in _blocks(text):
        for j in range(1, ie_exponent(b) + 1):
            M = mj_module(b, j)
            r = residue_functional(b, j)
            assert any(r)
            for g in M.actions:
                # r(g v) = r(v) on every basis vector
                for c in range(M.dim):
                    col = [g[i][c] for i in range(M.dim)]
                    assert sum(a * x for a, x in zip(r, col)) % b.p == r[c] % b.p


def test_mj_ring_of_z9_level3():
    b = _blocks("9")[1]
    R = mj_ring(b, 3)
    assert R.order == 27
    pi = R.pi
    x = R.one
    for _ in range(3):
        x = R.mul(x, pi)
    assert R.residue(x) == 0 and x.is_zero()
