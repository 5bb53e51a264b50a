import pytest
from hypothesis import given, strategies as st

from statgenus.abelian_core import (
    AbelianPGroup,
    GroupChar,
    characters_of,
    eval_fp_hom,
    hom_to_fp,
    make_pair,
    subgroup_basis,
    subgroup_pairs_C,
)

GROUPS = ["3", "9", "27", "3x3", "9x3", "5", "5x5", "3x3x3"]


@pytest.mark.parametrize("text", GROUPS)
def test_parse_label_roundtrip(text):
    A = AbelianPGroup.parse(text)
    assert AbelianPGroup.parse(A.label) == A


def test_parse_sorts_factors_and_finds_p():
    A = AbelianPGroup.parse("3x9")
    assert A.p == 3 and A.invariants == (2, 1)
    assert A.order == 27 and A.exponent == 9 and A.rank == 2


@pytest.mark.parametrize("bad", ["", "6", "3x5", "1", "x"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        AbelianPGroup.parse(bad)


@pytest.mark.parametrize("text", GROUPS)
def test_element_counts(text):
    A = AbelianPGroup.parse(text)
    assert len(A.elements()) == A.order
    assert len(A.nonzero_elements()) == A.order - 1
    assert len(A.span(A.basis())) == A.order


def test_orders_in_z9x3():
    A = AbelianPGroup.parse("9x3")
    assert A.order_of((0, 0)) == 1
    assert A.order_of((3, 0)) == 3
    assert A.order_of((1, 2)) == 9
    assert len(A.cyclic_subgroup((3, 1))) == 3


@pytest.mark.parametrize("text", GROUPS)
def test_character_group_has_order_A(text):
    A = AbelianPGroup.parse(text)
    chars = characters_of(A)
    assert len(chars) == A.order
    assert len({c.values for c in chars}) == A.order
    assert len(hom_to_fp(A)) == A.p ** A.rank


@pytest.mark.parametrize("text", ["9x3", "3x3", "27"])
def test_characters_are_homomorphisms(text):
    A = AbelianPGroup.parse(text)
    for chi in characters_of(A):
        for g in A.elements():
            for h in A.elements()[:10]:
                assert chi(A.add(g, h)) == (chi(g) + chi(h)) % chi.modulus


def test_character_rejects_incompatible_values():
    A = AbelianPGroup.parse("9x3")
    with pytest.raises(ValueError):
        GroupChar(A, (0, 1))


def test_kernel_index_matches_order():
    A = AbelianPGroup.parse("9x3")
    for chi in characters_of(A):
        assert len(chi.kernel()) * chi.order() == A.order


def test_fp_homs_kill_pA():
    A = AbelianPGroup.parse("9x3")
    for f in hom_to_fp(A):
        assert eval_fp_hom(f, A.scale(3, (1, 1)), 3) == 0


def test_subgroup_pairs_of_z3():
    # (D, I) in {(1, 1), (C3, 1), (C3, C3)}
    A = AbelianPGroup.parse("3")
    sizes = sorted((len(p.D), len(p.I)) for p in subgroup_pairs_C(A))
    assert sizes == [(1, 1), (3, 1), (3, 3)]


def test_subgroup_pairs_have_cyclic_quotient():
    A = AbelianPGroup.parse("3x3")
    pairs = subgroup_pairs_C(A)
    assert len({p.key for p in pairs}) == len(pairs)
    for pr in pairs:
        assert pr.I <= pr.D
        assert len(A.span([pr.inertia_gen, pr.frob])) == len(pr.D)


def test_make_pair_spans():
    A = AbelianPGroup.parse("3x3")
    pr = make_pair(A, (1, 0), (0, 1))
    assert len(pr.D) == 9 and len(pr.I) == 3


def test_subgroup_basis_of_full_group():
    A = AbelianPGroup.parse("9x3")
    basis = subgroup_basis(A, frozenset(A.elements()))
    assert sorted(A.order_of(b) for b in basis) == [3, 9]


element = st.tuples(st.integers(0, 8), st.integers(0, 2))


@given(element, element, element)
def test_group_law(g, h, k):
    A = AbelianPGroup.parse("9x3")
    g, h, k = A.element(g), A.element(h), A.element(k)
    assert A.add(g, h) == A.add(h, g)
    assert A.add(A.add(g, h), k) == A.add(g, A.add(h, k))
    assert A.add(g, A.neg(g)) == A.zero
    assert A.sub(A.add(g, h), h) == g
