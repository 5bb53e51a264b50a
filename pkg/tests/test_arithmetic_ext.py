import random

import pytest
from hypothesis import given, strategies as st

from oracles import admissible_primes_upto, brute_extensions, brute_index, brute_wild_log, count_cyclic_p
from statgenus.abelian_core import AbelianPGroup
from statgenus.arithmetic_ext import (
    ExtensionHandle,
    ExtensionTuple,
    admissible_conductors,
    char_eval,
    count_extensions,
    enumerate_extensions,
    ev_roundtrip,
    frobenius_at,
    handle_from_text,
    least_primitive_root,
    local_data_at,
    modified_char,
    p_index,
    predict_rank,
    special_primes,
    wild_log,
)


def test_least_primitive_roots():
    assert [least_primitive_root(q) for q in (7, 13, 19, 31, 37)] == [3, 2, 2, 3, 2]


def test_chi7_of_2():
    # 3 generates (Z/7)^*, 3^2 = 2, so ind(2) = 2
    assert char_eval(3, 7, 1, 2) == 2


@pytest.mark.parametrize("q", [7, 13, 19, 37, 109, 163])
def test_char_eval_against_brute_log(q):
    for x in range(1, q):
        assert char_eval(3, q, 1, x) == brute_index(q, x) % 3
        if (q - 1) % 9 == 0:
            assert char_eval(3, q, 2, x) == brute_index(q, x) % 9


def test_char_eval_below_full_level_uses_order_p_character():
    # 7 - 1 is not divisible by 9: the order-3 character scaled into Z/9
    for x in range(1, 7):
        assert char_eval(3, 7, 2, x) == 3 * (brute_index(7, x) % 3)


@pytest.mark.parametrize("p, m", [(3, 1), (3, 2), (5, 1), (5, 2)])
def test_wild_log_against_teichmuller(p, m):
    for x in range(1, p ** (m + 1)):
        if x % p:
            assert wild_log(p, m, x) == brute_wild_log(p, m, x)


def test_wild_log_of_generator():
    assert wild_log(3, 2, 4) == 1
    assert char_eval(3, 3, 1, 4) == 1


def test_char_eval_errors():
    with pytest.raises(ValueError):
        char_eval(3, 5, 1, 2)
    with pytest.raises(ValueError):
        char_eval(3, 7, 1, 14)


def test_modified_char_ignores_own_prime():
    assert modified_char(3, 7, 7) == 0
    assert modified_char(3, 7, 14) == char_eval(3, 7, 1, 2)


@given(st.integers(1, 10 ** 6), st.integers(1, 10 ** 6), st.sampled_from([7, 13, 19, 37, 73, 109]))
def test_char_eval_is_multiplicative(x, y, q):
    if x % q and y % q:
        assert char_eval(3, q, 1, x * y) == (char_eval(3, q, 1, x) + char_eval(3, q, 1, y)) % 3
    if q in (19, 37, 73, 109) and x % q and y % q:
        assert char_eval(3, q, 2, x * y) == (char_eval(3, q, 2, x) + char_eval(3, q, 2, y)) % 9


@given(st.integers(1, 10 ** 6))
def test_p_index_reduces_full_index(x):
    q = 109
    if x % q:
        assert p_index(q, 3, x) == brute_index(q, x) % 27


# -- tuples and enumeration -----------------------------------------------------------


def test_tuple_validation(z3, z9):
    with pytest.raises(ValueError):
        ExtensionTuple.parse(z3, "1:9")
    with pytest.raises(ValueError):
        ExtensionTuple.parse(z3, "1:5")
    with pytest.raises(ValueError):
        ExtensionTuple.parse(z3, "1:7;2:7")
    with pytest.raises(ValueError):
        ExtensionTuple.parse(z9, "1:7")  # 7 is not 1 mod 9
    assert ExtensionTuple.parse(z9, "3:7").conductor == 7


def test_encode_parse_roundtrip(z3sq):
    t = ExtensionTuple.parse(z3sq, "1,0:7;0,1:13")
    assert ExtensionTuple.parse(z3sq, t.encode()) == t
    assert t.is_surjective and t.conductor == 91


def test_small_families(z3, z3sq):
    assert [h.ext.encode() for h in enumerate_extensions(z3, 10)] == ["1:3", "2:3", "1:7", "2:7"]
    assert list(enumerate_extensions(z3, 2)) == []
    assert list(enumerate_extensions(z3sq, 10)) == []


@pytest.mark.parametrize("X, count", [(5000, 2166), (10000, 4332)])
def test_cyclic_cubic_counts(z3, X, count):
    assert count_extensions(z3, X) == count


def test_cyclic_cubic_count_matches_oracle(z3):
    assert count_extensions(z3, 3000) == count_cyclic_p(3, 3000)


@pytest.mark.parametrize("text, X", [("9", 1500), ("3x3", 1500), ("5", 1500)])
def test_enumeration_matches_brute(text, X):
    A = AbelianPGroup.parse(text)
    got = [(h.conductor, dict(h.ext.inertia_images)) for h in enumerate_extensions(A, X)]
    want = brute_extensions(A, X)
    assert sorted(map(repr, got)) == sorted(map(repr, want))


def test_enumeration_order(z3):
    keys = [(h.conductor, h.ext.encode()) for h in enumerate_extensions(z3, 2000)]
    assert keys == sorted(keys)


def test_admissible_conductors_are_squarefree_products():
    primes = set(admissible_primes_upto(3, 500))
    for f, fac in admissible_conductors(3, 500):
        prod = 1
        for q in fac:
            assert q in primes
            prod *= q
        assert prod == f and len(set(fac)) == len(fac)


# -- local data ----------------------------------------------------------------------


def test_frobenius_at_2_in_conductor_7(z3):
    h = handle_from_text(z3, "1:7")
    assert frobenius_at(h, 2) == (2,)
    assert frobenius_at(h, 13) == (0,)  # 13 = -1 mod 7 is a cube
    with pytest.raises(ValueError):
        frobenius_at(h, 7)


def test_local_data_at_ramified_place(z3):
    h = handle_from_text(z3, "1:91")
    d7 = local_data_at(h, 7)
    assert d7.inertia == (1,) and d7.frob_part == (2,)
    assert local_data_at(h, "inf").inertia == (0,)


def test_conductor_formula_and_roundtrip_on_family():
    for text, X in [("3", 3000), ("9", 2000), ("3x3", 3000)]:
        A = AbelianPGroup.parse(text)
        for h in enumerate_extensions(A, X):
            assert ev_roundtrip(h) == h.ext
            assert h.conductor == h.ext.conductor


def _random_tuple(A, rng, bound=3000):
    primes = [q for q in admissible_primes_upto(A.p, bound)]
    while True:
        chosen = rng.sample(primes, rng.randint(1, 3))
        w = {}
        for q in chosen:
            allowed = [a for a in A.nonzero_elements() if q == A.p or (q - 1) % A.order_of(a) == 0]
            if not allowed:
                break
            a = rng.choice(allowed)
            w[a] = w.get(a, 1) * q
        else:
            return ExtensionTuple.from_map(A, w)


@given(st.integers(0, 10 ** 9), st.sampled_from(["3", "9", "3x3", "27", "5"]))
def test_roundtrip_random_tuples(seed, text):
    A = AbelianPGroup.parse(text)
    t = _random_tuple(A, random.Random(seed))
    h = ExtensionHandle(t)
    assert ev_roundtrip(h) == t


def test_character_is_multiplicative(z3sq):
    h = handle_from_text(z3sq, "1,0:7;0,1:13")
    rng = random.Random(5)
    for _ in range(200):
        x, y = rng.randrange(1, 10 ** 6), rng.randrange(1, 10 ** 6)
        if x % 7 and x % 13 and x % 3 and y % 7 and y % 13 and y % 3:
            assert h.evaluate(x * y) == z3sq.add(h.evaluate(x), h.evaluate(y))


# -- special primes and predictions --------------------------------------------------


def test_special_primes_of_conductor_91(z3, z3_block):
    h = handle_from_text(z3, "1:7;2:13")
    sp = special_primes(h, z3_block, 1)
    assert sp.special == frozenset({7, 13})
    pr = predict_rank(h, z3_block, 1)
    assert (pr.rank, pr.special_count, pr.constant) == (1, 2, -1)


def test_prediction_for_conductor_3(z3, z3_block):
    assert predict_rank(handle_from_text(z3, "1:3"), z3_block, 1).rank == 0


def test_prediction_level_bounds(z3, z3_block):
    with pytest.raises(ValueError):
        predict_rank(handle_from_text(z3, "1:7"), z3_block, 2)


def test_genus_rank_on_small_family(z3, z3_block):
    for h in enumerate_extensions(z3, 1000):
        assert predict_rank(h, z3_block, 1).rank == len(h.ramified_primes) - 1
