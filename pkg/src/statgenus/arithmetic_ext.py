"""Abelian p-extensions of Q through tuples of squarefree integers.

An extension with group A is encoded by w = (w_a) over a in A - {0}: the
primes dividing w_a are exactly those whose tame (or wild, for q = p)
inertia generator maps to a. Characters are evaluated with discrete logs to
the least primitive root g_q, which is identified with sigma_q throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

from sympy import primerange, primitive_root

from .abelian_core import AbelianPGroup, GroupElement, SubgroupPair, make_pair
from .block_ring import IdempotentBlock, ie_exponent
from .cohomology import constant_C, special_level

INFINITY = "inf"


def _vp(n: int, p: int) -> int:
    v = 0
    while n and n % p == 0:
        n //= p
        v += 1
    return v


# -- discrete logarithms -------------------------------------------------------------


@lru_cache(maxsize=None)
def least_primitive_root(q: int) -> int:
    return int(primitive_root(q))


@lru_cache(maxsize=None)
def _ppart_table(q: int, p: int) -> tuple:
    """(p^m, (q-1)/p^m, {h^k: k}) with h = g_q^((q-1)/p^m) generating the p-part."""
    m = _vp(q - 1, p)
    pm = p ** m
    cof = (q - 1) // pm
    h = pow(least_primitive_root(q), cof, q)
    table = {}
    y = 1
    for k in range(pm):
        table[y] = k
        y = y * h % q
    return pm, cof, table


def p_index(q: int, p: int, x: int) -> int:
    """ind_{g_q}(x) modulo the p-part p^m of q - 1 (Pohlig-Hellman projection)."""
    if x % q == 0:
        raise ValueError(f"{x} is not a unit modulo {q}")
    pm, cof, table = _ppart_table(q, p)
    return table[pow(x % q, cof, q)]


@lru_cache(maxsize=None)
def _wild_table(p: int, m: int) -> tuple:
    mod = p ** (m + 1)
    pm = p ** m
    # e = 1 mod p^m and e = 0 mod p - 1 projects onto 1 + pZ
    e = (p - 1) * pow(p - 1, -1, pm) if pm > 1 else p - 1
    table = {}
    y = 1
    for k in range(pm):
        table[y] = k
        y = y * (1 + p) % mod
    return mod, e, table


def wild_log(p: int, m: int, x: int) -> int:
    """Discrete log base 1 + p of the projection of x to (1 + pZ)/(1 + p^{m+1}Z)."""
    if x % p == 0:
        raise ValueError(f"{x} is not a unit modulo {p}")
    mod, e, table = _wild_table(p, m)
    return table[pow(x % mod, e, mod)]


def char_eval(p: int, q: int, n: int, x: int) -> int:
    """chi_{q,n}(x) as an exponent in Z/p^n (the value is zeta_{p^n}^exponent).

    For p^n | q - 1 this is ind_{g_q}(x) mod p^n. When only p^m | q - 1 with
    m < n the order-p^m choice p^{n-m} * (ind mod p^m) is used. For q = p it
    is the wild logarithm.
    """
    if q == p:
        return wild_log(p, n, x) % p ** n
    if (q - 1) % p:
        raise ValueError(f"need q = 1 mod {p} or q = {p}")
    if x % q == 0:
        raise ValueError(f"chi_{q} is not defined at multiples of {q}")
    m = _vp(q - 1, p)
    ind = p_index(q, p, x)
    if m >= n:
        return ind % p ** n
    return p ** (n - m) * (ind % p ** m) % p ** n


def modified_char(p: int, q: int, x: int, n: int = 1) -> int:
    """psi_q(x): strongly multiplicative, chi_q on primes other than q, psi_q(q) = 1."""
    if x < 1:
        raise ValueError("modified characters are defined on positive integers")
    while x % q == 0:
        x //= q
    return char_eval(p, q, n, x)


# -- tuples --------------------------------------------------------------------------


def _fmt(g: GroupElement) -> str:
    return ",".join(str(c) for c in g)


@dataclass(frozen=True)
class ExtensionTuple:
    """(w_a)_{a != 0}; only entries with w_a != 1 are stored, sorted by a."""

    group: AbelianPGroup
    w: tuple

    def __post_init__(self) -> None:
        entries = tuple(sorted((tuple(a), int(n)) for a, n in dict(self.w).items() if n != 1))
        object.__setattr__(self, "w", entries)
        self.validate()

    @classmethod
    def from_map(cls, group: AbelianPGroup, w: dict) -> "ExtensionTuple":
        return cls(group, tuple(w.items()))

    def validate(self) -> None:
        A = self.group
        p = A.p
        seen: set = set()
        for a, n in self.w:
            if len(a) != A.rank or not any(a):
                raise ValueError(f"w must be indexed by nonzero elements, got {a}")
            if n < 1:
                raise ValueError("w_a must be positive")
            o = A.order_of(a)
            for q in _prime_factors(n):
                if n % (q * q) == 0:
                    raise ValueError(f"w_{_fmt(a)} = {n} is not squarefree")
                if q in seen:
                    raise ValueError(f"{q} divides two entries")
                seen.add(q)
                if q != p and (q - 1) % o:
                    raise ValueError(f"{q} is neither {p} nor 1 mod ord({_fmt(a)}) = {o}")

    def w_of(self, a: GroupElement) -> int:
        return dict(self.w).get(tuple(a), 1)

    @property
    def conductor(self) -> int:
        f = 1
        for _, n in self.w:
            f *= n
        return f

    @cached_property
    def inertia_images(self) -> dict:
        """Prime q -> the element a with q | w_a."""
        out = {}
        for a, n in self.w:
            for q in _prime_factors(n):
                out[q] = a
        return dict(sorted(out.items()))

    @property
    def is_surjective(self) -> bool:
        return len(self.group.span([a for a, _ in self.w])) == self.group.order

    def encode(self) -> str:
        return ";".join(f"{_fmt(a)}:{n}" for a, n in self.w)

    @classmethod
    def parse(cls, group: AbelianPGroup, text: str) -> "ExtensionTuple":
        w = {}
        text = text.strip()
        if text:
            for part in text.split(";"):
                key, _, val = part.partition(":")
                a = tuple(int(c) for c in key.split(","))
                w[group.element(a)] = int(val)
        return cls.from_map(group, w)

    def __str__(self) -> str:
        return self.encode()


@lru_cache(maxsize=1 << 16)
def _prime_factors(n: int) -> tuple:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return tuple(out)


# -- handles -------------------------------------------------------------------------


@dataclass(frozen=True)
class Component:
    """The character (Z/q^k)^* -> <a> of one ramified prime."""

    q: int
    a: GroupElement
    order: int
    wild: bool

    def exponent(self, p: int, x: int) -> int:
        """Coefficient c with component(x) = c * a."""
        if self.wild:
            return wild_log(p, _vp(self.order, p), x) % self.order
        return p_index(self.q, p, x) % self.order


@dataclass(frozen=True)
class LocalPlaceData:
    v: object
    inertia: GroupElement
    frob_part: GroupElement
    D: frozenset
    I: frozenset

    @property
    def D_generators(self) -> tuple:
        return (self.inertia, self.frob_part)

    @property
    def is_ramified(self) -> bool:
        return len(self.I) > 1


@dataclass(frozen=True)
class ExtensionHandle:
    ext: ExtensionTuple
    components: tuple = field(init=False)
    modulus: int = field(init=False)

    def __post_init__(self) -> None:
        A = self.ext.group
        comps = []
        M = 1
        for q, a in self.ext.inertia_images.items():
            o = A.order_of(a)
            wild = q == A.p
            comps.append(Component(q, a, o, wild))
            M *= q * o if wild else q
        object.__setattr__(self, "components", tuple(comps))
        object.__setattr__(self, "modulus", M)

    @property
    def group(self) -> AbelianPGroup:
        return self.ext.group

    @property
    def conductor(self) -> int:
        return self.ext.conductor

    @property
    def ramified_primes(self) -> tuple:
        return tuple(c.q for c in self.components)

    @property
    def primitive_roots(self) -> dict:
        return {c.q: least_primitive_root(c.q) for c in self.components if not c.wild}

    def evaluate(self, x: int, skip: int | None = None) -> GroupElement:
        """Sum of the component characters at x, leaving out the component at ``skip``."""
        A = self.group
        out = A.zero
        for c in self.components:
            if c.q == skip:
                continue
            k = c.exponent(A.p, x)
            if k:
                out = A.add(out, A.scale(k, c.a))
        return out

    def __repr__(self) -> str:
        return f"ExtensionHandle({self.ext.group.label}; {self.ext.encode()})"


def _handle(t: ExtensionTuple) -> ExtensionHandle:
    return ExtensionHandle(t)


def handle_from_text(group: AbelianPGroup, text: str) -> ExtensionHandle:
    return ExtensionHandle(ExtensionTuple.parse(group, text))


# -- enumeration ---------------------------------------------------------------------


def admissible_primes(p: int, X: int) -> list:
    """p together with the primes q = 1 mod p up to X."""
    out = [p] if p <= X else []
    out += [q for q in primerange(p + 1, X + 1) if q % p == 1]
    return sorted(out)


def admissible_conductors(p: int, X: int, segment: int = 1 << 15) -> Iterator[tuple]:
    """Squarefree f <= X built from admissible primes, ascending, with factorizations.

    Segmented sieve: memory is O(segment + number of admissible primes).
    """
    primes = admissible_primes(p, X)
    for lo in range(2, X + 1, segment):
        hi = min(lo + segment, X + 1)
        size = hi - lo
        rem = list(range(lo, hi))
        facs: list = [None] * size
        bad = bytearray(size)
        for q in primes:
            if q >= hi:
                break
            start = -(-lo // q) * q
            for m in range(start, hi, q):
                i = m - lo
                r = rem[i] // q
                if r % q == 0:
                    bad[i] = 1
                rem[i] = r
                if facs[i] is None:
                    facs[i] = [q]
                else:
                    facs[i].append(q)
        for i in range(size):
            if rem[i] == 1 and not bad[i]:
                yield lo + i, tuple(facs[i])


def _allowed_elements(A: AbelianPGroup, q: int) -> list:
    if q == A.p:
        return list(A.nonzero_elements())
    return [a for a in A.nonzero_elements() if (q - 1) % A.order_of(a) == 0]


def tuples_with_primes(A: AbelianPGroup, primes: Sequence[int], surjective_only: bool = True) -> list:
    """Every admissible tuple whose ramified primes are exactly ``primes``, sorted by encoding."""
    options = [_allowed_elements(A, q) for q in primes]
    span_cache: dict = {}
    out = []
    for choice in itertools.product(*options):
        if surjective_only:
            key = frozenset(choice)
            ok = span_cache.get(key)
            if ok is None:
                ok = len(A.span(key)) == A.order
                span_cache[key] = ok
            if not ok:
                continue
        w: dict = {}
        for q, a in zip(primes, choice):
            w[a] = w.get(a, 1) * q
        out.append(ExtensionTuple.from_map(A, w))
    out.sort(key=lambda t: t.encode())
    return out


def enumerate_extensions(A: AbelianPGroup, X: int) -> Iterator[ExtensionHandle]:
    """All surjective A-extensions with conductor radical <= X, by conductor then encoding."""
    if X < 1:
        raise ValueError("X must be at least 1")
    for _, primes in admissible_conductors(A.p, X):
        if len(primes) < A.rank:
            continue
        for t in tuples_with_primes(A, primes):
            yield ExtensionHandle(t)


def count_extensions(A: AbelianPGroup, X: int) -> int:
    return sum(1 for _ in enumerate_extensions(A, X))


# -- Ev, Frobenius, local data -------------------------------------------------------


def _crt_unit(handle: ExtensionHandle, q: int, residue: int) -> int:
    """An integer that is ``residue`` modulo the q-part of the modulus and 1 elsewhere."""
    qpart = q
    for c in handle.components:
        if c.q == q and c.wild:
            qpart = q * c.order
    rest = handle.modulus // qpart
    # x = 1 mod rest, x = residue mod qpart
    t = (residue - 1) * pow(rest, -1, qpart) % qpart
    return 1 + rest * t


def inertia_image(handle: ExtensionHandle, q: int) -> GroupElement:
    """phi(sigma_q), read off by evaluating the full character at a CRT lift of
    the inertia generator (g_q, or 1 + p at the wild place)."""
    A = handle.group
    gen = 1 + A.p if q == A.p else least_primitive_root(q)
    if q not in handle.ramified_primes:
        return A.zero
    return handle.evaluate(_crt_unit(handle, q, gen))


def ev_roundtrip(handle: ExtensionHandle) -> ExtensionTuple:
    """Recover w from the character: q | w_a iff phi(sigma_q) = a."""
    A = handle.group
    w: dict = {}
    for q in handle.ramified_primes:
        a = inertia_image(handle, q)
        if any(a):
            w[a] = w.get(a, 1) * q
    return ExtensionTuple.from_map(A, w)


def frobenius_at(handle: ExtensionHandle, ell: int) -> GroupElement:
    """phi(Frob_ell) for ell coprime to the modulus."""
    from math import gcd

    if gcd(ell, handle.modulus) != 1:
        raise ValueError(f"{ell} divides modulus {handle.modulus}")
    return handle.evaluate(ell)


def local_data_at(handle: ExtensionHandle, v) -> LocalPlaceData:
    A = handle.group
    zero = A.zero
    if v == INFINITY or v is None or (isinstance(v, float) and v == float("inf")):
        return LocalPlaceData(INFINITY, zero, zero, frozenset([zero]), frozenset([zero]))
    v = int(v)
    images = handle.ext.inertia_images
    if v in images:
        a = images[v]
        frob = handle.evaluate(v, skip=v)
        pair = make_pair(A, a, frob)
        return LocalPlaceData(v, a, frob, pair.D, pair.I)
    frob = frobenius_at(handle, v)
    return LocalPlaceData(v, zero, frob, A.cyclic_subgroup(frob), frozenset([zero]))


def local_pair(handle: ExtensionHandle, v: int) -> SubgroupPair:
    data = local_data_at(handle, v)
    return make_pair(handle.group, data.inertia, data.frob_part)


def ramified_local_data(handle: ExtensionHandle) -> list:
    return [local_data_at(handle, q) for q in handle.ramified_primes]


# -- special primes and the rank prediction ------------------------------------------


@dataclass(frozen=True)
class SpecialPrimes:
    level: int
    max_levels: dict
    special: frozenset

    @property
    def count(self) -> int:
        return len(self.special)


def _check_level(block: IdempotentBlock, d: int) -> int:
    block.require_nontrivial()
    r = ie_exponent(block)
    if not 1 <= d <= r:
        raise ValueError(f"d out of range: need 1 <= d <= {r}")
    return r


def special_primes(handle: ExtensionHandle, block: IdempotentBlock, d: int) -> SpecialPrimes:
    """Per ramified v the largest i <= d at which v is special, and the set at level d."""
    _check_level(block, d)
    levels = {}
    for v in handle.ramified_primes:
        levels[v] = special_level(local_pair(handle, v), block, d)
    return SpecialPrimes(d, levels, frozenset(v for v, i in levels.items() if i >= d))


@dataclass(frozen=True)
class RankPrediction:
    rank: int
    special_count: int
    constant: int

    @property
    def applicable(self) -> bool:
        return self.rank >= 0


def predict_rank(handle: ExtensionHandle, block: IdempotentBlock, d: int) -> RankPrediction:
    """#special primes at level d plus C(A, e, d); a negative value is returned
    as is and flagged through ``applicable``."""
    sp = special_primes(handle, block, d)
    C = constant_C(handle.group, block, d)
    return RankPrediction(sp.count + C, sp.count, C)
