"""Finite abelian p-groups, their characters and small subgroup combinatorics.

Elements are plain tuples of integers in a fixed invariant-factor basis, so
they hash cheaply and can be used as dictionary keys everywhere.
"""

from __future__ import annotations

import itertools
from math import gcd
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from sympy import isprime, primefactors

GroupElement = tuple


def _valuation(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class AbelianPGroup:
    """The group Z/p^e1 + ... + Z/p^en with e1 >= ... >= en >= 1."""

    p: int
    invariants: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "invariants", tuple(int(e) for e in self.invariants))
        if self.p < 3 or not isprime(self.p):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if not self.invariants:
            raise ValueError("a group needs at least one cyclic factor")
        if any(e < 1 for e in self.invariants):
            raise ValueError("exponents must be positive")
        if list(self.invariants) != sorted(self.invariants, reverse=True):
            raise ValueError("exponents must be non-increasing")

    @classmethod
    def parse(cls, text: str) -> "AbelianPGroup":
        """Parse "9x3" style strings (factor sizes separated by x)."""
        parts = [s for s in re.split(r"[x*,\s]+", text.strip()) if s]
        if not parts:
            raise ValueError(f"cannot parse group {text!r}")
        sizes = sorted((int(s) for s in parts), reverse=True)
        if min(sizes) < 2:
            raise ValueError(f"cannot parse group {text!r}")
        p = min(primefactors(n)[0] for n in sizes)
        exps = []
        for n in sizes:
            e = 0
            m = n
            while m % p == 0:
                m //= p
                e += 1
            if m != 1 or e == 0:
                raise ValueError(f"factor {n} is not a power of {p}")
            exps.append(e)
        return cls(p, tuple(exps))

    @classmethod
    def from_moduli(cls, p: int, moduli: Iterable[int]) -> "AbelianPGroup":
        exps = sorted((_valuation(m, p) for m in moduli if m > 1), reverse=True)
        return cls(p, tuple(exps))

    @property
    def label(self) -> str:
        return "x".join(str(m) for m in self.moduli)

    def __str__(self) -> str:
        return self.label

    @cached_property
    def moduli(self) -> tuple[int, ...]:
        return tuple(self.p ** e for e in self.invariants)

    @property
    def rank(self) -> int:
        return len(self.invariants)

    @cached_property
    def order(self) -> int:
        return self.p ** sum(self.invariants)

    @property
    def exponent(self) -> int:
        return self.moduli[0]

    @property
    def zero(self) -> GroupElement:
        return (0,) * self.rank

    @cached_property
    def _elements(self) -> tuple[GroupElement, ...]:
        return tuple(itertools.product(*(range(m) for m in self.moduli)))

    def elements(self) -> tuple[GroupElement, ...]:
        return self._elements

    def nonzero_elements(self) -> tuple[GroupElement, ...]:
        return self._elements[1:]

    def basis(self) -> list[GroupElement]:
        out = []
        for i in range(self.rank):
            v = [0] * self.rank
            v[i] = 1
            out.append(tuple(v))
        return out

    def element(self, coords: Sequence[int]) -> GroupElement:
        if len(coords) != self.rank:
            raise ValueError("wrong number of coordinates")
        return tuple(int(c) % m for c, m in zip(coords, self.moduli))

    def add(self, g: GroupElement, h: GroupElement) -> GroupElement:
        return tuple((a + b) % m for a, b, m in zip(g, h, self.moduli))

    def sub(self, g: GroupElement, h: GroupElement) -> GroupElement:
        return tuple((a - b) % m for a, b, m in zip(g, h, self.moduli))

    def neg(self, g: GroupElement) -> GroupElement:
        return tuple((-a) % m for a, m in zip(g, self.moduli))

    def scale(self, k: int, g: GroupElement) -> GroupElement:
        return tuple((k * a) % m for a, m in zip(g, self.moduli))

    def combine(self, coeffs: Sequence[int], elems: Sequence[GroupElement]) -> GroupElement:
        out = [0] * self.rank
        for k, g in zip(coeffs, elems):
            for i, a in enumerate(g):
                out[i] += k * a
        return self.element(out)

    def order_of(self, g: GroupElement) -> int:
        best = 1
        for a, m in zip(g, self.moduli):
            if a % m:
                o = m // gcd(a, m)
                if o > best:
                    best = o
        return best

    def p_rank(self) -> int:
        """dim over F_p of A[p] (equivalently of A/pA)."""
        return self.rank

    def span(self, gens: Iterable[GroupElement]) -> frozenset:
        """Subgroup generated by gens, by closure under addition."""
        gens = [g for g in gens if any(g)]
        seen = {self.zero}
        frontier = [self.zero]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.add(x, g)
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return frozenset(seen)

    def cyclic_subgroup(self, g: GroupElement) -> frozenset:
        out = []
        x = self.zero
        while True:
            out.append(x)
            x = self.add(x, g)
            if x == self.zero:
                break
        return frozenset(out)

    def elements_of_order_dividing(self, n: int) -> list[GroupElement]:
        return [g for g in self._elements if n % self.order_of(g) == 0]


def element_order(group: AbelianPGroup, g: GroupElement) -> int:
    """Smallest m >= 1 with m*g = 0."""
    return group.order_of(g)


@dataclass(frozen=True)
class GroupChar:
    """Additive character A -> Z/p^n, n the exponent valuation of A.

    ``values[i]`` is the image of the i-th basis vector.
    """

    group: AbelianPGroup
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        A = self.group
        n = A.invariants[0]
        top = A.p ** n
        vals = tuple(int(v) % top for v in self.values)
        object.__setattr__(self, "values", vals)
        for v, e in zip(vals, A.invariants):
            if v % (A.p ** (n - e)):
                raise ValueError(f"value {v} not compatible with factor p^{e}")

    @property
    def target_exponent(self) -> int:
        return self.group.invariants[0]

    @property
    def modulus(self) -> int:
        return self.group.exponent

    def __call__(self, g: GroupElement) -> int:
        return sum(v * a for v, a in zip(self.values, g)) % self.modulus

    def order(self) -> int:
        m = self.modulus
        best = 1
        for v in self.values:
            if v:
                best = max(best, m // gcd(v, m))
        return best

    def level(self) -> int:
        return _valuation(self.order(), self.group.p) if self.order() > 1 else 0

    def power(self, u: int) -> "GroupChar":
        return GroupChar(self.group, tuple(u * v for v in self.values))

    def is_trivial(self) -> bool:
        return not any(self.values)

    def kernel(self) -> frozenset:
        return frozenset(g for g in self.group.elements() if self(g) == 0)


def characters_of(group: AbelianPGroup) -> list[GroupChar]:
    """All |A| characters, in lexicographic order of their value vectors."""
    n = group.invariants[0]
    p = group.p
    ranges = [range(0, p ** n, p ** (n - e)) for e in group.invariants]
    return [GroupChar(group, vals) for vals in itertools.product(*ranges)]


def hom_to_fp(group: AbelianPGroup) -> list[tuple[int, ...]]:
    """All homomorphisms A -> F_p, as value vectors on the basis."""
    return [tuple(v) for v in itertools.product(range(group.p), repeat=group.rank)]


def eval_fp_hom(f: Sequence[int], g: GroupElement, p: int) -> int:
    return sum(a * b for a, b in zip(f, g)) % p


@dataclass(frozen=True)
class SubgroupPair:
    """A pair (D, I): D generated by at most two elements, I cyclic, D/I cyclic.

    ``inertia_gen`` generates I and ``frob`` is an element of D whose image
    generates D/I, so D = <inertia_gen, frob>.
    """

    group: AbelianPGroup
    D: frozenset
    I: frozenset
    inertia_gen: GroupElement
    frob: GroupElement

    @property
    def key(self) -> tuple:
        return (len(self.D), tuple(sorted(self.D)), len(self.I), tuple(sorted(self.I)))

    def describe(self) -> str:
        return f"D=<{_fmt(self.inertia_gen)},{_fmt(self.frob)}>|{len(self.D)}|;I=<{_fmt(self.inertia_gen)}>|{len(self.I)}|"


def _fmt(g: GroupElement) -> str:
    return "(" + ",".join(str(a) for a in g) + ")"


def _cyclic_generator(group: AbelianPGroup, H: frozenset) -> GroupElement | None:
    for g in sorted(H):
        if group.order_of(g) == len(H):
            return g
    return None


def make_pair(group: AbelianPGroup, inertia_gen: GroupElement, frob: GroupElement) -> SubgroupPair:
    I = group.cyclic_subgroup(inertia_gen)
    D = group.span([inertia_gen, frob])
    return SubgroupPair(group, D, I, inertia_gen, frob)


def subgroup_pairs_C(group: AbelianPGroup) -> list[SubgroupPair]:
    """Every pair (D, I) with D 2-generated, I cyclic in D and D/I cyclic.

    Exhaustive: D runs over spans of all pairs of elements, I over cyclic
    subgroups of D; the witness ``frob`` is the least element generating D/I.
    Sorted canonically by (|D|, D, |I|, I).
    """
    subgroups = set()
    elems = group.elements()
    for x in elems:
        for y in elems:
            if y < x:
                continue
            subgroups.add(group.span([x, y]))
    pairs = []
    for D in subgroups:
        cyclic = {}
        for z in sorted(D):
            C = group.cyclic_subgroup(z)
            if C not in cyclic:
                cyclic[C] = z
        for C in cyclic:
            gen = _cyclic_generator(group, C)
            for d in sorted(D):
                if len(group.span([gen, d])) == len(D):
                    pairs.append(SubgroupPair(group, D, C, gen, d))
                    break
    pairs.sort(key=lambda pr: pr.key)
    return pairs


def subgroup_basis(group: AbelianPGroup, H: frozenset) -> list[GroupElement]:
    """An invariant-factor basis of a subgroup generated by at most two elements.

    Returned in non-increasing order of element orders; empty for the
    trivial subgroup.
    """
    if len(H) == 1:
        return []
    top = max(group.order_of(h) for h in H)
    if top == len(H):
        return [_cyclic_generator(group, H)]
    for x in sorted(H):
        ox = group.order_of(x)
        if ox != top:
            continue
        for y in sorted(H):
            oy = group.order_of(y)
            if ox * oy == len(H) and len(group.span([x, y])) == len(H):
                return [x, y]
    raise ValueError("subgroup needs more than two generators")


def coordinates_in(group: AbelianPGroup, basis: Sequence[GroupElement]) -> dict:
    """Map each element of span(basis) to its coordinate tuple in that basis."""
    orders = [group.order_of(b) for b in basis]
    table = {}
    for coeffs in itertools.product(*(range(o) for o in orders)):
        table[group.combine(coeffs, basis)] = tuple(coeffs)
    return table


def generated_by(group: AbelianPGroup, elems: Iterable[GroupElement]) -> bool:
    return len(group.span(elems)) == group.order
