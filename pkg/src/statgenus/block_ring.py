"""Blocks eZ_p[A] of the group ring and their quotients M_j = eZ_p[A]/m^j.

A block at level k is identified with Z_p[zeta_{p^k}] through a character
chi of order p^k; a group element g acts as multiplication by zeta^chi(g).
Elements of M_j are stored as pi-adic digit vectors with pi = zeta - 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import Sequence

from . import zmod
from .abelian_core import AbelianPGroup, GroupChar, GroupElement, characters_of
from .cyclotomic import (
    degree_of,
    divide_by_x_minus_one,
    monomial,
    p_over_pi,
    poly_mul,
    poly_mulmod,
    reduce_mod_cyclotomic,
)
from .finite_module import FiniteModule

ZERO = "zero"


class TrivialBlockError(ValueError):
    pass


@dataclass(frozen=True)
class IdempotentBlock:
    """A Galois orbit of characters, i.e. a primitive idempotent of Q_p[A]."""

    group: AbelianPGroup
    orbit_rep: GroupChar
    level: int
    orbit: tuple

    @property
    def p(self) -> int:
        return self.group.p

    @property
    def is_trivial(self) -> bool:
        return self.level == 0

    def require_nontrivial(self) -> None:
        if self.is_trivial:
            raise TrivialBlockError("trivial idempotent excluded")

    @property
    def ramification_index(self) -> int:
        """v_pi(p) = (p-1)p^(k-1)."""
        self.require_nontrivial()
        return degree_of(self.p, self.level)

    def zeta_exponent(self, g: GroupElement) -> int:
        """c with g acting as zeta_{p^k}^c."""
        n = self.group.invariants[0]
        return (self.orbit_rep(g) // self.p ** (n - self.level)) % self.p ** self.level

    def acts_trivially_mod(self, g: GroupElement, j: int) -> bool:
        """Whether g acts trivially on M_j, i.e. v_pi(zeta^c - 1) >= j."""
        c = self.zeta_exponent(g)
        return zeta_power_minus_one_valuation(self.p, self.level, c) >= j

    @property
    def label(self) -> str:
        vals = ",".join(str(v) for v in self.orbit_rep.values)
        return f"A={self.group.label};chi=({vals});k={self.level}"

    def __str__(self) -> str:
        return self.label


def zeta_power_minus_one_valuation(p: int, k: int, c: int) -> float:
    """v_pi(zeta_{p^k}^c - 1) in Z_p[zeta_{p^k}]; infinite when c = 0 mod p^k."""
    c %= p ** k
    if c == 0:
        return float("inf")
    s = 0
    while c % p == 0:
        c //= p
        s += 1
    return p ** s


def _char_level(chi: GroupChar) -> int:
    return chi.level()


def primitive_idempotents(group: AbelianPGroup) -> list[IdempotentBlock]:
    """One block per orbit of characters under chi -> chi^u, u prime to p.

    Sorted by level, then by the least value vector in the orbit.
    """
    p = group.p
    remaining = {c.values: c for c in characters_of(group)}
    blocks = []
    for vals in sorted(remaining):
        if vals not in remaining:
            continue
        chi = remaining[vals]
        k = _char_level(chi)
        units = [u for u in range(1, p ** max(k, 1)) if u % p] if k else [1]
        orbit = sorted({chi.power(u).values for u in units})
        for o in orbit:
            remaining.pop(o, None)
        rep = GroupChar(group, orbit[0])
        blocks.append(IdempotentBlock(group, rep, k, tuple(GroupChar(group, o) for o in orbit)))
    blocks.sort(key=lambda b: (b.level, b.orbit_rep.values))
    return blocks


def nontrivial_blocks(group: AbelianPGroup) -> list[IdempotentBlock]:
    return [b for b in primitive_idempotents(group) if not b.is_trivial]


def block_for_character(chi: GroupChar) -> IdempotentBlock:
    for b in primitive_idempotents(chi.group):
        if any(o.values == chi.values for o in b.orbit):
            return b
    raise ValueError("character not found")


def ie_exponent(block: IdempotentBlock) -> int:
    """r_e with I_e = m^{r_e}: the maximum over nonzero g of the pi-adic
    valuation of 1 - zeta^chi(g), or of ord(g) when chi(g) = 0."""
    block.require_nontrivial()
    A = block.group
    E = block.ramification_index
    best = 0
    for g in A.nonzero_elements():
        c = block.zeta_exponent(g)
        if c:
            d = zeta_power_minus_one_valuation(block.p, block.level, c)
        else:
            o = A.order_of(g)
            d = E * _vp(o, block.p)
        best = max(best, int(d))
    return best


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class BlockElem:
    ring: "MjRing"
    digits: tuple

    def __add__(self, other: "BlockElem") -> "BlockElem":
        return self.ring.add(self, other)

    def __sub__(self, other: "BlockElem") -> "BlockElem":
        return self.ring.sub(self, other)

    def __neg__(self) -> "BlockElem":
        return self.ring.neg(self)

    def __mul__(self, other) -> "BlockElem":
        if isinstance(other, int):
            return self.ring.mul(self, self.ring.from_int(other))
        return self.ring.mul(self, other)

    __rmul__ = __mul__

    def valuation(self):
        return mj_valuation(self)

    def is_zero(self) -> bool:
        return not any(self.digits)

    def __repr__(self) -> str:
        return f"BlockElem({self.ring.block.label};j={self.ring.j};{self.digits})"


class MjRing:
    """The ring M_j = eZ_p[A]/m^j with its A-action."""

    def __init__(self, block: IdempotentBlock, j: int):
        if j <= 0:
            raise ValueError("level j must be positive")
        block.require_nontrivial()
        self.block = block
        self.j = j
        self.p = block.p
        self.k = block.level
        self.E = block.ramification_index
        self.T = ceil(j / self.E)
        self.mod = self.p ** self.T
        self._pi_powers = [self._reduce(self._x_minus_one_power(i)) for i in range(j)]
        self._p_over_pi = list(p_over_pi(self.p, self.k))

    def __repr__(self) -> str:
        return f"MjRing({self.block.label}, j={self.j})"

    @property
    def order(self) -> int:
        return self.p ** self.j

    @property
    def exponent(self) -> int:
        """Smallest power of p killing M_j: p^ceil(j/E)."""
        return self.p ** self.T

    def _reduce(self, poly) -> list:
        return reduce_mod_cyclotomic(poly, self.p, self.k, self.mod)

    def _x_minus_one_power(self, i: int) -> list:
        out = [1]
        for _ in range(i):
            out = poly_mul(out, [-1, 1])
        return out

    def to_poly(self, x: BlockElem) -> list:
        out = [0] * self.E
        for c, pw in zip(x.digits, self._pi_powers):
            if c:
                for i, y in enumerate(pw):
                    out[i] += c * y
        return [v % self.mod for v in out]

    def from_poly(self, poly: Sequence[int]) -> BlockElem:
        """Normalize a polynomial in x (x = zeta) into pi-adic digits."""
        P = self._reduce(list(poly))
        digits = []
        p = self.p
        for _ in range(self.j):
            s = sum(P)
            c0 = s % p
            digits.append(c0)
            P = list(P)
            P[0] -= c0
            s -= c0
            # exact division by pi = x - 1
            shifted = list(P)
            shifted[0] -= s
            q = divide_by_x_minus_one(shifted) if len(shifted) > 1 else []
            q = q + [0] * (self.E - len(q))
            extra = s // p
            if extra:
                q = [a + extra * b for a, b in zip(q, self._p_over_pi)]
            P = [a % self.mod for a in q]
        return BlockElem(self, tuple(digits))

    def from_digits(self, digits: Sequence[int]) -> BlockElem:
        d = [int(c) for c in digits] + [0] * (self.j - len(digits))
        if any(not 0 <= c < self.p for c in d) or len(d) != self.j:
            raise ValueError("digits must lie in [0, p) and have length j")
        return BlockElem(self, tuple(d))

    def from_int(self, n: int) -> BlockElem:
        return self.from_poly([n] + [0] * (self.E - 1))

    @property
    def zero(self) -> BlockElem:
        return BlockElem(self, (0,) * self.j)

    @property
    def one(self) -> BlockElem:
        return self.from_int(1)

    @property
    def pi(self) -> BlockElem:
        return self.from_digits([0, 1]) if self.j > 1 else self.zero

    def add(self, x: BlockElem, y: BlockElem) -> BlockElem:
        return self.from_poly([a + b for a, b in zip(self.to_poly(x), self.to_poly(y))])

    def sub(self, x: BlockElem, y: BlockElem) -> BlockElem:
        return self.from_poly([a - b for a, b in zip(self.to_poly(x), self.to_poly(y))])

    def neg(self, x: BlockElem) -> BlockElem:
        return self.from_poly([-a for a in self.to_poly(x)])

    def mul(self, x: BlockElem, y: BlockElem) -> BlockElem:
        return self.from_poly(poly_mulmod(self.to_poly(x), self.to_poly(y), self.p, self.k, self.mod))

    def act(self, g: GroupElement, x: BlockElem) -> BlockElem:
        """g . x = zeta^chi(g) x."""
        c = self.block.zeta_exponent(g)
        return self.from_poly(poly_mulmod(monomial(c, self.p, self.k), self.to_poly(x), self.p, self.k, self.mod))

    def elements(self):
        import itertools

        for d in itertools.product(range(self.p), repeat=self.j):
            yield BlockElem(self, d)

    def residue(self, x: BlockElem) -> int:
        """The reduction map M_j -> M_1 = F_p."""
        return x.digits[0]

    def fixed_points(self) -> list[BlockElem]:
        gens = self.block.group.basis()
        return [x for x in self.elements() if all(self.act(g, x) == x for g in gens)]

    def shift_into(self, x: BlockElem) -> BlockElem:
        """The isomorphism M_{j-1} -> m M_j, x -> pi x, on digits."""
        if x.ring.j != self.j - 1:
            raise ValueError("source must be M_{j-1}")
        return BlockElem(self, (0,) + x.digits)

    def module(self) -> FiniteModule:
        """M_j as an abstract module over the generators of A."""
        return mj_module(self.block, self.j)


def mj_ring(block: IdempotentBlock, j: int) -> MjRing:
    return _ring_cache(block, j)


_RINGS: dict = {}


def _ring_cache(block: IdempotentBlock, j: int) -> MjRing:
    key = (block, j)
    ring = _RINGS.get(key)
    if ring is None:
        ring = MjRing(block, j)
        _RINGS[key] = ring
    return ring


def mj_valuation(x: BlockElem):
    for i, c in enumerate(x.digits):
        if c:
            return i
    return ZERO


_MODULES: dict = {}


def mj_module(block: IdempotentBlock, j: int) -> FiniteModule:
    """M_j presented on the power basis of Z[x]/Phi_{p^k}, normalized.

    Returns the zero module for j = 0.
    """
    key = (block, j)
    hit = _MODULES.get(key)
    if hit is not None:
        return hit
    A = block.group
    if j == 0:
        mod = FiniteModule(block.p, (), tuple(() for _ in range(A.rank)), ())
        _MODULES[key] = mod
        return mod
    block.require_nontrivial()
    p, k = block.p, block.level
    E = degree_of(p, k)
    T = ceil(j / E)
    base = [1]
    for _ in range(j):
        base = poly_mul(base, [-1, 1])
    relations = []
    for i in range(E):
        shifted = [0] * i + base
        relations.append(reduce_mod_cyclotomic(shifted, p, k, p ** T))
    actions = []
    for g in A.basis():
        c = block.zeta_exponent(g)
        mono = monomial(c, p, k)
        # column i = image of x^i
        cols = []
        for i in range(E):
            e_i = [0] * E
            e_i[i] = 1
            cols.append(poly_mulmod(mono, e_i, p, k, p ** T))
        actions.append(zmod.columns_to_matrix(cols, E))
    mod = FiniteModule.from_presentation(p, T, relations, actions, E)
    _MODULES[key] = mod
    return mod


def residue_functional(block: IdempotentBlock, j: int) -> list:
    """Row vector of the map M_j -> F_p in normalized module coordinates."""
    mod = mj_module(block, j)
    back = mod.to_presentation
    # x -> P(1) mod p on the power basis
    return [sum(back[r][c] for r in range(len(back))) % block.p for c in range(mod.dim)]
