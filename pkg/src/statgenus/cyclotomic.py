"""Polynomial arithmetic modulo cyclotomic polynomials Phi_{p^k}, and exact
elements of Z[zeta_{p^n}] on the power basis."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


@lru_cache(maxsize=None)
def cyclotomic_prime_power(p: int, k: int) -> tuple[int, ...]:
    """Coefficients (low degree first) of Phi_{p^k}(x) = sum_{i<p} x^{i p^(k-1)}."""
    if k < 1:
        raise ValueError("k must be positive")
    step = p ** (k - 1)
    coeffs = [0] * ((p - 1) * step + 1)
    for i in range(p):
        coeffs[i * step] = 1
    return tuple(coeffs)


def degree_of(p: int, k: int) -> int:
    """phi(p^k), the degree of Phi_{p^k}."""
    return (p - 1) * p ** (k - 1)


def reduce_mod_cyclotomic(poly, p: int, k: int, mod: int | None = None) -> list:
    """Remainder of poly modulo the monic Phi_{p^k}; length exactly phi(p^k)."""
    phi = cyclotomic_prime_power(p, k)
    E = len(phi) - 1
    c = list(poly)
    for d in range(len(c) - 1, E - 1, -1):
        lead = c[d]
        if lead:
            shift = d - E
            for i, f in enumerate(phi[:-1]):
                if f:
                    c[shift + i] -= lead * f
            c[d] = 0
    c = c[:E] + [0] * max(0, E - len(c))
    if mod is not None:
        c = [x % mod for x in c]
    return c


def poly_mul(a, b) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def poly_mulmod(a, b, p: int, k: int, mod: int | None = None) -> list:
    return reduce_mod_cyclotomic(poly_mul(a, b), p, k, mod)


def monomial(e: int, p: int, k: int) -> list:
    """x^e reduced modulo Phi_{p^k}; e is taken mod p^k."""
    e %= p ** k
    c = [0] * (e + 1)
    c[e] = 1
    return reduce_mod_cyclotomic(c, p, k)


@lru_cache(maxsize=None)
def p_over_pi(p: int, k: int) -> tuple[int, ...]:
    """The polynomial for p/(x-1) in Z[x]/Phi_{p^k}, namely -(Phi(x)-p)/(x-1)."""
    phi = list(cyclotomic_prime_power(p, k))
    phi[0] -= p
    q = divide_by_x_minus_one(phi)
    return tuple(reduce_mod_cyclotomic([-c for c in q], p, k))


def divide_by_x_minus_one(poly) -> list:
    """Exact quotient of a polynomial vanishing at 1 by (x - 1)."""
    n = len(poly)
    if n <= 1:
        if poly and poly[0]:
            raise ValueError("polynomial does not vanish at 1")
        return []
    q = [0] * (n - 1)
    carry = 0
    for d in range(n - 1, 0, -1):
        carry += poly[d]
        q[d - 1] = carry
    if carry + poly[0] != 0:
        raise ValueError("polynomial does not vanish at 1")
    return q


@dataclass(frozen=True)
class CycloNumber:
    """Exact element of Z[zeta_{p^n}] (or Q[zeta] with a denominator),
    stored on the power basis 1, zeta, ..., zeta^(phi(p^n)-1)."""

    p: int
    n: int
    coeffs: tuple

    @classmethod
    def zero(cls, p: int, n: int) -> "CycloNumber":
        return cls(p, n, (0,) * degree_of(p, n))

    @classmethod
    def integer(cls, p: int, n: int, value) -> "CycloNumber":
        c = [0] * degree_of(p, n)
        c[0] = value
        return cls(p, n, tuple(c))

    @classmethod
    def root_of_unity(cls, p: int, n: int, exponent: int) -> "CycloNumber":
        """zeta^exponent, with zeta = exp(2 pi i / p^n) under the fixed embedding."""
        return cls(p, n, tuple(monomial(exponent, p, n)))

    @classmethod
    def from_group_ring(cls, p: int, n: int, coeffs) -> "CycloNumber":
        """Image of sum c_a x^a in Z[x]/(x^{p^n}-1) under x -> zeta."""
        return cls(p, n, tuple(reduce_mod_cyclotomic(list(coeffs), p, n)))

    def __add__(self, other: "CycloNumber") -> "CycloNumber":
        return CycloNumber(self.p, self.n, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "CycloNumber") -> "CycloNumber":
        return CycloNumber(self.p, self.n, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __mul__(self, other) -> "CycloNumber":
        if isinstance(other, (int, Fraction)):
            return CycloNumber(self.p, self.n, tuple(a * other for a in self.coeffs))
        return CycloNumber(self.p, self.n, tuple(poly_mulmod(self.coeffs, other.coeffs, self.p, self.n)))

    __rmul__ = __mul__

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def rational_value(self):
        if not self.is_rational():
            raise ValueError(f"not a rational number: {self.coeffs}")
        return self.coeffs[0]

    def __bool__(self) -> bool:
        return any(self.coeffs)
