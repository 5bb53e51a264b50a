"""Finite p-primary modules over an abelian group given by generator actions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import zmod


@dataclass(frozen=True)
class FiniteModule:
    """The abelian group (+) Z/p^{t_i} with one action matrix per group generator.

    Vectors are integer lifts in [0, p^T), T = max t_i; an action matrix must
    send the relation lattice (p^{t_i} e_i) into itself. ``to_presentation``
    optionally maps normalized coordinates back to a user-facing basis.
    """

    p: int
    exps: tuple
    actions: tuple
    to_presentation: tuple | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "exps", tuple(self.exps))
        object.__setattr__(self, "actions", tuple(tuple(tuple(r) for r in m) for m in self.actions))
        n = len(self.exps)
        for m in self.actions:
            if len(m) != n or any(len(r) != n for r in m):
                raise ValueError("action matrix has the wrong shape")
        p = self.p
        for m in self.actions:
            for i, row in enumerate(m):
                for j, x in enumerate(row):
                    # image of p^{t_j} e_j must vanish in coordinate i
                    if (x * p ** self.exps[j]) % p ** self.exps[i]:
                        raise ValueError("action does not respect the orders")

    @property
    def dim(self) -> int:
        return len(self.exps)

    @property
    def T(self) -> int:
        return max(self.exps, default=1)

    @property
    def mod(self) -> int:
        return self.p ** self.T

    @property
    def order(self) -> int:
        return self.p ** sum(self.exps)

    @property
    def exponent(self) -> int:
        return self.p ** max(self.exps, default=0)

    @classmethod
    def trivial(cls, p: int, exps: Sequence[int], ngens: int) -> "FiniteModule":
        n = len(exps)
        return cls(p, tuple(exps), tuple(tuple(zmod.identity(n)) for _ in range(ngens)))

    @classmethod
    def from_presentation(cls, p: int, T: int, relations: Sequence[Sequence[int]], actions: Sequence, dim: int) -> "FiniteModule":
        """Normalize (Z/p^T)^dim / span(relations) with actions given on the
        presentation coordinates."""
        mod = p ** T
        rel = zmod.columns_to_matrix([list(r) for r in relations], dim) if relations else zmod.zeros(dim, 0)
        sf = zmod.smith(rel, p, T, len(relations))
        U = sf.U
        Uinv = zmod.inverse(U, p, T)
        exps_all = [sf.vals[i] if i < sf.rank else T for i in range(dim)]
        keep = [i for i, e in enumerate(exps_all) if e > 0]
        exps = tuple(exps_all[i] for i in keep)
        new_actions = []
        for G in actions:
            conj = zmod.matmul(zmod.matmul(U, [list(r) for r in G], mod), Uinv, mod)
            new_actions.append(tuple(tuple(conj[i][j] for j in keep) for i in keep))
        back = tuple(tuple(Uinv[r][c] for c in keep) for r in range(dim))
        return cls(p, exps, tuple(new_actions), back)

    def reduce(self, v: Sequence[int]) -> tuple:
        return tuple(x % self.p ** t for x, t in zip(v, self.exps))

    def is_zero(self, v: Sequence[int]) -> bool:
        return not any(self.reduce(v))

    def act_matrix(self, coeffs: Sequence[int]) -> list:
        """Matrix of the group element prod g_i^{coeffs_i}."""
        return self._power_cache(tuple(coeffs))

    def _power_cache(self, coeffs: tuple) -> list:
        cache = self.__dict__.setdefault("_pow_cache", {})
        hit = cache.get(coeffs)
        if hit is not None:
            return hit
        out = zmod.identity(self.dim)
        for g, c in zip(self.actions, coeffs):
            if c:
                out = zmod.matmul(out, self.gen_power(g, c), self.mod)
        cache[coeffs] = out
        return out

    def gen_power(self, g, c: int) -> list:
        key = ("gen", g, c)
        cache = self.__dict__.setdefault("_gen_cache", {})
        hit = cache.get(key)
        if hit is not None:
            return hit
        result = zmod.identity(self.dim)
        base = [list(r) for r in g]
        e = c
        while e:
            if e & 1:
                result = zmod.matmul(result, base, self.mod)
            e >>= 1
            if e:
                base = zmod.matmul(base, base, self.mod)
        cache[key] = result
        return result

    def generator_order(self, i: int) -> int:
        """Multiplicative order of the i-th action matrix modulo the relations."""
        g = [list(r) for r in self.actions[i]]
        cur = g
        o = 1
        ident = zmod.identity(self.dim)
        while not self._equal_mod(cur, ident):
            cur = zmod.matmul(cur, g, self.mod)
            o += 1
            if o > self.order ** 2 + 1:
                raise ValueError("action matrix is not of finite order")
        return o

    def _equal_mod(self, a, b) -> bool:
        for i, t in enumerate(self.exps):
            q = self.p ** t
            for x, y in zip(a[i], b[i]):
                if (x - y) % q:
                    return False
        return True

    def pullback(self, images: Sequence[Sequence[int]]) -> "FiniteModule":
        """Module for another group whose j-th generator acts as the group
        element with exponent vector images[j]."""
        acts = tuple(tuple(tuple(r) for r in self.act_matrix(img)) for img in images)
        return FiniteModule(self.p, self.exps, acts, self.to_presentation)

    def elements(self):
        import itertools

        return itertools.product(*(range(self.p ** t) for t in self.exps))

    def fixed_points_order(self) -> int:
        """|M^G| via the kernel of the stacked (g - 1)."""
        n = self.dim
        if n == 0:
            return 1
        T, p = self.T, self.p
        rows = []
        for g in self.actions:
            for i in range(n):
                scale = p ** (T - self.exps[i])
                rows.append([((g[i][j] - (1 if i == j else 0)) * scale) for j in range(n)])
        gens = zmod.kernel(rows, p, T, n) if rows else [[1 if i == j else 0 for i in range(n)] for j in range(n)]
        rel = [[p ** self.exps[i] if r == i else 0 for r in range(n)] for i in range(n)]
        return zmod.span_order(gens + rel, p, T, n) // zmod.span_order(rel, p, T, n)
