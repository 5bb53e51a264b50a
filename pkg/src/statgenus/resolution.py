"""Free resolutions of finite abelian groups given as products of cyclic groups.

The resolution is the tensor product of the 2-periodic resolutions of the
cyclic factors. Chains are dictionaries {(g, m): coeff} where g is a group
element (exponent tuple) and m a multi-index of total degree k; (g, m)
stands for g * e_m. An explicit contracting homotopy gives chain maps
lifting any group homomorphism.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

Chain = dict


@lru_cache(maxsize=None)
def multi_indices(rank: int, k: int) -> tuple:
    """All m in N^rank with |m| = k, in lexicographic order."""
    if rank == 0:
        return ((),) if k == 0 else ()
    out = []
    for first in range(k, -1, -1):
        for rest in multi_indices(rank - 1, k - first):
            out.append((first,) + rest)
    return tuple(sorted(out, reverse=True))


def _add(chain: Chain, key, c: int) -> None:
    v = chain.get(key, 0) + c
    if v:
        chain[key] = v
    else:
        chain.pop(key, None)


@dataclass(frozen=True)
class Resolution:
    """Resolution of Z over Z[Z/n_1 x ... x Z/n_r] (each n_i > 1)."""

    orders: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "orders", tuple(self.orders))
        if any(n < 2 for n in self.orders):
            raise ValueError("cyclic factors must be nontrivial")

    @property
    def rank(self) -> int:
        return len(self.orders)

    def basis(self, k: int) -> tuple:
        return multi_indices(self.rank, k)

    def index(self, k: int) -> dict:
        return {m: i for i, m in enumerate(self.basis(k))}

    @property
    def zero(self) -> tuple:
        return (0,) * self.rank

    def translate(self, chain: Chain, h: Sequence[int]) -> Chain:
        if not any(h):
            return dict(chain)
        out = {}
        orders = self.orders
        for (g, m), c in chain.items():
            out[(tuple((a + b) % n for a, b, n in zip(g, h, orders)), m)] = c
        return out

    def boundary_terms(self, m: tuple) -> list:
        """d(e_m) as a list of (factor i, sign, 'diff' | 'norm', m - e_i)."""
        out = []
        sign_exp = 0
        for i, mi in enumerate(m):
            if mi >= 1:
                kind = "diff" if mi % 2 == 1 else "norm"
                lower = m[:i] + (mi - 1,) + m[i + 1:]
                out.append((i, -1 if sign_exp % 2 else 1, kind, lower))
            sign_exp += mi
        return out

    def d(self, chain: Chain) -> Chain:
        out: Chain = {}
        orders = self.orders
        for (g, m), c in chain.items():
            for i, sign, kind, lower in self.boundary_terms(m):
                s = sign * c
                if kind == "diff":
                    g2 = list(g)
                    g2[i] = (g2[i] + 1) % orders[i]
                    _add(out, (tuple(g2), lower), s)
                    _add(out, (g, lower), -s)
                else:
                    g2 = list(g)
                    for l in range(orders[i]):
                        g2[i] = (g[i] + l) % orders[i]
                        _add(out, (tuple(g2), lower), s)
        return out

    def _factor_homotopy(self, i: int, a: int, m: int) -> list:
        n = self.orders[i]
        if m == 0:
            return [(l, 1) for l in range(a)]
        if m % 2 == 1:
            return [(0, m + 1)] if a == n - 1 else []
        return [(l, m + 1) for l in range(a)]

    def homotopy(self, chain: Chain) -> Chain:
        """Contracting homotopy h with dh + hd = 1 - (augmentation in degree 0)."""
        out: Chain = {}
        for key, c in chain.items():
            for k2, c2 in self._basis_homotopy(key).items():
                _add(out, k2, c * c2)
        return out

    def _basis_homotopy(self, key) -> dict:
        return _basis_homotopy_cached(self, key)

    def elements(self):
        return product(*(range(n) for n in self.orders))


@lru_cache(maxsize=200000)
def _basis_homotopy_cached(res: Resolution, key) -> dict:
    g, m = key
    out: dict = {}
    r = res.rank
    prefix_g: tuple = ()
    prefix_m: tuple = ()
    # h(x_1 (x) Y) = s(x_1) (x) Y + [deg x_1 = 0] e_0 (x) h(Y), unrolled
    for i in range(r):
        for a2, m2 in res._factor_homotopy(i, g[i], m[i]):
            k2 = (prefix_g + (a2,) + g[i + 1:], prefix_m + (m2,) + m[i + 1:])
            _add(out, k2, 1)
        if m[i] != 0:
            break
        prefix_g += (0,)
        prefix_m += (0,)
    return out


class ChainMap:
    """A chain map from the resolution of Gamma to that of A covering a
    homomorphism psi, determined on basis elements up to a chosen degree."""

    def __init__(self, source: Resolution, target: Resolution, images: Sequence[Sequence[int]], max_degree: int):
        if len(images) != source.rank:
            raise ValueError("one image per source generator is required")
        self.source = source
        self.target = target
        self.images = [tuple(int(x) % n for x, n in zip(img, target.orders)) for img in images]
        self.max_degree = max_degree
        self.maps: dict = {}
        base = source.basis(0)[0]
        self.maps[base] = {(target.zero, target.basis(0)[0]): 1}
        for k in range(1, max_degree + 1):
            for m in source.basis(k):
                self.maps[m] = target.homotopy(self._boundary_image(m))

    def _boundary_image(self, m: tuple) -> Chain:
        """apply(d e_m) without expanding norm elements: the translates by
        l * g_i repeat with period ord(psi(g_i)), which divides the factor order."""
        out: Chain = {}
        target = self.target
        for i, sign, kind, lower in self.source.boundary_terms(m):
            img = self.maps[lower]
            step = self.images[i]
            if kind == "diff":
                for k2, c in target.translate(img, step).items():
                    _add(out, k2, sign * c)
                for k2, c in img.items():
                    _add(out, k2, -sign * c)
                continue
            shifts = [target.zero]
            h = tuple((a + b) % n for a, b, n in zip(target.zero, step, target.orders))
            while h != target.zero:
                shifts.append(h)
                h = tuple((a + b) % n for a, b, n in zip(h, step, target.orders))
            n_i = self.source.orders[i]
            if n_i % len(shifts):
                raise ValueError("generator image order does not divide the factor order")
            mult = sign * (n_i // len(shifts))
            for h in shifts:
                for k2, c in target.translate(img, h).items():
                    _add(out, k2, mult * c)
        return out

    def psi(self, g: Sequence[int]) -> tuple:
        out = [0] * self.target.rank
        for c, img in zip(g, self.images):
            if c:
                for i, x in enumerate(img):
                    out[i] += c * x
        return tuple(x % n for x, n in zip(out, self.target.orders))

    def apply(self, chain: Chain) -> Chain:
        # many source elements share an image; translate each map once per image
        grouped: dict = {}
        psi_cache: dict = {}
        for (g, m), c in chain.items():
            h = psi_cache.get(g)
            if h is None:
                h = psi_cache[g] = self.psi(g)
            key = (h, m)
            grouped[key] = grouped.get(key, 0) + c
        out: Chain = {}
        for (h, m), c in grouped.items():
            if not c:
                continue
            for k2, c2 in self.target.translate(self.maps[m], h).items():
                _add(out, k2, c * c2)
        return out


class BarChainMap:
    """Comparison map from the normalized bar resolution into a Resolution.

    A bar basis element [g_1|...|g_n] is a tuple of group elements.
    """

    def __init__(self, res: Resolution):
        self.res = res
        self.cache: dict = {(): {(res.zero, res.basis(0)[0]): 1}}

    def _add_g(self, g, h) -> tuple:
        return tuple((a + b) % n for a, b, n in zip(g, h, self.res.orders))

    def image(self, cell: tuple) -> Chain:
        hit = self.cache.get(cell)
        if hit is not None:
            return hit
        res = self.res
        if any(not any(g) for g in cell):
            out: Chain = {}
        else:
            # d[g1|...|gn] = g1[g2|...] + sum (-1)^i [..|g_i g_{i+1}|..] + (-1)^n [g1|...|g_{n-1}]
            n = len(cell)
            bnd: Chain = {}
            for k2, c in res.translate(self.image(cell[1:]), cell[0]).items():
                _add(bnd, k2, c)
            for i in range(n - 1):
                merged = cell[:i] + (self._add_g(cell[i], cell[i + 1]),) + cell[i + 2:]
                for k2, c in self.image(merged).items():
                    _add(bnd, k2, (-1) ** (i + 1) * c)
            for k2, c in self.image(cell[:-1]).items():
                _add(bnd, k2, (-1) ** n * c)
            out = res.homotopy(bnd)
        self.cache[cell] = out
        return out
