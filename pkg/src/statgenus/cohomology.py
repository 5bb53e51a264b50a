"""Cohomology of finite abelian p-groups with finite module coefficients.

Cochains live on the small tensor resolution (see ``resolution``); a module
(+) Z/p^{t_i} is handled through integer lifts in (Z/p^T)^n. With S the
diagonal scaling p^{T - t_i}, cocycles are ker(S delta) and coboundaries are
im(delta) plus the relation lattice, so H^k is a quotient of two explicit
submodules of (Z/p^T)^(rank of cochains).

Profinite decomposition groups Zhat x_{D/I} D are replaced by
Gamma_N = Z/p^N x I (generators Frob, sigma) with a stabilization check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import zmod
from .abelian_core import (
    AbelianPGroup,
    GroupElement,
    SubgroupPair,
    coordinates_in,
    subgroup_basis,
    subgroup_pairs_C,
)
from .block_ring import IdempotentBlock, ie_exponent, mj_module
from .finite_module import FiniteModule
from .resolution import BarChainMap, ChainMap, Resolution

DEFAULT_GROUP_BOUND = 3 ** 6


class CohomologyBoundError(ValueError):
    pass


class StabilizationError(RuntimeError):
    pass


def _vp(n: int, p: int) -> int:
    v = 0
    while n > 1 and n % p == 0:
        n //= p
        v += 1
    return v


class CochainComplex:
    """Cochains Hom_G(P_k, M) for G = Z/n_1 x ... x Z/n_r, degrees 0..top."""

    def __init__(self, orders: Sequence[int], module: FiniteModule, top: int = 3):
        orders = tuple(orders)
        if len(module.actions) != len(orders):
            raise ValueError("module needs one action per cyclic factor")
        keep = [i for i, n in enumerate(orders) if n > 1]
        self.orders = tuple(orders[i] for i in keep)
        self.module = FiniteModule(module.p, module.exps, tuple(module.actions[i] for i in keep), module.to_presentation)
        self.res = Resolution(self.orders)
        self.p = module.p
        self.n = module.dim
        self.T = module.T
        self.mod = module.mod
        self.top = top
        self._delta: dict = {}
        self._cocycles: dict = {}
        self._coboundaries: dict = {}

    @property
    def group_order(self) -> int:
        out = 1
        for n in self.orders:
            out *= n
        return out

    def rank(self, k: int) -> int:
        return len(self.res.basis(k))

    def dim(self, k: int) -> int:
        return self.rank(k) * self.n

    def _norm_matrix(self, i: int) -> list:
        mod = self.module
        g = [list(r) for r in mod.actions[i]]
        o = mod.generator_order(i)
        total = zmod.zeros(self.n, self.n)
        cur = zmod.identity(self.n)
        for _ in range(o):
            total = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(total, cur)]
            cur = zmod.matmul(cur, g, self.mod)
        factor = self.orders[i] // o
        return [[x * factor % self.mod for x in row] for row in total]

    def _diff_matrix(self, i: int) -> list:
        g = self.module.actions[i]
        return [[(g[r][c] - (1 if r == c else 0)) % self.mod for c in range(self.n)] for r in range(self.n)]

    def delta(self, k: int) -> list:
        """Matrix of delta: C^k -> C^{k+1}."""
        hit = self._delta.get(k)
        if hit is not None:
            return hit
        n = self.n
        rows_basis = self.res.basis(k + 1)
        col_index = self.res.index(k)
        ops = {}
        for i in range(len(self.orders)):
            ops[(i, "diff")] = self._diff_matrix(i)
            ops[(i, "norm")] = self._norm_matrix(i)
        mat = zmod.zeros(len(rows_basis) * n, len(col_index) * n)
        for r, m in enumerate(rows_basis):
            for i, sign, kind, lower in self.res.boundary_terms(m):
                c = col_index[lower]
                blk = ops[(i, kind)]
                for a in range(n):
                    row = mat[r * n + a]
                    for b in range(n):
                        if blk[a][b]:
                            row[c * n + b] = (row[c * n + b] + sign * blk[a][b]) % self.mod
        self._delta[k] = mat
        return mat

    def relations(self, k: int) -> list:
        n, p = self.n, self.p
        out = []
        for s in range(self.rank(k)):
            for i, t in enumerate(self.module.exps):
                if t < self.T:
                    v = [0] * self.dim(k)
                    v[s * n + i] = p ** t
                    out.append(v)
        return out

    def cocycles(self, k: int) -> list:
        """Generators of the lifted cocycles (they contain the relations)."""
        hit = self._cocycles.get(k)
        if hit is not None:
            return hit
        d = self.delta(k)
        scale = [self.p ** (self.T - t) for t in self.module.exps]
        n = self.n
        scaled = [[x * scale[r % n] % self.mod for x in row] for r, row in enumerate(d)]
        gens = zmod.kernel(scaled, self.p, self.T, self.dim(k)) if self.dim(k) else []
        gens = zmod.reduce_generators(gens, self.p, self.T, self.dim(k))
        self._cocycles[k] = gens
        return gens

    def coboundaries(self, k: int) -> list:
        hit = self._coboundaries.get(k)
        if hit is not None:
            return hit
        gens = list(self.relations(k))
        if k > 0 and self.dim(k - 1):
            d = self.delta(k - 1)
            gens += zmod.matrix_columns(d, self.dim(k - 1))
        gens = zmod.reduce_generators([g for g in gens if any(g)], self.p, self.T, self.dim(k))
        self._coboundaries[k] = gens
        return gens

    def log_order(self, k: int) -> int:
        dim = self.dim(k)
        if dim == 0:
            return 0
        return zmod.span_log_order(self.cocycles(k), self.p, self.T, dim) - zmod.span_log_order(
            self.coboundaries(k), self.p, self.T, dim
        )

    def order(self, k: int) -> int:
        return self.p ** self.log_order(k)

    def pullback_matrix(self, chain_map: ChainMap, source: "CochainComplex", k: int) -> list:
        """Matrix of f -> f o phi from C^k(self) to C^k(source)."""
        n = self.n
        idx = self.res.index(k)
        rows = source.res.basis(k)
        mat = zmod.zeros(len(rows) * n, len(idx) * n)
        for r, m_src in enumerate(rows):
            grouped: dict = {}
            for (g, m), c in chain_map.maps[m_src].items():
                grouped.setdefault(m, {}).setdefault(g, 0)
                grouped[m][g] += c
            for m, terms in grouped.items():
                c0 = idx[m]
                acc = zmod.zeros(n, n)
                for g, c in terms.items():
                    if c % self.mod == 0:
                        continue
                    rho = self.module.act_matrix(g)
                    for a in range(n):
                        ra = rho[a]
                        acc_a = acc[a]
                        for b in range(n):
                            if ra[b]:
                                acc_a[b] += c * ra[b]
                for a in range(n):
                    row = mat[r * n + a]
                    for b in range(n):
                        row[c0 * n + b] = acc[a][b] % self.mod
        return mat


@dataclass
class CohomClass:
    """A class in H^k(G, M), with a cochain on the small resolution and
    access to the normalized bar cocycle."""

    complex: CochainComplex
    degree: int
    cochain: tuple
    coordinates: tuple = ()
    _bar: BarChainMap | None = field(default=None, repr=False)

    def value_on_basis(self, m: tuple) -> tuple:
        i = self.complex.res.index(self.degree)[m]
        n = self.complex.n
        return self.complex.module.reduce(self.cochain[i * n:(i + 1) * n])

    def bar_value(self, cell: Sequence[GroupElement]) -> tuple:
        """Normalized bar cocycle evaluated at [g_1|...|g_k]."""
        cx = self.complex
        if self._bar is None:
            self._bar = BarChainMap(cx.res)
        chain = self._bar.image(tuple(tuple(g) for g in cell))
        out = [0] * cx.n
        n = cx.n
        idx = cx.res.index(self.degree)
        for (g, m), c in chain.items():
            i = idx[m]
            f = self.cochain[i * n:(i + 1) * n]
            v = zmod.matvec(cx.module.act_matrix(g), f, cx.mod)
            for a in range(n):
                out[a] += c * v[a]
        return cx.module.reduce(out)


@dataclass
class CohomologyGroup:
    degree: int
    order: int
    invariants: list
    classes: list

    @property
    def log_order(self) -> int:
        return sum(self.invariants)


def cohomology_group(n: int, group, module: FiniteModule, bound: int = DEFAULT_GROUP_BOUND) -> CohomologyGroup:
    """H^n(G, M) for n in {0, 1, 2} with invariant factors and class representatives.

    ``group`` is an AbelianPGroup or a sequence of cyclic orders.
    """
    if n not in (0, 1, 2):
        raise ValueError("degree must be 0, 1 or 2")
    orders = group.moduli if isinstance(group, AbelianPGroup) else tuple(group)
    size = 1
    for o in orders:
        size *= o
    if size > bound:
        raise CohomologyBoundError(f"bound exceeded: |G| = {size} > {bound}")
    cx = CochainComplex(orders, module)
    return cohomology_of_complex(cx, n)


def cohomology_of_complex(cx: CochainComplex, n: int) -> CohomologyGroup:
    dim = cx.dim(n)
    if dim == 0:
        return CohomologyGroup(n, 1, [], [])
    q = zmod.quotient(cx.cocycles(n), cx.coboundaries(n), cx.p, cx.T, dim)
    classes = []
    for i, vec in enumerate(q.basis):
        coords = tuple(1 if j == i else 0 for j in range(len(q.basis)))
        classes.append(CohomClass(cx, n, tuple(vec), coords))
    return CohomologyGroup(n, q.order, q.invariants, classes)


def group_module(group: AbelianPGroup, module: FiniteModule) -> CochainComplex:
    return CochainComplex(group.moduli, module)


def induced_map_order(target_cx: CochainComplex, source_cx: CochainComplex, images, k: int) -> dict:
    """Kernel and image sizes of H^k(G, M) -> H^k(Gamma, M) along psi."""
    cm = ChainMap(source_cx.res, target_cx.res, images, k)
    P = target_cx.pullback_matrix(cm, source_cx, k)
    p, T = target_cx.p, target_cx.T
    Z = target_cx.cocycles(k)
    ker = zmod.restricted_preimage(P, Z, source_cx.coboundaries(k), p, T, target_cx.dim(k))
    log_b = zmod.span_log_order(target_cx.coboundaries(k), p, T, target_cx.dim(k))
    log_ker = zmod.span_log_order(ker, p, T, target_cx.dim(k)) - log_b
    return {"kernel_order": p ** log_ker, "source_order": target_cx.order(k)}


# -- decomposition-group approximations ---------------------------------------------


def approximation_exponent(module: FiniteModule, D_order_exponent: int) -> int:
    """N = v_p(exp M) + v_p(exp D) + 1."""
    return _vp(module.exponent, module.p) + _vp(D_order_exponent, module.p) + 1


def gamma_orders(N: int, p: int, inertia_order: int) -> tuple:
    """Gamma_N = Z/p^N (Frobenius) x Z/|I| (tame generator)."""
    return (p ** N, inertia_order)


def _exp_of_subgroup(group: AbelianPGroup, D: frozenset) -> int:
    return max(group.order_of(d) for d in D)


def gamma_complex(module: FiniteModule, pair: SubgroupPair, N: int) -> CochainComplex:
    """Cochains of Gamma_N with M pulled back along Gamma_N -> D inside A."""
    A = pair.group
    pulled = module.pullback([pair.frob, pair.inertia_gen])
    return CochainComplex(gamma_orders(N, A.p, len(pair.I)), pulled)


def _gamma_images(pair: SubgroupPair, N: int, target_coords=None) -> list:
    images = [pair.frob, pair.inertia_gen]
    if target_coords is not None:
        images = [target_coords[x] for x in images]
    if len(pair.I) == 1:
        images = images[:1]
    return images


def _pair_kernel(cx_A: CochainComplex, module: FiniteModule, pair: SubgroupPair, N: int, within: list, k: int = 2) -> list:
    cx_G = gamma_complex(module, pair, N)
    cm = ChainMap(cx_G.res, cx_A.res, _gamma_images(pair, N), k)
    P = cx_A.pullback_matrix(cm, cx_G, k)
    return zmod.restricted_preimage(P, within, cx_G.coboundaries(k), cx_A.p, cx_A.T, cx_A.dim(k))


def _check_stable(cx_A, module, pair, N, within) -> list:
    k_n = _pair_kernel(cx_A, module, pair, N, within)
    k_n1 = _pair_kernel(cx_A, module, pair, N + 1, within)
    p, T, dim = cx_A.p, cx_A.T, cx_A.dim(2)
    a = zmod.span_log_order(k_n, p, T, dim)
    b = zmod.span_log_order(k_n1, p, T, dim)
    both = zmod.span_log_order(k_n + k_n1, p, T, dim)
    if not (a == b == both):
        raise StabilizationError(f"kernel not stable at N={N} for {pair.describe()}")
    return k_n


@dataclass
class KernelSubgroup:
    """A subgroup of H^2, given by lifted cocycle generators, with log_p orders."""

    p: int
    log_order: int
    ambient_log_order: int
    generators: list
    approximation: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.p ** self.log_order

    @property
    def ambient_order(self) -> int:
        return self.p ** self.ambient_log_order


def inflation_kernel_R(pair: SubgroupPair, module: FiniteModule, check: bool = True) -> KernelSubgroup:
    """R(D, I, M) = ker(H^2(D, M) -> H^2(Zhat x_{D/I} D, M)) for an A-module M."""
    A = pair.group
    p = A.p
    basis = subgroup_basis(A, pair.D)
    if not basis:
        return KernelSubgroup(p, 0, 0, [], {"N": None})
    coords = coordinates_in(A, basis)
    D_orders = [A.order_of(b) for b in basis]
    D_module = module.pullback(basis)
    cx_D = CochainComplex(D_orders, D_module)
    N = approximation_exponent(module, _exp_of_subgroup(A, pair.D))

    def kernel_at(NN: int) -> list:
        pulled = module.pullback([pair.frob, pair.inertia_gen])
        cx_G = CochainComplex(gamma_orders(NN, p, len(pair.I)), pulled)
        imgs = [coords[pair.frob]] + ([coords[pair.inertia_gen]] if len(pair.I) > 1 else [])
        cm = ChainMap(cx_G.res, cx_D.res, imgs, 2)
        P = cx_D.pullback_matrix(cm, cx_G, 2)
        return zmod.restricted_preimage(P, cx_D.cocycles(2), cx_G.coboundaries(2), p, cx_D.T, cx_D.dim(2))

    dim = cx_D.dim(2)
    T = cx_D.T
    ker = kernel_at(N)
    log_b = zmod.span_log_order(cx_D.coboundaries(2), p, T, dim)
    log_k = zmod.span_log_order(ker, p, T, dim)
    if check:
        ker2 = kernel_at(N + 1)
        if not (zmod.span_log_order(ker2, p, T, dim) == log_k == zmod.span_log_order(ker + ker2, p, T, dim)):
            raise StabilizationError(f"kernel not stable at N={N} for {pair.describe()}")
    return KernelSubgroup(p, log_k - log_b, cx_D.log_order(2), ker, {"N": N, "stable": check})


def _kernel_over_pairs(group: AbelianPGroup, module: FiniteModule, pairs, check: bool) -> KernelSubgroup:
    cx = CochainComplex(group.moduli, module)
    p, T, dim = cx.p, cx.T, cx.dim(2)
    if dim == 0:
        return KernelSubgroup(p, 0, 0, [], {})
    Z = cx.cocycles(2)
    B = cx.coboundaries(2)
    log_b = zmod.span_log_order(B, p, T, dim)
    K = Z
    log_k = zmod.span_log_order(K, p, T, dim)
    used = {}
    for pair in pairs:
        if log_k == log_b:
            break
        N = approximation_exponent(module, _exp_of_subgroup(group, pair.D))
        if check:
            K = _check_stable(cx, module, pair, N, K)
        else:
            K = _pair_kernel(cx, module, pair, N, K)
        used[pair.describe()] = N
        log_k = zmod.span_log_order(K, p, T, dim)
    return KernelSubgroup(p, log_k - log_b, zmod.span_log_order(Z, p, T, dim) - log_b, K, used)


def n_typical(group: AbelianPGroup, module: FiniteModule, check: bool = True) -> KernelSubgroup:
    """Kernel of H^2(A, M) -> (+)_{(D,I) in C} H^2(D, M)/R(D, I, M)."""
    return _kernel_over_pairs(group, module, subgroup_pairs_C(group), check)


def n_phi(group: AbelianPGroup, module: FiniteModule, ramified_local_data, check: bool = True) -> KernelSubgroup:
    """The same kernel over the decomposition data of the ramified places only."""
    pairs = [_as_pair(group, x) for x in ramified_local_data]
    return _kernel_over_pairs(group, module, pairs, check)


def _as_pair(group: AbelianPGroup, data) -> SubgroupPair:
    if isinstance(data, SubgroupPair):
        return data
    from .abelian_core import make_pair

    return make_pair(group, data.inertia, data.frob_part)


@lru_cache(maxsize=None)
def _n_typical_log(block: IdempotentBlock, d: int) -> int:
    if d == 0:
        return 0
    module = mj_module(block, d)
    return n_typical(block.group, module).log_order


def _log(n: int, p: int) -> int:
    v = 0
    while n > 1:
        if n % p:
            raise ValueError("not a power of p")
        n //= p
        v += 1
    return v


def constant_C(group: AbelianPGroup, block: IdempotentBlock, d: int) -> int:
    """The constant C(A, eZ_p[A]/m^d) of the rank formula."""
    block.require_nontrivial()
    r = ie_exponent(block)
    if not 1 <= d <= r:
        raise ValueError(f"d out of range: need 1 <= d <= {r}")
    if d == 1:
        return -group.p_rank()
    return _n_typical_log(block, d) - _n_typical_log(block, d - 1) - 1


def special_level(pair: SubgroupPair, block: IdempotentBlock, j: int) -> int:
    """Largest i <= j at which the place with data (D, I) is special (0 if none)."""
    A = pair.group
    p = A.p
    E = block.ramification_index
    inertia_v = _vp(len(pair.I), p)
    gens = [pair.inertia_gen, pair.frob]
    best = 0
    for i in range(1, j + 1):
        if E * inertia_v < i:
            break
        if not all(block.acts_trivially_mod(g, i) for g in gens):
            break
        best = i
    return best


def local_condition_size(pair: SubgroupPair, block: IdempotentBlock, j: int, mode: str = "formula") -> Fraction:
    """|L_{v,j}| / |H^0(G_v, M_j)| for a ramified place with data (D_v, I_v)."""
    if len(pair.I) == 1:
        raise ValueError("ratio defined for ramified v only")
    block.require_nontrivial()
    r = ie_exponent(block)
    if not 1 <= j <= r:
        raise ValueError(f"j out of range: need 1 <= j <= {r}")
    p = block.p
    if mode == "formula":
        return Fraction(p ** special_level(pair, block, j))
    if mode != "direct":
        raise ValueError("mode must be 'formula' or 'direct'")
    module = mj_module(block, j)
    N = approximation_exponent(module, _exp_of_subgroup(pair.group, pair.D))
    h1 = gamma_complex(module, pair, N).order(1)
    fixed = module.pullback([pair.frob, pair.inertia_gen]).fixed_points_order()
    return Fraction(h1, fixed)
