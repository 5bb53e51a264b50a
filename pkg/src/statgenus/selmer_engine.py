"""Selmer groups of mu_p and F_p over Q with explicit local conditions.

Both global spaces are F_p^{1+|S|}, S the tame ramified primes of a handle:
Kummer classes kappa = p^alpha prod q^{e_q} on the mu_p side and characters
x = c_p chi_p + sum c_q chi_q on the F_p side. At a tame place v both local
groups are F_p^2:

* mu_p side, Ev_v(kappa) = (nu_v, chi_v(kappa / (-v)^nu_v)), the (sigma, Frob) slots;
* F_p side, (x(sigma_v), x(Frob_v)).

At p the coordinates are (v_p, log_{1+p} of the unit part) and
(x(rec p), x(rec(1 + p))). The local invariant of (x, kappa) is
x(rec_v kappa): minus the alternating form B(x, y) = x_s y_F - x_F y_s at a
tame place and the dot product at p. Global reciprocity says these sum to 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from . import zmod
from .arithmetic_ext import (
    ExtensionHandle,
    char_eval,
    local_pair,
    ramified_local_data,
    wild_log,
)
from .block_ring import IdempotentBlock, ie_exponent, mj_module, residue_functional
from .cohomology import (
    _exp_of_subgroup,
    approximation_exponent,
    cohomology_group,
    gamma_complex,
    n_phi,
    special_level,
)

EXHAUSTIVE_LIMIT = 4096
MU = "mu_p"
FP = "F_p"


class DualityError(AssertionError):
    """An exact identity failed; the message carries the serialized instance."""


# -- subspaces of F_p^2 -------------------------------------------------------------


@dataclass(frozen=True)
class ConditionLine:
    """A subgroup of F_p x F_p: zero, full, or the line spanned by ``vec``
    (first slot sigma or valuation, second slot Frobenius or unit part)."""

    v: object
    p: int
    kind: str
    vec: tuple = ()
    flags: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "line", "full"):
            raise ValueError(f"unknown kind {self.kind}")
        if self.kind == "line":
            a, b = (x % self.p for x in self.vec)
            if not (a or b):
                raise ValueError("a line needs a nonzero spanning vector")
            # normalize the first nonzero coordinate to 1
            inv = pow(a if a else b, -1, self.p)
            object.__setattr__(self, "vec", (a * inv % self.p, b * inv % self.p))
        else:
            object.__setattr__(self, "vec", ())

    @classmethod
    def from_vectors(cls, v, p: int, vectors: Sequence[Sequence[int]], flags: tuple = ()) -> "ConditionLine":
        vecs = [tuple(x % p for x in w) for w in vectors]
        vecs = [w for w in vecs if any(w)]
        if not vecs:
            return cls(v, p, "zero", flags=flags)
        a = vecs[0]
        for w in vecs[1:]:
            if (a[0] * w[1] - a[1] * w[0]) % p:
                return cls(v, p, "full", flags=flags)
        return cls(v, p, "line", a, flags)

    @property
    def log_size(self) -> int:
        return {"zero": 0, "line": 1, "full": 2}[self.kind]

    @property
    def size(self) -> int:
        return self.p ** self.log_size

    def contains(self, y: Sequence[int]) -> bool:
        p = self.p
        y0, y1 = y[0] % p, y[1] % p
        if self.kind == "full":
            return True
        if self.kind == "zero":
            return not (y0 or y1)
        a, b = self.vec
        return (a * y1 - b * y0) % p == 0

    def annihilator_rows(self) -> list:
        """Rows lambda with y in L iff lambda . y = 0 for every row."""
        if self.kind == "full":
            return []
        if self.kind == "zero":
            return [[1, 0], [0, 1]]
        a, b = self.vec
        return [[(-b) % self.p, a]]

    def perp(self, place_kind: str) -> "ConditionLine":
        """Orthogonal complement under B (tame) or the dot product (at p)."""
        p = self.p
        if self.kind == "zero":
            return ConditionLine(self.v, p, "full")
        if self.kind == "full":
            return ConditionLine(self.v, p, "zero")
        a, b = self.vec
        if place_kind == "tame":
            # B((a,b),(c,d)) = a d - b c vanishes on the line itself
            return ConditionLine(self.v, p, "line", (a, b))
        return ConditionLine(self.v, p, "line", ((-b) % p, a))

    def elements(self) -> list:
        p = self.p
        return [y for y in itertools.product(range(p), repeat=2) if self.contains(y)]

    def describe(self) -> str:
        if self.kind == "line":
            return f"<({self.vec[0]},{self.vec[1]})>"
        return self.kind


def local_invariant(p: int, place_kind: str, x: Sequence[int], y: Sequence[int]) -> int:
    """x(rec_v kappa) in F_p from F_p-side coordinates x and mu_p-side y."""
    if place_kind == "tame":
        return -(x[0] * y[1] - x[1] * y[0]) % p
    return (x[0] * y[0] + x[1] * y[1]) % p


# -- global spaces and localization --------------------------------------------------


@dataclass(frozen=True)
class KummerElement:
    """kappa = p^alpha prod q^{nu_q} in Q*/Q*^p."""

    p: int
    alpha: int
    support: tuple

    def __post_init__(self) -> None:
        sup = tuple(sorted((int(q), int(e) % self.p) for q, e in dict(self.support).items()))
        object.__setattr__(self, "support", tuple((q, e) for q, e in sup if e))
        object.__setattr__(self, "alpha", self.alpha % self.p)

    @property
    def is_trivial(self) -> bool:
        return not self.alpha and not self.support

    def exponent(self, q: int) -> int:
        if q == self.p:
            return self.alpha
        return dict(self.support).get(q, 0)

    def value(self) -> int:
        out = self.p ** self.alpha
        for q, e in self.support:
            out *= q ** e
        return out


def evaluate_kummer_local(kappa: KummerElement, v: int) -> tuple:
    """Ev_v(kappa) = (nu_v, chi_v(kappa / (-v)^nu_v)) at a prime v = 1 mod p."""
    p = kappa.p
    if v == p or (v - 1) % p:
        raise ValueError(f"{v} is not a prime congruent to 1 mod {p}")
    nu = kappa.exponent(v)
    u = nu * char_eval(p, v, 1, v - 1)
    if kappa.alpha:
        u += kappa.alpha * char_eval(p, v, 1, p)
    for q, e in kappa.support:
        if q != v:
            u += e * char_eval(p, v, 1, q)
    return (nu % p, u % p)


def evaluate_kummer_at_p(kappa: KummerElement) -> tuple:
    p = kappa.p
    b = sum(e * wild_log(p, 1, q) for q, e in kappa.support)
    return (kappa.alpha, b % p)


@dataclass(frozen=True)
class CandidateSpace:
    """Coordinates (p, q_1, ..., q_s) shared by both global spaces."""

    p: int
    tame: tuple

    @classmethod
    def of(cls, handle: ExtensionHandle) -> "CandidateSpace":
        p = handle.group.p
        return cls(p, tuple(q for q in handle.ramified_primes if q != p))

    @property
    def dim(self) -> int:
        return 1 + len(self.tame)

    @property
    def places(self) -> tuple:
        return (self.p,) + self.tame

    def place_kind(self, v: int) -> str:
        return "wild" if v == self.p else "tame"

    def kummer(self, coords: Sequence[int]) -> KummerElement:
        return KummerElement(self.p, coords[0], dict(zip(self.tame, coords[1:])))

    def mu_matrix(self, v: int) -> list:
        """2 x dim matrix of kappa -> local coordinates at v."""
        p = self.p
        if v == p:
            return [[1] + [0] * len(self.tame), [0] + [wild_log(p, 1, q) for q in self.tame]]
        return [
            [0] + [1 if q == v else 0 for q in self.tame],
            [char_eval(p, v, 1, p)] + [char_eval(p, v, 1, v - 1) if q == v else char_eval(p, v, 1, q) for q in self.tame],
        ]

    def fp_matrix(self, v: int) -> list:
        """2 x dim matrix of x -> local coordinates at v (coefficients c_p, c_q)."""
        p = self.p
        if v == p:
            return [[0] + [char_eval(p, q, 1, p) for q in self.tame], [(-1) % p] + [0] * len(self.tame)]
        return [
            [0] + [1 if q == v else 0 for q in self.tame],
            [wild_log(p, 1, v)] + [0 if q == v else char_eval(p, q, 1, v) for q in self.tame],
        ]

    def matrix(self, side: str, v: int) -> list:
        return self.mu_matrix(v) if side == MU else self.fp_matrix(v)


def _default_line(space: CandidateSpace, side: str, v: int) -> ConditionLine:
    p = space.p
    if v == p:
        if side == MU:
            return ConditionLine(v, p, "full")
        return ConditionLine(v, p, "line", (1, 0))
    # unramified: nu = 0, resp. x(sigma) = 0
    return ConditionLine(v, p, "line", (0, 1), ("unramified",))


@dataclass(frozen=True)
class SelmerStructure:
    """Local conditions at the places of the candidate support; the unramified
    condition elsewhere. Unlisted tame places are unramified; an unlisted p is
    the full space on the mu_p side and the unramified line X2 = 0 on the F_p side."""

    space: CandidateSpace
    side: str
    lines: tuple
    level: int | None = None

    def __post_init__(self) -> None:
        if self.side not in (MU, FP):
            raise ValueError("side must be 'mu_p' or 'F_p'")
        given = dict(self.lines)
        for v in given:
            if v not in self.space.places:
                raise ValueError(f"place {v} lies outside the candidate support")
        full = tuple((v, given.get(v) or _default_line(self.space, self.side, v)) for v in self.space.places)
        object.__setattr__(self, "lines", full)

    @classmethod
    def build(cls, space: CandidateSpace, side: str, lines: Mapping, level: int | None = None) -> "SelmerStructure":
        return cls(space, side, tuple(lines.items()), level)

    def line(self, v: int) -> ConditionLine:
        return dict(self.lines)[v]

    def dual(self) -> "SelmerStructure":
        other = FP if self.side == MU else MU
        perps = {v: L.perp(self.space.place_kind(v)) for v, L in self.lines}
        return SelmerStructure.build(self.space, other, perps, self.level)

    def describe(self) -> str:
        return ";".join(f"{v}:{L.describe()}" for v, L in self.lines)


@dataclass(frozen=True)
class SelmerGroup:
    space: CandidateSpace
    side: str
    basis: tuple
    log_order: int

    @property
    def order(self) -> int:
        return self.space.p ** self.log_order

    @property
    def vanishes(self) -> bool:
        return self.log_order == 0

    def elements(self) -> list:
        p, dim = self.space.p, self.space.dim
        out = set()
        for coeffs in itertools.product(range(p), repeat=len(self.basis)):
            v = [0] * dim
            for c, b in zip(coeffs, self.basis):
                for i in range(dim):
                    v[i] += c * b[i]
            out.add(tuple(x % p for x in v))
        return sorted(out)


def _constraint_rows(structure: SelmerStructure) -> list:
    space = structure.space
    p = space.p
    rows = []
    for v, L in structure.lines:
        mat = space.matrix(structure.side, v)
        for lam in L.annihilator_rows():
            rows.append([(lam[0] * a + lam[1] * b) % p for a, b in zip(mat[0], mat[1])])
    return rows


def selmer_group(structure: SelmerStructure, method: str = "auto") -> SelmerGroup:
    """Solve the local conditions: exhaustive filtering on small spaces, an
    exact kernel otherwise (``method`` forces either)."""
    space = structure.space
    p, dim = space.p, space.dim
    if method == "auto":
        method = "exhaustive" if p ** dim <= EXHAUSTIVE_LIMIT else "kernel"
    if method == "exhaustive":
        members = []
        for vec in itertools.product(range(p), repeat=dim):
            ok = True
            for v, L in structure.lines:
                m = space.matrix(structure.side, v)
                y = (sum(a * b for a, b in zip(m[0], vec)), sum(a * b for a, b in zip(m[1], vec)))
                if not L.contains(y):
                    ok = False
                    break
            if ok:
                members.append(list(vec))
        basis = zmod.reduce_generators(members, p, 1, dim)
        log = zmod.span_log_order(members, p, 1, dim)
        if p ** log != len(members):
            raise DualityError("solution set is not a subgroup")
        return SelmerGroup(space, structure.side, tuple(map(tuple, basis)), log)
    if method != "kernel":
        raise ValueError("method must be 'auto', 'exhaustive' or 'kernel'")
    rows = _constraint_rows(structure)
    if rows:
        gens = [g for g in zmod.kernel(rows, p, 1, dim) if any(x % p for x in g)]
    else:
        gens = [[1 if i == j else 0 for i in range(dim)] for j in range(dim)]
    gens = zmod.reduce_generators(gens, p, 1, dim)
    return SelmerGroup(space, structure.side, tuple(map(tuple, gens)), zmod.span_log_order(gens, p, 1, dim))


def selmer_fp_direct(handle: ExtensionHandle, structure: SelmerStructure, method: str = "auto") -> SelmerGroup:
    """Characters chi_p, chi_q (q tame ramified) meeting the F_p-side conditions."""
    if structure.side != FP:
        raise ValueError("structure must be on the F_p side")
    if structure.space != CandidateSpace.of(handle):
        raise ValueError("structure does not belong to this handle")
    return selmer_group(structure, method)


# -- Greenberg-Wiles bookkeeping -----------------------------------------------------


@dataclass(frozen=True)
class GWReport:
    selmer: int
    dual_selmer: int
    ratio: Fraction
    predicted: Fraction
    mirrored_ratio: Fraction
    mirrored_predicted: Fraction
    instance: str

    @property
    def holds(self) -> bool:
        return self.ratio == self.predicted and self.mirrored_ratio == self.mirrored_predicted


def gw_predicted(structure: SelmerStructure) -> Fraction:
    """|H^0(Q, M)|/|H^0(Q, M*)| prod_v |L_v|/|H^0(Q_v, M)| for M = mu_p or F_p.

    H^0(Q_v, mu_p) has order p at tame v (v = 1 mod p) and 1 at p; the
    archimedean place has L = 0 and contributes 1 for mu_p, 1/p for F_p.
    """
    p = structure.space.p
    if structure.side == MU:
        out = Fraction(1, p)
        for v, L in structure.lines:
            out *= Fraction(L.size, p if v != p else 1)
        return out
    out = Fraction(p) * Fraction(1, p)
    for v, L in structure.lines:
        out *= Fraction(L.size, p)
    return out


def gw_identity_check(handle: ExtensionHandle, structure: SelmerStructure, strict: bool = True) -> GWReport:
    """Compare |Sel_L(M)|/|Sel_{L perp}(M*)| with the local product, both ways round."""
    if structure.space != CandidateSpace.of(handle):
        raise ValueError("structure does not belong to this handle")
    mu = structure if structure.side == MU else structure.dual()
    fp = mu.dual()
    s_mu = selmer_group(mu).order
    s_fp = selmer_group(fp).order
    report = GWReport(
        s_mu,
        s_fp,
        Fraction(s_mu, s_fp),
        gw_predicted(mu),
        Fraction(s_fp, s_mu),
        gw_predicted(fp),
        f"{handle.group.label}|{handle.ext.encode()}|{mu.describe()}",
    )
    if strict and not report.holds:
        raise DualityError(f"Greenberg-Wiles mismatch on {report.instance}: {report}")
    return report


# -- dual conditions from the block data ---------------------------------------------


def _check_level(block: IdempotentBlock, k: int) -> None:
    block.require_nontrivial()
    r = ie_exponent(block)
    if not 1 <= k <= r:
        raise ValueError(f"level out of range: need 1 <= k <= {r}")


@lru_cache(maxsize=None)
def _pushforward(block: IdempotentBlock, k: int, inertia_gen: tuple, frob: tuple) -> tuple:
    """Image in F_p^2 (sigma, Frob) of H^1(Zhat x_{D/I} D, M_k) under M_k -> F_p."""
    from .abelian_core import make_pair

    A = block.group
    pair = make_pair(A, inertia_gen, frob)
    module = mj_module(block, k)
    N = approximation_exponent(module, _exp_of_subgroup(A, pair.D))
    cx = gamma_complex(module, pair, N)
    if len(cx.orders) != 2:
        raise ValueError("inertia must be nontrivial")
    r = residue_functional(block, k)
    p = A.p
    n = cx.n
    out = []
    for z in cx.cocycles(1):
        at_frob = z[0:n]
        at_sigma = z[n:2 * n]
        out.append((sum(a * b for a, b in zip(r, at_sigma)) % p, sum(a * b for a, b in zip(r, at_frob)) % p))
    return tuple(out)


def dual_local_line(handle: ExtensionHandle, v: int, block: IdempotentBlock, k: int) -> ConditionLine:
    """f_k(L_{v,k}) perp inside H^1(Q_v, mu_p), at a ramified tame place."""
    _check_level(block, k)
    p = handle.group.p
    if v == p:
        raise ValueError("the condition at p is fixed to the full space")
    if v not in handle.ramified_primes:
        return ConditionLine(v, p, "line", (0, 1), ("unramified",))
    pair = local_pair(handle, v)
    image = ConditionLine.from_vectors(v, p, _pushforward(block, k, pair.inertia_gen, pair.frob))
    line = image.perp("tame")
    if line.size > p:
        raise DualityError(f"dual condition at {v} has size {line.size} > {p} for {handle!r}, k={k}")
    return ConditionLine(v, p, line.kind, line.vec, ("dual", f"k={k}"))


def dual_structure(handle: ExtensionHandle, block: IdempotentBlock, k: int) -> SelmerStructure:
    space = CandidateSpace.of(handle)
    lines = {v: dual_local_line(handle, v, block, k) for v in space.tame}
    lines[space.p] = ConditionLine(space.p, space.p, "full")
    return SelmerStructure.build(space, MU, lines, k)


def dual_selmer_mu_p(handle: ExtensionHandle, block: IdempotentBlock, k: int, method: str = "auto") -> SelmerGroup:
    return selmer_group(dual_structure(handle, block, k), method)


# -- certified size of Hom_nr(G_K, M_j)^A --------------------------------------------

EXACT = "EXACT"
FORMULA_ONLY = "FORMULA-ONLY"


@dataclass(frozen=True)
class CertifiedSize:
    p: int
    size: Fraction
    certificate: str
    dual_orders: tuple
    n_phi_order: int
    h1_order: int
    fixed_order: int
    special_exponent: int

    @property
    def log_size(self) -> int | None:
        """log_p of the size, or None when it is not a power of p."""
        s = self.size
        if s.denominator != 1:
            return None
        n, out = s.numerator, 0
        while n % self.p == 0:
            n //= self.p
            out += 1
        return out if n == 1 else None


def hom_nr_certified(handle: ExtensionHandle, block: IdempotentBlock, j: int) -> CertifiedSize:
    """|N_phi| / (|M_j| |H^1(A, M_j)|) * |M_j^A| * prod_{v | f} p^{special level <= j}.

    H^0(Q, M_j*) is trivial: a fixed vector would give a G_Q-map M_j -> mu_p,
    impossible since M_j/m has trivial action while mu_p does not. The value is
    EXACT when the dual Selmer group vanishes at every level k <= j.
    """
    _check_level(block, j)
    A = handle.group
    p = A.p
    module = mj_module(block, j)
    n_order = n_phi(A, module, ramified_local_data(handle)).order
    h1 = cohomology_group(1, A, module).order
    fixed = module.fixed_points_order()
    special = sum(special_level(local_pair(handle, v), block, j) for v in handle.ramified_primes)
    size = Fraction(n_order * fixed * p ** special, p ** j * h1)
    duals = tuple(dual_selmer_mu_p(handle, block, k).order for k in range(1, j + 1))
    cert = EXACT if all(o == 1 for o in duals) else FORMULA_ONLY
    return CertifiedSize(p, size, cert, duals, n_order, h1, fixed, special)


def level_one_structure(handle: ExtensionHandle) -> SelmerStructure:
    """F_p-side conditions cutting out characters that die on G_K's inertia:
    full at ramified places, X2 = 0 at p when p is unramified."""
    space = CandidateSpace.of(handle)
    p = space.p
    lines = {v: ConditionLine(v, p, "full") for v in space.tame}
    if p in handle.ramified_primes:
        lines[p] = ConditionLine(p, p, "full")
    else:
        lines[p] = ConditionLine(p, p, "line", (1, 0), ("unramified",))
    return SelmerStructure.build(space, FP, lines, 1)


def hom_nr_level_one_direct(handle: ExtensionHandle, block: IdempotentBlock) -> int:
    """log_p |Hom_nr(G_K, F_p)^A| from inflation-restriction and an explicit Selmer group."""
    _check_level(block, 1)
    A = handle.group
    module = mj_module(block, 1)
    n_log = n_phi(A, module, ramified_local_data(handle)).log_order
    sel = selmer_fp_direct(handle, level_one_structure(handle))
    h1_log = cohomology_group(1, A, module).log_order
    return n_log + sel.log_order - h1_log


def rank_read_off(handle: ExtensionHandle, block: IdempotentBlock, d: int) -> int | None:
    """log_p(size at d) - log_p(size at d - 1), or None if a size is not a power of p."""
    hi = hom_nr_certified(handle, block, d).log_size
    lo = 0 if d == 1 else hom_nr_certified(handle, block, d - 1).log_size
    if hi is None or lo is None:
        return None
    return hi - lo
