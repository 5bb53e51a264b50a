"""Character-sum expansion of the average dual Selmer size, and unlinked sets.

Pairs (a, b) = (inertia image, Frobenius image) of a tame ramified prime fall
into three classes according to the dual local condition they induce on
H^1(Q_q, mu_p) in (nu, unit) coordinates:

* ``zero``: the condition is 0;
* ``unramified``: the condition is the unramified line nu = 0;
* ``other``: a line <(1, f)>, detected through u + e nu = 0 with e = -f.

Index entries carry the coordinates (a, b, chi, c, nu) with the trailing ones
absent according to the class: ``other`` has all five, ``zero`` has
(a, b, chi, c), ``unramified`` has (a, b, chi).
"""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import zmod
from .abelian_core import AbelianPGroup, GroupChar, characters_of, hom_to_fp
from .arithmetic_ext import (
    ExtensionHandle,
    ExtensionTuple,
    admissible_primes,
    char_eval,
    local_data_at,
    p_index,
    wild_log,
)
from .block_ring import IdempotentBlock, ie_exponent
from .cyclotomic import CycloNumber
from .selmer_engine import (
    ConditionLine,
    DualityError,
    _pushforward,
    dual_selmer_mu_p,
)

ZERO = "zero"
UNRAMIFIED = "unramified"
OTHER = "other"


# -- pair classes --------------------------------------------------------------------


@dataclass(frozen=True)
class PairClass:
    a: tuple
    b: tuple
    kind: str
    line: ConditionLine
    e: int | None = None

    @property
    def in_unramified(self) -> bool:
        return self.kind in (ZERO, UNRAMIFIED)


def _check_level(block: IdempotentBlock, d: int) -> None:
    block.require_nontrivial()
    r = ie_exponent(block)
    if not 1 <= d <= r:
        raise ValueError(f"level out of range: need 1 <= d <= {r}")


def pair_class(block: IdempotentBlock, d: int, a: tuple, b: tuple) -> PairClass:
    p = block.p
    image = ConditionLine.from_vectors(None, p, _pushforward(block, d, tuple(a), tuple(b)))
    line = image.perp("tame")
    if line.size > p:
        raise DualityError(f"dual condition of size {line.size} for pair {a},{b} at level {d}")
    if line.kind == "zero":
        return PairClass(a, b, ZERO, line)
    if line.vec == (0, 1):
        return PairClass(a, b, UNRAMIFIED, line)
    return PairClass(a, b, OTHER, line, (-line.vec[1]) % p)


@lru_cache(maxsize=None)
def _classify_cached(block: IdempotentBlock, d: int) -> tuple:
    A = block.group
    out = []
    for a in A.nonzero_elements():
        for b in A.elements():
            out.append(((a, b), pair_class(block, d, a, b)))
    return tuple(out)


def classify_pairs(group: AbelianPGroup, block: IdempotentBlock, d: int) -> dict:
    """(a, b) -> PairClass for every a != 0 and every b."""
    if block.group != group:
        raise ValueError("block belongs to another group")
    _check_level(block, d)
    return dict(_classify_cached(block, d))


def handle_prime_classes(handle: ExtensionHandle, block: IdempotentBlock, d: int) -> dict:
    """Tame ramified q -> PairClass of (phi(sigma_q), phi(Frob_q))."""
    classes = classify_pairs(handle.group, block, d)
    out = {}
    for q in handle.ramified_primes:
        if q == handle.group.p:
            continue
        data = local_data_at(handle, q)
        out[q] = classes[(data.inertia, data.frob_part)]
    return out


# -- detectors -----------------------------------------------------------------------


@lru_cache(maxsize=None)
def _geometric_sum(p: int, n: int, t: int) -> CycloNumber:
    """sum_{c in F_p} zeta_p^{c t} in Z[zeta_{p^n}]."""
    step = p ** (n - 1)
    total = CycloNumber.zero(p, n)
    for c in range(p):
        total = total + CycloNumber.root_of_unity(p, n, c * t * step)
    return total


def _kappa_residue(p: int, alpha: int, exps: Mapping[int, int], q: int, twist: int = 0) -> int:
    """kappa / (-q)^twist modulo q, kappa = p^alpha prod q'^exps[q'] with q'^0 at q."""
    x = pow(p, alpha, q) * pow(-1, twist, q) % q
    for r, e in exps.items():
        if r != q and e:
            x = x * pow(r, e, q) % q
    return x


def detector_factor(p: int, cls: PairClass, q: int, alpha: int, exps: Mapping[int, int]) -> CycloNumber:
    """p times the detector of the local condition at q (integer-scaled, exact)."""
    nu = exps.get(q, 0) % p
    if cls.kind == ZERO:
        if nu:
            raise ValueError("the zero detector needs q coprime to kappa")
        t = char_eval(p, q, 1, _kappa_residue(p, alpha, exps, q))
        return _geometric_sum(p, 1, t)
    if cls.kind == OTHER:
        t = nu * cls.e + char_eval(p, q, 1, _kappa_residue(p, alpha, exps, q, nu))
        return _geometric_sum(p, 1, t % p)
    raise ValueError("no detector for unramified classes")


def detector_indicator(p: int, cls: PairClass, q: int, alpha: int, exps: Mapping[int, int]) -> Fraction:
    v = detector_factor(p, cls, q, alpha, exps)
    return Fraction(v.rational_value(), p)


@dataclass(frozen=True)
class DetectorReport:
    lhs: int
    rhs: int
    terms: int
    instance: str

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def detector_identity_per_extension(handle: ExtensionHandle, block: IdempotentBlock, d: int, strict: bool = True) -> DetectorReport:
    """#Sel by direct filtering against the expanded detector sum over alpha and
    the factorizations of the non-unramified support."""
    _check_level(block, d)
    p = handle.group.p
    classes = handle_prime_classes(handle, block, d)
    other = [q for q, c in classes.items() if c.kind == OTHER]
    zero = [q for q, c in classes.items() if c.kind == ZERO]
    detected = other + zero
    total = CycloNumber.zero(p, 1)
    terms = 0
    for alpha in range(p):
        for nus in itertools.product(range(p), repeat=len(other)):
            exps = dict(zip(other, nus))
            term = CycloNumber.integer(p, 1, 1)
            for q in detected:
                term = term * detector_factor(p, classes[q], q, alpha, exps)
                if not term:
                    break
            total = total + term
            terms += 1
    instance = f"{handle.group.label}|{handle.ext.encode()}|{block.label}|d={d}"
    if not total.is_rational():
        raise DualityError(f"detector sum is not rational on {instance}: {total.coeffs}")
    scale = p ** len(detected)
    num = total.rational_value()
    if num % scale:
        raise DualityError(f"detector sum {num}/{scale} is not an integer on {instance}")
    rhs = num // scale
    lhs = dual_selmer_mu_p(handle, block, d).order
    report = DetectorReport(lhs, rhs, terms, instance)
    if strict and not report.holds:
        raise DualityError(f"detector identity fails on {instance}: lhs={lhs} rhs={rhs}")
    return report


# -- the thresholded family and the outer sum ----------------------------------------


def sqrt_log_threshold(X: float) -> float:
    """exp(sqrt(log X))."""
    return math.exp(math.sqrt(math.log(X))) if X > 1 else 1.0


def _tame_primes(p: int, X: int) -> list:
    return [q for q in admissible_primes(p, X) if q != p]


def prime_sets(p: int, X: int, min_size: int) -> Iterator[tuple]:
    """Sets of tame admissible primes with at least ``min_size`` elements and product <= X."""
    # the largest prime still leaves room for min_size - 1 smaller ones
    reach = 1000
    small = _tame_primes(p, reach)
    while len(small) < min_size - 1:
        reach *= 10
        small = _tame_primes(p, reach)
    cap = X // math.prod(small[: max(min_size - 1, 0)])
    primes = _tame_primes(p, max(cap, 2))

    def rec(start: int, chosen: list, prod: int) -> Iterator[tuple]:
        if len(chosen) >= min_size:
            yield tuple(chosen)
        need = max(min_size - len(chosen) - 1, 0)
        for i in range(start, len(primes)):
            q = primes[i]
            # the smallest completion must still fit under X
            bound = prod * q
            for j in range(i + 1, i + 1 + need):
                if j >= len(primes) or bound > X:
                    bound = X + 1
                    break
                bound *= primes[j]
            if bound > X:
                break
            chosen.append(q)
            yield from rec(i + 1, chosen, prod * q)
            chosen.pop()

    yield from rec(0, [], 1)


def _a_options(A: AbelianPGroup, q: int) -> list:
    return [a for a in A.nonzero_elements() if (q - 1) % A.order_of(a) == 0]


def _f_options(A: AbelianPGroup, base: int, X: int) -> list:
    out = [None]
    if base * A.p <= X:
        out += list(A.nonzero_elements())
    return out


def _class_products(group: AbelianPGroup, labels: Mapping[int, tuple]) -> dict:
    prods = {(a, b): 1 for a in group.nonzero_elements() for b in group.elements()}
    for q, ab in labels.items():
        prods[ab] *= q
    return prods


def _passes_threshold(prods: Mapping, t: float) -> bool:
    return all(v > t for v in prods.values())


@dataclass(frozen=True)
class FamilyMember:
    handle: ExtensionHandle
    labels: tuple


def thresholded_family(group: AbelianPGroup, X: int, t: float) -> Iterator[FamilyMember]:
    """Surjective A-extensions with conductor radical <= X in which every pair
    class (a, b) collects tame primes with product > t (t >= 1)."""
    if t < 1:
        raise ValueError("threshold must be at least 1")
    n_classes = (group.order - 1) * group.order
    for Q in prime_sets(group.p, X, n_classes):
        base = math.prod(Q)
        for fa in _f_options(group, base, X):
            for choice in itertools.product(*(_a_options(group, q) for q in Q)):
                w: dict = {}
                for q, a in zip(Q, choice):
                    w[a] = w.get(a, 1) * q
                if fa is not None:
                    w[fa] = w.get(fa, 1) * group.p
                ext = ExtensionTuple.from_map(group, w)
                if not ext.is_surjective:
                    continue
                handle = ExtensionHandle(ext)
                labels = {}
                for q in Q:
                    data = local_data_at(handle, q)
                    labels[q] = (data.inertia, data.frob_part)
                if _passes_threshold(_class_products(group, labels), t):
                    yield FamilyMember(handle, tuple(sorted(labels.items())))


def _frobenius_values(group: AbelianPGroup, Q: Sequence[int], choice: Sequence[tuple], fa, q: int, chars: Sequence[GroupChar]) -> list:
    """chi(phi(Frob_q)) for every chi, from the component characters away from q."""
    p = group.p
    N = group.invariants[0]
    mod = p ** N
    out = []
    for chi in chars:
        s = 0
        for r, a in zip(Q, choice):
            if r != q:
                s += p_index(r, p, q) * chi(a)
        if fa is not None:
            s += wild_log(p, N, q) * chi(fa)
        out.append(s % mod)
    return out


@dataclass(frozen=True)
class OuterSumReport:
    lhs: int
    rhs: int
    members: int
    X: int
    threshold: float

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def charsum_outer_sum(group: AbelianPGroup, block: IdempotentBlock, d: int, X: int, t: float, strict: bool = True) -> OuterSumReport:
    """Sum of #Sel over the thresholded family against the multi-index character sum.

    The right side runs over the same prime sets, the wild factor f and the
    inertia labels; for each prime the sum over chi in A^dual is evaluated
    exactly per Frobenius label b (the sum factors prime by prime once the
    labels are fixed), labels whose factor vanishes are dropped, and for the
    surviving labels the sum over alpha, nu and c of the detector products is
    accumulated in Z[zeta]. Frobenius terms use the away-from-q components.
    """
    _check_level(block, d)
    if t < 1:
        raise ValueError("threshold must be at least 1")
    p = group.p
    N = group.invariants[0]
    chars = characters_of(group)
    classes = classify_pairs(group, block, d)
    elements = group.elements()

    lhs = 0
    members = 0
    for m in thresholded_family(group, X, t):
        lhs += dual_selmer_mu_p(m.handle, block, d).order
        members += 1

    n_classes = (group.order - 1) * group.order
    total = Fraction(0)
    for Q in prime_sets(p, X, n_classes):
        base = math.prod(Q)
        for fa in _f_options(group, base, X):
            for choice in itertools.product(*(_a_options(group, q) for q in Q)):
                # per prime and label b: sum_chi zeta^{chi(Frob_q) - chi(b)}, scaled by |A|
                weights: list = []
                for q in Q:
                    fr = _frobenius_values(group, Q, choice, fa, q, chars)
                    row = {}
                    for b in elements:
                        s = CycloNumber.zero(p, N)
                        for chi, v in zip(chars, fr):
                            s = s + CycloNumber.root_of_unity(p, N, v - chi(b))
                        if s:
                            row[b] = s
                    weights.append(row)
                for bs in itertools.product(*(list(r.items()) for r in weights)):
                    labels = {q: (a, b) for q, a, (b, _) in zip(Q, choice, bs)}
                    if not _passes_threshold(_class_products(group, labels), t):
                        continue
                    frob_weight = CycloNumber.integer(p, N, 1)
                    for _, s in bs:
                        frob_weight = frob_weight * s
                    inner, scale = _inner_sum(p, N, {q: classes[labels[q]] for q in Q})
                    value = frob_weight * inner
                    if not value.is_rational():
                        raise DualityError(f"outer sum term is not rational for {Q}, {choice}, f={fa}")
                    total += Fraction(value.rational_value(), group.order ** len(Q) * scale)
    if total.denominator != 1:
        raise DualityError(f"outer sum {total} is not an integer")
    report = OuterSumReport(lhs, int(total), members, X, t)
    if strict and not report.holds:
        raise DualityError(f"outer sum mismatch at X={X}, t={t}: lhs={lhs} rhs={report.rhs}")
    return report


def _inner_sum(p: int, N: int, prime_classes: Mapping[int, PairClass]) -> tuple:
    """(sum over alpha, nu of the product of p-scaled detectors, p^{#detected})."""
    other = [q for q, c in prime_classes.items() if c.kind == OTHER]
    detected = [q for q, c in prime_classes.items() if c.kind in (OTHER, ZERO)]
    total = CycloNumber.zero(p, N)
    step = p ** (N - 1)
    for alpha in range(p):
        for nus in itertools.product(range(p), repeat=len(other)):
            exps = dict(zip(other, nus))
            term = CycloNumber.integer(p, N, 1)
            for q in detected:
                cls = prime_classes[q]
                # psi_q(p^alpha prod q'^nu') times zeta^{nu e}; psi_q(q) = 1
                t = alpha * char_eval(p, q, 1, p)
                for r, e in exps.items():
                    if r != q:
                        t += e * char_eval(p, q, 1, r)
                if cls.kind == OTHER:
                    t += exps[q] * cls.e
                s = CycloNumber.zero(p, N)
                for c in range(p):
                    s = s + CycloNumber.root_of_unity(p, N, c * t * step)
                term = term * s
                if not term:
                    break
            total = total + term
    return total, p ** len(detected)


def minimal_family_conductor(group: AbelianPGroup, t: float = 1, start: int | None = None, limit: int = 10 ** 10) -> int | None:
    """Smallest conductor radical of a member of the thresholded family."""
    p = group.p
    n_classes = (group.order - 1) * group.order
    tame = _tame_primes(p, 10 ** 4)
    if len(tame) < n_classes:
        return None
    X = start or math.prod(tame[:n_classes])
    while X <= limit:
        best = None
        for m in thresholded_family(group, X, t):
            c = m.handle.conductor
            if best is None or c < best:
                best = c
        if best is not None:
            return best
        X = X * 5 // 4
    return None


# -- index entries and unlinked sets -------------------------------------------------


@dataclass(frozen=True, order=True)
class IndexEntry:
    tag: str
    a: tuple
    b: tuple
    chi: tuple
    c: int | None = None
    nu: int | None = None

    def coords(self) -> tuple:
        out = (self.a, self.b, self.chi)
        if self.c is not None:
            out += (self.c,)
        if self.nu is not None:
            out += (self.nu,)
        return out

    @property
    def projection(self) -> tuple:
        return (self.a, self.b)


def index_entries(group: AbelianPGroup, classes: Mapping) -> list:
    """All index entries for the given pair classes, in a fixed order."""
    p = group.p
    chars = [c.values for c in characters_of(group)]
    out = []
    for (a, b), cls in sorted(classes.items()):
        for chi in chars:
            if cls.kind == UNRAMIFIED:
                out.append(IndexEntry(UNRAMIFIED, a, b, chi))
            elif cls.kind == ZERO:
                out.extend(IndexEntry(ZERO, a, b, chi, c) for c in range(p))
            else:
                out.extend(IndexEntry(OTHER, a, b, chi, c, nu) for c in range(p) for nu in range(p))
    return out


def _char_value(group: AbelianPGroup, chi: tuple, a: tuple) -> int:
    return sum(v * x for v, x in zip(chi, a)) % group.exponent


def link_value(group: AbelianPGroup, u1: IndexEntry, u2: IndexEntry) -> int:
    """chi(u1)(a(u2)) + coupling * c(u2) nu(u1), as an exponent in Z/p^n."""
    p = group.p
    top = group.exponent
    v = _char_value(group, u1.chi, u2.a)
    if u1.tag == OTHER and u2.tag in (OTHER, ZERO):
        v += u2.c * u1.nu * (top // p)
    return v % top


def unlinked_pair(group: AbelianPGroup, u1: IndexEntry, u2: IndexEntry) -> bool:
    if u1 == u2:
        raise ValueError("the entries must be distinct")
    return link_value(group, u1, u2) == 0


class UnlinkedLab:
    """Conflict structure on the index set for one (A, classes) configuration."""

    def __init__(self, group: AbelianPGroup, classes: Mapping):
        self.group = group
        self.p = group.p
        self.classes = dict(classes)
        self.entries = index_entries(group, classes)
        self.position = {u: i for i, u in enumerate(self.entries)}
        self.fiber_keys = sorted({u.projection for u in self.entries})
        fk = {k: i for i, k in enumerate(self.fiber_keys)}
        self.fiber = np.array([fk[u.projection] for u in self.entries], dtype=np.int32)
        self._fiber_onehot = np.zeros((len(self.entries), len(self.fiber_keys)), dtype=np.float32)
        self._fiber_onehot[np.arange(len(self.entries)), self.fiber] = 1
        self.conflict = self._conflict_matrix()
        self.weights = [self._weight(u) for u in self.entries]
        self._weight_values = sorted(set(self.weights))
        index = {w: i for i, w in enumerate(self._weight_values)}
        self._weight_class = np.array([index[w] for w in self.weights], dtype=np.int32)
        self.is_plain = np.array([not any(u.chi) and not u.nu for u in self.entries], dtype=bool)

    def _conflict_matrix(self) -> np.ndarray:
        G = self.group
        E = self.entries
        n = len(E)
        top = G.exponent
        step = top // self.p
        chi = np.array([u.chi for u in E], dtype=np.int64)
        a = np.array([u.a for u in E], dtype=np.int64)
        c = np.array([u.c or 0 for u in E], dtype=np.int64)
        nu = np.array([u.nu or 0 for u in E], dtype=np.int64)
        other = np.array([u.tag == OTHER for u in E])
        zero = np.array([u.tag == ZERO for u in E])
        linked = np.zeros((n, n), dtype=bool)
        chunk = 512
        for s in range(0, n, chunk):
            rows = slice(s, min(s + chunk, n))
            val = chi[rows] @ a.T
            coupling = other[rows, None] & (other | zero)[None, :]
            val = val + np.where(coupling, nu[rows, None] * c[None, :] * step, 0)
            linked[rows] = (val % top) != 0
        conflict = linked | linked.T
        np.fill_diagonal(conflict, False)
        return conflict

    def _weight(self, u: IndexEntry) -> Fraction:
        G = self.group
        t = self.p if u.tag in (OTHER, ZERO) else 1
        return Fraction(1, t * G.order * _euler_phi(G.order_of(u.a)))

    # -- sets ----------------------------------------------------------------

    def mask(self, U: Iterable[IndexEntry]) -> np.ndarray:
        m = np.zeros(len(self.entries), dtype=bool)
        for u in U:
            m[self.position[u]] = True
        return m

    def members(self, mask: np.ndarray) -> frozenset:
        return frozenset(self.entries[i] for i in np.flatnonzero(mask))

    def is_unlinked(self, mask: np.ndarray) -> bool:
        idx = np.flatnonzero(mask)
        if len(np.unique(self.fiber[idx])) != len(self.fiber_keys):
            return False
        return not self.conflict[np.ix_(idx, idx)].any()

    def addable(self, mask: np.ndarray) -> np.ndarray:
        idx = np.flatnonzero(mask)
        blocked = self.conflict[idx].any(axis=0) if len(idx) else np.zeros(len(self.entries), dtype=bool)
        return ~blocked & ~mask

    def is_maximal_unlinked(self, mask: np.ndarray) -> bool:
        return self.is_unlinked(mask) and not self.addable(mask).any()

    def canonical_set(self) -> frozenset:
        out = []
        zero_chi = tuple(0 for _ in range(self.group.rank))
        for u in self.entries:
            if u.chi == zero_chi and (u.tag != OTHER or u.nu == 0):
                out.append(u)
        return frozenset(out)

    def admissible_homs(self) -> list:
        """f in Hom(A, F_p) vanishing on the a's of unramified classes."""
        p = self.p
        unram = {a for (a, b), c in self.classes.items() if c.kind == UNRAMIFIED}
        return [f for f in hom_to_fp(self.group) if all(sum(x * y for x, y in zip(f, a)) % p == 0 for a in unram)]

    def twisted_set(self, f: Sequence[int]) -> frozenset:
        G = self.group
        p = self.p
        step = G.exponent // p
        zero_chi = tuple(0 for _ in range(G.rank))
        out = []
        for (a, b), cls in sorted(self.classes.items()):
            fa = sum(x * y for x, y in zip(f, a)) % p
            if cls.kind == UNRAMIFIED:
                out.append(IndexEntry(UNRAMIFIED, a, b, zero_chi))
            elif cls.kind == ZERO:
                out.append(IndexEntry(ZERO, a, b, zero_chi, fa))
            else:
                for x in range(p):
                    chi = tuple(x * fi * step % G.exponent for fi in f)
                    out.append(IndexEntry(OTHER, a, b, chi, fa, (-x) % p))
        return frozenset(out)

    # -- random maximal sets -------------------------------------------------

    def random_maximal(self, rng: random.Random, plain_bias: bool = False, tries: int = 200) -> np.ndarray:
        """One entry per fiber in random order, then random greedy extension."""
        n = len(self.entries)
        fibers = [np.flatnonzero(self.fiber == k) for k in range(len(self.fiber_keys))]
        for _ in range(tries):
            mask = np.zeros(n, dtype=bool)
            blocked = np.zeros(n, dtype=bool)
            order = list(range(len(fibers)))
            rng.shuffle(order)
            ok = True
            for step, k in enumerate(order):
                cand = fibers[k][~blocked[fibers[k]] & ~mask[fibers[k]]]
                # keep only picks that leave every later fiber an available entry
                later = order[step + 1:]
                if len(cand) and later:
                    free = ~blocked & ~mask
                    after = (free[None, :] & ~self.conflict[cand]).astype(np.float32) @ self._fiber_onehot[:, later]
                    cand = cand[(after > 0).all(axis=1)]
                if len(cand) == 0:
                    ok = False
                    break
                if plain_bias:
                    plain = cand[self.is_plain[cand]]
                    if len(plain):
                        cand = plain
                i = int(cand[rng.randrange(len(cand))])
                mask[i] = True
                blocked |= self.conflict[i]
            if not ok:
                continue
            rest = list(range(n))
            rng.shuffle(rest)
            if plain_bias:
                rest.sort(key=lambda i: not self.is_plain[i])
            for i in rest:
                if not mask[i] and not blocked[i]:
                    mask[i] = True
                    blocked |= self.conflict[i]
            return mask
        raise RuntimeError("could not seed an unlinked set")

    # -- weights -------------------------------------------------------------

    def _class_counts(self, mask: np.ndarray) -> tuple:
        k = len(self._weight_values)
        inside = np.bincount(self._weight_class[mask], minlength=k)
        total = np.bincount(self._weight_class, minlength=k)
        return inside, total - inside

    def weight(self, mask: np.ndarray) -> Fraction:
        """Dominant part over U plus 1/(10 p^3 |A|^5) times the same sum over the complement."""
        tail = Fraction(1, 10 * self.p ** 3 * self.group.order ** 5)
        inside, outside = self._class_counts(mask)
        out = Fraction(0)
        for w, a, b in zip(self._weight_values, inside, outside):
            out += w * int(a) + tail * w * int(b)
        return out

    def dominant_weight(self, mask: np.ndarray) -> Fraction:
        inside, _ = self._class_counts(mask)
        return sum((w * int(a) for w, a in zip(self._weight_values, inside)), Fraction(0))

    def weight_bound(self) -> Fraction:
        """sum over a != 0 of 1/phi(ord a)."""
        G = self.group
        return sum((Fraction(1, _euler_phi(G.order_of(a))) for a in G.nonzero_elements()), Fraction(0))


def _euler_phi(n: int) -> int:
    out = n
    m = n
    d = 2
    while d * d <= m:
        if m % d == 0:
            while m % d == 0:
                m //= d
            out -= out // d
        d += 1
    if m > 1:
        out -= out // m
    return out


def canonical_unlinked_sets(lab: UnlinkedLab) -> dict:
    """{'U': canonical set, f: twisted set for every admissible f}."""
    out = {"U": lab.canonical_set()}
    for f in lab.admissible_homs():
        out[tuple(f)] = lab.twisted_set(f)
    return out


@dataclass(frozen=True)
class Verdict:
    canonical: bool
    admissible: tuple
    near_iso: bool
    c1: bool
    c2: bool
    c3: bool
    c4: bool

    @property
    def regime(self) -> bool:
        return self.c1 and self.c2 and self.c3 and self.c4

    @property
    def labels(self) -> tuple:
        out = []
        if self.canonical:
            out.append("canonical")
        if self.admissible:
            out.append("admissible")
        if self.near_iso:
            out.append("near-iso")
        if self.regime:
            out.append("C1-C4")
        return tuple(out)

    @property
    def ok(self) -> bool:
        return bool(self.labels)


class NotMaximalError(ValueError):
    pass


def classify_maximal_unlinked(lab: UnlinkedLab, mask: np.ndarray, twisted: Mapping | None = None) -> Verdict:
    if not lab.is_maximal_unlinked(mask):
        raise NotMaximalError("input is not a maximal unlinked set")
    U = lab.members(mask)
    G = lab.group
    zero_chi = tuple(0 for _ in range(G.rank))
    canonical = U == lab.canonical_set()
    if twisted is None:
        twisted = {tuple(f): lab.twisted_set(f) for f in lab.admissible_homs()}
    admissible = tuple(f for f, S in twisted.items() if f != "U" and S == U)
    n_classes = len(lab.fiber_keys)
    near_iso = len(U) == n_classes + 1
    d = G.rank
    pariah = sum(1 for u in U if u.tag == OTHER and (any(u.chi) or u.nu))
    c1 = 1 <= pariah <= 2 * d
    unram_as = [a for (a, b), c in lab.classes.items() if c.kind == UNRAMIFIED]
    c2 = len(G.span(unram_as)) != G.order
    c3 = all(u.chi == zero_chi for u in U if u.tag in (UNRAMIFIED, ZERO))
    c4 = True
    seen: dict = {}
    for u in U:
        if u.chi != zero_chi:
            continue
        if u.tag == ZERO or (u.tag == OTHER and u.nu == 0):
            key = (u.tag, u.a, u.b)
            if key in seen and seen[key] != u.c:
                c4 = False
            seen.setdefault(key, u.c)
    return Verdict(canonical, admissible, near_iso, c1, c2, c3, c4)


# -- partial homomorphisms to F_p ----------------------------------------------------


@dataclass(frozen=True)
class Refusal:
    relation: tuple
    elements: tuple

    def describe(self) -> str:
        return " + ".join(f"({k})*{a}" for k, a in zip(self.relation, self.elements) if k) + " = 0"


def _relations(group: AbelianPGroup, S: Sequence[tuple]) -> list:
    """Generators of the integer relations among S modulo p^T Z^S."""
    p = group.p
    T = group.invariants[0]
    rows = []
    for i, e in enumerate(group.invariants):
        scale = p ** (T - e)
        rows.append([(s[i] * scale) % p ** T for s in S])
    gens = zmod.kernel(rows, p, T, len(S)) if S else []
    return [g for g in gens if any(g)]


def extend_partial_hom(group: AbelianPGroup, f0: Mapping[tuple, int]):
    """A homomorphism <S> -> F_p extending f0, as a dict, or a Refusal with a
    relation sum k_i s_i = 0 whose image sum k_i f0(s_i) is nonzero."""
    p = group.p
    S = sorted(set(tuple(s) for s in f0))
    vals = [f0[s] % p for s in S]
    for rel in _relations(group, S):
        if sum(k * v for k, v in zip(rel, vals)) % p:
            return Refusal(tuple(rel), tuple(S))
    out = {group.zero: 0}
    queue = deque([group.zero])
    while queue:
        x = queue.popleft()
        for s, v in zip(S, vals):
            y = group.add(x, s)
            if y not in out:
                out[y] = (out[x] + v) % p
                queue.append(y)
    return out


def glue_homs(group: AbelianPGroup, f: Mapping[tuple, int], g: Mapping[tuple, int]):
    """A homomorphism on <S u T> restricting to f and g, or a Refusal."""
    p = group.p
    merged = dict(f)
    for s, v in g.items():
        if s in merged and (merged[s] - v) % p:
            S = (s, s)
            return Refusal((1, -1), S)
        merged[s] = v
    return extend_partial_hom(group, merged)
