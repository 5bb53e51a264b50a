"""Linear algebra over Z/p^T.

Matrices are lists of rows of Python ints; generator sets are lists of
column vectors. Everything is exact and reduced into [0, p^T).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

Matrix = list
Vector = list


def valuation(x: int, p: int, cap: int) -> int:
    """p-adic valuation of x, capped at ``cap`` (used for zero mod p^cap)."""
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


def identity(n: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def zeros(m: int, n: int) -> Matrix:
    return [[0] * n for _ in range(m)]


def matmul(a: Matrix, b: Matrix, mod: int) -> Matrix:
    if not a:
        return []
    cols = len(b[0]) if b else 0
    bt = list(zip(*b)) if b else []
    out = []
    for row in a:
        nz = [(k, x) for k, x in enumerate(row) if x]
        out.append([sum(x * bt[j][k] for k, x in nz) % mod for j in range(cols)])
    return out


def matvec(a: Matrix, v: Sequence[int], mod: int) -> Vector:
    return [sum(x * y for x, y in zip(row, v)) % mod for row in a]


def transpose(a: Matrix) -> Matrix:
    return [list(r) for r in zip(*a)]


def columns_to_matrix(cols: Sequence[Sequence[int]], nrows: int) -> Matrix:
    if not cols:
        return [[] for _ in range(nrows)]
    return [[c[i] for c in cols] for i in range(nrows)]


def matrix_columns(a: Matrix, ncols: int) -> list:
    return [[row[j] for row in a] for j in range(ncols)]


def block_matrix(blocks: list, row_sizes: Sequence[int], col_sizes: Sequence[int]) -> Matrix:
    """Assemble from a grid of blocks; ``None`` entries are zero blocks."""
    out = []
    for bi, rs in enumerate(row_sizes):
        for r in range(rs):
            row = []
            for bj, cs in enumerate(col_sizes):
                blk = blocks[bi][bj]
                row.extend(blk[r] if blk is not None else [0] * cs)
            out.append(row)
    return out


def unit_inverse(u: int, mod: int) -> int:
    return pow(u, -1, mod)


@dataclass
class SmithForm:
    """U @ A @ V = diag(p^vals[0], ..., p^vals[rank-1], 0, ...) mod p^T."""

    U: Matrix
    V: Matrix
    vals: list
    nrows: int
    ncols: int

    @property
    def rank(self) -> int:
        return len(self.vals)


def smith(a: Matrix, p: int, T: int, ncols: int | None = None, transforms: bool = True) -> SmithForm:
    mod = p ** T
    m = len(a)
    n = ncols if ncols is not None else (len(a[0]) if a else 0)
    A = [[x % mod for x in row] for row in a]
    U = identity(m) if transforms else None
    V = identity(n) if transforms else None
    vals = []
    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                x = row[j]
                if x:
                    v = valuation(x, p, T)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, i, j = best
        if i != t:
            A[t], A[i] = A[i], A[t]
            if transforms:
                U[t], U[i] = U[i], U[t]
        if j != t:
            for row in A:
                row[t], row[j] = row[j], row[t]
            if transforms:
                for row in V:
                    row[t], row[j] = row[j], row[t]
        pv = p ** v
        u_inv = unit_inverse(A[t][t] // pv, mod)
        if u_inv != 1:
            A[t] = [x * u_inv % mod for x in A[t]]
            if transforms:
                U[t] = [x * u_inv % mod for x in U[t]]
        rowt = A[t]
        for i2 in range(t + 1, m):
            x = A[i2][t]
            if x:
                f = x // pv
                A[i2] = [(y - f * z) % mod for y, z in zip(A[i2], rowt)]
                if transforms:
                    U[i2] = [(y - f * z) % mod for y, z in zip(U[i2], U[t])]
        for j2 in range(t + 1, n):
            x = rowt[j2]
            if x:
                f = x // pv
                for row in A:
                    if row[t]:
                        row[j2] = (row[j2] - f * row[t]) % mod
                if transforms:
                    for row in V:
                        if row[t]:
                            row[j2] = (row[j2] - f * row[t]) % mod
        vals.append(v)
        t += 1
    return SmithForm(U, V, vals, m, n)


def kernel(a: Matrix, p: int, T: int, ncols: int) -> list:
    """Generators of {x : A x = 0 mod p^T}."""
    sf = smith(a, p, T, ncols)
    gens = []
    for i in range(ncols):
        col = [row[i] for row in sf.V]
        if i < sf.rank:
            scale = p ** (T - sf.vals[i])
            col = [c * scale % p ** T for c in col]
            if not any(col):
                continue
        gens.append(col)
    return gens


def span_order(gens: Sequence[Sequence[int]], p: int, T: int, dim: int) -> int:
    """Order of the submodule of (Z/p^T)^dim generated by gens."""
    if not gens:
        return 1
    sf = smith(columns_to_matrix(gens, dim), p, T, len(gens), transforms=False)
    out = 1
    for v in sf.vals:
        out *= p ** (T - v)
    return out


def span_log_order(gens, p, T, dim) -> int:
    """log_p of span_order."""
    if not gens:
        return 0
    sf = smith(columns_to_matrix(gens, dim), p, T, len(gens), transforms=False)
    return sum(T - v for v in sf.vals)


def reduce_generators(gens: Sequence[Sequence[int]], p: int, T: int, dim: int) -> list:
    """A generating set of size at most dim for the same submodule."""
    if len(gens) <= dim:
        return [list(g) for g in gens if any(g)]
    mat = columns_to_matrix(gens, dim)
    sf = smith(mat, p, T, len(gens))
    # columns of A V give U^{-1} diag; the first rank of them generate
    av = matmul(mat, sf.V, p ** T)
    return [c for c in matrix_columns(av, len(gens))[: sf.rank] if any(c)]


def preimage(a: Matrix, target: Sequence[Sequence[int]], p: int, T: int, ncols: int) -> list:
    """Generators of {x : A x in span(target)}."""
    aug = [list(row) + [(-t[i]) % p ** T for t in target] for i, row in enumerate(a)]
    ker = kernel(aug, p, T, ncols + len(target))
    out = [k[:ncols] for k in ker]
    return [v for v in out if any(v)]


def restricted_preimage(a: Matrix, source: Sequence[Sequence[int]], target: Sequence[Sequence[int]], p: int, T: int, dim: int) -> list:
    """Generators of {x in span(source) : A x in span(target)}."""
    mod = p ** T
    if not source:
        return []
    images = [matvec(a, s, mod) for s in source]
    m = len(a)
    aug = [[img[i] for img in images] + [(-t[i]) % mod for t in target] for i in range(m)]
    ker = kernel(aug, p, T, len(source) + len(target))
    out = []
    for k in ker:
        coeffs = k[: len(source)]
        v = [0] * dim
        for c, s in zip(coeffs, source):
            if c:
                for i, x in enumerate(s):
                    v[i] += c * x
        v = [x % mod for x in v]
        if any(v):
            out.append(v)
    return reduce_generators(out, p, T, dim)


def intersection(s1, s2, p: int, T: int, dim: int) -> list:
    return restricted_preimage(identity(dim), s1, s2, p, T, dim)


def contains(gens, vec, p: int, T: int, dim: int) -> bool:
    return span_log_order(list(gens) + [list(vec)], p, T, dim) == span_log_order(gens, p, T, dim)


@dataclass
class Quotient:
    """span(top) / span(bottom) with span(bottom) inside span(top)."""

    invariants: list
    order: int
    basis: list

    @property
    def log_order(self) -> int:
        return sum(self.invariants)


def quotient(top, bottom, p: int, T: int, dim: int) -> Quotient:
    """Invariant factors (as exponents) and lifted generators of top/bottom."""
    mod = p ** T
    top = [list(t) for t in top if any(t)]
    if not top:
        return Quotient([], 1, [])
    a = len(top)
    aug = [[t[i] for t in top] + [(-b[i]) % mod for b in bottom] for i in range(dim)]
    rel = [k[:a] for k in kernel(aug, p, T, a + len(bottom))]
    rel = [r for r in rel if any(r)]
    # quotient = (Z/p^T)^a / span(rel)
    if rel:
        sf = smith(columns_to_matrix(rel, a), p, T, len(rel))
        U, vals = sf.U, sf.vals
    else:
        U, vals = identity(a), []
    exps = [vals[i] if i < len(vals) else T for i in range(a)]
    # new coordinates y = U c, so basis vectors are columns of U^{-1}
    uinv = inverse(U, p, T)
    invariants, basis = [], []
    topm = columns_to_matrix(top, dim)
    for i, e in enumerate(exps):
        if e == 0:
            continue
        coeff = [row[i] for row in uinv]
        invariants.append(e)
        basis.append(matvec(topm, coeff, mod))
    order = p ** sum(invariants)
    return Quotient(invariants, order, basis)


def inverse(a: Matrix, p: int, T: int) -> Matrix:
    """Inverse of a square matrix invertible mod p^T (Gauss-Jordan)."""
    mod = p ** T
    n = len(a)
    aug = [[x % mod for x in row] + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(a)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] % p), None)
        if piv is None:
            raise ValueError("matrix not invertible mod p")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = unit_inverse(aug[c][c], mod)
        aug[c] = [x * inv % mod for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [(x - f * y) % mod for x, y in zip(aug[r], aug[c])]
    return [row[n:] for row in aug]


def solve(a: Matrix, b: Sequence[int], p: int, T: int, ncols: int):
    """One solution x of A x = b mod p^T, or None."""
    mod = p ** T
    aug = [list(row) + [(-b[i]) % mod] for i, row in enumerate(a)]
    for k in kernel(aug, p, T, ncols + 1):
        last = k[ncols]
        if last % p:
            inv = unit_inverse(last, mod)
            return [x * inv % mod for x in k[:ncols]]
    # last coordinates of the kernel form an ideal; it is the unit ideal
    # exactly when some generator already has a unit there
    return None
