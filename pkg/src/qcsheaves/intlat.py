"""Exact integer linear algebra and arithmetic in Q/Z.

Everything else in the package reduces to three primitives defined here:

* ``QZ``, a reduced fraction in [0, 1) written additively;
* ``smith_normal_form`` with unimodular transforms (and their inverses);
* ``solve_qz``, which solves ``M * delta = r`` over the divisible group Q/Z.

``kernel_mod`` is the one numpy routine: it returns generators of the kernel
of an integer matrix modulo L, used to enumerate cocycles of large systems.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class QZ:
    """An element of Q/Z, stored as num/den with 0 <= num < den, gcd = 1."""

    __slots__ = ("num", "den")

    def __init__(self, num: int = 0, den: int = 1):
        if den <= 0:
            if den == 0:
                raise ZeroDivisionError("QZ denominator must be positive")
            num, den = -num, -den
        num %= den
        g = math.gcd(num, den)
        object.__setattr__(self, "num", num // g)
        object.__setattr__(self, "den", den // g)

    def __setattr__(self, name, value):
        raise AttributeError("QZ is immutable")

    @classmethod
    def parse(cls, text) -> "QZ":
        if isinstance(text, QZ):
            return text
        if isinstance(text, int):
            return cls(text, 1)
        if isinstance(text, Fraction):
            return cls(text.numerator, text.denominator)
        s = str(text).strip()
        if "/" in s:
            n, d = s.split("/", 1)
            return cls(int(n), int(d))
        return cls(int(s), 1)

    def __add__(self, other: "QZ") -> "QZ":
        return QZ(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other: "QZ") -> "QZ":
        return QZ(self.num * other.den - other.num * self.den, self.den * other.den)

    def __neg__(self) -> "QZ":
        return QZ(-self.num, self.den)

    def __mul__(self, k: int) -> "QZ":
        if not isinstance(k, int):
            return NotImplemented
        return QZ(self.num * k, self.den)

    __rmul__ = __mul__

    def divide(self, k: int) -> "QZ":
        """One preimage of self under multiplication by the nonzero integer k."""
        if k == 0:
            raise ZeroDivisionError("cannot divide in Q/Z by 0")
        return QZ(self.num, self.den * k)

    def is_zero(self) -> bool:
        return self.num == 0

    def order(self) -> int:
        return self.den

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = QZ(other)
        if not isinstance(other, QZ):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __lt__(self, other: "QZ") -> bool:
        return self.num * other.den < other.num * self.den

    def __repr__(self) -> str:
        return f"QZ({self.num}/{self.den})"

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"


ZERO = QZ(0, 1)


def qz_sum(values: Iterable[QZ]) -> QZ:
    num, den = 0, 1
    for v in values:
        num = num * v.den + v.num * den
        den *= v.den
        g = math.gcd(num, den)
        num //= g
        den //= g
    return QZ(num, den)


def qz_dot(row: Sequence[int], values: Sequence[QZ]) -> QZ:
    num, den = 0, 1
    for c, v in zip(row, values):
        if c and v.num:
            num = num * v.den + c * v.num * den
            den *= v.den
            g = math.gcd(num, den)
            num //= g
            den //= g
    return QZ(num, den)


def common_level(values: Iterable[QZ]) -> int:
    level = 1
    for v in values:
        level = math.lcm(level, v.den)
    return level


# ---------------------------------------------------------------- matrices


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entry count must equal rows * cols")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        rows = tuple(tuple(int(x) for x in r) for r in rows)
        if cols is None:
            cols = len(rows[0]) if rows else 0
        return cls(len(rows), cols, rows)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], rows: int) -> "IntMatrix":
        columns = [tuple(c) for c in columns]
        return cls(rows, len(columns), tuple(tuple(c[i] for c in columns) for i in range(rows)))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def diagonal(cls, diag: Sequence[int]) -> "IntMatrix":
        n = len(diag)
        return cls(n, n, tuple(tuple(diag[i] if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def from_json(cls, data) -> "IntMatrix":
        if isinstance(data, dict):
            m = cls.from_rows(data["entries"], data.get("cols"))
            if m.rows != data.get("rows", m.rows):
                raise ValueError("matrix 'rows' disagrees with its entries")
            return m
        return cls.from_rows(data)

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "entries": [list(r) for r in self.entries]}

    def column(self, j: int) -> tuple:
        return tuple(r[j] for r in self.entries)

    def columns(self) -> list:
        if not self.rows:
            return [()] * self.cols
        return list(zip(*self.entries))

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows, tuple(self.columns()))

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            if self.cols != other.rows:
                raise ValueError("dimension mismatch")
            if self.rows and self.cols and other.cols:
                fast = _small_product(self.entries, other.entries, self.cols)
                if fast is not None:
                    return IntMatrix(self.rows, other.cols, fast)
            ocols = other.columns()
            return IntMatrix(self.rows, other.cols, tuple(
                tuple(sum(a * b for a, b in zip(r, c)) for c in ocols) for r in self.entries))
        vec = tuple(other)
        if len(vec) != self.cols:
            raise ValueError("dimension mismatch")
        return tuple(sum(a * b for a, b in zip(r, vec)) for r in self.entries)

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(
            tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(
            tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)))

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(tuple(-a for a in r) for r in self.entries))

    def hstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.rows != other.rows:
            raise ValueError("row mismatch")
        return IntMatrix(self.rows, self.cols + other.cols,
                         tuple(r + s for r, s in zip(self.entries, other.entries)))

    def vstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.cols:
            raise ValueError("column mismatch")
        return IntMatrix(self.rows + other.rows, self.cols, self.entries + other.entries)

    def apply_qz(self, values: Sequence[QZ]) -> list:
        return [qz_dot(r, values) for r in self.entries]

    def is_zero(self) -> bool:
        return all(not x for r in self.entries for x in r)

    def __repr__(self) -> str:
        return f"IntMatrix({[list(r) for r in self.entries]})"


def _max_abs(entries) -> int:
    return max((abs(v) for r in entries for v in r), default=0)


def _small_product(A, B, inner: int):
    """A @ B through int64 when no intermediate can overflow, else None."""
    if _max_abs(A) * _max_abs(B) * inner >= 2 ** 62:
        return None
    P = np.array(A, dtype=np.int64) @ np.array(B, dtype=np.int64)
    return tuple(tuple(r) for r in P.tolist())


@dataclass(frozen=True)
class SmithDecomposition:
    """U * M * V = S with U, V unimodular; U_inv, V_inv are their inverses."""

    U: IntMatrix
    S: IntMatrix
    V: IntMatrix
    diag: tuple
    U_inv: IntMatrix
    V_inv: IntMatrix

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diag if d)


def _identity_rows(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


@functools.lru_cache(maxsize=512)
def smith_normal_form(M: IntMatrix) -> SmithDecomposition:
    m, n = M.rows, M.cols
    A = [list(r) for r in M.entries]
    U, Ui = _identity_rows(m), _identity_rows(m)
    V, Vi = _identity_rows(n), _identity_rows(n)

    def swap_rows(i, j):
        if i == j:
            return
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]
        for r in Ui:
            r[i], r[j] = r[j], r[i]

    def swap_cols(i, j):
        if i == j:
            return
        for r in A:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    def add_row(dst, src, q):
        # row_dst += q * row_src
        ra, rs = A[dst], A[src]
        for k in range(n):
            if rs[k]:
                ra[k] += q * rs[k]
        ru, rus = U[dst], U[src]
        for k in range(m):
            if rus[k]:
                ru[k] += q * rus[k]
        for r in Ui:
            if r[dst]:
                r[src] -= q * r[dst]

    def add_col(dst, src, q):
        # col_dst += q * col_src
        for r in A:
            if r[src]:
                r[dst] += q * r[src]
        for r in V:
            if r[src]:
                r[dst] += q * r[src]
        rv, rvd = Vi[src], Vi[dst]
        for k in range(n):
            if rvd[k]:
                rv[k] -= q * rvd[k]

    def negate_row(i):
        A[i] = [-x for x in A[i]]
        U[i] = [-x for x in U[i]]
        for r in Ui:
            r[i] = -r[i]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                x = row[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        swap_rows(t, best[1])
        swap_cols(t, best[2])
        while True:
            p = A[t][t]
            dirty = False
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
                    if A[i][t]:
                        dirty = True
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
                    if A[t][j]:
                        dirty = True
            if dirty:
                # a smaller remainder appeared in row/column t; move it to the pivot
                cand = [(abs(A[i][t]), i, t) for i in range(t + 1, m) if A[i][t]]
                cand += [(abs(A[t][j]), t, j) for j in range(t + 1, n) if A[t][j]]
                _, i, j = min(cand)
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            negate_row(t)
        t += 1

    diag = tuple(A[i][i] for i in range(min(m, n)))
    return SmithDecomposition(
        U=IntMatrix(m, m, tuple(map(tuple, U))),
        S=IntMatrix(m, n, tuple(map(tuple, A))),
        V=IntMatrix(n, n, tuple(map(tuple, V))),
        diag=diag,
        U_inv=IntMatrix(m, m, tuple(map(tuple, Ui))),
        V_inv=IntMatrix(n, n, tuple(map(tuple, Vi))),
    )


def is_unimodular(M: IntMatrix) -> bool:
    if M.rows != M.cols:
        return False
    return all(d == 1 for d in smith_normal_form(M).diag)


def unimodular_inverse(M: IntMatrix) -> IntMatrix:
    dec = smith_normal_form(M)
    if M.rows != M.cols or any(d != 1 for d in dec.diag):
        raise ValueError("matrix is not invertible over the integers")
    # U M V = I  =>  M^-1 = V U
    return dec.V @ dec.U


# ---------------------------------------------------------------- Q/Z systems


def _transformed_rhs(dec: SmithDecomposition, r: Sequence[QZ]) -> list:
    return dec.U.apply_qz(r)


def solve_qz(M: IntMatrix, r: Sequence[QZ]) -> list | None:
    """Solve M * delta = r in (Q/Z)^rows; None when no solution exists.

    Q/Z is divisible, so after the Smith transform the diagonal system
    s_i * y_i = r'_i is solvable iff r'_i = 0 wherever s_i = 0.
    """
    r = [QZ.parse(x) for x in r]
    if len(r) != M.rows:
        raise ValueError("right-hand side length must equal the number of rows")
    dec = smith_normal_form(M)
    rp = _transformed_rhs(dec, r)
    y = [ZERO] * M.cols
    for i, value in enumerate(rp):
        s = dec.diag[i] if i < len(dec.diag) else 0
        if s:
            y[i] = value.divide(s)
        elif not value.is_zero():
            return None
    return dec.V.apply_qz(y)


def qz_obstruction(M: IntMatrix, r: Sequence[QZ]):
    """Certificate that M * delta = r has no solution.

    Returns (row_index, u) where u is an integer row vector with u * M = 0 and
    u . r != 0 in Q/Z, or None if the system is solvable.
    """
    r = [QZ.parse(x) for x in r]
    dec = smith_normal_form(M)
    rp = _transformed_rhs(dec, r)
    for i, value in enumerate(rp):
        s = dec.diag[i] if i < len(dec.diag) else 0
        if not s and not value.is_zero():
            return i, dec.U.entries[i]
    return None


class QZCokernel:
    """Complete invariant of (Q/Z)^rows modulo the image of M.

    key(r) == key(r') iff r - r' lies in M * (Q/Z)^cols.
    """

    def __init__(self, M: IntMatrix):
        self.matrix = M
        dec = smith_normal_form(M)
        self.rows = [dec.U.entries[i] for i in range(M.rows)
                     if i >= len(dec.diag) or dec.diag[i] == 0]
        self._cache = {}

    def key(self, r: Sequence[QZ]) -> tuple:
        return tuple(qz_dot(u, r) for u in self.rows)

    def keys_at_level(self, vectors: np.ndarray, level: int) -> np.ndarray:
        """Keys of the vectors v/level (one per row of ``vectors``), as integers mod level."""
        if not self.rows:
            return np.zeros((len(vectors), 0), dtype=np.int64)
        return (np.asarray(vectors, dtype=np.int64) % level) @ self._reduced(level).T % level

    def _reduced(self, level: int) -> np.ndarray:
        if level not in self._cache:
            U = np.array(self.rows, dtype=object)
            self._cache[level] = np.array((U % level).tolist(), dtype=np.int64)
        return self._cache[level]


# ---------------------------------------------------------------- modular kernels


def _factorize(n: int) -> dict:
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _min_valuation(W: np.ndarray, p: int, k: int):
    """Position and p-adic valuation of an entry of minimal valuation (W nonzero)."""
    pk = 1
    for v in range(k):
        mask = (W % (pk * p) != 0).ravel()
        flat = int(np.argmax(mask))
        if mask[flat]:
            return flat // W.shape[1], flat % W.shape[1], v
        pk *= p
    raise AssertionError("matrix has no nonzero entry")


def _kernel_prime_power(M: np.ndarray, p: int, k: int) -> np.ndarray:
    q = p ** k
    n = M.shape[1]
    W = (M % q).astype(np.int32)
    W = W[W.any(axis=1)]
    if len(W):
        W = np.unique(W, axis=0)
    V = np.eye(n, dtype=np.int64)
    vals = []
    t = 0
    while W.size and t < n:
        W = W[W.any(axis=1)]
        if not len(W):
            break
        i, j, v = _min_valuation(W, p, k)
        if j:
            W[:, [0, j]] = W[:, [j, 0]]
            V[:, [t, t + j]] = V[:, [t + j, t]]
        pv = p ** v
        inv = pow(int(W[i, 0]) // pv, -1, q)
        W[:, 0] = W[:, 0] * inv % q
        V[:, t] = V[:, t] * inv % q
        f = W[:, 0] // pv
        f[i] = 0
        if f.any():
            W = (W - np.outer(f, W[i])) % q
        g = W[i, 1:] // pv
        if g.any():
            V[:, t + 1:] = (V[:, t + 1:] - np.outer(V[:, t], g)) % q
        # the pivot row is now p^v e_0; drop it together with column 0
        W = np.delete(W, i, axis=0)[:, 1:]
        vals.append(v)
        t += 1
    gens = []
    for i, v in enumerate(vals):
        if v > 0:
            gens.append(V[:, i] * p ** (k - v) % q)
    for i in range(len(vals), n):
        gens.append(V[:, i] % q)
    if not gens:
        return np.zeros((0, n), dtype=np.int64)
    return np.array(gens, dtype=np.int64)


def _kernel_in_blocks(M: np.ndarray, p: int, k: int, block: int = 256) -> np.ndarray:
    """Kernel mod p^k of a tall matrix, a block of rows at a time.

    After each block the remaining rows are rewritten in terms of the current
    kernel generators, so later eliminations work on few columns.
    """
    q = p ** k
    n = M.shape[1]
    if M.shape[0] <= block:
        return _kernel_prime_power(M, p, k)
    gens = np.eye(n, dtype=np.int64)
    for start in range(0, M.shape[0], block):
        rows = M[start:start + block] % q
        B = rows @ gens.T % q
        if not B.any():
            continue
        C = _kernel_prime_power(B, p, k)
        if not len(C):
            return np.zeros((0, n), dtype=np.int64)
        gens = C @ gens % q
    return gens


def kernel_mod(M, level: int) -> np.ndarray:
    """Generators (as rows) of {x in (Z/level)^cols : M x = 0 mod level}."""
    A = np.asarray(M.entries if isinstance(M, IntMatrix) else M, dtype=np.int64)
    if A.ndim != 2:
        A = A.reshape(0, 0)
    n = A.shape[1]
    out = []
    for p, k in sorted(_factorize(level).items()):
        q = p ** k
        cof = level // q
        lift = cof * pow(cof, -1, q) % level
        gens = _kernel_in_blocks(A, p, k)
        if len(gens):
            out.append(gens * lift % level)
    if not out:
        return np.zeros((0, n), dtype=np.int64)
    return np.vstack(out)
