"""Tori over local fields: component groups from cocharacter lattices, and
character groups of truncated unit groups R_n^x."""
from __future__ import annotations

import functools
import itertools
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .dictionary import kernel_structure
from .fgab import (DualStructure, FgAbGroup, FrobModule, Quotient, dual_structure, from_presentation,
                   induced_endomorphism, normalize_factors)
from .intlat import IntMatrix, _factorize, is_unimodular, unimodular_inverse

DEFAULT_UNIT_BOUND = 10 ** 6


class LatticeError(ValueError):
    pass


def _key(M: IntMatrix) -> tuple:
    return M.entries


@dataclass(frozen=True)
class GaloisLattice:
    """Cocharacter lattice Z^rank with inertia generators and a Frobenius."""

    rank: int
    inertia_gens: tuple
    frob: IntMatrix
    inertia_order_bound: int = 1000

    def __post_init__(self):
        if self.rank < 1:
            raise LatticeError("rank must be positive")
        try:
            gens = tuple(g if isinstance(g, IntMatrix) else IntMatrix.from_rows(g, self.rank)
                         for g in self.inertia_gens)
            frob = self.frob if isinstance(self.frob, IntMatrix) else IntMatrix.from_rows(self.frob, self.rank)
        except ValueError as exc:
            raise LatticeError(f"bad matrix: {exc}") from None
        object.__setattr__(self, "inertia_gens", gens)
        object.__setattr__(self, "frob", frob)
        for M in gens + (frob,):
            if (M.rows, M.cols) != (self.rank, self.rank):
                raise LatticeError(f"matrices must be {self.rank}x{self.rank}")
            if not is_unimodular(M):
                raise LatticeError(f"matrix {[list(r) for r in M.entries]} is not invertible over Z")
        closure = self.inertia_closure()
        keys = {_key(g) for g in closure}
        Finv = unimodular_inverse(frob)
        for g in gens:
            if _key(frob @ g @ Finv) not in keys:
                raise LatticeError("frob does not normalize the inertia group")

    def inertia_closure(self) -> list:
        """All elements of the group generated by the inertia generators (BFS)."""
        return _closure(self.inertia_gens, self.rank, self.inertia_order_bound)

    @classmethod
    def from_json(cls, data) -> "GaloisLattice":
        d = int(data["rank"])
        inertia = tuple(IntMatrix.from_json(m) if isinstance(m, dict) else IntMatrix.from_rows(m, d)
                        for m in data.get("inertia", []))
        frob = data.get("frob")
        F = IntMatrix.identity(d) if frob is None else (
            IntMatrix.from_json(frob) if isinstance(frob, dict) else IntMatrix.from_rows(frob, d))
        return cls(d, inertia, F, int(data.get("bound", 1000)))

    def to_json(self) -> dict:
        return {"rank": self.rank, "inertia": [g.to_json() for g in self.inertia_gens],
                "frob": self.frob.to_json(), "bound": self.inertia_order_bound}

    def is_split(self) -> bool:
        I = IntMatrix.identity(self.rank)
        return self.frob == I and all(g == I for g in self.inertia_gens)


def _closure(gens, rank: int, bound: int) -> list:
    I = IntMatrix.identity(rank)
    seen = {_key(I): I}
    queue = deque([I])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = g @ x
            k = _key(y)
            if k not in seen:
                if len(seen) >= bound:
                    raise LatticeError(f"inertia group has more than {bound} elements")
                seen[k] = y
                queue.append(y)
    return [seen[k] for k in sorted(seen)]


def _coinvariant_quotient(rank: int, matrices) -> Quotient:
    I = IntMatrix.identity(rank)
    rel = IntMatrix(rank, 0, ((),) * rank)
    for g in matrices:
        rel = rel.hstack(g - I)
    return from_presentation(rel)


def component_group(L: GaloisLattice) -> FrobModule:
    """pi0 of the Neron model over the residue field: inertia coinvariants with Frobenius."""
    q = _coinvariant_quotient(L.rank, L.inertia_closure())
    return FrobModule(q.group, induced_endomorphism(q, L.frob))


def torus_kernel(L: GaloisLattice) -> DualStructure:
    """Kernel of the trace map on quasicharacter sheaves of the torus."""
    return kernel_structure(component_group(L))


def torus_aut(L: GaloisLattice) -> DualStructure:
    """Automorphisms of any quasicharacter sheaf: dual of the coinvariants under inertia and Frobenius."""
    q = _coinvariant_quotient(L.rank, L.inertia_closure() + [L.frob])
    return dual_structure(q.group)


# ---------------------------------------------------------------- truncated unit groups


@dataclass(frozen=True)
class RingSpec:
    """R_n = R / m^{n+1} for R = Z_p ("p-adic") or F_q[[t]] ("laurent")."""

    kind: str
    q: int
    level: int

    def __post_init__(self):
        if self.kind not in ("p-adic", "laurent"):
            raise ValueError(f"unknown ring kind {self.kind!r}")
        if self.level < 0:
            raise ValueError("level must be >= 0")
        f = _factorize(self.q) if self.q > 1 else {}
        if len(f) != 1:
            raise ValueError(f"{self.q} is not a prime power")
        if self.kind == "p-adic" and list(f.values()) != [1]:
            raise ValueError(f"{self.q} is not prime")

    @property
    def p(self) -> int:
        return next(iter(_factorize(self.q)))

    @property
    def size(self) -> int:
        return self.q ** (self.level + 1)

    def at_level(self, n: int) -> "RingSpec":
        return RingSpec(self.kind, self.q, n)

    @classmethod
    def from_json(cls, data) -> "RingSpec":
        kind = data["kind"]
        q = data.get("p") if kind == "p-adic" else data.get("q", data.get("p"))
        if q is None:
            raise ValueError("ring needs 'p' (p-adic) or 'q' (laurent)")
        return cls(kind, int(q), int(data.get("level", 0)))

    def to_json(self) -> dict:
        key = "p" if self.kind == "p-adic" else "q"
        return {"kind": self.kind, key: self.q, "level": self.level}


@functools.lru_cache(maxsize=32)
def _field_tables(q: int):
    """(add, mul) tables of F_q, elements encoded by base-p digit vectors."""
    p = next(iter(_factorize(q)))
    f = round(math.log(q, p))
    digits = np.array([[(x // p ** i) % p for i in range(f)] for x in range(q)], dtype=np.int64)
    weights = p ** np.arange(f)
    add = ((digits[:, None, :] + digits[None, :, :]) % p) @ weights
    modulus = _irreducible(p, f)

    def mul(a, b):
        prod = [0] * (2 * f - 1)
        for i, u in enumerate(a):
            for j, v in enumerate(b):
                prod[i + j] = (prod[i + j] + u * v) % p
        for k in range(len(prod) - 1, f - 1, -1):
            c = prod[k]
            if c:
                # t^f = -sum modulus[i] t^i (modulus monic of degree f)
                for i in range(f):
                    prod[k - f + i] = (prod[k - f + i] - c * modulus[i]) % p
                prod[k] = 0
        return prod[:f]

    mt = np.array([[int(np.dot(mul(digits[a], digits[b]), weights)) for b in range(q)]
                   for a in range(q)], dtype=np.int64)
    return add, mt


def _irreducible(p: int, f: int) -> tuple:
    """Coefficients c_0..c_{f-1} of the first monic irreducible t^f + ... over F_p."""
    if f == 1:
        return (0,)
    for coeffs in itertools.product(range(p), repeat=f):
        if coeffs[0] == 0:
            continue
        poly = list(coeffs) + [1]
        if not any(_has_factor(poly, g, p) for d in range(1, f // 2 + 1) for g in _monics(p, d)):
            return tuple(coeffs)
    raise AssertionError("no irreducible polynomial found")


def _monics(p: int, d: int):
    for coeffs in itertools.product(range(p), repeat=d):
        yield list(coeffs) + [1]


def _has_factor(poly, g, p) -> bool:
    r = list(poly)
    while len(r) >= len(g):
        c = r[-1]
        shift = len(r) - len(g)
        for i, gi in enumerate(g):
            r[shift + i] = (r[shift + i] - c * gi) % p
        r.pop()
    return not any(r)


def _units(R: RingSpec, bound: int):
    """(elements, multiply) for R_n^x, elements as rows of an integer array."""
    if R.size > bound:
        raise ValueError(f"|R_n| = {R.size} exceeds the bound {bound}")
    n1 = R.level + 1
    if R.kind == "p-adic":
        mod = R.q ** n1
        els = np.array([x for x in range(mod) if x % R.q], dtype=np.int64)[:, None]

        def mul(X, Y):
            return X * Y % mod
        return els, mul
    add, mt = _field_tables(R.q)
    allc = np.array(list(itertools.product(range(R.q), repeat=n1)), dtype=np.int64)
    els = allc[allc[:, 0] != 0]

    def mul(X, Y):
        out = np.zeros_like(X)
        for i in range(n1):
            for j in range(n1 - i):
                out[:, i + j] = add[out[:, i + j], mt[X[:, i], Y[:, j]]]
        return out
    return els, mul


def _power(X, e: int, mul, one):
    result = np.broadcast_to(one, X.shape).copy()
    base = X.copy()
    while e:
        if e & 1:
            result = mul(result, base)
        base = mul(base, base)
        e >>= 1
    return result


def _one(R: RingSpec) -> np.ndarray:
    if R.kind == "p-adic":
        return np.array([1], dtype=np.int64)
    v = np.zeros(R.level + 1, dtype=np.int64)
    v[0] = 1
    return v


def truncated_units(R: RingSpec, bound: int = DEFAULT_UNIT_BOUND) -> FgAbGroup:
    """Invariant factors of R_n^x from the sizes of its p^j-torsion subgroups."""
    els, mul = _units(R, bound)
    N = len(els)
    one = _one(R)
    factors = []
    for p, e in sorted(_factorize(N).items()):
        counts = [1]
        X = els
        for _ in range(e):
            X = _power(X, p, mul, one)
            counts.append(int(np.sum(np.all(X == one, axis=1))))
        # counts[j] = |{x : x^(p^j) = 1}| = p^(sum_i min(e_i, j))
        ranks = [round(math.log(counts[j + 1] // counts[j], p)) for j in range(len(counts) - 1)]
        for j, r in enumerate(ranks):
            nxt = ranks[j + 1] if j + 1 < len(ranks) else 0
            factors += [p ** (j + 1)] * (r - nxt)
    return normalize_factors(factors).group


def _torsion_counts_direct(R: RingSpec, bound: int = DEFAULT_UNIT_BOUND) -> dict:
    """Element-order histogram of R_n^x (used as an independent check)."""
    els, mul = _units(R, bound)
    one = _one(R)
    orders = np.zeros(len(els), dtype=np.int64)
    X = els.copy()
    k = 1
    pending = np.ones(len(els), dtype=bool)
    while pending.any():
        hit = pending & np.all(X == one, axis=1)
        orders[hit] = k
        pending &= ~hit
        X = mul(X, els)
        k += 1
    vals, cnt = np.unique(orders, return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, cnt)}


def quasicharacter_count(L: GaloisLattice, R: RingSpec, bound: int = DEFAULT_UNIT_BOUND):
    """(order, structure) of the level-n characters of T(K) for a split torus."""
    if not L.is_split():
        raise LatticeError("quasicharacter counting is only available for split tori")
    U = truncated_units(R, bound)
    G = normalize_factors(list(U.factors) * L.rank).group
    return G.order, dual_structure(G)


def _reduction(R: RingSpec, n: int, els: np.ndarray) -> np.ndarray:
    if R.kind == "p-adic":
        return els % (R.q ** (n + 1))
    return els[:, :n + 1]


def level_system_check(R: RingSpec, n: int, m: int, bound: int = DEFAULT_UNIT_BOUND) -> dict:
    """Check R_m^x -> R_n^x is onto with kernel of order q^(m-n); dually Hom_n embeds in Hom_m."""
    if not 0 <= n <= m:
        raise ValueError("levels must satisfy 0 <= n <= m")
    Rm, Rn = R.at_level(m), R.at_level(n)
    els_m, _ = _units(Rm, bound)
    els_n, _ = _units(Rn, bound)
    img = _reduction(R, n, els_m)
    image = {tuple(r) for r in img.tolist()}
    target = {tuple(r) for r in els_n.tolist()}
    one = _one(Rn)
    kernel_order = int(np.sum(np.all(img == one, axis=1)))
    Um, Un = truncated_units(Rm, bound), truncated_units(Rn, bound)
    expected = R.q ** (m - n)
    return {
        "ring": R.at_level(m).to_json(),
        "levels": [n, m],
        "surjective": image == target,
        "kernel_order": kernel_order,
        "expected_kernel_order": expected,
        "kernel_ok": kernel_order == expected,
        "units": [Un.order, Um.order],
        "dual_embeds": Um.order == Un.order * kernel_order and _is_quotient_shape(Um, Un),
    }


def _is_quotient_shape(G: FgAbGroup, H: FgAbGroup) -> bool:
    """Necessary condition for H to be a quotient of G: its p-ranks are no larger."""
    for p in _factorize(max(H.order, 1)):
        rg = sum(1 for d in G.factors if d % p == 0)
        rh = sum(1 for d in H.factors if d % p == 0)
        if rh > rg:
            return False
    return True
