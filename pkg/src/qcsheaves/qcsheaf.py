"""Quasicharacter sheaves on finite étale models as cocycle pairs (a, b).

With one basis vector per stalk, the multiplicativity isomorphism and the
Frobenius structure become scalar tables, written additively in Q/Z:

    a(x+y, z) + a(x, y) = a(x, y+z) + a(y, z)                (cocycle)
    a(Fx, Fy) - a(x, y) = b(x+y) - b(x) - b(y)               (compatibility)

Changing basis by v'_x = exp(2 pi i delta(x)) v_x replaces (a, b) with

    a'(x, y) = a(x, y) + delta(x) + delta(y) - delta(x+y)
    b'(x)    = b(x) + delta(x) - delta(Fx)

and two models are isomorphic exactly when such a delta exists.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .etale import EtaleGroupModel, EtaleHom, base_change, fixed_points, product_maps
from .fgab import FrobModule, characters, coinvariants, evaluate, extend_character
from .intlat import (QZ, ZERO, IntMatrix, QZCokernel, common_level, kernel_mod, qz_obstruction,
                     solve_qz)


class BaseMismatch(ValueError):
    pass


def _qz_table(values, level: int) -> tuple:
    return tuple(QZ(int(v), level) for v in np.asarray(values).ravel())


@dataclass(frozen=True)
class QCSheafModel:
    """Tables a (flattened, index i*n + j) and b over the elements of base."""

    base: EtaleGroupModel
    a: tuple
    b: tuple

    def __post_init__(self):
        n = self.base.order
        a = tuple(QZ.parse(v) for v in self.a)
        b = tuple(QZ.parse(v) for v in self.b)
        if len(a) != n * n or len(b) != n:
            raise ValueError(f"tables must have {n * n} and {n} entries")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_functions(cls, base: EtaleGroupModel, a: Callable, b: Callable) -> "QCSheafModel":
        els = base.elements
        return cls(base, tuple(QZ.parse(a(x, y)) for x in els for y in els),
                   tuple(QZ.parse(b(x)) for x in els))

    @classmethod
    def from_level_arrays(cls, base: EtaleGroupModel, level: int, A, B) -> "QCSheafModel":
        return cls(base, _qz_table(np.asarray(A) % level, level), _qz_table(np.asarray(B) % level, level))

    def a_at(self, x, y) -> QZ:
        n = self.base.order
        return self.a[self.base.index(x) * n + self.base.index(y)]

    def b_at(self, x) -> QZ:
        return self.b[self.base.index(x)]

    @cached_property
    def level(self) -> int:
        return common_level(self.a + self.b)

    @cached_property
    def arrays(self):
        """(L, A, B): the tables as integers mod L = common denominator."""
        L = self.level
        n = self.base.order
        A = np.array([v.num * (L // v.den) for v in self.a], dtype=np.int64).reshape(n, n)
        B = np.array([v.num * (L // v.den) for v in self.b], dtype=np.int64)
        return L, A, B

    def vector(self) -> list:
        return list(self.a) + list(self.b)

    def to_json(self) -> dict:
        els = self.base.elements
        n = len(els)
        key = _element_key
        return {
            "base": self.base.to_json(),
            "a": {key(x) + ("," if x and y else "") + key(y): str(self.a[i * n + j])
                  for i, x in enumerate(els) for j, y in enumerate(els)},
            "b": {key(x): str(self.b[i]) for i, x in enumerate(els)},
        }

    @classmethod
    def from_json(cls, data) -> "QCSheafModel":
        base = data["base"] if isinstance(data["base"], EtaleGroupModel) else EtaleGroupModel.from_json(data["base"])
        k = base.points.ngens
        n = base.order
        a = [None] * (n * n)
        for key, val in data["a"].items():
            coords = _parse_key(key)
            if len(coords) != 2 * k:
                raise ValueError(f"bad table key {key!r} for a group with {k} generators")
            a[base.index(coords[:k]) * n + base.index(coords[k:])] = QZ.parse(val)
        b = [None] * n
        for key, val in data["b"].items():
            coords = _parse_key(key)
            if len(coords) != k:
                raise ValueError(f"bad table key {key!r} for a group with {k} generators")
            b[base.index(coords)] = QZ.parse(val)
        if any(v is None for v in a) or any(v is None for v in b):
            raise ValueError("sheaf tables must be total on A x A and A")
        return cls(base, tuple(a), tuple(b))


def _element_key(x) -> str:
    return ",".join(str(v) for v in x)


def _parse_key(key: str) -> list:
    return [int(t) for t in str(key).split(",") if t.strip() != ""]


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    equation: str
    witness: tuple
    lhs: QZ
    rhs: QZ

    def to_json(self) -> dict:
        return {"equation": self.equation, "witness": [list(w) for w in self.witness],
                "lhs": str(self.lhs), "rhs": str(self.rhs)}


def validate(Q: QCSheafModel, limit: int = 20) -> list:
    """Violated cocycle / compatibility equations with witnesses (empty iff valid)."""
    E = Q.base
    L, A, B = Q.arrays
    add, F = E.add_table, E.frob_index
    els = E.elements
    out = []
    lhs = (A[add, :] + A[:, :, None]) % L                  # a(x+y, z) + a(x, y)
    rhs = (A[:, add] + A[None, :, :]) % L                  # a(x, y+z) + a(y, z)
    for x, y, z in np.argwhere(lhs != rhs)[:limit]:
        out.append(Violation("cocycle", (els[x], els[y], els[z]),
                             QZ(int(lhs[x, y, z]), L), QZ(int(rhs[x, y, z]), L)))
    lhs2 = (A[F][:, F] - A) % L                            # a(Fx, Fy) - a(x, y)
    rhs2 = (B[add] - B[:, None] - B[None, :]) % L          # b(x+y) - b(x) - b(y)
    for x, y in np.argwhere(lhs2 != rhs2)[:limit]:
        out.append(Violation("compatibility", (els[x], els[y]),
                             QZ(int(lhs2[x, y]), L), QZ(int(rhs2[x, y]), L)))
    return out


def is_valid(Q: QCSheafModel) -> bool:
    return not validate(Q, limit=1)


# ---------------------------------------------------------------- linear systems


@functools.lru_cache(maxsize=64)
def sheaf_equation_matrix(E: EtaleGroupModel) -> np.ndarray:
    """Integer matrix whose kernel over Q/Z is the set of valid (a, b) vectors."""
    n = E.order
    add, F = E.add_table, E.frob_index
    x, y, z = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    x, y, z = x.ravel(), y.ravel(), z.ravel()
    M = np.zeros((n ** 3 + n ** 2, n * n + n), dtype=np.int64)
    rows = np.arange(n ** 3)
    np.add.at(M, (rows, add[x, y] * n + z), 1)
    np.add.at(M, (rows, x * n + y), 1)
    np.add.at(M, (rows, x * n + add[y, z]), -1)
    np.add.at(M, (rows, y * n + z), -1)
    u, v = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    u, v = u.ravel(), v.ravel()
    rows = n ** 3 + np.arange(n * n)
    np.add.at(M, (rows, F[u] * n + F[v]), 1)
    np.add.at(M, (rows, u * n + v), -1)
    np.add.at(M, (rows, n * n + add[u, v]), -1)
    np.add.at(M, (rows, n * n + u), 1)
    np.add.at(M, (rows, n * n + v), 1)
    return M


@functools.lru_cache(maxsize=64)
def coboundary_matrix(E: EtaleGroupModel) -> IntMatrix:
    """delta -> (delta(x) + delta(y) - delta(x+y), delta(x) - delta(Fx))."""
    n = E.order
    add, F = E.add_table, E.frob_index
    rows = []
    for x in range(n):
        for y in range(n):
            r = [0] * n
            r[x] += 1
            r[y] += 1
            r[int(add[x, y])] -= 1
            rows.append(r)
    for x in range(n):
        r = [0] * n
        r[x] += 1
        r[int(F[x])] -= 1
        rows.append(r)
    return IntMatrix.from_rows(rows, n)


@functools.lru_cache(maxsize=64)
def _cokernel(E: EtaleGroupModel) -> QZCokernel:
    return QZCokernel(coboundary_matrix(E))


def class_key(Q: QCSheafModel) -> tuple:
    """Complete isomorphism invariant: equal keys iff isomorphic."""
    L, A, B = Q.arrays
    v = np.concatenate([A.ravel(), B])[None, :]
    return tuple(QZ(int(t), L) for t in _cokernel(Q.base).keys_at_level(v, L)[0])


@functools.lru_cache(maxsize=64)
def cocycle_generators(E: EtaleGroupModel, level: int) -> np.ndarray:
    """Generators of the valid (a, b) vectors with values in (1/level)Z/Z."""
    return kernel_mod(sheaf_equation_matrix(E), level)


def default_level(E: EtaleGroupModel) -> int:
    return E.exponent ** 2


def random_sheaf(E: EtaleGroupModel, rng: np.random.Generator, level: int | None = None) -> QCSheafModel:
    L = level or default_level(E)
    gens = cocycle_generators(E, L)
    n = E.order
    if len(gens) == 0:
        return unit(E)
    c = rng.integers(0, L, size=len(gens))
    v = (c @ gens) % L
    return QCSheafModel.from_level_arrays(E, L, v[:n * n], v[n * n:])


def enumerate_classes(E: EtaleGroupModel, level: int | None = None) -> list:
    """One representative per isomorphism class among sheaves at the given level.

    The valid vectors at level L form a finite group; its image in the
    cokernel of the coboundary map is enumerated by closure from generators.
    Results are sorted by class key.
    """
    L = level or default_level(E)
    gens = cocycle_generators(E, L)
    n = E.order
    coker = _cokernel(E)
    keys = coker.keys_at_level(gens, L) if len(gens) else np.zeros((0, len(coker.rows)), dtype=np.int64)
    step = {}
    for g, k in zip(gens, keys):
        kt = tuple(int(t) for t in k)
        if any(kt) and kt not in step:
            step[kt] = g
    zero_key = (0,) * len(coker.rows)
    reps = {zero_key: np.zeros(n * n + n, dtype=np.int64)}
    frontier = [zero_key]
    while frontier:
        nxt = []
        for ck in frontier:
            cv = reps[ck]
            for gk, gv in step.items():
                k2 = tuple((a + b) % L for a, b in zip(ck, gk))
                if k2 not in reps:
                    reps[k2] = (cv + gv) % L
                    nxt.append(k2)
        frontier = nxt
    out = []
    for k in sorted(reps, key=lambda t: tuple(QZ(v, L) for v in t)):
        v = reps[k]
        out.append(QCSheafModel.from_level_arrays(E, L, v[:n * n], v[n * n:]))
    return out


# ---------------------------------------------------------------- monoidal structure


def _check_same_base(Q: QCSheafModel, Qp: QCSheafModel):
    if Q.base != Qp.base:
        raise BaseMismatch("sheaves live on different bases")


def unit(E: EtaleGroupModel) -> QCSheafModel:
    n = E.order
    return QCSheafModel(E, (ZERO,) * (n * n), (ZERO,) * n)


def tensor(Q: QCSheafModel, Qp: QCSheafModel) -> QCSheafModel:
    _check_same_base(Q, Qp)
    return QCSheafModel(Q.base, tuple(u + v for u, v in zip(Q.a, Qp.a)),
                        tuple(u + v for u, v in zip(Q.b, Qp.b)))


def dual(Q: QCSheafModel) -> QCSheafModel:
    return QCSheafModel(Q.base, tuple(-v for v in Q.a), tuple(-v for v in Q.b))


def twist(Q: QCSheafModel, delta: Sequence[QZ]) -> QCSheafModel:
    """The same sheaf written in the basis rescaled by delta."""
    E = Q.base
    n = E.order
    add, F = E.add_table, E.frob_index
    delta = [QZ.parse(d) for d in delta]
    a = tuple(Q.a[i * n + j] + delta[i] + delta[j] - delta[int(add[i, j])]
              for i in range(n) for j in range(n))
    b = tuple(Q.b[i] + delta[i] - delta[int(F[i])] for i in range(n))
    return QCSheafModel(E, a, b)


# ---------------------------------------------------------------- trace of Frobenius


def trace(Q: QCSheafModel) -> tuple:
    """Trace of Frobenius as a character of A^F (values on its generators)."""
    H, incl = fixed_points(Q.base)
    return tuple(Q.b_at(incl(g)) for g in _generators(H))


def trace_values(Q: QCSheafModel) -> dict:
    """Trace of Frobenius at every rational point, keyed by A-coordinates."""
    E = Q.base
    F = E.frob_index
    return {E.elements[i]: Q.b[i] for i in range(E.order) if F[i] == i}


def _generators(H) -> list:
    return [tuple(int(i == j) for j in range(H.ngens)) for i in range(H.ngens)]


def sheaf_from_character(E: EtaleGroupModel, chi: Sequence[QZ]) -> QCSheafModel:
    """Trivial stalks, a = 0, b a homomorphism of A extending chi from A^F."""
    H, incl = fixed_points(E)
    t = extend_character(incl, chi)
    n = E.order
    return QCSheafModel(E, (ZERO,) * (n * n), tuple(evaluate(t, x) for x in E.elements))


# ---------------------------------------------------------------- morphisms


def _difference(Q: QCSheafModel, Qp: QCSheafModel) -> list:
    return [v - u for u, v in zip(Q.vector(), Qp.vector())]


def is_isomorphic(Q: QCSheafModel, Qp: QCSheafModel):
    """A witness delta (one QZ per element) with twist(Q, delta) == Qp, or None."""
    _check_same_base(Q, Qp)
    sol = solve_qz(coboundary_matrix(Q.base), _difference(Q, Qp))
    return None if sol is None else tuple(sol)


def isomorphism_obstruction(Q: QCSheafModel, Qp: QCSheafModel):
    """(row, u) with u * coboundary = 0 and u . (Qp - Q) != 0, or None if isomorphic."""
    _check_same_base(Q, Qp)
    return qz_obstruction(coboundary_matrix(Q.base), _difference(Q, Qp))


def is_morphism(Q: QCSheafModel, Qp: QCSheafModel, rho: Sequence) -> bool:
    """Check the two commuting squares for a family of stalk maps.

    rho[x] is None for the zero map, otherwise a QZ giving the scalar
    exp(2 pi i rho[x]).
    """
    _check_same_base(Q, Qp)
    E = Q.base
    n = E.order
    add, F = E.add_table, E.frob_index
    for x in range(n):
        # phi'_x o rho_{Fx} = rho_x o phi_x
        l, r = rho[int(F[x])], rho[x]
        if (l is None) != (r is None):
            return False
        if l is not None and Qp.b[x] + l != r + Q.b[x]:
            return False
    for x in range(n):
        for y in range(n):
            # mu'_{x,y} o rho_{x+y} = (rho_x (x) rho_y) o mu_{x,y}
            l = rho[int(add[x, y])]
            rx, ry = rho[x], rho[y]
            r_zero = rx is None or ry is None
            if (l is None) != r_zero:
                return False
            if l is not None and Qp.a[x * n + y] + l != rx + ry + Q.a[x * n + y]:
                return False
    return True


@dataclass(frozen=True)
class HomSet:
    """Hom(Q, Q'): only the zero map, or a torsor under Aut(Q) containing witness."""

    witness: tuple | None
    torsor_size: int

    @property
    def zero_only(self) -> bool:
        return self.witness is None


def hom_set(Q: QCSheafModel, Qp: QCSheafModel) -> HomSet:
    w = is_isomorphic(Q, Qp)
    if w is None:
        return HomSet(None, 0)
    return HomSet(w, coinvariants_order(Q.base))


def coinvariants_order(E: EtaleGroupModel) -> int:
    return coinvariants(FrobModule(E.points, E.frob))[0].order


def automorphisms(Q: QCSheafModel) -> list:
    """Aut(Q) as the characters of the coinvariants A_F (values on generators)."""
    C, _ = coinvariants(FrobModule(Q.base.points, Q.base.frob))
    return characters(C)


def automorphism_scalars(E: EtaleGroupModel, chi: Sequence[QZ]) -> tuple:
    """The stalk scalars x -> chi(x mod (F - 1)A) of the automorphism chi."""
    _, proj = coinvariants(FrobModule(E.points, E.frob))
    return tuple(evaluate(chi, proj(x)) for x in E.elements)


# ---------------------------------------------------------------- functors


def pullback(f: EtaleHom, Q: QCSheafModel) -> QCSheafModel:
    if f.target != Q.base:
        raise BaseMismatch("map does not land in the sheaf's base")
    idx = f.index_map
    n = Q.base.order
    a = tuple(Q.a[int(i) * n + int(j)] for i in idx for j in idx)
    b = tuple(Q.b[int(i)] for i in idx)
    return QCSheafModel(f.source, a, b)


def external_product(Q1: QCSheafModel, Q2: QCSheafModel) -> QCSheafModel:
    _, _, (p1, p2) = product_maps(Q1.base, Q2.base)
    return tensor(pullback(p1, Q1), pullback(p2, Q2))


def norm_functor(Q: QCSheafModel, n: int) -> QCSheafModel:
    """Same a; Frobenius structure b'(x) = sum_{i<n} b(F^i x) over F^n."""
    E = Q.base
    Ep = base_change(E, n)
    F = E.frob_index
    b = []
    for x in range(E.order):
        total, y = ZERO, x
        for _ in range(n):
            total = total + Q.b[y]
            y = int(F[y])
        b.append(total)
    return QCSheafModel(Ep, Q.a, tuple(b))


def commutator_pairing(Q: QCSheafModel) -> tuple:
    """e(x, y) = a(x, y) - a(y, x), flattened like a."""
    n = Q.base.order
    return tuple(Q.a[i * n + j] - Q.a[j * n + i] for i in range(n) for j in range(n))


def norm_index(E: EtaleGroupModel, n: int) -> np.ndarray:
    """Index map of the norm x -> x + Fx + ... + F^{n-1}x."""
    F = E.frob_index
    add = E.add_table
    out = np.zeros(E.order, dtype=np.int64)
    y = np.arange(E.order)
    for _ in range(n):
        out = add[out, y]
        y = F[y]
    return out
