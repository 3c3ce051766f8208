"""Finitely generated abelian groups in invariant-factor form.

A group is Z^k modulo the diagonal relations d_i e_i, with d_1 | d_2 | ...
and trailing zeros for free factors.  Elements are integer tuples; a
homomorphism is an integer matrix whose columns are the images of the
source generators.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .intlat import QZ, ZERO, IntMatrix, qz_dot, smith_normal_form, solve_qz


def _gcd0(a: int, b: int) -> int:
    # gcd(0, n) = n; gcd(0, 0) = 0 encodes a free factor
    return math.gcd(a, b)


@dataclass(frozen=True)
class FgAbGroup:
    factors: tuple = ()

    def __post_init__(self):
        f = tuple(int(d) for d in self.factors)
        object.__setattr__(self, "factors", f)
        if any(d == 1 or d < 0 for d in f):
            raise ValueError(f"invariant factors must be 0 or >= 2, got {list(f)}")
        nz = [d for d in f if d]
        if f[:len(nz)] != tuple(nz):
            raise ValueError("free factors (0) must trail the torsion factors")
        if any(nz[i + 1] % nz[i] for i in range(len(nz) - 1)):
            raise ValueError(f"invariant factors must form a divisibility chain, got {list(f)}")

    @classmethod
    def from_json(cls, data) -> "FgAbGroup":
        return normalize_factors(data["factors"] if isinstance(data, dict) else data).group

    def to_json(self) -> dict:
        return {"factors": list(self.factors)}

    @property
    def ngens(self) -> int:
        return len(self.factors)

    @property
    def rank(self) -> int:
        return sum(1 for d in self.factors if d == 0)

    @property
    def torsion(self) -> tuple:
        return tuple(d for d in self.factors if d)

    def is_finite(self) -> bool:
        return self.rank == 0

    def is_trivial(self) -> bool:
        return not self.factors

    def is_cyclic(self) -> bool:
        return self.ngens <= 1

    @property
    def order(self) -> int:
        if not self.is_finite():
            raise ValueError("group is infinite")
        return math.prod(self.factors)

    @property
    def exponent(self) -> int:
        if not self.is_finite():
            raise ValueError("group is infinite")
        return self.factors[-1] if self.factors else 1

    def reduce(self, x: Sequence[int]) -> tuple:
        return tuple(v % d if d else v for v, d in zip(x, self.factors))

    def zero(self) -> tuple:
        return (0,) * self.ngens

    def add(self, x, y) -> tuple:
        return self.reduce([a + b for a, b in zip(x, y)])

    def neg(self, x) -> tuple:
        return self.reduce([-a for a in x])

    def is_zero(self, x) -> bool:
        return all(v == 0 for v in self.reduce(x))

    def elements(self) -> list:
        if not self.is_finite():
            raise ValueError("cannot enumerate an infinite group")
        return _elements(self.factors)

    def index(self, x) -> int:
        i = 0
        for v, d in zip(self.reduce(x), self.factors):
            i = i * d + v
        return i

    def relation_matrix(self) -> IntMatrix:
        """Columns d_i e_i for the finite factors."""
        k = self.ngens
        cols = [[d if r == i else 0 for r in range(k)] for i, d in enumerate(self.factors) if d]
        return IntMatrix.from_columns(cols, k) if cols else IntMatrix(k, 0, ((),) * k)

    def element_order(self, x) -> int:
        x = self.reduce(x)
        o = 1
        for v, d in zip(x, self.factors):
            if d == 0:
                if v:
                    return 0
            else:
                o = math.lcm(o, d // math.gcd(v, d))
        return o

    def __str__(self) -> str:
        if not self.factors:
            return "0"
        return " + ".join("Z" if d == 0 else f"Z/{d}" for d in self.factors)


@functools.lru_cache(maxsize=256)
def _elements(factors: tuple) -> list:
    return [tuple(x) for x in itertools.product(*(range(d) for d in factors))]


@dataclass(frozen=True)
class Quotient:
    """Z^ambient / relations in normal form.

    ``projection`` maps ambient vectors to group coordinates; ``lift`` has as
    columns ambient representatives of the group generators.
    """

    group: FgAbGroup
    projection: IntMatrix
    lift: IntMatrix

    def project(self, v) -> tuple:
        return self.group.reduce(self.projection @ v)


def from_presentation(relations: IntMatrix) -> Quotient:
    """Z^rows modulo the column span of ``relations``."""
    dec = smith_normal_form(relations)
    m = relations.rows
    diag = [dec.diag[i] if i < len(dec.diag) else 0 for i in range(m)]
    keep = [i for i in range(m) if diag[i] != 1]
    group = FgAbGroup(tuple(diag[i] for i in keep))
    proj = IntMatrix(len(keep), m, tuple(dec.U.entries[i] for i in keep))
    lift = IntMatrix.from_columns([dec.U_inv.column(i) for i in keep], m) if keep else IntMatrix(m, 0, ((),) * m)
    return Quotient(group, proj, lift)


def normalize_factors(factors: Sequence[int]) -> Quotient:
    """Normal form of Z/f_1 + ... + Z/f_k for an arbitrary list of f_i >= 0."""
    k = len(factors)
    cols = [[f if r == i else 0 for r in range(k)] for i, f in enumerate(factors) if f != 0]
    rel = IntMatrix.from_columns(cols, k) if cols else IntMatrix(k, 0, ((),) * k)
    return from_presentation(rel)


def _integer_kernel(M: IntMatrix) -> list:
    """Basis of {x in Z^cols : M x = 0} as a list of column vectors."""
    dec = smith_normal_form(M)
    return [dec.V.column(j) for j in range(dec.rank, M.cols)]


@dataclass(frozen=True)
class GroupHom:
    source: FgAbGroup
    target: FgAbGroup
    matrix: IntMatrix

    def __post_init__(self):
        if self.matrix.rows != self.target.ngens or self.matrix.cols != self.source.ngens:
            raise ValueError("matrix shape must be (target gens) x (source gens)")

    @classmethod
    def identity(cls, G: FgAbGroup) -> "GroupHom":
        return cls(G, G, IntMatrix.identity(G.ngens))

    @classmethod
    def zero(cls, source: FgAbGroup, target: FgAbGroup) -> "GroupHom":
        return cls(source, target, IntMatrix.zeros(target.ngens, source.ngens))

    def __call__(self, x) -> tuple:
        return self.target.reduce(self.matrix @ x)

    def is_well_defined(self) -> bool:
        for j, d in enumerate(self.source.factors):
            if d and not self.target.is_zero([d * c for c in self.matrix.column(j)]):
                return False
        return True

    def compose(self, inner: "GroupHom") -> "GroupHom":
        """self after inner."""
        if inner.target != self.source:
            raise ValueError("cannot compose: groups differ")
        return GroupHom(inner.source, self.target, _reduce_cols(self.target, self.matrix @ inner.matrix))

    def __sub__(self, other: "GroupHom") -> "GroupHom":
        return GroupHom(self.source, self.target, self.matrix - other.matrix)

    def __add__(self, other: "GroupHom") -> "GroupHom":
        return GroupHom(self.source, self.target, self.matrix + other.matrix)

    def equals(self, other: "GroupHom") -> bool:
        """Equality as maps (columns congruent in the target)."""
        if self.source != other.source or self.target != other.target:
            return False
        return all(self.target.is_zero([a - b for a, b in zip(c1, c2)])
                   for c1, c2 in zip(self.matrix.columns(), other.matrix.columns()))

    def power(self, n: int) -> "GroupHom":
        if self.source != self.target:
            raise ValueError("power needs an endomorphism")
        out = GroupHom.identity(self.source)
        for _ in range(n):
            out = self.compose(out)
        return out

    def kernel(self):
        return kernel(self)

    def is_injective(self) -> bool:
        return kernel(self)[0].is_trivial()

    def is_surjective(self) -> bool:
        return cokernel(self).group.is_trivial()

    def to_json(self) -> dict:
        return {"source": self.source.to_json(), "target": self.target.to_json(),
                "matrix": self.matrix.to_json()}


def subgroup(G: FgAbGroup, gens: Sequence[Sequence[int]]):
    """The subgroup generated by ``gens`` as (H, inclusion H -> G)."""
    r = len(gens)
    gens = [G.reduce(g) for g in gens]
    Gmat = IntMatrix.from_columns(gens, G.ngens) if gens else IntMatrix(G.ngens, 0, ((),) * G.ngens)
    big = Gmat.hstack(G.relation_matrix())
    rel_cols = [v[:r] for v in _integer_kernel(big)]
    rel = IntMatrix.from_columns(rel_cols, r) if rel_cols else IntMatrix(r, 0, ((),) * r)
    q = from_presentation(rel)
    incl = Gmat @ q.lift if r else IntMatrix(G.ngens, q.group.ngens, ((),) * G.ngens)
    incl = IntMatrix.from_columns([G.reduce(c) for c in incl.columns()], G.ngens) \
        if q.group.ngens else IntMatrix(G.ngens, 0, ((),) * G.ngens)
    return q.group, GroupHom(q.group, G, incl)


def kernel(f: GroupHom):
    """ker f as (K, inclusion K -> source)."""
    s = f.source.ngens
    big = f.matrix.hstack(f.target.relation_matrix())
    gens = [v[:s] for v in _integer_kernel(big)]
    return subgroup(f.source, gens)


def image(f: GroupHom):
    return subgroup(f.target, f.matrix.columns())


def cokernel(f: GroupHom) -> Quotient:
    """target / image(f) as a quotient of the target's coordinate space."""
    return from_presentation(f.matrix.hstack(f.target.relation_matrix()))


def quotient_of(G: FgAbGroup, gens: Sequence[Sequence[int]]) -> Quotient:
    """G / <gens>, with projection from G's coordinates."""
    k = G.ngens
    M = IntMatrix.from_columns(list(gens), k) if gens else IntMatrix(k, 0, ((),) * k)
    return from_presentation(M.hstack(G.relation_matrix()))


def direct_sum(*groups: FgAbGroup):
    """Normal form of the direct sum, with inclusions and projections."""
    factors = [d for G in groups for d in G.factors]
    q = normalize_factors(factors)
    S = q.group
    incls, projs = [], []
    offset = 0
    n = len(factors)
    for G in groups:
        k = G.ngens
        emb = IntMatrix.from_columns(
            [[int(r == offset + j) for r in range(n)] for j in range(k)], n) if k else IntMatrix(n, 0, ((),) * n)
        incls.append(GroupHom(G, S, _reduce_cols(S, q.projection @ emb)))
        sel = IntMatrix.from_rows([[int(c == offset + i) for c in range(n)] for i in range(k)], n) \
            if k else IntMatrix(0, n, ())
        projs.append(GroupHom(S, G, _reduce_cols(G, sel @ q.lift) if S.ngens else IntMatrix(k, 0, ((),) * k)))
        offset += k
    return S, incls, projs


def _reduce_cols(G: FgAbGroup, M: IntMatrix) -> IntMatrix:
    if M.cols == 0:
        return M
    return IntMatrix.from_columns([G.reduce(c) for c in M.columns()], G.ngens)


def induced_endomorphism(q: Quotient, F: IntMatrix) -> GroupHom:
    """The endomorphism of q.group induced by an ambient integer matrix F."""
    G = q.group
    if G.ngens == 0:
        return GroupHom.identity(G)
    M = q.projection @ F @ q.lift
    return GroupHom(G, G, _reduce_cols(G, M))


# ---------------------------------------------------------------- Frobenius modules


@dataclass(frozen=True)
class FrobModule:
    group: FgAbGroup
    frob: GroupHom

    def __post_init__(self):
        if self.frob.source != self.group or self.frob.target != self.group:
            raise ValueError("frob must be an endomorphism of the group")
        if not self.frob.is_well_defined():
            raise ValueError("frob matrix is not well defined on the group")
        if not (self.frob.is_injective() and self.frob.is_surjective()):
            raise ValueError("frob is not an automorphism")

    @classmethod
    def trivial_action(cls, G: FgAbGroup) -> "FrobModule":
        return cls(G, GroupHom.identity(G))

    @classmethod
    def from_json(cls, data) -> "FrobModule":
        q = normalize_factors(data["factors"])
        n = len(data["factors"])
        F = IntMatrix.from_json(data["frob"]) if "frob" in data else IntMatrix.identity(n)
        return cls(q.group, induced_endomorphism(q, F))

    def to_json(self) -> dict:
        return {"factors": list(self.group.factors), "frob": self.frob.matrix.to_json()}

    def frob_minus_one(self) -> GroupHom:
        return self.frob - GroupHom.identity(self.group)


def invariants_with_inclusion(M: FrobModule):
    return kernel(M.frob_minus_one())


def invariants(M: FrobModule) -> FgAbGroup:
    """M^F = ker(F - 1)."""
    return invariants_with_inclusion(M)[0]


def coinvariants(M: FrobModule):
    """M_F = coker(F - 1), with the quotient projection as a GroupHom."""
    q = cokernel(M.frob_minus_one())
    proj = GroupHom(M.group, q.group, _reduce_cols(q.group, q.projection)
                    if M.group.ngens else IntMatrix(q.group.ngens, 0, ((),) * q.group.ngens))
    return q.group, proj


def exterior_square(M) -> FrobModule:
    """Lambda^2 with the induced action F(x ^ y) = F(x) ^ F(y).

    For sum Z/d_i the generators e_i ^ e_j (i < j) have order gcd(d_i, d_j).
    """
    if isinstance(M, FgAbGroup):
        M = FrobModule.trivial_action(M)
    d = M.group.factors
    k = len(d)
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    pos = {p: n for n, p in enumerate(pairs)}
    order = [_gcd0(d[i], d[j]) for i, j in pairs]
    q = normalize_factors(order)
    F = M.frob.matrix.entries
    cols = []
    for i, j in pairs:
        col = [0] * len(pairs)
        for (a, b), n in pos.items():
            col[n] = F[a][i] * F[b][j] - F[b][i] * F[a][j]
        cols.append(col)
    FL = IntMatrix.from_columns(cols, len(pairs)) if pairs else IntMatrix(0, 0, ())
    return FrobModule(q.group, induced_endomorphism(q, FL))


@dataclass(frozen=True)
class DualStructure:
    """Shape of Hom(Z^r + sum Z/n_i, E^x): r divisible copies plus sum mu_{n_i}."""

    divisible_rank: int = 0
    torsion: tuple = ()

    def __post_init__(self):
        t = tuple(int(n) for n in self.torsion)
        object.__setattr__(self, "torsion", t)
        if any(n < 2 for n in t) or any(t[i + 1] % t[i] for i in range(len(t) - 1)):
            raise ValueError("torsion factors must form a divisibility chain of integers >= 2")

    def is_trivial(self) -> bool:
        return self.divisible_rank == 0 and not self.torsion

    @property
    def torsion_order(self) -> int:
        return math.prod(self.torsion)

    def to_json(self) -> dict:
        return {"divisible_rank": self.divisible_rank, "torsion": list(self.torsion)}


def dual_structure(G: FgAbGroup) -> DualStructure:
    return DualStructure(G.rank, G.torsion)


def dual_of_coinvariants(M: FrobModule) -> DualStructure:
    return dual_structure(coinvariants(M)[0])


# ---------------------------------------------------------------- characters


def characters(G: FgAbGroup) -> list:
    """All characters of a finite group, as QZ values on its generators."""
    return [tuple(QZ(k, d) for k, d in zip(ks, G.factors))
            for ks in itertools.product(*(range(d) for d in G.factors))]


def evaluate(chi: Sequence[QZ], x: Sequence[int]) -> QZ:
    return qz_dot(x, chi)


def is_character(G: FgAbGroup, chi: Sequence[QZ]) -> bool:
    if len(chi) != G.ngens:
        return False
    return all(d == 0 or (v * d).is_zero() for v, d in zip(chi, G.factors))


def pull_back_character(f: GroupHom, chi: Sequence[QZ]) -> tuple:
    """chi o f, as values on the source generators."""
    return tuple(qz_dot(col, chi) for col in f.matrix.columns())


def extend_character(incl: GroupHom, chi: Sequence[QZ]) -> tuple:
    """A character of incl.target restricting to chi along incl.

    Exists because Q/Z is divisible; found with one Q/Z solve on
    the presentation of the target.
    """
    chi = [QZ.parse(c) for c in chi]
    if not is_character(incl.source, chi):
        raise ValueError("chi is not well defined on the source group")
    if not incl.is_injective():
        raise ValueError("inclusion is not injective")
    T = incl.target
    rows = [list(r) for r in incl.matrix.transpose().entries]
    rhs = list(chi)
    for j, d in enumerate(T.factors):
        if d:
            rows.append([d if c == j else 0 for c in range(T.ngens)])
            rhs.append(ZERO)
    if not rows:
        return tuple(ZERO for _ in range(T.ngens))
    sol = solve_qz(IntMatrix.from_rows(rows, T.ngens), rhs)
    if sol is None:
        raise ValueError("no extension exists; chi is inconsistent with the inclusion")
    return tuple(sol)
