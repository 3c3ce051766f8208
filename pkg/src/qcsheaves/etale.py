"""Finite étale commutative group schemes over a finite field, as pairs (A, F).

A is the finite group of geometric points and F the Frobenius automorphism.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fgab import (FgAbGroup, GroupHom, _reduce_cols, direct_sum, induced_endomorphism, kernel,
                   normalize_factors)
from .intlat import IntMatrix


@dataclass(frozen=True)
class EtaleGroupModel:
    points: FgAbGroup
    frob: GroupHom

    def __post_init__(self):
        if not self.points.is_finite():
            raise ValueError("only finite étale models carry explicit tables")
        if self.frob.source != self.points or self.frob.target != self.points:
            raise ValueError("frob must be an endomorphism of the points")
        if not self.frob.is_well_defined():
            raise ValueError("frob matrix is not well defined on the points")
        # finite group: an endomorphism is bijective iff surjective (one SNF)
        if not self.frob.is_surjective():
            raise ValueError("frob is not an automorphism")

    @classmethod
    def make(cls, factors, frob=None) -> "EtaleGroupModel":
        """Model from arbitrary cyclic factors and a Frobenius matrix in those coordinates."""
        q = normalize_factors(list(factors))
        F = IntMatrix.identity(len(factors)) if frob is None else (
            frob if isinstance(frob, IntMatrix) else IntMatrix.from_rows(frob, len(factors)))
        return cls(q.group, induced_endomorphism(q, F))

    @classmethod
    def trivial(cls) -> "EtaleGroupModel":
        return cls.make([])

    @classmethod
    def from_json(cls, data) -> "EtaleGroupModel":
        frob = IntMatrix.from_json(data["frob"]) if data.get("frob") is not None else None
        if frob is not None and frob.rows == 0 and not data["factors"]:
            frob = None
        return cls.make(data["factors"], frob)

    def to_json(self) -> dict:
        return {"factors": list(self.points.factors), "frob": self.frob.matrix.to_json()}

    @property
    def order(self) -> int:
        return self.points.order

    @property
    def exponent(self) -> int:
        return self.points.exponent

    # element tables; element i is self.elements[i] in lexicographic order

    @cached_property
    def elements(self) -> list:
        return self.points.elements()

    @cached_property
    def coords(self) -> np.ndarray:
        k = self.points.ngens
        if k == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices(self.points.factors, dtype=np.int64)
        return grids.reshape(k, -1).T.copy()

    @cached_property
    def _radix(self) -> np.ndarray:
        f = self.points.factors
        w = [1] * len(f)
        for i in range(len(f) - 2, -1, -1):
            w[i] = w[i + 1] * f[i + 1]
        return np.array(w, dtype=np.int64)

    def index_of_coords(self, C: np.ndarray) -> np.ndarray:
        f = np.array(self.points.factors, dtype=np.int64)
        if len(f) == 0:
            return np.zeros(C.shape[:-1], dtype=np.int64)
        return (C % f) @ self._radix

    def index(self, x) -> int:
        return self.points.index(x)

    @cached_property
    def add_table(self) -> np.ndarray:
        C = self.coords
        return self.index_of_coords(C[:, None, :] + C[None, :, :])

    @cached_property
    def neg_index(self) -> np.ndarray:
        return self.index_of_coords(-self.coords)

    @cached_property
    def frob_index(self) -> np.ndarray:
        M = np.array(self.frob.matrix.entries, dtype=np.int64).reshape(self.points.ngens, self.points.ngens)
        return self.index_of_coords(self.coords @ M.T)

    def hom_index(self, f: GroupHom, target: "EtaleGroupModel") -> np.ndarray:
        """Index map of a homomorphism from self.points to target.points."""
        M = np.array(f.matrix.entries, dtype=np.int64).reshape(f.target.ngens, f.source.ngens)
        return target.index_of_coords(self.coords @ M.T)

    def frob_power_index(self, n: int) -> np.ndarray:
        idx = np.arange(self.order)
        for _ in range(n):
            idx = self.frob_index[idx]
        return idx

    def __str__(self) -> str:
        return f"({self.points}, F={[list(r) for r in self.frob.matrix.entries]})"


@dataclass(frozen=True)
class EtaleHom:
    """A Frobenius-equivariant homomorphism between étale models."""

    source: EtaleGroupModel
    target: EtaleGroupModel
    hom: GroupHom

    def __post_init__(self):
        if self.hom.source != self.source.points or self.hom.target != self.target.points:
            raise ValueError("hom does not match the models' point groups")
        if not self.hom.is_well_defined():
            raise ValueError("hom is not well defined")
        if not is_equivariant(self.hom, self.source, self.target):
            raise ValueError("hom is not Frobenius-equivariant")

    @cached_property
    def index_map(self) -> np.ndarray:
        return self.source.hom_index(self.hom, self.target)

    def compose(self, inner: "EtaleHom") -> "EtaleHom":
        return EtaleHom(inner.source, self.target, self.hom.compose(inner.hom))


def is_equivariant(f: GroupHom, source: EtaleGroupModel, target: EtaleGroupModel) -> bool:
    return f.compose(source.frob).equals(target.frob.compose(f))


def fixed_points(E: EtaleGroupModel):
    """The rational points A^F with their inclusion into A."""
    return kernel(E.frob - GroupHom.identity(E.points))


def base_change(E: EtaleGroupModel, n: int) -> EtaleGroupModel:
    if n < 1:
        raise ValueError("degree must be >= 1")
    return EtaleGroupModel(E.points, E.frob.power(n))


def product_maps(E1: EtaleGroupModel, E2: EtaleGroupModel):
    """(E1 x E2, [incl1, incl2], [proj1, proj2]) with equivariant structure maps."""
    S, incls, projs = direct_sum(E1.points, E2.points)
    F = incls[0].compose(E1.frob).compose(projs[0]) + incls[1].compose(E2.frob).compose(projs[1])
    E = EtaleGroupModel(S, GroupHom(S, S, _reduce_cols(S, F.matrix)))
    return (E, [EtaleHom(E1, E, incls[0]), EtaleHom(E2, E, incls[1])],
            [EtaleHom(E, E1, projs[0]), EtaleHom(E, E2, projs[1])])


def product(E1: EtaleGroupModel, E2: EtaleGroupModel) -> EtaleGroupModel:
    return product_maps(E1, E2)[0]


@functools.lru_cache(maxsize=128)
def _power_maps(A: FgAbGroup, n: int):
    return direct_sum(*([A] * n))


def weil_restriction(Eprime: EtaleGroupModel, n: int) -> EtaleGroupModel:
    """Points A'^n with frob(x_0, ..., x_{n-1}) = (x_1, ..., x_{n-1}, phi'(x_0))."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    if n == 1:
        return Eprime
    S, incls, projs = _power_maps(Eprime.points, n)
    F = incls[n - 1].compose(Eprime.frob).compose(projs[0])
    for i in range(n - 1):
        F = F + incls[i].compose(projs[i + 1])
    return EtaleGroupModel(S, GroupHom(S, S, _reduce_cols(S, F.matrix)))


def canonical_inclusion(E: EtaleGroupModel, n: int) -> EtaleHom:
    """x -> (x, Fx, ..., F^{n-1}x) into the Weil restriction of the base change."""
    target = weil_restriction(base_change(E, n), n)
    if n == 1:
        return EtaleHom(E, target, GroupHom.identity(E.points))
    S, incls, _ = _power_maps(E.points, n)
    iota = incls[0]
    Fi = GroupHom.identity(E.points)
    for i in range(1, n):
        Fi = E.frob.compose(Fi)
        iota = iota + incls[i].compose(Fi)
    return EtaleHom(E, target, GroupHom(E.points, S, _reduce_cols(S, iota.matrix)))


# ---------------------------------------------------------------- enumeration helpers


def abelian_groups_of_order(n: int) -> list:
    """Invariant-factor tuples of every abelian group of order n."""
    out = set()
    primes = {}
    m, p = n, 2
    while p * p <= m:
        while m % p == 0:
            primes[p] = primes.get(p, 0) + 1
            m //= p
        p += 1
    if m > 1:
        primes[m] = primes.get(m, 0) + 1

    def partitions(k, largest=None):
        if k == 0:
            yield ()
            return
        largest = k if largest is None else largest
        for first in range(min(k, largest), 0, -1):
            for rest in partitions(k - first, first):
                yield (first,) + rest

    per_prime = [[[p ** e for e in part] for part in partitions(k)] for p, k in sorted(primes.items())]
    for combo in itertools.product(*per_prime):
        out.add(normalize_factors([x for part in combo for x in part]).group.factors)
    return sorted(out)


def automorphisms(G: FgAbGroup) -> list:
    """All automorphisms of a finite group, as GroupHoms (brute force)."""
    elems = G.elements()
    cols_options = []
    for d in G.factors:
        cols_options.append([x for x in elems if G.is_zero([d * v for v in x])])
    out = []
    n = G.order
    for cols in itertools.product(*cols_options):
        M = IntMatrix.from_columns(cols, G.ngens) if cols else IntMatrix.identity(0)
        f = GroupHom(G, G, M)
        if len({f(x) for x in elems}) == n:
            out.append(f)
    return out


def enumerate_models(max_order: int, min_order: int = 1):
    """Every finite étale model (A, F) with min_order <= |A| <= max_order."""
    for n in range(min_order, max_order + 1):
        for factors in abelian_groups_of_order(n):
            G = FgAbGroup(factors)
            for F in automorphisms(G):
                yield EtaleGroupModel(G, F)


def model_is_cyclic(E: EtaleGroupModel) -> bool:
    return E.points.is_cyclic()


def fixed_point_count(E: EtaleGroupModel) -> int:
    return int(np.sum(E.frob_index == np.arange(E.order)))
