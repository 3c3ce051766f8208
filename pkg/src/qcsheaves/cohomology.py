"""Low-degree total complex of a finite étale model (A, F) with Q/Z coefficients.

Double complex E^{i,j} = C^i(W, C^j(A, Q/Z)), where the W-direction is the
two-term complex M --(F* - 1)--> M and the A-direction is the inhomogeneous
bar complex. The total differential on E^{i,j} is d_A + (-1)^j d_W.

In total degree 2 a cochain is a pair (alpha, beta) in E^{0,2} + E^{1,1};
it is a cocycle iff

    d_A alpha = 0   and   alpha(Fx, Fy) - alpha(x, y) = beta(x+y) - beta(x) - beta(y),

and the coboundary of delta in E^{0,1} is
(delta(x) + delta(y) - delta(x+y), delta(x) - delta(Fx)).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .etale import EtaleGroupModel, fixed_points
from .fgab import (FgAbGroup, FrobModule, GroupHom, coinvariants, evaluate, exterior_square,
                   extend_character)
from .intlat import QZ, IntMatrix, QZCokernel, kernel_mod, qz_dot, solve_qz
from .qcsheaf import QCSheafModel, enumerate_classes, is_isomorphic, is_valid

DEFAULT_BOUND = 12


class BoundExceeded(ValueError):
    pass


def _check_bound(order: int, bound: int):
    if order > bound:
        raise BoundExceeded(f"group order {order} exceeds the enumeration bound {bound}")


# ---------------------------------------------------------------- cochain complexes


def _tuple_indices(n: int, j: int) -> np.ndarray:
    """All j-tuples of element indices, row r being the base-n digits of r."""
    if j == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*([np.arange(n)] * j), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _flat(T: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(len(T), dtype=np.int64)
    for c in range(T.shape[1]):
        out = out * n + T[:, c]
    return out


def bar_differential(E: EtaleGroupModel, j: int) -> np.ndarray:
    """Integer matrix of d: C^j(A, M) -> C^{j+1}(A, M) for trivial coefficients M.

    (df)(x_1..x_{j+1}) = f(x_2..x_{j+1})
                         + sum_i (-1)^i f(.., x_i + x_{i+1}, ..)
                         + (-1)^{j+1} f(x_1..x_j)
    """
    n = E.order
    add = E.add_table
    T = _tuple_indices(n, j + 1)
    rows = np.arange(len(T))
    D = np.zeros((n ** (j + 1), n ** j), dtype=np.int64)
    np.add.at(D, (rows, _flat(T[:, 1:], n)), 1)
    for i in range(1, j + 1):
        merged = np.concatenate([T[:, :i - 1], add[T[:, i - 1], T[:, i]][:, None], T[:, i + 1:]], axis=1)
        np.add.at(D, (rows, _flat(merged, n)), (-1) ** i)
    np.add.at(D, (rows, _flat(T[:, :j], n)), (-1) ** (j + 1))
    return D


def weil_differential(E: EtaleGroupModel, j: int) -> np.ndarray:
    """Integer matrix of F* - 1 on C^j(A, M): f -> f(F., .., F.) - f."""
    n = E.order
    T = _tuple_indices(n, j)
    rows = np.arange(len(T))
    D = np.zeros((n ** j, n ** j), dtype=np.int64)
    np.add.at(D, (rows, _flat(E.frob_index[T], n)), 1)
    np.add.at(D, (rows, rows), -1)
    return D


@functools.lru_cache(maxsize=64)
def total_differentials(E: EtaleGroupModel):
    """(D1, D2): total degree 1 -> 2 and 2 -> 3 as integer matrices.

    Degree 1 is E^{0,1}; degree 2 is E^{0,2} + E^{1,1}; degree 3 is
    E^{0,3} + E^{1,2} (no W-cochains above degree 1 survive).
    """
    n = E.order
    dA1, dA2 = bar_differential(E, 1), bar_differential(E, 2)
    dW1, dW2 = weil_differential(E, 1), weil_differential(E, 2)
    D1 = np.vstack([dA1, -dW1])
    D2 = np.block([[dA2, np.zeros((n ** 3, n), dtype=np.int64)],
                   [dW2, dA1]])
    return D1, D2


@functools.lru_cache(maxsize=64)
def _total_cokernel(E: EtaleGroupModel) -> QZCokernel:
    D1, _ = total_differentials(E)
    return QZCokernel(IntMatrix.from_rows(D1.tolist(), E.order))


@functools.lru_cache(maxsize=64)
def _total_cocycle_generators(E: EtaleGroupModel, level: int) -> np.ndarray:
    return kernel_mod(total_differentials(E)[1], level)


# ---------------------------------------------------------------- total cocycles


@dataclass(frozen=True)
class TotalCocycle:
    base: EtaleGroupModel
    alpha: tuple  # flattened n x n, index i*n + j
    beta: tuple

    def vector(self) -> list:
        return list(self.alpha) + list(self.beta)

    def is_cocycle(self) -> bool:
        _, D2 = total_differentials(self.base)
        v = self.vector()
        return all(qz_dot(row, v).is_zero() for row in D2.tolist())

    def key(self) -> tuple:
        """Class in H^2 of the total complex; equal keys iff cohomologous."""
        return _total_cokernel(self.base).key(self.vector())

    def to_json(self) -> dict:
        return {"alpha": [str(v) for v in self.alpha], "beta": [str(v) for v in self.beta]}


def s_map(Q: QCSheafModel) -> TotalCocycle:
    """The sheaf's tables read as a total 2-cocycle (alpha = a, beta = b)."""
    return TotalCocycle(Q.base, Q.a, Q.b)


def _from_level_vector(E: EtaleGroupModel, L: int, v) -> TotalCocycle:
    n = E.order
    vals = [QZ(int(t), L) for t in v]
    return TotalCocycle(E, tuple(vals[:n * n]), tuple(vals[n * n:]))


def _closure(gen_keys: np.ndarray, gens: np.ndarray, L: int, width: int, dim: int) -> dict:
    """All keys reachable from the generators' keys, with one vector each."""
    step = {}
    for g, k in zip(gens, gen_keys):
        kt = tuple(int(t) for t in k)
        if any(kt) and kt not in step:
            step[kt] = g
    reps = {(0,) * width: np.zeros(dim, dtype=np.int64)}
    frontier = list(reps)
    while frontier:
        nxt = []
        for ck in frontier:
            for gk, gv in step.items():
                k2 = tuple((a + b) % L for a, b in zip(ck, gk))
                if k2 not in reps:
                    reps[k2] = (reps[ck] + gv) % L
                    nxt.append(k2)
        frontier = nxt
    return reps


def enumerate_total_classes(E: EtaleGroupModel, level: int | None = None,
                            bound: int = DEFAULT_BOUND) -> list:
    """One TotalCocycle per class of H^2 of the total complex, at the given level."""
    _check_bound(E.order, bound)
    L = level or E.exponent ** 2
    n = E.order
    gens = _total_cocycle_generators(E, L)
    coker = _total_cokernel(E)
    width = len(coker.rows)
    keys = coker.keys_at_level(gens, L) if len(gens) else np.zeros((0, width), dtype=np.int64)
    reps = _closure(keys, gens, L, width, n * n + n)
    return [_from_level_vector(E, L, reps[k]) for k in sorted(reps)]


# ---------------------------------------------------------------- H^2 of a finite group


@dataclass(frozen=True)
class H2Result:
    count: int
    representatives: list  # flattened n x n QZ tables

    def to_json(self) -> dict:
        return {"classes": self.count}


@functools.lru_cache(maxsize=64)
def _group_model(G: FgAbGroup) -> EtaleGroupModel:
    return EtaleGroupModel(G, GroupHom.identity(G))


@functools.lru_cache(maxsize=64)
def _h2_cokernel(E: EtaleGroupModel) -> QZCokernel:
    return QZCokernel(IntMatrix.from_rows(bar_differential(E, 1).tolist(), E.order))


def h2_key(E: EtaleGroupModel, alpha: Sequence[QZ]) -> tuple:
    """Class of a 2-cocycle of A in H^2(A, Q/Z); equal keys iff cohomologous."""
    return _h2_cokernel(E).key(list(alpha))


def h2_finite_group_oracle(A: FgAbGroup, bound: int = DEFAULT_BOUND) -> H2Result:
    """Classes of 2-cocycles A x A -> (1/exp A)Z/Z modulo coboundaries.

    Cocycles are generated as the kernel of the bar differential mod exp(A);
    two cocycles are identified exactly when their difference is a Q/Z
    coboundary, decided by the Smith-form criterion.
    """
    _check_bound(A.order, bound)
    E = _group_model(A)
    n = E.order
    L = max(A.exponent, 1)
    gens = kernel_mod(bar_differential(E, 2), L)
    coker = _h2_cokernel(E)
    width = len(coker.rows)
    keys = coker.keys_at_level(gens, L) if len(gens) else np.zeros((0, width), dtype=np.int64)
    reps = _closure(keys, gens, L, width, n * n)
    out = [tuple(QZ(int(t), L) for t in reps[k]) for k in sorted(reps)]
    return H2Result(len(out), out)


# ---------------------------------------------------------------- the short exact sequence


def structural_count(E: EtaleGroupModel) -> tuple:
    """(|(Lambda^2 A)_F|, |A^F|) from Smith forms alone."""
    ext = exterior_square(FrobModule(E.points, E.frob))
    C, _ = coinvariants(ext)
    H, _ = fixed_points(E)
    return C.order, H.order


def _restrict_to_fixed(E: EtaleGroupModel, beta: Sequence[QZ]) -> tuple:
    H, incl = fixed_points(E)
    idx = [E.index(incl(tuple(int(i == j) for j in range(H.ngens)))) for i in range(H.ngens)]
    return tuple(beta[i] for i in idx)


def projection(c: TotalCocycle) -> tuple:
    """[alpha + beta] -> [beta], read as a character of A^F (values on generators).

    beta restricted to A^F is additive, and beta modulo the image of F* - 1 on
    characters of A is determined by this restriction.
    """
    return _restrict_to_fixed(c.base, c.beta)


def inclusion(E: EtaleGroupModel, alpha: Sequence[QZ]) -> TotalCocycle:
    """Lift an F-fixed H^2(A) class [alpha] to a total class with trivial projection."""
    n = E.order
    F = E.frob_index
    alpha = [QZ.parse(v) for v in alpha]
    # alpha(Fx, Fy) - alpha(x, y) = beta(x+y) - beta(x) - beta(y) = -(d_A beta)(x, y)
    rhs = [alpha[int(F[i]) * n + int(F[j])] - alpha[i * n + j] for i in range(n) for j in range(n)]
    dA1 = IntMatrix.from_rows((-bar_differential(E, 1)).tolist(), n)
    beta = solve_qz(dA1, rhs)
    if beta is None:
        raise ValueError("class is not fixed by Frobenius")
    H, incl = fixed_points(E)
    chi = _restrict_to_fixed(E, beta)
    t = extend_character(incl, chi)
    beta = [v - evaluate(t, x) for v, x in zip(beta, E.elements)]
    return TotalCocycle(E, tuple(alpha), tuple(beta))


def frobenius_fixed_h2(E: EtaleGroupModel, bound: int = DEFAULT_BOUND) -> list:
    """Representatives of H^2(A, Q/Z)^F."""
    n = E.order
    F = E.frob_index
    out = []
    for alpha in h2_finite_group_oracle(E.points, bound).representatives:
        moved = tuple(alpha[int(F[i]) * n + int(F[j])] for i in range(n) for j in range(n))
        if h2_key(E, moved) == h2_key(E, alpha):
            out.append(alpha)
    return out


@dataclass(frozen=True)
class TotalH2Report:
    classes: int
    kernel: int
    quotient: int
    structural: int
    consistent: bool
    representatives: list
    inclusion_images: list
    details: dict

    def to_json(self) -> dict:
        return {"classes": self.classes, "kernel": self.kernel, "quotient": self.quotient,
                "consistent": self.consistent}


def total_h2(E: EtaleGroupModel, bound: int = DEFAULT_BOUND, enumerate_: bool = True) -> TotalH2Report:
    """Count H^2 of the total complex two ways and check the short exact sequence.

    With enumerate_=False (or |A| above bound) only the structural count
    |(Lambda^2 A)_F| * |A^F| is reported.
    """
    k_struct, q_struct = structural_count(E)
    structural = k_struct * q_struct
    if not enumerate_ or E.order > bound:
        return TotalH2Report(structural, k_struct, q_struct, structural, True, [], [],
                             {"enumerated": False})
    reps = enumerate_total_classes(E, bound=bound)
    traces = {projection(c) for c in reps}
    in_kernel = [c for c in reps if all(v.is_zero() for v in projection(c))]
    fixed = frobenius_fixed_h2(E, bound)
    images = [inclusion(E, alpha) for alpha in fixed]
    image_keys = {c.key() for c in images}
    kernel_keys = {c.key() for c in in_kernel}
    checks = {
        "enumerated": True,
        "paths_agree": len(reps) == structural,
        "kernel_matches": len(in_kernel) == k_struct,
        "quotient_matches": len(traces) == q_struct,
        "multiplicative": len(reps) == len(in_kernel) * len(traces),
        "projection_after_inclusion_trivial": all(all(v.is_zero() for v in projection(c)) for c in images),
        "inclusion_injective": len(image_keys) == len(fixed),
        "inclusion_onto_kernel": image_keys == kernel_keys,
        "all_cocycles": all(c.is_cocycle() for c in images),
    }
    consistent = all(v for k, v in checks.items() if k != "enumerated")
    return TotalH2Report(len(reps), len(in_kernel), len(traces), structural, consistent,
                         reps, images, checks)


# ---------------------------------------------------------------- S_G


@dataclass(frozen=True)
class SIsoReport:
    sheaf_classes: int
    total_classes: int
    injective: bool
    surjective: bool
    spot_checks: int
    mismatches: list

    @property
    def bijective(self) -> bool:
        return self.injective and self.surjective and not self.mismatches

    def to_json(self) -> dict:
        return {"sheaf_classes": self.sheaf_classes, "total_classes": self.total_classes,
                "injective": self.injective, "surjective": self.surjective,
                "bijective": self.bijective, "spot_checks": self.spot_checks,
                "mismatches": self.mismatches}


def verify_s_iso(E: EtaleGroupModel, bound: int = DEFAULT_BOUND, spot_checks: int = 12,
                 seed: int = 0) -> SIsoReport:
    """Compare sheaf isomorphism classes with total H^2 classes through s_map.

    Besides comparing class keys, a few seeded random pairs of distinct
    sheaf representatives are confirmed non-isomorphic by the exact solve.
    """
    _check_bound(E.order, bound)
    sheaves = enumerate_classes(E)
    totals = enumerate_total_classes(E, bound=bound)
    mismatches = []
    images = []
    for Q in sheaves:
        c = s_map(Q)
        if not is_valid(Q) or not c.is_cocycle():
            mismatches.append({"sheaf": Q.to_json(), "reason": "not a cocycle"})
        images.append(c.key())
    total_keys = {c.key() for c in totals}
    injective = len(set(images)) == len(images)
    surjective = set(images) == total_keys
    m = len(sheaves)
    checked = 0
    if m > 1:
        rng = np.random.default_rng(seed)
        for _ in range(spot_checks):
            i, j = rng.choice(m, size=2, replace=False)
            if is_isomorphic(sheaves[i], sheaves[j]) is not None:
                mismatches.append({"pair": [int(i), int(j)], "reason": "representatives are isomorphic"})
            checked += 1
    return SIsoReport(len(sheaves), len(totals), injective, surjective, checked, mismatches)
