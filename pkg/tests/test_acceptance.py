"""Acceptance criteria 1-11.

Each test records a one-line verdict in RESULTS; tests/conftest.py prints
them at the end of the pytest run. Running this file directly prints the
same lines without pytest.
"""
import functools
import time

import numpy as np

from helpers import SWAP, model, models_up_to, structure_from_histogram, unit_orders
from qcsheaves.cohomology import h2_finite_group_oracle, verify_s_iso
from qcsheaves.dictionary import kernel_structure
from qcsheaves.etale import (EtaleHom, abelian_groups_of_order, canonical_inclusion, fixed_points,
                             product_maps)
from qcsheaves.fgab import (DualStructure, FgAbGroup, FrobModule, GroupHom, characters, coinvariants, evaluate,
                           exterior_square)
from qcsheaves.intlat import QZ, IntMatrix, qz_dot
from qcsheaves.neron import (GaloisLattice, RingSpec, component_group, level_system_check, torus_aut,
                             torus_kernel, truncated_units)
from qcsheaves.qcsheaf import (automorphisms, class_key, coboundary_matrix, commutator_pairing,
                               enumerate_classes, hom_set, is_isomorphic, is_morphism, is_valid,
                               isomorphism_obstruction, norm_functor, norm_index, pullback, random_sheaf,
                               sheaf_from_character, tensor, trace, trace_values, twist)

SEED = 20240601
RESULTS = {}


def record(number: int, title: str, ok: bool, detail: str):
    RESULTS[number] = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    assert ok, RESULTS[number]


@functools.lru_cache(maxsize=None)
def classes_of(E):
    return tuple(enumerate_classes(E))


def suite():
    return models_up_to(12)


# ---------------------------------------------------------------- 1


def test_criterion_01_etale_classification():
    t0 = time.perf_counter()
    bad = []
    for E in suite():
        ext = exterior_square(FrobModule(E.points, E.frob))
        expected = coinvariants(ext)[0].order * fixed_points(E)[0].order
        got = len(classes_of(E))
        if got != expected:
            bad.append((str(E), got, expected))
    elapsed = time.perf_counter() - t0
    E22 = model([2, 2])
    k22 = sum(1 for Q in classes_of(E22) if all(v.is_zero() for v in trace(Q)))
    ok = not bad and len(classes_of(E22)) == 8 and k22 == 2 and elapsed < 60
    record(1, "etale classification", ok,
           f"{len(suite())} models, {len(bad)} mismatches, (Z/2)^2 gives {len(classes_of(E22))} "
           f"with kernel {k22}, {elapsed:.1f}s")


# ---------------------------------------------------------------- 2


def test_criterion_02_cyclicity():
    bad = []
    count = 0
    for k in range(1, 17):
        for f in abelian_groups_of_order(k):
            G = FgAbGroup(f)
            trivial = kernel_structure(FrobModule.trivial_action(G)).is_trivial()
            count += 1
            if trivial != G.is_cyclic():
                bad.append(f)
    for f, cyclic in (((0,), True), ((0, 0), False)):
        count += 1
        if kernel_structure(FrobModule.trivial_action(FgAbGroup(f))).is_trivial() != cyclic:
            bad.append(f)
    record(2, "cyclicity", not bad, f"{count} groups, {len(bad)} disagreements")


# ---------------------------------------------------------------- 3


def test_criterion_03_s_bijective():
    models = models_up_to(8)
    bad = [str(E) for E in models if not verify_s_iso(E, seed=SEED).bijective]
    record(3, "S_G bijective", not bad, f"{len(models)} models with |A| <= 8, {len(bad)} failures")


# ---------------------------------------------------------------- 4


def test_criterion_04_trace_surjective_and_split():
    n_chars = n_pairs = 0
    bad = []
    for E in suite():
        H, _ = fixed_points(E)
        chars = characters(H)
        sections = {}
        for chi in chars:
            Q = sheaf_from_character(E, chi)
            n_chars += 1
            if not is_valid(Q) or trace(Q) != tuple(chi):
                bad.append((str(E), "trace", chi))
            sections[tuple(chi)] = Q
        for i, c1 in enumerate(chars):
            for c2 in chars[i:]:
                s = tuple(u + v for u, v in zip(c1, c2))
                n_pairs += 1
                if is_isomorphic(tensor(sections[tuple(c1)], sections[tuple(c2)]), sections[s]) is None:
                    bad.append((str(E), "split", c1, c2))
    record(4, "trace surjective and split", not bad,
           f"{n_chars} characters, {n_pairs} pairs, {len(bad)} failures")


# ---------------------------------------------------------------- 5


def _certificate_ok(Q, Qp) -> bool:
    cert = isomorphism_obstruction(Q, Qp)
    if cert is None:
        return False
    _, u = cert
    M = coboundary_matrix(Q.base)
    if any(v for v in (IntMatrix.from_rows([list(u)], M.rows) @ M).entries[0]):
        return False
    diff = [v - w for w, v in zip(Q.vector(), Qp.vector())]
    return not qz_dot(list(u), diff).is_zero()


def test_criterion_05_trivial_or_iso():
    rng = np.random.default_rng(SEED)
    models = suite()
    iso = zero = 0
    bad = []
    for _ in range(1000):
        E = models[int(rng.integers(len(models)))]
        Q = random_sheaf(E, rng)
        if rng.random() < 0.5:
            Qp = twist(Q, [QZ(int(v), 24) for v in rng.integers(0, 24, size=E.order)])
        else:
            Qp = random_sheaf(E, rng)
        H = hom_set(Q, Qp)
        if H.zero_only:
            zero += 1
            # no nonzero morphism: the obstruction rules out every stalk family
            if not _certificate_ok(Q, Qp):
                bad.append(str(E))
        else:
            iso += 1
            rho = list(H.witness)
            if not (is_morphism(Q, Qp, rho) and is_morphism(Qp, Q, [-r for r in rho])):
                bad.append(str(E))
    record(5, "trivial or iso", not bad, f"1000 pairs ({iso} isomorphic, {zero} zero only), {len(bad)} violations")


# ---------------------------------------------------------------- 6


@functools.lru_cache(maxsize=None)
def _character_table(E):
    """Values of every character of A on every element, as integers mod exp(A)."""
    L = E.exponent
    rows = [[evaluate(chi, x) for x in E.elements] for chi in characters(E.points)]
    return L, np.array([[v.num * (L // v.den) for v in r] for r in rows], dtype=np.int64)


def _count_automorphisms_directly(Q) -> int:
    """Stalk scalar families rho with both morphism squares commuting for Q -> Q.

    The multiplicativity square forces rho to be a character of A, so only
    characters are tried.
    """
    E = Q.base
    Lc, R = _character_table(E)
    L, A, B = Q.arrays
    M = np.lcm(L, Lc)
    R = R * (M // Lc)
    A = A * (M // L)
    B = B * (M // L)
    add, F = E.add_table, E.frob_index
    sq_mu = (A[None] + R[:, add]) % M == (R[:, :, None] + R[:, None, :] + A[None]) % M
    sq_phi = (B[None] + R[:, F]) % M == (R + B[None]) % M
    return int(np.sum(sq_mu.all(axis=(1, 2)) & sq_phi.all(axis=1)))


def test_criterion_06_automorphism_counts():
    rng = np.random.default_rng(SEED + 6)
    bad = []
    total = 0
    for E in suite():
        expected = coinvariants(FrobModule(E.points, E.frob))[0].order
        for _ in range(100):
            Q = random_sheaf(E, rng)
            total += 1
            n_auts = len(automorphisms(Q))
            if n_auts != expected or _count_automorphisms_directly(Q) != expected:
                bad.append(str(E))
    record(6, "automorphism counts", not bad, f"{total} sheaves, {len(bad)} mismatches")


# ---------------------------------------------------------------- 7


def test_criterion_07_norm_trace_identity():
    checked = 0
    failures = []
    symmetric_failures = 0
    for E in suite():
        for Q in classes_of(E):
            symmetric = all(v.is_zero() for v in commutator_pairing(Q))
            for n in range(1, 5):
                N = norm_functor(Q, n)
                nm = norm_index(E, n)
                Fn = N.base.frob_index
                for i in range(E.order):
                    if Fn[i] != i:
                        continue
                    checked += 1
                    if N.b[i] != Q.b[int(nm[i])]:
                        if not failures:
                            failures.append((str(E), n, E.elements[i], str(N.b[i]), str(Q.b[int(nm[i])])))
                        else:
                            failures.append(None)
                        symmetric_failures += symmetric
    detail = f"{checked} points checked, {len(failures)} mismatches"
    if failures:
        E, n, x, lhs, rhs = failures[0]
        detail += (f" (all on sheaves with nonzero commutator pairing: {symmetric_failures == 0});"
                   f" first: {E}, n={n}, x={x}, trace={lhs}, chi(Nm x)={rhs}")
    record(7, "norm functor trace identity", not failures, detail)


# ---------------------------------------------------------------- 8


def test_criterion_08_exterior_square_oracle():
    bad = []
    count = 0
    for k in range(1, 13):
        for f in abelian_groups_of_order(k):
            G = FgAbGroup(f)
            count += 1
            if exterior_square(G).group.order != h2_finite_group_oracle(G).count:
                bad.append(f)
    record(8, "exterior square vs oracle", not bad, f"{count} groups, {len(bad)} mismatches")


# ---------------------------------------------------------------- 9


def test_criterion_09_torus_layer():
    norm_one = GaloisLattice(1, ([[-1]],), [[1]])
    split2 = GaloisLattice(2, (), [[1, 0], [0, 1]])
    P = component_group(norm_one)
    checks = {
        "pi0 = Z/2": P.group.factors == (2,) and P.frob.equals(GroupHom.identity(P.group)),
        "norm-one kernel trivial": torus_kernel(norm_one).is_trivial(),
        "split kernel": torus_kernel(split2) == DualStructure(1, ()),
        "split aut": torus_aut(split2) == DualStructure(2, ()),
    }
    failed = [k for k, v in checks.items() if not v]
    record(9, "torus layer", not failed, "all structures equal" if not failed else f"failed: {failed}")


# ---------------------------------------------------------------- 10


def test_criterion_10_unit_groups():
    t0 = time.perf_counter()
    bad = []
    rings = [("p-adic", p) for p in (2, 3, 5)] + [("laurent", q) for q in (2, 3, 4)]
    for kind, q in rings:
        for level in range(4):
            R = RingSpec(kind, q, level)
            if truncated_units(R).factors != structure_from_histogram(unit_orders(kind, q, level)):
                bad.append((kind, q, level))
        for n in range(4):
            for m in range(n, 4):
                r = level_system_check(RingSpec(kind, q, 0), n, m)
                if not (r["surjective"] and r["kernel_order"] == q ** (m - n)):
                    bad.append((kind, q, n, m))
    samples = [truncated_units(RingSpec("p-adic", 3, 2)).factors == (18,),
               truncated_units(RingSpec("laurent", 2, 2)).factors == (4,)]
    elapsed = time.perf_counter() - t0
    ok = not bad and all(samples) and elapsed < 30
    record(10, "unit groups", ok, f"{len(rings) * 4} rings, {len(bad)} mismatches, {elapsed:.1f}s")


# ---------------------------------------------------------------- 11


def _hom(src, dst, rows):
    return EtaleHom(src, dst, GroupHom(src.points, dst.points, IntMatrix.from_rows(rows, src.points.ngens)))


def battery() -> list:
    Z2, Z4, Z8 = model([2]), model([4]), model([8])
    Z4t = model([4], [[3]])
    V2 = model([2, 2], SWAP)
    V3 = model([3, 3], SWAP)
    Z3 = model([3])
    _, (i2, i3), (p2, p3) = product_maps(Z2, Z3)
    return [
        _hom(Z2, Z4, [[2]]), _hom(Z4, Z8, [[2]]), _hom(Z4, Z2, [[1]]), _hom(Z8, Z4, [[1]]),
        _hom(Z4, Z4, [[3]]), _hom(Z4t, Z4t, [[3]]), _hom(Z4t, Z2, [[1]]), _hom(Z2, Z4t, [[2]]),
        _hom(V2, V2, [[0, 1], [1, 0]]), _hom(V2, Z2, [[1, 1]]), _hom(Z2, V2, [[1], [1]]),
        _hom(V3, Z3, [[1, 1]]), _hom(Z3, V3, [[1], [1]]),
        i2, i3, p2, p3,
        canonical_inclusion(model([5], [[2]]), 2), canonical_inclusion(V2, 2),
        _hom(V3, V3, [[1, 1], [1, 1]]),
    ]


def test_criterion_11_functoriality():
    homs = battery()
    assert len(homs) == 20
    rng = np.random.default_rng(SEED + 11)
    bad = []
    pairs = 0
    for f in homs:
        for _ in range(3):
            Q = random_sheaf(f.target, rng)
            P = pullback(f, Q)
            vals_q = trace_values(Q)
            if not is_valid(P) or any(v != vals_q[f.hom(x)] for x, v in trace_values(P).items()):
                bad.append(("trace", str(f.source), str(f.target)))
    for f in homs:
        for g in homs:
            if f.target != g.source:
                continue
            pairs += 1
            for _ in range(2):
                Q = random_sheaf(g.target, rng)
                if pullback(g.compose(f), Q) != pullback(f, pullback(g, Q)):
                    bad.append(("compose", str(f.source), str(g.target)))
    record(11, "functoriality", not bad and pairs > 0,
           f"20 homomorphisms, {pairs} composable pairs, {len(bad)} failures")


def test_class_keys_are_consistent_on_suite_sample():
    # guard for criteria 1 and 4: distinct representatives have distinct keys
    for E in models_up_to(6):
        keys = [class_key(Q) for Q in classes_of(E)]
        assert len(set(keys)) == len(keys)


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    for k in sorted(RESULTS):
        print(RESULTS[k])
    sys.exit(1 if failed else 0)
