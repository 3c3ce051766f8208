import pytest

from helpers import structure_from_histogram, unit_orders
from qcsheaves.fgab import DualStructure
from qcsheaves.intlat import IntMatrix
from qcsheaves.neron import (GaloisLattice, LatticeError, RingSpec, _torsion_counts_direct, component_group,
                             level_system_check, quasicharacter_count, torus_aut, torus_kernel,
                             truncated_units)


# ---------------------------------------------------------------- lattices


def test_lattice_validation():
    with pytest.raises(LatticeError):
        GaloisLattice(1, ([[2]],), [[1]])
    with pytest.raises(LatticeError):
        GaloisLattice(1, ([[1, 0]],), [[1]])
    with pytest.raises(LatticeError):
        GaloisLattice(2, ([[1, 1], [0, 1]],), [[1, 0], [0, 1]], inertia_order_bound=50)
    # frob must normalize inertia: <diag(-1, 1)> is not stable under swap
    with pytest.raises(LatticeError):
        GaloisLattice(2, ([[-1, 0], [0, 1]],), [[0, 1], [1, 0]])
    L = GaloisLattice(1, ([[-1]],), [[1]])
    assert GaloisLattice.from_json(L.to_json()) == L


def test_component_group_examples():
    P = component_group(GaloisLattice(2, (), [[1, 0], [0, 1]]))
    assert P.group.factors == (0, 0)
    P = component_group(GaloisLattice(1, ([[-1]],), [[1]]))
    assert P.group.factors == (2,)
    P = component_group(GaloisLattice(2, ([[0, 1], [1, 0]],), [[1, 0], [0, 1]]))
    assert P.group.factors == (0,)


def test_torus_kernel_examples():
    assert torus_kernel(GaloisLattice(1, ([[-1]],), [[1]])).is_trivial()
    assert torus_kernel(GaloisLattice(1, (), [[-1]])).is_trivial()
    assert torus_kernel(GaloisLattice(2, (), [[1, 0], [0, 1]])) == DualStructure(1, ())
    # inertia -1 on Z^2 gives pi0 = (Z/2)^2
    L = GaloisLattice(2, ([[-1, 0], [0, -1]],), [[1, 0], [0, 1]])
    assert component_group(L).group.factors == (2, 2)
    assert torus_kernel(L) == DualStructure(0, (2,))


def test_torus_aut_examples():
    assert torus_aut(GaloisLattice(2, (), [[1, 0], [0, 1]])) == DualStructure(2, ())
    assert torus_aut(GaloisLattice(1, ([[-1]],), [[1]])) == DualStructure(0, (2,))
    assert torus_aut(GaloisLattice(1, (), [[-1]])) == DualStructure(0, (2,))


def test_component_group_under_unimodular_change_of_basis():
    U = IntMatrix.from_rows([[2, 1], [1, 1]])
    Uinv = IntMatrix.from_rows([[1, -1], [-1, 2]])
    for inertia, frob in ((([[-1, 0], [0, 1]],), [[1, 0], [0, 1]]),
                          (([[0, 1], [1, 0]],), [[1, 0], [0, 1]]),
                          (([[-1, 0], [0, -1]],), [[0, 1], [1, 0]])):
        L = GaloisLattice(2, inertia, frob)
        conj = tuple(U @ g @ Uinv for g in L.inertia_gens)
        Lc = GaloisLattice(2, conj, U @ L.frob @ Uinv)
        assert component_group(L).group == component_group(Lc).group
        assert torus_kernel(L) == torus_kernel(Lc)
        assert torus_aut(L) == torus_aut(Lc)


# ---------------------------------------------------------------- unit groups


def test_ring_spec_validation():
    with pytest.raises(ValueError):
        RingSpec("p-adic", 4, 1)
    with pytest.raises(ValueError):
        RingSpec("laurent", 6, 1)
    with pytest.raises(ValueError):
        RingSpec("other", 2, 1)
    R = RingSpec.from_json({"kind": "laurent", "q": 4, "level": 2})
    assert RingSpec.from_json(R.to_json()) == R


def test_truncated_units_examples():
    assert truncated_units(RingSpec("p-adic", 3, 2)).factors == (18,)
    assert truncated_units(RingSpec("laurent", 2, 2)).factors == (4,)
    for q in (2, 3, 4, 5):
        kind = "laurent" if q == 4 else "p-adic"
        assert truncated_units(RingSpec(kind, q, 0)).factors == ((q - 1,) if q > 2 else ())


@pytest.mark.parametrize("kind,q", [("p-adic", 2), ("p-adic", 3), ("p-adic", 5),
                                    ("laurent", 2), ("laurent", 3), ("laurent", 4)])
def test_truncated_units_against_naive_orders(kind, q):
    for level in range(4):
        R = RingSpec(kind, q, level)
        U = truncated_units(R)
        assert U.order == (q - 1) * q ** level
        hist = unit_orders(kind, q, level)
        assert U.factors == structure_from_histogram(hist)
        assert dict(hist) == _torsion_counts_direct(R)


def test_truncated_units_bound():
    with pytest.raises(ValueError):
        truncated_units(RingSpec("p-adic", 5, 3), bound=100)


def test_quasicharacter_count_examples():
    split1 = GaloisLattice(1, (), [[1]])
    split2 = GaloisLattice(2, (), [[1, 0], [0, 1]])
    assert quasicharacter_count(split1, RingSpec("p-adic", 3, 2))[0] == 18
    order, structure = quasicharacter_count(split2, RingSpec("laurent", 2, 2))
    assert order == 16 and structure == DualStructure(0, (4, 4))
    assert quasicharacter_count(split1, RingSpec("p-adic", 5, 0))[0] == 4
    with pytest.raises(LatticeError):
        quasicharacter_count(GaloisLattice(1, ([[-1]],), [[1]]), RingSpec("p-adic", 3, 1))


def test_level_system_examples():
    r = level_system_check(RingSpec("p-adic", 3, 0), 1, 2)
    assert r["surjective"] and r["kernel_order"] == 3 and r["kernel_ok"] and r["dual_embeds"]
    r = level_system_check(RingSpec("laurent", 2, 0), 1, 2)
    assert r["kernel_order"] == 2 and r["surjective"]
    r = level_system_check(RingSpec("p-adic", 5, 0), 2, 2)
    assert r["kernel_order"] == 1 and r["surjective"]
    with pytest.raises(ValueError):
        level_system_check(RingSpec("p-adic", 5, 0), 2, 1)


def test_quasicharacter_counts_are_consistent_across_levels():
    L = GaloisLattice(1, (), [[1]])
    for kind, q in (("p-adic", 3), ("laurent", 4)):
        for n, m in ((0, 1), (1, 3)):
            R = RingSpec(kind, q, 0)
            cn = quasicharacter_count(L, R.at_level(n))[0]
            cm = quasicharacter_count(L, R.at_level(m))[0]
            assert cm // cn == level_system_check(R, n, m)["kernel_order"]
