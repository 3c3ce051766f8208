"""Classification reports: kernel of the trace, the fibration of classes over
characters of rational points, and the assembly for smooth models."""
from __future__ import annotations

from dataclasses import dataclass, field

from .etale import EtaleGroupModel, fixed_points
from .fgab import (DualStructure, FgAbGroup, FrobModule, GroupHom, characters, dual_of_coinvariants,
                   exterior_square)
from .intlat import QZ, IntMatrix
from .qcsheaf import (class_key, enumerate_classes, is_isomorphic, is_valid,
                      sheaf_from_character, tensor, trace)

DEFAULT_BOUND = 12


def _frob_module(E) -> FrobModule:
    if isinstance(E, FrobModule):
        return E
    return FrobModule(E.points, E.frob)


def kernel_structure(E) -> DualStructure:
    """Shape of the kernel of the trace map: the dual of (Lambda^2 A)_F.

    Accepts an EtaleGroupModel or a FrobModule (which may have free part).
    """
    return dual_of_coinvariants(exterior_square(_frob_module(E)))


@dataclass
class ClassificationReport:
    base: EtaleGroupModel
    characters: list            # characters of A^F, values on generators
    sections: list              # sheaf_from_character for each character
    kernel: list                # kernel representatives (trivial trace)
    total: int
    cross_checked: bool
    enumerated: int | None
    trace_exact: bool
    split: bool
    problems: list = field(default_factory=list)

    def fiber(self, i: int) -> list:
        """All classes with trace characters[i]: the section twisted by the kernel."""
        s = self.sections[i]
        return [tensor(s, k) for k in self.kernel]

    def to_json(self) -> dict:
        return {
            "characters": len(self.characters),
            "kernel": len(self.kernel),
            "classes": self.total,
            "enumerated": self.enumerated,
            "cross_checked": self.cross_checked,
            "trace_exact": self.trace_exact,
            "split": self.split,
            "problems": self.problems,
        }


def _add_chars(c1, c2) -> tuple:
    return tuple(u + v for u, v in zip(c1, c2))


def classify(E: EtaleGroupModel, bound: int = DEFAULT_BOUND, split_pairs: int | None = None) -> ClassificationReport:
    """Classes fibred over characters of A^F with fibre the trace kernel.

    Within the bound, every class is enumerated and matched against the
    twists section(chi) (x) kernel; the section is checked to be
    multiplicative up to isomorphism on pairs of characters (all pairs, or
    the first split_pairs of them).
    """
    H, _ = fixed_points(E)
    chars = characters(H)
    sections = [sheaf_from_character(E, chi) for chi in chars]
    problems = []
    trace_exact = True
    for chi, s in zip(chars, sections):
        if not is_valid(s) or trace(s) != tuple(chi):
            trace_exact = False
            problems.append({"character": [str(v) for v in chi], "reason": "section has wrong trace"})

    index = {tuple(c): i for i, c in enumerate(chars)}
    keys = [class_key(s) for s in sections]
    split = True
    pairs = [(i, j) for i in range(len(chars)) for j in range(i, len(chars))]
    if split_pairs is not None:
        pairs = pairs[:split_pairs]
    for i, j in pairs:
        k = index[_add_chars(chars[i], chars[j])]
        if class_key(tensor(sections[i], sections[j])) != keys[k]:
            split = False
            problems.append({"pair": [i, j], "reason": "section is not multiplicative"})

    kernel_order = kernel_structure(E).torsion_order
    total = len(chars) * kernel_order
    if E.order > bound:
        # structural count only; kernel representatives need enumeration
        return ClassificationReport(E, chars, sections, [], total, False, None, trace_exact, split, problems)

    classes = enumerate_classes(E)
    kernel = [Q for Q in classes if all(v.is_zero() for v in trace(Q))]
    twisted = {class_key(tensor(s, k)) for s in sections for k in kernel}
    enumerated_keys = {class_key(Q) for Q in classes}
    cross = (len(classes) == total and len(kernel) == kernel_order
             and twisted == enumerated_keys and len(twisted) == total)
    if not cross:
        problems.append({"reason": "enumeration disagrees with the fibration",
                         "enumerated": len(classes), "expected": total})
    return ClassificationReport(E, chars, sections, kernel, total, cross, len(classes),
                                trace_exact, split, problems)


def section_is_multiplicative(E: EtaleGroupModel, chi1, chi2) -> bool:
    """Exact check that section(chi1) (x) section(chi2) is isomorphic to section(chi1 + chi2)."""
    lhs = tensor(sheaf_from_character(E, chi1), sheaf_from_character(E, chi2))
    rhs = sheaf_from_character(E, _add_chars(chi1, chi2))
    return is_isomorphic(lhs, rhs) is not None


# ---------------------------------------------------------------- smooth models


@dataclass(frozen=True)
class RationalPoints:
    """G(k) with the maps G0(k) -> G(k) -> pi0(k)."""

    group: FgAbGroup
    inclusion: GroupHom
    projection: GroupHom


@dataclass(frozen=True)
class SmoothModel:
    """A smooth commutative group over k, seen through G0(k) and (pi0, F)."""

    identity_component_points: FgAbGroup
    pi0: EtaleGroupModel
    rational_points: RationalPoints | None = None

    def __post_init__(self):
        if not self.identity_component_points.is_finite():
            raise ValueError("G0(k) must be finite")
        problems = self.exactness_problems()
        if problems:
            raise ValueError("; ".join(problems))

    def exactness_problems(self) -> list:
        R = self.rational_points
        if R is None:
            return []
        H, _ = fixed_points(self.pi0)
        out = []
        if R.inclusion.source != self.identity_component_points or R.inclusion.target != R.group:
            out.append("inclusion must map G0(k) to G(k)")
        if R.projection.source != R.group or R.projection.target != H:
            out.append("projection must map G(k) to the rational points of pi0")
        if out:
            return out
        if not R.inclusion.is_well_defined() or not R.projection.is_well_defined():
            out.append("structure maps are not well defined")
            return out
        if not R.inclusion.is_injective():
            out.append("G0(k) -> G(k) is not injective")
        if not R.projection.is_surjective():
            out.append("G(k) -> pi0(k) is not surjective")
        if not R.projection.compose(R.inclusion).equals(GroupHom.zero(R.inclusion.source, H)):
            out.append("composite G0(k) -> pi0(k) is not zero")
        if R.group.order != self.identity_component_points.order * H.order:
            out.append("orders do not multiply, so the middle is not exact")
        return out

    @classmethod
    def from_json(cls, data) -> "SmoothModel":
        pi0 = EtaleGroupModel.from_json(data.get("pi0", {"factors": []}))
        g0_factors = data.get("identity_component", {"factors": []})["factors"]
        R = None
        if data.get("rational_points") is None:
            g0 = FgAbGroup.from_json({"factors": g0_factors})
        else:
            # the structure maps are written in these exact coordinates
            g0 = FgAbGroup(tuple(g0_factors))
            r = data["rational_points"]
            G = FgAbGroup(tuple(r["factors"]))
            H, _ = fixed_points(pi0)
            R = RationalPoints(G, GroupHom(g0, G, IntMatrix.from_json(r["inclusion"])),
                               GroupHom(G, H, IntMatrix.from_json(r["projection"])))
        return cls(g0, pi0, R)


def smooth_model_report(S: SmoothModel, bound: int = DEFAULT_BOUND) -> dict:
    """Orders and structures in the two exact sequences for QC(G)/iso.

    0 -> QC(pi0)/iso -> QC(G)/iso -> G0(k)^* -> 0, and
    0 -> H^2(pi0, Q/Z)^F -> QC(G)/iso -> G(k)^* -> 0.
    The extension class of QC(G)/iso is not determined by these data.
    """
    pi0 = S.pi0
    H, _ = fixed_points(pi0)
    kernel = kernel_structure(pi0)
    g0 = S.identity_component_points.order
    if S.rational_points is not None:
        gk = S.rational_points.group.order
        gk_source = "given"
    else:
        gk = g0 * H.order
        gk_source = "from exactness of 0 -> G0(k) -> G(k) -> pi0(k) -> 0"
    qc_pi0 = kernel.torsion_order * H.order
    qc_G = kernel.torsion_order * gk
    aut = dual_of_coinvariants(FrobModule(pi0.points, pi0.frob))
    cross = False
    enumerated = None
    if pi0.order <= bound:
        enumerated = len(enumerate_classes(pi0))
        cross = enumerated == qc_pi0 and qc_G == qc_pi0 * g0
    return {
        "qciso_order": qc_G,
        "kernel": kernel.to_json(),
        "aut": aut.to_json(),
        "sequence": {
            "qciso_pi0": qc_pi0,
            "qciso_G": qc_G,
            "connected_characters": g0,
            "rational_points": gk,
            "rational_points_source": gk_source,
            "trace_kernel": kernel.torsion_order,
        },
        "enumerated_pi0_classes": enumerated,
        "cross_checked": cross,
        "extension_class": "not determined by these data",
    }


def character_values(chi) -> list:
    return [str(QZ.parse(v)) for v in chi]
