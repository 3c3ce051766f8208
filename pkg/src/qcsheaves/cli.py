"""Command-line front end.

    qcsheaves <group> <command> --input FILE|JSON [--json|--text] [--seed N] [--bound N]

Exit status: 0 on success, 1 on a domain error (the report names the
violated condition), 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import cohomology, dictionary, neron, qcsheaf
from .etale import EtaleGroupModel, fixed_points
from .fgab import FgAbGroup, FrobModule, coinvariants, dual_of_coinvariants, exterior_square, invariants
from .intlat import IntMatrix, smith_normal_form

SCHEMA_VERSION = "1.0"


class UsageError(Exception):
    pass


class DomainError(Exception):
    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report or {}


# ---------------------------------------------------------------- input helpers


def load_input(text: str | None):
    if text is None:
        raise UsageError("--input is required")
    if text == "-":
        raw = sys.stdin.read()
    elif os.path.exists(text):
        with open(text) as fh:
            raw = fh.read()
    else:
        raw = text
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise UsageError(f"input is neither a readable file nor valid JSON: {exc}") from None


def _model(data) -> EtaleGroupModel:
    return EtaleGroupModel.from_json(data.get("base", data) if isinstance(data, dict) else data)


def _sheaf(data) -> qcsheaf.QCSheafModel:
    return qcsheaf.QCSheafModel.from_json(data)


def _valid_sheaf(data) -> qcsheaf.QCSheafModel:
    Q = _sheaf(data)
    problems = qcsheaf.validate(Q)
    if problems:
        raise DomainError("sheaf tables violate the defining equations",
                          {"violations": [v.to_json() for v in problems]})
    return Q


def _pair(data):
    if "left" in data and "right" in data:
        return _sheaf(data["left"]), _sheaf(data["right"])
    if "sheaves" in data and len(data["sheaves"]) == 2:
        return _sheaf(data["sheaves"][0]), _sheaf(data["sheaves"][1])
    raise UsageError('expected {"left": sheaf, "right": sheaf}')


def _qz_list(values) -> list:
    return [str(v) for v in values]


def _element_map(E: EtaleGroupModel, values) -> dict:
    return {qcsheaf._element_key(x): str(v) for x, v in zip(E.elements, values)}


# ---------------------------------------------------------------- commands


def qc_validate(data, args) -> dict:
    Q = _sheaf(data)
    problems = qcsheaf.validate(Q)
    report = {"valid": not problems, "violations": [v.to_json() for v in problems]}
    if problems:
        raise DomainError("sheaf tables violate the defining equations", report)
    return report


def qc_trace(data, args) -> dict:
    Q = _valid_sheaf(data)
    H, _ = fixed_points(Q.base)
    vals = qcsheaf.trace_values(Q)
    return {"fixed_points": H.to_json(),
            "on_generators": _qz_list(qcsheaf.trace(Q)),
            "values": {qcsheaf._element_key(x): str(v) for x, v in vals.items()}}


def qc_tensor(data, args) -> dict:
    Q, Qp = _pair(data)
    return {"sheaf": qcsheaf.tensor(Q, Qp).to_json()}


def qc_iso(data, args) -> dict:
    Q, Qp = _pair(data)
    w = qcsheaf.is_isomorphic(Q, Qp)
    if w is not None:
        return {"isomorphic": True, "witness": _element_map(Q.base, w)}
    row, u = qcsheaf.isomorphism_obstruction(Q, Qp)
    return {"isomorphic": False, "witness": None,
            "certificate": {"row": row, "functional": list(u)}}


def qc_auts(data, args) -> dict:
    Q = _valid_sheaf(data)
    C, _ = coinvariants(FrobModule(Q.base.points, Q.base.frob))
    auts = qcsheaf.automorphisms(Q)
    return {"coinvariants": C.to_json(), "count": len(auts),
            "automorphisms": [_qz_list(chi) for chi in auts]}


def qc_classify(data, args) -> dict:
    E = _model(data)
    r = dictionary.classify(E, bound=args.bound)
    out = r.to_json()
    out["representatives"] = [{"character": _qz_list(chi), "sheaf": s.to_json()}
                              for chi, s in zip(r.characters, r.sections)]
    out["kernel_structure"] = dictionary.kernel_structure(E).to_json()
    return out


def coh_h2(data, args) -> dict:
    G = FgAbGroup.from_json(data)
    if not G.is_finite():
        raise DomainError("the oracle needs a finite group")
    res = cohomology.h2_finite_group_oracle(G, bound=args.bound)
    return {"group": G.to_json(), "classes": res.count,
            "exterior_square": exterior_square(G).group.to_json()}


def coh_total(data, args) -> dict:
    E = _model(data)
    return cohomology.total_h2(E, bound=args.bound).to_json()


def coh_verify_s(data, args) -> dict:
    E = _model(data)
    return cohomology.verify_s_iso(E, bound=args.bound, seed=args.seed).to_json()


def grp_snf(data, args) -> dict:
    M = IntMatrix.from_json(data)
    d = smith_normal_form(M)
    return {"diag": list(d.diag), "U": d.U.to_json(), "S": d.S.to_json(), "V": d.V.to_json()}


def grp_coinv(data, args) -> dict:
    M = FrobModule.from_json(data)
    C, proj = coinvariants(M)
    return {"invariants": invariants(M).to_json(), "coinvariants": C.to_json(),
            "projection": proj.matrix.to_json(), "dual": dual_of_coinvariants(M).to_json()}


def grp_ext2(data, args) -> dict:
    M = FrobModule.from_json(data)
    return exterior_square(M).to_json()


def smooth_report(data, args) -> dict:
    S = dictionary.SmoothModel.from_json(data)
    return dictionary.smooth_model_report(S, bound=args.bound)


def _lattice(data) -> neron.GaloisLattice:
    return neron.GaloisLattice.from_json(data.get("lattice", data))


def torus_component(data, args) -> dict:
    return neron.component_group(_lattice(data)).to_json()


def torus_kernel(data, args) -> dict:
    return neron.torus_kernel(_lattice(data)).to_json()


def torus_aut(data, args) -> dict:
    return neron.torus_aut(_lattice(data)).to_json()


def torus_count(data, args) -> dict:
    L = _lattice(data)
    R = neron.RingSpec.from_json(data["ring"])
    order, structure = neron.quasicharacter_count(L, R)
    return {"order": order, "structure": structure.to_json(),
            "units": neron.truncated_units(R).to_json()}


def torus_levels(data, args) -> dict:
    R = neron.RingSpec.from_json(data.get("ring", data))
    levels = data.get("levels")
    if levels is None or len(levels) != 2:
        raise UsageError('expected "levels": [n, m]')
    return neron.level_system_check(R, int(levels[0]), int(levels[1]))


REGISTRY = {
    "qc": {"validate": qc_validate, "trace": qc_trace, "tensor": qc_tensor, "iso": qc_iso,
           "auts": qc_auts, "classify": qc_classify},
    "coh": {"h2": coh_h2, "total": coh_total, "verify-s": coh_verify_s},
    "grp": {"snf": grp_snf, "coinv": grp_coinv, "ext2": grp_ext2},
    "smooth": {"report": smooth_report},
    "torus": {"component": torus_component, "kernel": torus_kernel, "aut": torus_aut,
              "count": torus_count, "levels": torus_levels},
}


# ---------------------------------------------------------------- output


def _render_text(obj, indent: int = 0) -> list:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.extend(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
    elif isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            lines.append(pad + json.dumps(obj))
        else:
            for v in obj:
                if isinstance(v, list) and all(not isinstance(u, (dict, list)) for u in v):
                    lines.append(f"{pad}- {json.dumps(v)}")
                else:
                    lines.append(f"{pad}-")
                    lines.extend(_render_text(v, indent + 1))
    else:
        lines.append(pad + json.dumps(obj))
    return lines


def render(report: dict, fmt: str) -> str:
    if fmt == "text":
        return "\n".join(_render_text(report))
    return json.dumps(report, sort_keys=True, indent=2)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", help="path to a JSON file, '-' for stdin, or inline JSON")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json", help="JSON output (default)")
    fmt.add_argument("--text", dest="format", action="store_const", const="text", help="plain text output")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized choices (default 0)")
    common.add_argument("--bound", type=int, default=cohomology.DEFAULT_BOUND,
                        help="largest group order for enumeration (default %(default)s)")
    common.set_defaults(format="json")

    parser = argparse.ArgumentParser(prog="qcsheaves", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)
    for gname, cmds in REGISTRY.items():
        gp = groups.add_parser(gname)
        sub = gp.add_subparsers(dest="command", required=True)
        for cname in cmds:
            sub.add_parser(cname, parents=[common])
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = REGISTRY[args.group][args.command]
    try:
        data = load_input(args.input)
        report = handler(data, args)
        code = 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 2
    except DomainError as exc:
        report = {"error": str(exc), **exc.report}
        code = 1
    except (ValueError, KeyError, TypeError, ArithmeticError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing field {exc}"
        report = {"error": msg, "kind": type(exc).__name__}
        code = 1
    report = {"schema_version": SCHEMA_VERSION, **report}
    print(render(report, args.format), file=stdout)
    if code:
        print(f"error: {report['error']}", file=stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
