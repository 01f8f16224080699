"""Command line front end.

Every subcommand prints one JSON document on stdout (and to ``--json-out``
when given) and exits with 0 on a positive outcome, 1 on a domain-negative
outcome or domain error, 2 on unparsable input and 3 when a numerical
decision was inconclusive.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import certificates as ct
from . import convexity as cx
from . import cpmap as cm
from . import dilation as dl
from . import extremal as ex
from . import sampling
from . import serialize as sz
from .certificates import EXTREME, INCONCLUSIVE, NOT_EXTREME
from .errors import CpextError, ParseError, ZeroMap
from .linalg import Tolerances

EXIT_OK, EXIT_NEGATIVE, EXIT_PARSE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
VERDICT_EXIT = {EXTREME: EXIT_OK, NOT_EXTREME: EXIT_NEGATIVE, INCONCLUSIVE: EXIT_INCONCLUSIVE}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _tolerances(args) -> Tolerances:
    try:
        return Tolerances(eig_cut=args.tol_eig, inv_cut=args.tol_inv, eq_tol=args.tol_eq)
    except CpextError as exc:
        raise ParseError(str(exc)) from exc


def _blocks(text: str) -> cm.AlgebraSpec:
    try:
        blocks = tuple(int(x) for x in text.replace(" ", "").split(",") if x)
        return cm.AlgebraSpec(blocks)
    except (ValueError, CpextError) as exc:
        raise ParseError(f"bad algebra {text!r}: {exc}") from exc


def _unit(text: str, d: int, rng: np.random.Generator) -> np.ndarray:
    """``identity``, ``zero``, ``diag:a,b,...``, ``random:KIND`` or a JSON matrix file."""
    if text in ("identity", "zero"):
        return sampling.unit_matrix(text, d, rng)
    if text.startswith("diag:"):
        try:
            values = [float(x) for x in text[5:].split(",")]
        except ValueError as exc:
            raise ParseError(f"bad diagonal unit {text!r}") from exc
        if len(values) != d:
            raise ParseError(f"diagonal unit has {len(values)} entries for hdim {d}")
        return np.diag(values).astype(complex)
    if text.startswith("random:"):
        try:
            return sampling.unit_matrix(text[7:], d, rng)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    if os.path.exists(text):
        return sz.matrix_from_json(sz.read_json(text), d, d)
    raise ParseError(f"unrecognized unit spec {text!r}")


# -- subcommands --------------------------------------------------------------

def cmd_verify(args, tol):
    phi = sz.read_map(args.map)
    rep = cm.verify(phi, tol)
    return {"report": rep.as_dict()}, EXIT_OK if rep.is_cp else EXIT_NEGATIVE


def cmd_extreme(args, tol):
    phi = sz.read_map(args.map)
    model, verdict = ex.decide(phi, args.model, tol, args.seed)
    payload = dict(sz.verdict_to_json(verdict), model=model)
    if args.plot_dir:
        from . import figures

        payload["figures"] = figures.verdict_figure(phi, verdict, args.plot_dir)
    return payload, VERDICT_EXIT[verdict.kind]


def cmd_dilate(args, tol):
    phi = sz.read_map(args.map)
    dil = dl.minimal_dilation(phi, tol)
    try:
        pure = dl.is_pure(phi, tol)
    except ZeroMap:
        pure = None
    return {
        "dilation": sz.dilation_to_json(dil),
        "multiplicities": list(dil.mult),
        "commutant_dim": sum(r * r for r in dil.mult),
        "is_pure": pure,
    }, EXIT_OK


def cmd_rn(args, tol):
    phi = sz.read_map(args.phi)
    psi = sz.read_map(args.psi)
    dil = dl.minimal_dilation(phi, tol)
    D = dl.rn_derivative(psi, phi, tol, dil)
    diagonals = np.concatenate([np.diag(M) for M in D.blocks]) if D.blocks else np.zeros(0)
    scalar = None
    if diagonals.size:
        t = diagonals[0]
        if all(np.allclose(M, t * np.eye(M.shape[0]), atol=tol.eq_tol) for M in D.blocks):
            scalar = [float(t.real), float(t.imag)]
    return {
        "derivative": sz.commutant_to_json(D),
        "multiplicities": list(dil.mult),
        "scalar": scalar,
        "residual": cm.map_distance(dl.dilated_map(dil, D), psi),
    }, EXIT_OK


def cmd_equiv(args, tol):
    phi = sz.read_map(args.phi)
    psi = sz.read_map(args.psi)
    search = ex.equivalent_unitary if args.kind == "unitary" else ex.equivalent_invertible
    same, X = search(phi, psi, tol, args.seed)
    obstruction = ct.equivalence_obstruction(phi, psi, args.kind, tol)
    return {
        "equivalent": same,
        "kind": args.kind,
        "intertwiner": sz.matrix_to_json(X) if same else None,
        "obstruction": obstruction,
    }, EXIT_OK if same else EXIT_NEGATIVE


def cmd_gen(args, tol):
    alg = _blocks(args.algebra)
    if args.hdim < 0:
        raise ParseError("hdim must be non-negative")
    rng = np.random.default_rng([args.seed, 1])
    P = _unit(args.unit, args.hdim, rng)
    phi = cx.gen(args.kind, alg, args.hdim, P, args.seed, tol)
    payload = sz.map_to_json(phi)
    payload["generator"] = {"kind": args.kind, "unit": args.unit, "seed": args.seed}
    return payload, EXIT_OK


def cmd_km(args, tol):
    phi = sz.read_map(args.map)
    spec = cx.km_reduce_ccp(phi, tol)
    v = cx.validate(spec, tol, "ccp")
    return {
        "combination": sz.combination_to_json(spec),
        "valid": v.valid,
        "coefficient_residual": v.residual,
        "recombination_residual": cm.map_distance(cx.combine(spec, tol), phi),
        "term_units": [cm.classify_unit(cm.unit(t), tol).tag for _, t in spec.terms],
    }, EXIT_OK if v.valid else EXIT_NEGATIVE


def cmd_check(args, tol):
    phi = sz.read_map(args.map)
    verdict = sz.verdict_from_json(sz.read_json(args.report))
    if verdict.kind == INCONCLUSIVE:
        return {"verdict": verdict.kind, "ok": None, "failures": ["nothing to check"]}, EXIT_INCONCLUSIVE
    res = ct.check_verdict(phi, verdict, tol)
    return dict(res.as_dict(), verdict=verdict.kind), EXIT_OK if res.ok else EXIT_NEGATIVE


def cmd_suite(args, tol):
    from . import suite

    try:
        max_block, max_hdim = (int(x) for x in args.dims.split(","))
    except ValueError as exc:
        raise ParseError(f"--dims expects MAX_BLOCK,MAX_HDIM, got {args.dims!r}") from exc
    if args.count is not None and args.count < 0:
        raise ParseError("--count must be non-negative")
    ctx = suite.Context(args.seed, args.count, max_block, max_hdim, tol)

    def progress(res):
        status = "PASS" if res.ok else "FAIL"
        print(f"{status} {res.name} {res.passed}/{res.cases} ({res.seconds:.1f}s)", file=sys.stderr, flush=True)

    summary, results = suite.run(ctx, args.only, progress)
    if args.plot_dir:
        from . import figures

        summary["figures"] = figures.suite_figures(results, args.plot_dir)
    return summary, EXIT_OK if summary["passed"] else EXIT_NEGATIVE


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-eig", type=float, default=1e-9, help="eigenvalue cutoff (relative)")
    common.add_argument("--tol-inv", type=float, default=1e-8, help="singular-value cutoff (relative)")
    common.add_argument("--tol-eq", type=float, default=1e-8, help="equality tolerance (relative)")
    common.add_argument("--json-out", metavar="PATH", help="also write the JSON output to PATH")

    parser = _Parser(prog="cpext", description="Extremality of completely positive maps on finite-dimensional C*-algebras.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", parents=[common], help="CP, unit class, contractivity")
    p.add_argument("map")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("extreme", parents=[common], help="decide C*-extremality and emit a certificate or witness")
    p.add_argument("map")
    p.add_argument("--model", choices=ex.MODELS, default="auto")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--plot-dir", metavar="DIR", help="write a Choi-spectrum figure here")
    p.set_defaults(func=cmd_extreme)

    p = sub.add_parser("dilate", parents=[common], help="minimal Stinespring dilation")
    p.add_argument("map")
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("rn", parents=[common], help="Radon-Nikodym derivative of PSI with respect to PHI")
    p.add_argument("phi")
    p.add_argument("psi")
    p.set_defaults(func=cmd_rn)

    p = sub.add_parser("equiv", parents=[common], help="unitary or invertible equivalence")
    p.add_argument("phi")
    p.add_argument("psi")
    p.add_argument("--kind", choices=("unitary", "invertible"), default="unitary")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("gen", parents=[common], help="seeded map generator")
    p.add_argument("--kind", choices=cx.GEN_KINDS, required=True)
    p.add_argument("--algebra", required=True, help="comma-separated block sizes, e.g. 2,1")
    p.add_argument("--hdim", type=int, required=True)
    p.add_argument("--unit", default="identity",
                   help="identity | zero | diag:a,b,... | random:KIND | path to a JSON matrix")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("km", parents=[common], help="two-term reduction of a contractive map")
    p.add_argument("map")
    p.set_defaults(func=cmd_km)

    p = sub.add_parser("suite", parents=[common], help="run the property suite")
    p.add_argument("--seed", type=int, default=0, help="suite seed (recorded in the summary)")
    p.add_argument("--count", type=int, default=None, help="instances per property (overrides defaults)")
    p.add_argument("--dims", default="4,6", help="MAX_BLOCK,MAX_HDIM")
    p.add_argument("--only", action="append", help="property or module name; repeatable")
    p.add_argument("--plot-dir", metavar="DIR", help="write pass-rate and residual figures here")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("check", parents=[common], help="re-validate a report against its map")
    p.add_argument("map")
    p.add_argument("report")
    p.set_defaults(func=cmd_check)
    return parser


def _emit(payload: dict, path: str | None) -> None:
    text = sz.dumps(payload)
    print(text)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = getattr(args, "seed", None)
    try:
        tol = _tolerances(args)
        payload, code = args.func(args, tol)
        if args.command == "gen":
            _emit(payload, args.json_out)
        else:
            _emit(sz.report(args.command, payload, tol, seed), args.json_out)
        return code
    except CpextError as exc:
        _emit({"command": args.command, "error": type(exc).__name__, "message": str(exc)}, args.json_out)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
