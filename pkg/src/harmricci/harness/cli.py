"""Command-line front end: ``harmricci <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import geometry as geom
from .. import maps as mp_mod
from .. import phicurv
from ..expr import parse
from ..geometry import GeometryError, PotentialData, TensorValue
from ..jet import JetError
from ..solitons import (
    EngineConfig,
    MaxIterations,
    RigidModelSpec,
    SolitonData,
    SolitonError,
    SolverConfig,
    ansatz_solve,
    build_rigid_model,
    rigidity_classify,
    soliton_residual,
)
from . import catalog, manifest, report

ORDER_ENV = "HARMRICCI_JET_ORDER"


class UsageError(Exception):
    pass


# -- argument helpers -------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _default_order() -> int:
    raw = os.environ.get(ORDER_ENV)
    if raw is None:
        return EngineConfig().order
    try:
        order = int(raw)
    except ValueError:
        raise UsageError(f"{ORDER_ENV}={raw!r} is not an integer") from None
    if order < 2:
        raise UsageError(f"{ORDER_ENV} must be at least 2")
    return order


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=int, default=None, help=f"jet order (default 4, or ${ORDER_ENV})")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance by this factor")
    common.add_argument("--probes", type=int, default=None, help="regenerate N quasi-random probes")
    common.add_argument("--seed", type=int, default=None, help="seed for quasi-random probes")

    p = argparse.ArgumentParser(prog="harmricci", description="φ-curvature checks on harmonic-Ricci solitons")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tensors", parents=[common], help="print tensor components at a point")
    t.add_argument("file")
    t.add_argument("--at", type=_floats, required=True, help="comma-separated coordinates")
    t.add_argument("--tensor", action="append", default=None, choices=sorted(TENSORS))

    v = sub.add_parser("verify", parents=[common], help="run catalog identities")
    v.add_argument("files", nargs="*")
    v.add_argument("--gallery", action="store_true", help="verify every bundled gallery file")
    v.add_argument("--only", nargs="+", default=None, metavar="ID", help="identity ids or group names")
    v.add_argument("--json", default=None, metavar="OUT", help="write the JSON report ('-' for stdout)")
    v.add_argument("--list", action="store_true", help="print the catalog with anchors")

    s = sub.add_parser("soliton-check", parents=[common], help="evaluate the soliton equations")
    s.add_argument("file")

    r = sub.add_parser("rigid-model", parents=[common], help="emit a rigid product manifold file")
    r.add_argument("--einstein", required=True, metavar="FILE", help="harmonic-Einstein base")
    r.add_argument("-k", type=int, required=True)
    r.add_argument("--b", type=_floats, default=(), help="linear part of the potential")
    r.add_argument("--c", type=float, default=0.0, help="constant part of the potential")
    r.add_argument("-o", "--output", default="-", help="output path ('-' for stdout)")

    a = sub.add_parser("solve-ansatz", parents=[common], help="fit ansatz parameters")
    a.add_argument("file")
    a.add_argument("--target", action="append", default=[], metavar="NAME=VALUE",
                   help="lambda=... or alpha=...")
    a.add_argument("--max-iterations", type=int, default=SolverConfig().max_iterations)
    return p


# -- tensors ------------------------------------------------------------------------


def _with_potential(man: manifest.Manifest):
    if man.potential is None or man.potential.f is None:
        raise UsageError("this tensor needs a potential function f")
    return man.potential.f


TENSORS = {
    "christoffel": lambda man, p, o: {"christoffel": geom.christoffel(man.geo, p, o)},
    "riemann": lambda man, p, o: {"riemann": geom.curvature(man.geo, p, o)["riemann"]},
    "ricci": lambda man, p, o: {"ricci": geom.curvature(man.geo, p, o)["ricci"]},
    "scalar": lambda man, p, o: {"scalar": geom.curvature(man.geo, p, o)["scalar"]},
    "phi-ricci": lambda man, p, o: phicurv.phi_ricci(man.geo, man.map, man.alpha, p, o),
    "phi-cotton": lambda man, p, o: phicurv.phi_schouten_cotton(man.geo, man.map, man.alpha, p, o),
    "phi-weyl": lambda man, p, o: phicurv.phi_weyl(man.geo, man.map, man.alpha, p, o),
    "phi-bach": lambda man, p, o: phicurv.phi_bach(man.geo, man.map, man.alpha, p, o),
    "j": lambda man, p, o: {"j": phicurv.j_field(man.geo, man.map, man.alpha, p, o)},
    "map": lambda man, p, o: mp_mod.map_first_order(_map(man), man.geo, p, o),
    "tension": lambda man, p, o: {"tension": mp_mod.tension(_map(man), man.geo, p, o)},
    "bitension": lambda man, p, o: {"bitension": mp_mod.bitension(_map(man), man.geo, p, o)},
    "hessian": lambda man, p, o: geom.hessian_and_laplacians(man.geo, _with_potential(man), p, order=o),
    "phi-d": lambda man, p, o: phicurv.d_phi_and_y(man.geo, man.map, man.alpha, _with_potential(man), p, o),
}


def _map(man):
    if man.map is None:
        raise UsageError("this tensor needs a [map] section")
    return man.map


def _format_tensor(name: str, t) -> list[str]:
    if isinstance(t, TensorValue):
        arr = np.asarray(t.components, dtype=float)
        lines = [f"{name} ({', '.join(t.signature)})"]
        for idx in np.ndindex(arr.shape):
            lines.append(f"  {name}[{','.join(str(i + 1) for i in idx)}] = {float(arr[idx])!r}")
        return lines
    if isinstance(t, np.ndarray):
        return _format_tensor(name, TensorValue(("",) * t.ndim, t, ()))
    return [f"{name} = {float(t)!r}"]


def cmd_tensors(args, config: EngineConfig) -> int:
    man = _load(args.file, args)
    point = args.at
    if len(point) != man.geo.dimension:
        raise UsageError(f"--at has {len(point)} coordinates, chart dimension is {man.geo.dimension}")
    names = args.tensor or ["phi-ricci"]
    out = []
    for name in names:
        for key, t in TENSORS[name](man, point, config.order).items():
            out.extend(_format_tensor(key.replace("_", "-"), t))
    print("\n".join(out))
    return 0


# -- verify ---------------------------------------------------------------------------


def cmd_list() -> int:
    width = max(len(k) for k in catalog.CATALOG)
    for cid in sorted(catalog.CATALOG):
        e = catalog.CATALOG[cid]
        gates = "+".join(e.gates)
        print(f"{cid:<{width}}  [{gates}] tol {e.tolerance:g}  {e.anchor}")
    for group, ids in sorted(catalog.GROUPS.items()):
        print(f"group {group}: {' '.join(sorted(ids))}")
    return 0


def cmd_verify(args, config: EngineConfig) -> int:
    if args.list:
        return cmd_list()
    files = list(args.files)
    if args.gallery:
        files += [str(p) for p in manifest.gallery_files()]
    if not files:
        raise UsageError("verify needs at least one file (or --gallery)")
    catalog.select(args.only)  # surface unknown ids before any computation
    code = 0
    docs = []
    for path in files:
        man = _load(path, args)
        rep = catalog.verify(man, args.only, config)
        if len(files) > 1:
            print(f"== {man.name}")
        print(report.render_text(rep), end="")
        code = max(code, catalog.exit_code(rep))
        docs.append(report.manifest_entry(man.name, man.sha256, rep))
    if args.json:
        doc = report.report_document("verify", docs, _settings(args, config))
        _write(args.json, report.dumps(doc))
    return code


# -- soliton-check --------------------------------------------------------------------


def cmd_soliton_check(args, config: EngineConfig) -> int:
    man = _load(args.file, args)
    if man.soliton is None:
        raise UsageError("soliton-check needs a [potential] section and lambda")
    rep = soliton_residual(man.soliton, config, 1e-8)
    print(report.render_text(rep), end="")
    lam_hat = rep.info["best_fit_lambda"]
    print(f"best-fit lambda per probe: min {min(lam_hat)!r}, max {max(lam_hat)!r}")
    if rep.passed and man.soliton.is_gradient:
        rig = rigidity_classify(man.soliton, config, strict=False)
        k = "-" if rig.k is None else str(rig.k)
        print(f"rigidity: {rig.status} (k = {k}, |∇Ric^φ| = {rig.nabla_ricci_norm:.3e})"
              + (f"; {rig.reason}" if rig.reason else ""))
    return 0 if rep.passed else 1


# -- rigid-model ----------------------------------------------------------------------


def cmd_rigid_model(args, config: EngineConfig) -> int:
    man = _load(args.einstein, args)
    if man.lam is None:
        raise UsageError("the base file must declare lambda")
    base = SolitonData(man.geo, man.map, man.alpha, man.lam, PotentialData(f=parse("0", man.geo.env)),
                       man.probes, man.name)
    if args.b and len(args.b) != args.k:
        raise UsageError(f"--b has {len(args.b)} entries, -k is {args.k}")
    spec = RigidModelSpec(base, args.k, tuple(args.b), args.c, seed=args.seed or 0)
    product = build_rigid_model(spec, config)
    box = man.box + ((-1.0, 1.0),) * args.k
    constants = {k: v for k, v in man.geo.env.constants.items() if k not in ("alpha", "lambda")}
    text = manifest.dumps(manifest.soliton_document(product, constants, box))
    _write(args.output, text)
    return 0


# -- solve-ansatz ---------------------------------------------------------------------


def cmd_solve_ansatz(args, config: EngineConfig) -> int:
    man = _load(args.file, args)
    if man.family is None:
        raise UsageError("solve-ansatz needs a [family] section")
    targets = {}
    for item in args.target:
        name, sep, val = item.partition("=")
        if not sep or name not in ("lambda", "alpha"):
            raise UsageError(f"--target expects lambda=VALUE or alpha=VALUE, got {item!r}")
        try:
            targets[name] = float(val)
        except ValueError:
            raise UsageError(f"--target value {val!r} is not a number") from None
    try:
        res = ansatz_solve(man.family, targets, SolverConfig(max_iterations=args.max_iterations))
    except MaxIterations as err:
        if err.result is not None:
            _print_ansatz(err.result)
        raise
    _print_ansatz(res)
    return 0


def _print_ansatz(res) -> None:
    for name, v in res.parameters.items():
        print(f"{name} = {v!r}")
    print(f"lambda = {res.lam!r}")
    print(f"residual = {res.residual:.3e}")
    print(f"iterations = {res.iterations}")
    print(f"converged = {str(res.converged).lower()}")


# -- plumbing -------------------------------------------------------------------------


def _load(path: str, args) -> manifest.Manifest:
    try:
        manifest.resolve_path(path)
    except FileNotFoundError as err:
        raise UsageError(str(err)) from None
    return manifest.load(path, probe_count=args.probes, seed=args.seed)


def _settings(args, config: EngineConfig) -> dict:
    return {
        "order": config.order,
        "tol_scale": config.tol_scale,
        "probes": args.probes,
        "seed": args.seed,
        "only": sorted(args.only) if args.only else "all",
    }


def _write(dest: str, text: str) -> None:
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


def _error(kind: str, err: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "type": type(err).__name__, "message": str(err)},
                                ensure_ascii=False) + "\n")
    return code


COMMANDS = {
    "tensors": cmd_tensors,
    "verify": cmd_verify,
    "soliton-check": cmd_soliton_check,
    "rigid-model": cmd_rigid_model,
    "solve-ansatz": cmd_solve_ansatz,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        order = args.order if args.order is not None else _default_order()
        if order < 2:
            raise UsageError("--order must be at least 2")
        if args.tol_scale <= 0:
            raise UsageError("--tol-scale must be positive")
        config = EngineConfig(order=order, tol_scale=args.tol_scale)
        return COMMANDS[args.command](args, config)
    except (UsageError, catalog.UnknownIdentityId) as err:
        msg = f"unknown identity id {err.args[0]!r}" if isinstance(err, catalog.UnknownIdentityId) else str(err)
        sys.stderr.write(f"harmricci {args.command}: {msg}\n")
        return 2
    except manifest.ManifestError as err:
        return _error("manifest", err, 1)
    except (SolitonError, GeometryError, JetError, ValueError, ArithmeticError) as err:
        return _error("computation", err, 1)


if __name__ == "__main__":
    sys.exit(main())
