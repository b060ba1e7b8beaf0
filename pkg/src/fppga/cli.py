"""Command-line front end.

Subcommands read and write one file per artifact:

    fppga gen --topology hexagonal --m 2 --n 2 -o mesh.json
    fppga route --mesh mesh.json --from P0 --to P5 [--block 3 4] -o route.json [--program-out prog.json]
    fppga preset --name ring --mesh mesh.json --cell 0 0 --kappa 0.5 -o program.json
    fppga simulate --mesh mesh.json --program program.json --f-start ... --f-stop ... --points N -o spectrum.csv
    fppga optimize --mesh mesh.json --program program.json --target-spec target.json --bits 8 --seed 0 -o trace.csv

Exit status: 0 on success, 1 for usage errors, 2 for domain errors (no
path, singular system, infeasible preset, ...). Domain errors are reported on
stderr as one JSON object ``{"error": kind, "message": text}``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional

from . import control, presets
from .errors import FPPGAError, MeshError
from .mesh import TOPOLOGIES, Program, deserialize, generate, serialize
from .netsolve import FrequencyGrid, WaveguideParams, spectrum_csv, sweep
from .router import CostWeights, RoutingRequest, apply_route, route
from .tbu import TBUMode, TBUSettings, mode_settings


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load_mesh(path: str):
    return deserialize(_read(path))


def _load_program(mesh_path: str, program_path: str):
    mesh, _ = _load_mesh(mesh_path)
    pmesh, program = deserialize(_read(program_path))
    if pmesh != mesh:
        raise MeshError(f"{program_path} was built for a different mesh than {mesh_path}")
    return mesh, program


def _params(args) -> WaveguideParams:
    if getattr(args, "lossless", False):
        return WaveguideParams.lossless()
    return WaveguideParams()


# -- subcommands ----------------------------------------------------------------

def cmd_gen(args) -> None:
    mesh = generate(args.topology, args.m, args.n)
    _write(args.output, serialize(mesh))


def cmd_route(args) -> None:
    if args.source == args.destination:
        raise UsageError("--from and --to must name different ports")
    mesh, program = _load_mesh(args.mesh)
    blocked = set(args.block) | set(program.active_tbus())
    weights = CostWeights(loss=args.w_loss, power=args.w_power, hop=args.w_hop,
                          powered_modes=frozenset(args.powered_mode))
    r = route(mesh, RoutingRequest(args.source, args.destination, frozenset(blocked), weights))
    report = r.report()
    report["source"] = mesh.external_name(r.source)
    report["destination"] = mesh.external_name(r.destination)
    _write(args.output, _dump(report))
    if args.program_out:
        _write(args.program_out, serialize(mesh, apply_route(program, r)))


def cmd_preset(args) -> None:
    mesh, _ = _load_mesh(args.mesh)
    name = args.name
    if name == "ring":
        res = presets.ring_filter(mesh, tuple(args.cell), args.kappa)
    elif name == "vernier":
        if args.cell_b is None:
            raise UsageError("the vernier preset needs --cell-b")
        kb = args.kappa if args.kappa_b is None else args.kappa_b
        res = presets.vernier_pair(mesh, tuple(args.cell), tuple(args.cell_b), args.kappa, kb)
    elif name == "hybrid24":
        res = presets.hybrid_2x4(mesh)
    else:
        res = presets.transceiver_demo(mesh, args.kappa)
    meta = dict(res.program.metadata)
    meta["inputs"] = [mesh.external_name(p) for p in res.inputs]
    meta["outputs"] = [mesh.external_name(p) for p in res.outputs]
    program = Program(res.program.modes, res.name, meta)
    _write(args.output, serialize(mesh, program))


def cmd_simulate(args) -> None:
    mesh, program = _load_program(args.mesh, args.program)
    try:
        grid = FrequencyGrid(args.f_start, args.f_stop, args.points)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sp = sweep(mesh, program, _params(args), grid, workers=args.workers)
    outs = [mesh.resolve_port(p) for p in args.out_port] if args.out_port else _default_ports(mesh, program, "outputs")
    ins = [mesh.resolve_port(p) for p in args.in_port] if args.in_port else _default_ports(mesh, program, "inputs")
    _write(args.output, spectrum_csv(mesh, sp, outs, ins))


def _default_ports(mesh, program, key):
    names = program.metadata.get(key)
    if names:
        return [mesh.resolve_port(p) for p in names]
    return None


def _load_target(path: str) -> dict:
    try:
        spec = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed target spec: {exc}") from None
    if not isinstance(spec, dict) or "in" not in spec or "out" not in spec:
        raise UsageError("target spec needs at least 'in' and 'out' ports")
    return spec


def cmd_optimize(args) -> None:
    mesh, program = _load_program(args.mesh, args.program)
    spec = _load_target(args.target_spec)
    tbus = spec.get("tbus")
    if tbus is None:
        tbus = [t for t in program.active_tbus() if program.mode(t).kind == "tunable"]
    if not tbus:
        raise UsageError("nothing to optimize: no tunable TBUs and no 'tbus' in the target spec")
    for t in tbus:
        if program.mode(t).is_off:
            raise MeshError(f"TBU {t} is off in the program and cannot be tuned")
    commons = {t: mode_settings(program.mode(t)).mean_phase for t in tbus}
    losses = {t: mode_settings(program.mode(t)).insertion_loss_db for t in tbus}

    def build(x):
        modes = {t: TBUMode.tunable(TBUSettings(commons[t] + d / 2, commons[t] - d / 2, losses[t]))
                 for t, d in zip(tbus, x)}
        return program.with_modes(modes)

    params = WaveguideParams.lossless() if spec.get("lossless", False) else WaveguideParams()
    n_act = 2 * len(set(program.active_tbus()) | set(tbus))
    eps = float(spec.get("crosstalk", 0.0))
    loop = control.ClosedLoop(
        mesh, build, spec["in"], spec["out"], float(spec.get("target_fraction", 0.5)), params=params,
        driver=control.DriverConfig(args.bits) if args.bits else None,
        crosstalk=control.CrosstalkMatrix.neighbors(n_act, eps) if eps else None,
        monitor=control.MonitorConfig(noise_sigma_a=float(spec.get("noise_sigma_a", 0.0))),
        frequency_hz=spec.get("frequency_hz"), seed=args.seed,
    )
    initial = [mode_settings(program.mode(t)).phase_difference % (2 * math.pi) for t in tbus]
    initial = [min(max(d, 0.0), math.pi) for d in initial]
    options = control.OptimizerOptions(
        max_evaluations=int(spec.get("max_evaluations", 200)),
        tolerance=float(spec.get("tolerance", 1e-10)),
        bounds=[(0.0, math.pi)] * len(tbus), seed=args.seed,
    )
    result = control.optimize(loop, initial, options)
    _write(args.output, result.trace_csv())
    if args.program_out:
        _write(args.program_out, serialize(mesh, build(result.x)))


# -- argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fppga", description="Programmable photonic mesh toolchain.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a mesh document")
    g.add_argument("--topology", required=True, choices=TOPOLOGIES)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("route", help="route between two external ports")
    r.add_argument("--mesh", required=True)
    r.add_argument("--from", dest="source", required=True)
    r.add_argument("--to", dest="destination", required=True)
    r.add_argument("--block", type=int, nargs="*", default=[])
    r.add_argument("--w-loss", type=float, default=1.0)
    r.add_argument("--w-power", type=float, default=0.0)
    r.add_argument("--w-hop", type=float, default=0.0)
    r.add_argument("--powered-mode", choices=("bar", "cross"), nargs="*", default=["bar"])
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--program-out", help="write the mesh document with the route applied")
    r.set_defaults(func=cmd_route)

    s = sub.add_parser("preset", help="apply a named preset")
    s.add_argument("--name", required=True, choices=presets.PRESETS)
    s.add_argument("--mesh", required=True)
    s.add_argument("--cell", type=int, nargs=2, default=[0, 0], metavar=("ROW", "COL"))
    s.add_argument("--cell-b", type=int, nargs=2, metavar=("ROW", "COL"))
    s.add_argument("--kappa", type=float, default=0.5)
    s.add_argument("--kappa-b", type=float)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_preset)

    m = sub.add_parser("simulate", help="sweep the programmed mesh")
    m.add_argument("--mesh", required=True)
    m.add_argument("--program", required=True)
    m.add_argument("--f-start", type=float, required=True)
    m.add_argument("--f-stop", type=float, required=True)
    m.add_argument("--points", type=int, required=True)
    m.add_argument("--in-port", nargs="*")
    m.add_argument("--out-port", nargs="*")
    m.add_argument("--lossless", action="store_true")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("-o", "--output", required=True)
    m.set_defaults(func=cmd_simulate)

    o = sub.add_parser("optimize", help="closed-loop tuning against a target")
    o.add_argument("--mesh", required=True)
    o.add_argument("--program", required=True)
    o.add_argument("--target-spec", required=True)
    o.add_argument("--bits", type=int, default=0, help="driver resolution; 0 = ideal drivers")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("-o", "--output", required=True)
    o.add_argument("--program-out")
    o.set_defaults(func=cmd_optimize)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, bad usage 1
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fppga: error: {exc}", file=sys.stderr)
        return 1
    except FPPGAError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"fppga: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
