"""Command-line interface.

Subcommands: generate, lattice export, embed make/validate, solve-sa,
solve-greedy, solve-lnls, estimate-e0, bench, report.  Exit codes:
0 success, 1 runtime failure, 2 usage error.  Every command is
deterministic given its seeds and input files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import numpy as np

from . import bench as B
from . import embedding as E
from . import generators as G
from . import ising as ii
from . import lnls as LN
from . import samplers as SA
from .lattice import SubspaceShape, build, export_topology


class CliError(ValueError):
    pass


def _parse_shape(kind: str, text: str) -> SubspaceShape:
    parts = text.split("x")
    if kind == "cubic":
        if len(parts) != 3:
            raise CliError(f"cubic shape must be AxBxC, got {text!r}")
        return SubspaceShape("cubic", tuple(int(p) for p in parts))
    if len(parts) != 1:
        raise CliError(f"Pegasus shape is a single cell extent, got {text!r}")
    return SubspaceShape("toric-pegasus", (int(parts[0]),))


def _parse_budget(text: str):
    return tuple(tuple(int(v) for v in pair.split("x"))
                 for pair in text.split(";"))


def _emit(args, payload: dict):
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        for k, v in payload.items():
            print(f"{k}: {v}")


def _defect_spec(args) -> E.DefectSpec | None:
    if not (args.qubit_defect_rate or args.coupler_defect_rate):
        return None
    return E.DefectSpec(qubit_rate=args.qubit_defect_rate,
                        coupler_rate=args.coupler_defect_rate,
                        seed=args.defect_seed)


def _add_defect_flags(p):
    p.add_argument("--qubit-defect-rate", type=float, default=0.0)
    p.add_argument("--coupler-defect-rate", type=float, default=0.0)
    p.add_argument("--defect-seed", type=int, default=0)


# --- subcommand handlers ---

def cmd_generate(args) -> int:
    top = build(args.kind, args.L)
    model = G.generate(top, args.ensemble, args.seed,
                       per_spin_energy=args.per_spin_energy)
    ii.write_instance(model, args.out)
    _emit(args, {"out": args.out, "kind": args.kind, "L": args.L,
                 "ensemble": args.ensemble, "seed": args.seed,
                 "vertices": top.n_vertices, "edges": top.n_edges})
    return 0


def cmd_lattice_export(args) -> int:
    top = build(args.kind, args.L)
    export_topology(top, args.out)
    _emit(args, {"out": args.out, "vertices": top.n_vertices,
                 "edges": top.n_edges, "connectivity": top.connectivity})
    return 0


def cmd_embed_make(args) -> int:
    hardware = E.build_hardware(args.m, _defect_spec(args))
    top = build(args.kind, args.L)
    shape = None
    if args.kind == "cubic":
        if not args.shape:
            raise CliError("cubic embeddings require --shape AxBxC")
        shape = _parse_shape("cubic", args.shape)
    embeddings = E.make_origin_embeddings(hardware, top, shape)
    outs = []
    for i, emb in enumerate(embeddings):
        path = args.out if i == 0 else f"{args.out}.r{i}"
        E.write_embedding(emb, top, hardware, path)
        outs.append(path)
    _emit(args, {"out": ";".join(outs), "embeddings": len(embeddings),
                 "variables": embeddings[0].n_variables,
                 "vacancies": len(embeddings[0].vacancies)})
    return 0


def cmd_embed_validate(args) -> int:
    hardware = E.build_hardware(args.m, _defect_spec(args))
    top = build(args.kind, args.L)
    emb = E.read_embedding(args.embedding, top)
    problems = E.validate_embedding(emb, hardware, top)
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 1
    _emit(args, {"embedding": args.embedding, "valid": True,
                 "variables": emb.n_variables,
                 "vacancies": len(emb.vacancies)})
    return 0


def _maybe_e0(args):
    if getattr(args, "e0_file", None):
        return B.read_e0(args.e0_file)
    return None


def cmd_solve_sa(args) -> int:
    model = ii.read_instance(args.instance)
    t0 = time.perf_counter()
    x, e, updates = SA.run_sa(model, SA.SaRun(args.n, args.sweeps,
                                              seed=args.seed))
    wall = (time.perf_counter() - t0) * 1e3
    payload = {"energy": e, "spin_updates": updates,
               "wall_ms": round(wall, 3)}
    est = _maybe_e0(args)
    if est is not None:
        payload["relative_error"] = B.relative_error(est.e0, e)
    _emit(args, payload)
    return 0


def cmd_solve_greedy(args) -> int:
    model = ii.read_instance(args.instance)
    t0 = time.perf_counter()
    x, e, flips = SA.run_sgd(model, args.restarts, args.seed)
    wall = (time.perf_counter() - t0) * 1e3
    payload = {"energy": e, "flips": flips, "wall_ms": round(wall, 3)}
    est = _maybe_e0(args)
    if est is not None:
        payload["relative_error"] = B.relative_error(est.e0, e)
    _emit(args, payload)
    return 0


def cmd_solve_lnls(args) -> int:
    model = ii.read_instance(args.instance)
    top = model.topology
    shapes = tuple(_parse_shape(top.kind, s)
                   for s in args.shape.split(",")) if args.shape else ()
    embeddings, hardware = (), None
    if args.embedding:
        hardware = E.build_hardware(args.m, _defect_spec(args))
        embeddings = (E.read_embedding(args.embedding, top),)
    spec = LN.SubsolverSpec(args.subsolver, sweeps=args.sweeps,
                            reads=args.reads,
                            chain_strength=args.chain_strength,
                            clock=args.clock)
    timing = LN.TimingModel(args.t_p, args.t_ro, args.t_a,
                            args.network_overhead, args.ns_per_update)
    cfg = LN.LnlsConfig(shapes=shapes, embeddings=embeddings,
                        hardware=hardware, e_target=args.e_target,
                        max_iterations=args.max_iterations,
                        subsolver=spec, timing=timing,
                        variant=args.variant, seed=args.seed)
    x, rec = LN.run_lnls(model, cfg)
    est = _maybe_e0(args)
    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.writer(f)
            header = ["iteration", "energy", "relative_error",
                      "sim_time_ms", "wall_time_ms"]
            w.writerow(header)
            for i in range(rec.iterations):
                r = "" if est is None else \
                    repr(B.relative_error(est.e0, rec.energies[i]))
                w.writerow([i + 1, repr(float(rec.energies[i])), r,
                            repr(float(rec.sim_ms[i])),
                            repr(float(rec.wall_ms[i]))])
    payload = {"final_energy": rec.final_energy,
               "iterations": rec.iterations,
               "sim_ms": 0.0 if rec.iterations == 0
               else round(float(rec.sim_ms[-1]), 6)}
    if est is not None:
        payload["relative_error"] = B.relative_error(est.e0,
                                                     rec.final_energy)
    if args.out:
        payload["out"] = args.out
    _emit(args, payload)
    return 0


def cmd_estimate_e0(args) -> int:
    model = ii.read_instance(args.instance)
    budget = _parse_budget(args.budget)
    est = B.estimate_e0(model, budget, seed=args.seed)
    out = args.out or (args.instance + ".e0")
    B.write_e0(est, out)
    _emit(args, {"e0": est.e0, "provenance": est.provenance, "out": out})
    return 0


# --- bench studies ---

def _study_instance(spec: dict, seed: int):
    if "files" in spec:
        return ii.read_instance(spec["files"][seed])
    top = build(spec["kind"], spec["L"])
    return G.generate(top, spec["ensemble"], seed,
                      per_spin_energy=spec.get("per_spin_energy", -1.8))


def _bench_e0(task):
    spec, seed, budget, e0_seed = task
    model = _study_instance(spec, seed)
    return seed, B.estimate_e0(model, budget, seed=e0_seed)


def _bench_run(task):
    spec, seed, method, iterations = task
    model = _study_instance(spec, seed)
    mtype = method.get("type", "lnls")
    run_seed = method.get("seed", 0) * 100003 + seed
    ns = method.get("ns_per_update", 33.0)
    if mtype == "lnls":
        shapes = tuple(_parse_shape(model.topology.kind, s)
                       for s in method["shapes"])
        spec_ss = LN.SubsolverSpec(method.get("subsolver", "sa"),
                                   sweeps=method.get("sweeps", 198),
                                   reads=method.get("reads", 1),
                                   clock=method.get("clock"))
        timing = LN.TimingModel(ns_per_update=ns)
        cfg = LN.LnlsConfig(shapes=shapes, subsolver=spec_ss, timing=timing,
                            max_iterations=iterations,
                            variant=method.get("variant", "default"),
                            seed=run_seed)
        _, rec = LN.run_lnls(model, cfg)
    elif mtype == "sgd":
        rec = B.sgd_burn_down(model, method.get("restarts", iterations),
                              run_seed, ns_per_update=ns)
    elif mtype == "sa":
        rec = B.sa_burn_down(model, method.get("points", 8),
                             method.get("base_sweeps", 64), run_seed,
                             ns_per_update=ns)
    else:
        raise CliError(f"unknown method type {mtype!r}")
    return method["label"], seed, rec


def load_manifest(path) -> dict:
    with open(path, "rb") as f:
        manifest = tomllib.load(f)
    for key in ("instances", "methods"):
        if key not in manifest:
            raise CliError(f"manifest is missing the {key!r} table")
    labels = [m.get("label") for m in manifest["methods"]]
    if len(set(labels)) != len(labels) or None in labels:
        raise CliError("every method needs a unique label")
    seeds = manifest["instances"].get("seeds", [])
    if len(set(seeds)) != len(seeds) or not seeds:
        raise CliError("instance seeds must be non-empty and distinct")
    return manifest


def cmd_bench(args) -> int:
    manifest = load_manifest(args.manifest)
    spec = manifest["instances"]
    seeds = spec["seeds"]
    methods = manifest["methods"]
    iterations = manifest.get("study", {}).get("iterations", 128)
    e0_cfg = manifest.get("e0", {})
    budget = _parse_budget(e0_cfg.get("budget", "4x262144"))
    out_dir = args.out_dir or manifest.get("study", {}).get("output", ".")
    os.makedirs(out_dir, exist_ok=True)

    e0_tasks = [(spec, s, budget, e0_cfg.get("seed", 0)) for s in seeds]
    run_tasks = [(spec, s, m, iterations) for m in methods for s in seeds]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            e0s = dict(pool.map(_bench_e0, e0_tasks))
            results = list(pool.map(_bench_run, run_tasks))
    else:
        e0s = dict(map(_bench_e0, e0_tasks))
        results = list(map(_bench_run, run_tasks))

    by_label = {}
    for label, seed, rec in results:
        e0s[seed].check_dominates(rec.final_energy, f"{label}/seed{seed}")
        by_label.setdefault(label, []).append((seed, rec))
    curves = []
    for method in methods:
        label = method["label"]
        pairs = by_label[label]
        curve = B.aggregate_median(
            [rec for _, rec in pairs], [e0s[s] for s, _ in pairs],
            label=label, time_axis=method.get("time_axis", "sim_ms"))
        curves.append(curve)
        B.write_curves_csv([curve], os.path.join(out_dir, f"{label}.csv"))
    B.write_curves_svg(curves, os.path.join(out_dir, "burndown.svg"))
    _emit(args, {"out_dir": out_dir, "methods": len(methods),
                 "instances": len(seeds)})
    return 0


def cmd_report(args) -> int:
    curves = []
    for path in args.curves:
        curves.extend(B.read_curves_csv(path))
    B.write_curves_svg(curves, args.out)
    _emit(args, {"out": args.out, "series": len(curves)})
    return 0


# --- parser ---

def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(
        prog="latticelnls",
        description="Lattice Ising ground-state search by greedy "
                    "large-neighborhood local search")
    root.add_argument("--format", choices=("text", "json"), default="text")
    root.add_argument("--threads", type=int, default=1)
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a problem instance file")
    p.add_argument("--kind", choices=("cubic", "toric-pegasus"),
                   required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--ensemble", choices=("pmj", "ferro", "tile-planted"),
                   required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-spin-energy", type=float, default=-1.8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    lat = sub.add_parser("lattice", help="lattice topology utilities")
    lat_sub = lat.add_subparsers(dest="lattice_command", required=True)
    p = lat_sub.add_parser("export", help="write a topology file")
    p.add_argument("--kind", choices=("cubic", "toric-pegasus"),
                   required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lattice_export)

    emb = sub.add_parser("embed", help="origin embedding utilities")
    emb_sub = emb.add_subparsers(dest="embed_command", required=True)
    p = emb_sub.add_parser("make", help="construct and write embeddings")
    p.add_argument("--kind", choices=("cubic", "toric-pegasus"),
                   required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--shape", default=None)
    p.add_argument("--out", required=True)
    _add_defect_flags(p)
    p.set_defaults(func=cmd_embed_make)
    p = emb_sub.add_parser("validate", help="check an embedding file")
    p.add_argument("--embedding", required=True)
    p.add_argument("--kind", choices=("cubic", "toric-pegasus"),
                   required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--m", type=int, default=16)
    _add_defect_flags(p)
    p.set_defaults(func=cmd_embed_validate)

    p = sub.add_parser("solve-sa", help="simulated annealing on an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--sweeps", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--e0-file", default=None)
    p.set_defaults(func=cmd_solve_sa)

    p = sub.add_parser("solve-greedy",
                       help="steepest greedy descent with restarts")
    p.add_argument("--instance", required=True)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--e0-file", default=None)
    p.set_defaults(func=cmd_solve_greedy)

    p = sub.add_parser("solve-lnls",
                       help="greedy large-neighborhood local search")
    p.add_argument("--instance", required=True)
    p.add_argument("--shape", default=None,
                   help="comma-separated subspace shapes (AxBxC or cells)")
    p.add_argument("--embedding", default=None)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--subsolver", choices=LN.SUBSOLVER_KINDS, default="sa")
    p.add_argument("--sweeps", type=int, default=198)
    p.add_argument("--reads", type=int, default=1)
    p.add_argument("--chain-strength", type=float, default=2.0)
    p.add_argument("--clock", choices=("classical", "qpu"), default=None)
    p.add_argument("--variant", choices=LN.VARIANTS, default="default")
    p.add_argument("--e-target", type=float, default=-math.inf)
    p.add_argument("--max-iterations", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-p", type=float, default=10.0)
    p.add_argument("--t-ro", type=float, default=0.2)
    p.add_argument("--t-a", type=float, default=0.1)
    p.add_argument("--network-overhead", type=float, default=0.0)
    p.add_argument("--ns-per-update", type=float, default=33.0)
    p.add_argument("--e0-file", default=None)
    p.add_argument("--out", default=None, help="burn-down CSV path")
    _add_defect_flags(p)
    p.set_defaults(func=cmd_solve_lnls)

    p = sub.add_parser("estimate-e0",
                       help="write a ground-energy sidecar file")
    p.add_argument("--instance", required=True)
    p.add_argument("--budget", default="4x262144",
                   help="semicolon-separated NxSWEEPS pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_estimate_e0)

    p = sub.add_parser("bench", help="run a study manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="combine curve CSVs into an SVG")
    p.add_argument("--curves", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return root


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
