"""Command-line interface: ``rspbench benchmark|continuum|simulate|compare|reproduce``."""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import classical, continuum, protocol, qstate, report
from .ensembles import SOLIDS, load_ensemble, platonic_ensemble
from .errors import InconsistencyError, InputError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3

TABLE_RADII = (0.0, 0.25, 0.5, 0.75, 1.0)
# Werner visibility whose Bell fidelity is 0.9807, the measured source quality.
DEFAULT_VISIBILITY = 0.9743


def _dump(doc, path):
    text = json.dumps(doc, indent=2, default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}", "unwritable") from exc


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _ensemble_from_args(args):
    if args.ensemble and args.solid:
        raise InputError("give either --solid or --ensemble, not both", "arguments")
    if args.ensemble:
        e = load_ensemble(args.ensemble)
        return e if args.radius is None else e.scaled(args.radius)
    if args.solid:
        return platonic_ensemble(args.solid, 1.0 if args.radius is None else args.radius)
    raise InputError("an ensemble is required: --solid <name> or --ensemble <path>", "arguments")


def cmd_benchmark(args):
    e = _ensemble_from_args(args)
    t0 = time.perf_counter()
    res = classical.benchmark(e, args.cbits, args.mode, args.restarts, args.seed)
    doc = res.to_dict()
    doc["wall_time"] = time.perf_counter() - t0
    if args.out:
        print(f"{e.name} c={args.cbits}: {res.value:.10f} ({res.kind}, certified={res.certified})")
    _dump(doc, args.out)


def _quadrature(args):
    if args.samples is not None and args.grid is not None:
        raise InputError("give either --samples or --grid", "arguments")
    if args.samples is not None:
        return continuum.MonteCarlo(args.samples, args.seed)
    if args.grid is not None:
        return continuum.parse_grid(args.grid)
    return continuum.LatLongGrid()


def run_continuum(method, c, seeds="auto", quadrature=None, iterations=50, seed=0):
    quadrature = quadrature or continuum.LatLongGrid()
    doc = {"method": method, "cbits": c}
    if method == "caps":
        doc.update(kind="upper", value=continuum.cap_upper_bound(c))
        return doc
    if seeds == "auto":
        seeds = {1: "antipodal", 2: "tetrahedron", 3: "octahedron"}.get(c, "random")
    gens = continuum.partition_seeds(seeds, c, seed)
    if len(gens) != 2**c:
        raise InputError(f"seed preset {seeds!r} has {len(gens)} cells, need 2**{c}", "seeds")
    if method == "voronoi":
        value, se = continuum.voronoi_lower_bound(continuum.SphericalPartitionSpec(gens, quadrature))
        doc.update(kind="lower", seeds=seeds, value=value, stderr=se, generators=gens)
    elif method == "lloyd":
        refined, trace = continuum.lloyd_refine(gens, iterations, quadrature)
        se = continuum.cell_moments(refined, quadrature).stderr
        doc.update(kind="lower", seeds=seeds, value=trace[-1], stderr=se, trace=trace, generators=refined)
    else:
        raise InputError(f"unknown continuum method {method!r}", "method")
    doc["cap_upper_bound"] = continuum.cap_upper_bound(c)
    return doc


def cmd_continuum(args):
    t0 = time.perf_counter()
    doc = run_continuum(args.method, args.cbits, args.seeds, _quadrature(args), args.iterations, args.seed)
    doc["wall_time"] = time.perf_counter() - t0
    if args.out:
        print(f"continuum c={args.cbits} {args.method}: {doc['value']:.6f} ({doc['kind']})")
    _dump(doc, args.out)


def cmd_simulate(args):
    e = _ensemble_from_args(args)
    src = protocol.parse_source(args.source)
    grid = protocol.run_experiment_grid(src, e, args.shots, args.seed, args.mode, args.tomography_shots)
    doc = grid.to_dict()
    doc["source_metrics"] = qstate.source_metrics(src.rho)._asdict()
    if args.out:
        print(f"{e.name} r={e.common_radius}: mean fidelity {grid.mean_fidelity:.6f} +- {grid.stderr:.2e}")
    _dump(doc, args.out)


def _read_docs(paths):
    docs = []
    for p in paths:
        try:
            d = json.loads(Path(p).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read {p}: {exc}", "malformed") from exc
        docs.extend(d if isinstance(d, list) else [d])
    return docs


def _write_rows(rows, fmt, out):
    if out is None:
        if fmt == "csv":
            out = "/dev/stdout"
        else:
            sys.stdout.write(json.dumps({"rows": [r.__dict__ for r in rows]}, indent=2) + "\n")
            return
    report.emit(rows, fmt, out)


def cmd_compare(args):
    rows, table = report.compare(_read_docs(args.benchmarks), _read_docs(args.simulations))
    print(table, file=sys.stderr)
    _write_rows(rows, args.format, args.out)


def reproduce(source="werner:0.9743", mode="expected", restarts=200, seed=0, shots=10_000,
              tomography_shots=None, quadrature=None, log=print):
    """Classical benchmarks, continuum bounds and simulated runs for every
    Platonic ensemble, compared row by row."""
    src = protocol.parse_source(source)
    benches, sims = [], []
    for solid in SOLIDS:
        radii = TABLE_RADII if solid in ("icosahedron", "dodecahedron") else (1.0,)
        for r in radii:
            e = platonic_ensemble(solid, r)
            grid = protocol.run_experiment_grid(src, e, shots, seed, mode, tomography_shots)
            sims.append(grid.to_dict())
            for c in (2, 3):
                t0 = time.perf_counter()
                res = classical.benchmark(e, c, "auto", restarts, seed)
                d = res.to_dict()
                d["wall_time"] = time.perf_counter() - t0
                benches.append(d)
                log(f"{solid:<13} r={r:.2f} c={c}: classical {res.value:.6f} ({res.kind}), "
                    f"simulated {grid.mean_fidelity:.6f}")
    cont = [run_continuum("caps", c) for c in (2, 3)]
    cont += [run_continuum("voronoi", c, quadrature=quadrature) for c in (2, 3)]
    rows, table = report.compare(benches, sims)
    return {"benchmarks": benches, "simulations": sims, "continuum": cont, "rows": rows, "table": table}


def cmd_reproduce(args):
    quad = _quadrature(args)
    out = reproduce(args.source, args.mode, args.restarts, args.seed, args.shots, args.tomography_shots,
                    quad, log=lambda s: print(s, file=sys.stderr))
    print(out["table"])
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        _dump(out["benchmarks"], d / "benchmarks.json")
        _dump(out["simulations"], d / "simulations.json")
        _dump(out["continuum"], d / "continuum.json")
        report.emit(out["rows"], "csv", d / "comparison.csv")
        report.emit(out["rows"], "structured", d / "comparison.json")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--format", choices=("structured", "csv"), default="structured")

    ens = argparse.ArgumentParser(add_help=False)
    ens.add_argument("--solid", choices=SOLIDS)
    ens.add_argument("--ensemble", help="ensemble JSON file")
    ens.add_argument("--radius", type=float, help="common Bloch radius of the targets")

    quad = argparse.ArgumentParser(add_help=False)
    quad.add_argument("--samples", type=int, help="Monte Carlo quadrature nodes")
    quad.add_argument("--grid", help="latitude x longitude grid, e.g. 2048x4096")

    p = argparse.ArgumentParser(prog="rspbench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("benchmark", parents=[common, ens], help="classical threshold of a finite ensemble")
    b.add_argument("--cbits", type=int, default=2)
    b.add_argument("--mode", choices=("exact", "upper", "heuristic", "auto"), default="auto")
    b.add_argument("--restarts", type=int, default=200)
    b.set_defaults(func=cmd_benchmark)

    c = sub.add_parser("continuum", parents=[common, quad], help="bounds for the uniform pure-state ensemble")
    c.add_argument("--cbits", type=int, default=2)
    c.add_argument("--method", choices=("caps", "voronoi", "lloyd"), default="voronoi")
    c.add_argument("--seeds", choices=("auto", "tetrahedron", "octahedron", "antipodal", "random"), default="auto")
    c.add_argument("--iterations", type=int, default=50)
    c.set_defaults(func=cmd_continuum)

    s = sub.add_parser("simulate", parents=[common, ens], help="simulate the entanglement-assisted protocol")
    s.add_argument("--source", default="ideal", help="ideal | werner:<v> | file:<path>")
    s.add_argument("--shots", type=int, default=10_000)
    s.add_argument("--tomography-shots", type=int)
    s.add_argument("--mode", choices=("expected", "sampled"), default="expected")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("compare", parents=[common], help="compare benchmark and simulation documents")
    m.add_argument("--benchmarks", nargs="+", required=True)
    m.add_argument("--simulations", nargs="+", required=True)
    m.set_defaults(func=cmd_compare)

    r = sub.add_parser("reproduce", parents=[common, quad], help="full benchmark-versus-simulation pipeline")
    r.add_argument("--source", default=f"werner:{DEFAULT_VISIBILITY}")
    r.add_argument("--mode", choices=("expected", "sampled"), default="expected")
    r.add_argument("--restarts", type=int, default=200)
    r.add_argument("--shots", type=int, default=10_000)
    r.add_argument("--tomography-shots", type=int)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"rspbench: error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InconsistencyError as exc:
        print(f"rspbench: internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
