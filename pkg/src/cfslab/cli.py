"""Batch command-line driver: build, classify, evaluate, minimize.

Systems are stored as schema-versioned JSON (complex numbers as [re, im]
pairs, deterministic key order); bulk pair data is CSV.  All randomness flows
through an explicit ``--seed`` (default 0).  Exit codes: 0 ok, 2 usage,
3 computation failure, 4 infeasibility.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import minimize as minimize_mod
from . import vacuum
from .diracsea import LatticeSeaSystem, LatticeSpec, build_sea_modes, build_system, apply_occupation_edits
from .errors import CfsError, InfeasibleTrace
from .measure import (
    DiscreteMeasure,
    action_functionals,
    total_volume,
    trace_integral,
)
from .opspace import OperatorPoint

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_COMPUTE = 3
EXIT_INFEASIBLE = 4


class _UsageError(Exception):
    """Invalid flag values; maps to exit code 2."""


# ---------------------------------------------------------------------------
# SystemFile persistence


def _complex_vector_to_json(vec: np.ndarray):
    return [[float(z.real), float(z.imag)] for z in vec]


def _complex_vector_from_json(data):
    return np.array([complex(re, im) for re, im in data])


def system_to_dict(measure: DiscreteMeasure, builder: dict, counting_weight=None) -> dict:
    atoms = []
    for point, weight in zip(measure.points, measure.weights):
        atoms.append(
            {
                "weight": float(weight),
                "operator": {
                    "eigenvalues": [float(v) for v in point.spectrum],
                    "factors": [
                        _complex_vector_to_json(point.factors[:, a])
                        for a in range(point.rank)
                    ],
                },
            }
        )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "n": measure.n,
        "hilbert_dim": measure.hilbert_dim,
        "builder": builder,
        "atoms": atoms,
    }
    if counting_weight is not None:
        payload["counting_weight"] = float(counting_weight)
    return payload


def save_system(path: str, measure: DiscreteMeasure, builder: dict, counting_weight=None):
    payload = system_to_dict(measure, builder, counting_weight)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def save_lattice_system(path: str, system: LatticeSeaSystem):
    builder = {
        "kind": "lattice",
        "eps": system.spec.eps,
        "n_t": system.spec.n_t,
        "n_s": system.spec.n_s,
        "mass": system.spec.mass,
        "added": [list(k) for k in system.added],
        "removed": [list(k) for k in system.removed],
    }
    save_system(path, system.measure, builder, counting_weight=system.counting_weight)


def load_system(path: str):
    """Load a SystemFile; returns (measure, metadata)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported schema version {payload.get('schema_version')!r}"
        )
    n = int(payload["n"])
    hilbert_dim = int(payload["hilbert_dim"])
    points = []
    weights = []
    for atom in payload["atoms"]:
        weights.append(float(atom["weight"]))
        op = atom["operator"]
        spectrum = np.array([float(v) for v in op["eigenvalues"]])
        if spectrum.size:
            factors = np.stack(
                [_complex_vector_from_json(col) for col in op["factors"]], axis=1
            )
        else:
            factors = np.zeros((hilbert_dim, 0), dtype=complex)
        points.append(OperatorPoint(factors, spectrum, n=n, validate=False))
    measure = DiscreteMeasure(points, np.array(weights))
    return measure, payload


def lattice_system_from_file(path: str) -> LatticeSeaSystem:
    """Rebuild the lattice system (modes included) from a lattice SystemFile."""
    measure, payload = load_system(path)
    builder = payload.get("builder", {})
    if builder.get("kind") != "lattice":
        raise ValueError("system file has no lattice builder provenance")
    spec = LatticeSpec(
        eps=float(builder["eps"]),
        n_t=int(builder["n_t"]),
        n_s=int(builder["n_s"]),
        mass=float(builder["mass"]),
    )
    added = tuple(tuple(int(v) for v in k) for k in builder.get("added", []))
    removed = tuple(tuple(int(v) for v in k) for k in builder.get("removed", []))
    table = build_sea_modes(spec)
    if added or removed:
        table = apply_occupation_edits(table, add=added, remove=removed)
    if table.count != measure.hilbert_dim:
        raise ValueError(
            f"rebuilt mode table has {table.count} modes but file stores "
            f"hilbert_dim {measure.hilbert_dim}"
        )
    return LatticeSeaSystem(
        spec=spec,
        modes=table,
        measure=measure,
        counting_weight=float(payload.get("counting_weight", 1.0)),
        added=added,
        removed=removed,
    )


# ---------------------------------------------------------------------------
# CSV writers (repr floats: shortest round-trip representation, deterministic)

AUDIT_COLUMNS = (
    "ix,iy,xi0,xi1,xi2,xi3,xi_sq,class_spectral,class_minkowski,"
    "lagrangian,eig_discrepancy,in_band"
)


def write_audit_csv(path: str, report: vacuum.AuditReport):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(AUDIT_COLUMNS + "\n")
        for i in range(report.n_pairs):
            xi = report.xi[i]
            fh.write(
                f"{report.pairs[i, 0]},{report.pairs[i, 1]},"
                f"{xi[0]!r},{xi[1]!r},{xi[2]!r},{xi[3]!r},{report.xi_sq[i]!r},"
                f"{report.class_spectral[i]},{report.class_minkowski[i]},"
                f"{report.lagrangian[i]!r},{report.eig_discrepancy[i]!r},"
                f"{int(report.in_band[i])}\n"
            )


def write_minimize_log(path: str, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,S,T,volume,trace,accepted\n")
        for row in rows:
            fh.write(
                f"{row.iteration},{row.action!r},{row.boundedness!r},"
                f"{row.volume!r},{row.trace!r},{int(row.accepted)}\n"
            )


# ---------------------------------------------------------------------------
# commands


def _parse_mode_key(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            f"mode spec must be 'ax,ay,az,spin', got {text!r}"
        )
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"non-integer mode spec {text!r}") from exc


def cmd_build_vacuum(args) -> int:
    try:
        spec = LatticeSpec(eps=args.eps, n_t=args.nt, n_s=args.ns, mass=args.mass)
        if args.weight <= 0:
            raise ValueError(f"counting weight must be positive, got {args.weight}")
        bz = set(int(a) for a in spec.brillouin_integers())
        for key in list(args.add_mode) + list(args.remove_mode):
            ax, ay, az, spin = key
            if spin not in (1, 2) or any(a not in bz for a in (ax, ay, az)):
                raise ValueError(f"invalid mode spec {key}")
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    try:
        system = build_system(
            spec,
            add_modes=args.add_mode,
            remove_modes=args.remove_mode,
            counting_weight=args.weight,
        )
    except ValueError as exc:  # duplicate/unoccupied occupation edits
        raise _UsageError(str(exc)) from exc
    save_lattice_system(args.out, system)
    signatures = {}
    for point in system.measure.points:
        signatures[point.signature] = signatures.get(point.signature, 0) + 1
    sig_text = ", ".join(f"{k}: {v}" for k, v in sorted(signatures.items()))
    print(f"hilbert_dim f = {system.hilbert_dim}")
    print(f"atoms = {len(system.measure)}")
    print(f"signatures {{{sig_text}}}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_classify(args) -> int:
    system = lattice_system_from_file(args.sys)
    if args.pairs == "all":
        pairs = vacuum.all_pairs(system.spec.n_points)
    else:
        pairs = vacuum.sample_pairs(system.spec, args.count, seed=args.seed)
    report = vacuum.causality_audit(
        system,
        pairs,
        band_multiplier=args.band_mult,
        threads=args.threads,
    )
    write_audit_csv(args.out, report)
    outside = report.n_pairs - report.n_in_band
    print(f"pairs = {report.n_pairs} (in band: {report.n_in_band}, rated: {outside})")
    if outside:
        print(f"agreement rate = {report.agreement_rate:.6f}")
    else:
        print("agreement rate undefined: all pairs inside the band")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_action(args) -> int:
    measure, _ = load_system(args.sys)
    action, boundedness = action_functionals(measure, threads=args.threads)
    print(f"S = {action:.15g}")
    print(f"T = {boundedness:.15g}")
    print(f"volume = {total_volume(measure):.15g}")
    print(f"trace = {trace_integral(measure):.15g}")
    if args.report_constraints:
        print(f"constraint targets captured from this measure: "
              f"volume {total_volume(measure):.15g}, trace {trace_integral(measure):.15g}")
    return EXIT_OK


def cmd_minimize(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    problem, budget = minimize_mod.problem_from_config(config)
    result = minimize_mod.minimize_action(problem, budget, threads=args.threads)
    write_minimize_log(args.out_log, result.log)
    best = result.best_measure
    save_system(
        args.out_best,
        best,
        builder={"kind": "abstract", "family": problem.family.name},
    )
    print(f"best S = {result.best_action:.15g}")
    print(f"best T = {result.best_boundedness:.15g}")
    print(
        f"volume residual = {abs(total_volume(best) - problem.volume_target):.3e}, "
        f"trace residual = {abs(trace_integral(best) - problem.trace_target):.3e}"
    )
    print(f"status = {result.status} after {result.evaluations} evaluations")
    print(f"wrote {args.out_log} and {args.out_best}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfslab",
        description="causal fermion system laboratory (batch driver)",
    )
    default_threads = os.environ.get("CFS_THREADS")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build-vacuum", help="build a lattice Dirac-sea system")
    build.add_argument("--eps", type=float, required=True, help="lattice spacing")
    build.add_argument("--nt", type=int, required=True, help="temporal extent")
    build.add_argument("--ns", type=int, required=True, help="spatial extent")
    build.add_argument("--mass", type=float, required=True, help="Dirac mass")
    build.add_argument(
        "--add-mode", action="append", default=[], type=_parse_mode_key,
        metavar="AX,AY,AZ,SPIN", help="occupy a positive-energy state (repeatable)",
    )
    build.add_argument(
        "--remove-mode", action="append", default=[], type=_parse_mode_key,
        metavar="AX,AY,AZ,SPIN", help="remove a sea state (repeatable)",
    )
    build.add_argument("--weight", type=float, default=1.0, help="counting weight per point")
    build.add_argument("--out", required=True, help="output system JSON")
    build.set_defaults(func=cmd_build_vacuum)

    classify = sub.add_parser("classify", help="causality audit of a lattice system")
    classify.add_argument("--sys", required=True, help="system JSON from build-vacuum")
    classify.add_argument("--pairs", choices=("all", "sample"), default="sample")
    classify.add_argument("--count", type=int, default=10000, help="sampled pair count")
    classify.add_argument("--seed", type=int, default=0)
    classify.add_argument("--band-mult", type=float, default=3.0,
                          help="lightcone band half-width in units of eps")
    classify.add_argument("--threads", type=int, default=default_threads)
    classify.add_argument("--out", required=True, help="output CSV")
    classify.set_defaults(func=cmd_classify)

    action = sub.add_parser("action", help="evaluate S, T, volume, trace of a system file")
    action.add_argument("--sys", required=True)
    action.add_argument("--report-constraints", action="store_true")
    action.add_argument("--threads", type=int, default=default_threads)
    action.set_defaults(func=cmd_action)

    minimize = sub.add_parser("minimize", help="minimize the action over a toy family")
    minimize.add_argument("--config", required=True, help="JSON problem configuration")
    minimize.add_argument("--out-log", required=True, help="iterate log CSV")
    minimize.add_argument("--out-best", required=True, help="best system JSON")
    minimize.add_argument("--threads", type=int, default=default_threads)
    minimize.set_defaults(func=cmd_minimize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is not None:
        args.threads = int(args.threads)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleTrace as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CfsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
