"""Command-line interface.

Exit codes: 0 success, 2 bad arguments or malformed input, 3 non-unitary
input, 4 numerical failure. Diagnostics go to stderr; results go to files
(plus a single number on stdout for commands that report a residual).
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

import numpy as np

from . import io
from .alternating import (
    Distribution,
    Form,
    ImbalanceModel,
    alternating_layout,
    evaluate_alternating,
    optimize_phases,
    sample_imbalance,
)
from .clements import (
    decompose_clements_amzi,
    decompose_clements_smzi,
    reconstruct_amzi,
    reconstruct_clements,
)
from .errors import (
    DecompositionError,
    LayoutError,
    NotUnitaryError,
    RelocationError,
    SchemaError,
    ShapeError,
)
from .linalg import UnitaryMatrix, global_phase_distance, haar_random_unitary, unitarity_deviation
from .mesh import evaluate
from .reck import decompose_reck, reconstruct_reck
from .relocate import relocate_all
from .sweep import CSV_HEADER, SCHEMES, run_sweep

EXIT_OK, EXIT_USAGE, EXIT_NOT_UNITARY, EXIT_NUMERIC = 0, 2, 3, 4

#: Unitarity accepted on input files; covers text truncation but is never
#: repaired by projection.
CLI_UNITARY_TOL = 1e-8


class UsageError(Exception):
    """Invalid argument combination."""


def _load_unitary(path) -> UnitaryMatrix:
    mat = io.read_matrix(path)
    if mat.shape[0] != mat.shape[1]:
        raise SchemaError(f"matrix is {mat.shape[0]}x{mat.shape[1]}, expected square")
    dev = unitarity_deviation(mat)
    if not dev <= CLI_UNITARY_TOL:
        raise NotUnitaryError(f"input deviates from unitarity by {dev:.3e} > {CLI_UNITARY_TOL:.0e}", dev)
    return UnitaryMatrix(mat, CLI_UNITARY_TOL)


def _reconstruct_table(table) -> np.ndarray:
    if hasattr(table, "phi_in"):
        return reconstruct_reck(table).mat
    if hasattr(table, "phi_side"):
        return reconstruct_clements(table).mat
    return reconstruct_amzi(table).mat


def _reconstruct_any(scheme: str, obj) -> np.ndarray:
    if scheme in io.TABLE_SCHEMES:
        return _reconstruct_table(obj)
    if scheme == io.MESH_SCHEME:
        circuit, alpha = obj
        return evaluate(circuit).mat * np.exp(-1j * alpha)
    return evaluate_alternating(obj).mat


def cmd_decompose(args) -> int:
    u = _load_unitary(args.inp)
    if u.m < 2:
        raise UsageError("decomposition needs at least 2 modes")
    tol = CLI_UNITARY_TOL
    if args.scheme == "reck-smzi":
        table = decompose_reck(u, unitary_tol=tol)
        doc = io.table_to_json(table)
    elif args.scheme == "clements-amzi":
        table = decompose_clements_amzi(u, unitary_tol=tol)
        doc = io.table_to_json(table)
    else:
        table = decompose_clements_smzi(u, unitary_tol=tol)
        doc = io.table_to_json(table)
        if args.scheme == io.MESH_SCHEME:
            doc = io.mesh_to_json(relocate_all(table), table.global_phase)
    # Measure the residual on what the file will actually contain.
    parsed = io.table_from_json(doc) if args.scheme in io.TABLE_SCHEMES else io.mesh_from_json(doc)
    residual = global_phase_distance(_reconstruct_any(args.scheme, parsed), u.mat)
    if not residual < 1e-6:
        raise DecompositionError("reconstruction does not match the input", 0, 0, 0, 0, residual)
    io.write_json(args.out, doc)
    print(f"{residual:.6e}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    scheme, obj = io.read_any_table(args.inp)
    io.write_matrix(args.out, _reconstruct_any(scheme, obj))
    return EXIT_OK


def cmd_relocate(args) -> int:
    table = io.table_from_json(io.read_json(args.inp))
    if not hasattr(table, "phi_side"):
        raise SchemaError("relocation needs a clements-smzi table")
    mesh = relocate_all(table)
    before = reconstruct_clements(table).mat
    after = evaluate(mesh).mat * np.exp(-1j * table.global_phase)
    discrepancy = global_phase_distance(before, after)
    io.write_json(args.out, io.mesh_to_json(mesh, table.global_phase))
    print(f"{discrepancy:.6e}")
    return EXIT_OK


def cmd_haar(args) -> int:
    if args.m is None or args.m < 1:
        raise UsageError("--m must be a positive integer")
    io.write_matrix(args.out, haar_random_unitary(args.m, args.seed))
    return EXIT_OK


def cmd_optimize(args) -> int:
    u = _load_unitary(args.inp)
    if args.m is not None and args.m != u.m:
        raise UsageError(f"--m {args.m} does not match the {u.m}-mode target")
    if args.depth is None or args.depth < 1:
        raise UsageError("--depth must be >= 1")
    if args.restarts < 1 or args.max_iters < 1:
        raise UsageError("--restarts and --max-iters must be >= 1")
    sigma = args.sigma[0] if args.sigma else 0.0
    if len(args.sigma or []) > 1:
        raise UsageError("optimize takes a single --sigma")
    model = ImbalanceModel(sigma, args.seed, Distribution(args.distribution))
    layout = alternating_layout(u.m, args.depth, Form(args.form))
    layout = layout.with_splitters(sample_imbalance(model, layout))
    rep = optimize_phases(u, layout, max_iters=args.max_iters, tol=args.tol, restarts=args.restarts,
                          seed=args.seed, unitary_tol=CLI_UNITARY_TOL)
    doc = {"m": u.m, "depth": args.depth, "form": args.form, "sigma": sigma, "distribution": args.distribution,
           "seed": args.seed, "restarts": args.restarts, "achieved_infidelity": rep.achieved_infidelity,
           "iterations": rep.iterations, "per_restart": rep.per_restart, "circuit": io.circuit_to_json(rep.circuit)}
    io.write_json(args.out, doc)
    print(f"{rep.achieved_infidelity:.6e}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.m is None or args.m < 2:
        raise UsageError("--m must be >= 2")
    if args.trials is None or args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if not args.sigma:
        raise UsageError("--sigma needs at least one value")
    if any(not (math.isfinite(s) and s >= 0) for s in args.sigma):
        raise UsageError("sigma values must be finite and >= 0")
    schemes = args.schemes.split(",") if args.schemes else list(SCHEMES)
    unknown = sorted(set(schemes) - set(SCHEMES))
    if unknown:
        raise UsageError(f"unknown schemes {unknown}; choose from {list(SCHEMES)}")
    rows = run_sweep(args.m, args.sigma, args.trials, schemes, seed=args.seed, restarts=args.restarts)
    text = io.rows_to_csv(CSV_HEADER, [(r.scheme, r.m, r.sigma, r.trial_seed, r.infidelity) for r in rows])
    io.atomic_write_text(args.out, text)
    return EXIT_OK


def _sigma_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="photomesh", description="Program and analyse MZI meshes.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="compile a unitary into a phase table")
    d.add_argument("--scheme", required=True, choices=[*io.TABLE_SCHEMES, io.MESH_SCHEME])
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_decompose)

    r = sub.add_parser("reconstruct", help="evaluate a phase table, mesh, or circuit file")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reconstruct)

    rl = sub.add_parser("relocate", help="move residual phases of a clements-smzi table to the edges")
    rl.add_argument("--in", dest="inp", required=True)
    rl.add_argument("--out", required=True)
    rl.set_defaults(func=cmd_relocate)

    h = sub.add_parser("haar", help="sample a Haar-random unitary")
    h.add_argument("--m", type=int, required=True)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out", required=True)
    h.set_defaults(func=cmd_haar)

    o = sub.add_parser("optimize", help="fit an alternating-layer circuit to a unitary")
    o.add_argument("--in", dest="inp", required=True)
    o.add_argument("--m", type=int)
    o.add_argument("--depth", type=int, required=True)
    o.add_argument("--sigma", type=_sigma_list, default=[0.0])
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--form", choices=[Form.FULL.value, Form.COMPACT.value], default=Form.COMPACT.value)
    o.add_argument("--distribution", choices=[x.value for x in Distribution], default=Distribution.GAUSSIAN.value)
    o.add_argument("--restarts", type=int, default=10)
    o.add_argument("--max-iters", type=int, default=2000)
    o.add_argument("--tol", type=float, default=1e-10)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("sweep", help="imbalance robustness sweep, written as CSV")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--sigma", type=_sigma_list, required=True, help="comma-separated grid, e.g. 0,0.05,0.1")
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--schemes", default=",".join(SCHEMES))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restarts", type=int, default=3)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NotUnitaryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_UNITARY
    except (SchemaError, UsageError, ShapeError, LayoutError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DecompositionError, RelocationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
