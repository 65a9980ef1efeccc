"""Command-line front end: ``algms generate | recover | solve | study``.

Directory layout written by ``generate`` (``--out-dir D``)::

    D/A.mtx, D/b.mtx      micro system (Matrix Market)
    D/mesh.json           layout only: nx, ny, block sizes, DOF order
    D/u_h.vec             micro reference solution
    D/truth/kappa.csv     ground-truth coefficient  (gmsfem mode only)
    D/truth/mesh.json     ground-truth coordinates  (gmsfem mode only)

``solve --mode ams`` reads only the first three files.
"""
import argparse
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .dssy import SparseSystem
from .errors import AMSError, ConfigError
from .linalg import sparse_spd_solve
from .mesh import DOF_ORDER, DofLayout, build_macro_mesh, build_micro_mesh, mesh_sidecar
from .mmio import (read_grid, read_json, read_matrix_market, write_array, write_grid, write_json,
                   write_matrix_market, write_vector)
from .multiscale import AMS, GMSFEM, Options, solve_ams, solve_gmsfem
from .recovery import recover_field
from .study import (DEFAULT_EPS, ErrorReport, benchmark_system, broken_energy_error,
                    l2_error, run_study, write_study_csv)
from .problem import Benchmark

log = logging.getLogger("algms")

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _out_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _read_layout(in_dir):
    meta = read_json(Path(in_dir) / "mesh.json")
    if meta.get("dof_order") != DOF_ORDER:
        raise ConfigError(f"unsupported dof_order {meta.get('dof_order')!r}")
    try:
        return meta, DofLayout(int(meta["nx"]), int(meta["ny"]))
    except KeyError as exc:
        raise ConfigError(f"mesh.json missing key {exc}") from None


def _read_system(in_dir, layout):
    in_dir = Path(in_dir)
    A = read_matrix_market(in_dir / "A.mtx")
    b = read_matrix_market(in_dir / "b.mtx")
    if A.shape != (layout.size, layout.size) or np.shape(b) != (layout.size,):
        raise ConfigError(f"A {A.shape} / b {np.shape(b)} do not match layout {layout}")
    return SparseSystem(A, b)


def _options(args):
    return Options(LE=args.LE, moment=args.moment, snapshot_layers=args.layers,
                   moment_layers=args.moment_layers)


def cmd_generate(args):
    if args.invh % args.invH:
        raise ConfigError("--invh must be a multiple of --invH")
    problem, mesh, layout, kappa, system = benchmark_system(args.eps, args.invh)
    if args.coefficient == "one":
        from .dssy import assemble_micro_system
        kappa = np.ones_like(kappa)
        system = assemble_micro_system(mesh, layout, kappa, problem.f)
    block = args.invh // args.invH
    macro = build_macro_mesh(mesh, block, block)
    out = _out_dir(args.out_dir)
    write_matrix_market(out / "A.mtx", system.A)
    write_array(out / "b.mtx", system.b)
    write_json(out / "mesh.json", mesh_sidecar(mesh, macro, include_coords=False))
    u = sparse_spd_solve(system.A, system.b)
    write_vector(out / "u_h.vec", u)
    truth = _out_dir(out / "truth")
    write_grid(truth / "kappa.csv", kappa)
    meta = mesh_sidecar(mesh, macro)
    meta["eps"] = args.eps
    write_json(truth / "mesh.json", meta)
    log.info("wrote %d-DOF system to %s", layout.size, out)
    return 0


def _extent(meta):
    ext = meta.get("extent", [1.0, 1.0])
    return float(ext[0]), float(ext[1])


def cmd_recover(args):
    meta, layout = _read_layout(args.in_dir)
    A = read_matrix_market(Path(args.in_dir) / "A.mtx")
    rec = recover_field(A, layout, _extent(meta))
    out = _out_dir(args.out_dir)
    write_grid(out / "kappa.csv", rec.kappa)
    write_grid(out / "gamma.csv", rec.gamma)
    write_vector(out / "hx.csv", rec.hx)
    write_vector(out / "hy.csv", rec.hy)
    write_grid(out / "provenance.csv", rec.provenance, fmt=None)
    return 0


def _blocks(meta):
    try:
        return int(meta["block_x"]), int(meta["block_y"])
    except KeyError:
        raise ConfigError("mesh.json needs block_x and block_y") from None


def cmd_solve(args):
    meta, layout = _read_layout(args.in_dir)
    bx, by = _blocks(meta)
    opts = _options(args)
    system = _read_system(args.in_dir, layout)
    if args.mode == AMS:
        if args.truth_dir is not None:
            raise ConfigError("ams mode takes only A, b and mesh.json; drop --truth-dir")
        res = solve_ams(system, layout, bx, by, opts, _extent(meta))
    else:
        truth = Path(args.truth_dir) if args.truth_dir else Path(args.in_dir) / "truth"
        tmeta = read_json(truth / "mesh.json")
        mesh = build_micro_mesh(layout.nx, layout.ny, tmeta["x_coords"], tmeta["y_coords"])
        kappa = read_grid(truth / "kappa.csv")
        res = solve_gmsfem(system, mesh, kappa, bx, by, opts)
    out = _out_dir(args.out_dir)
    write_vector(out / "coarse.vec", res.solution.coefficients)
    write_vector(out / "u_H.vec", res.u)
    # element-center values: DSSY basis is 1/4 at the center
    d = layout.element_dofs
    coef = np.where(d >= 0, res.u[np.maximum(d, 0)], 0.0)
    write_grid(out / "field.csv", coef.mean(axis=-1))
    write_json(out / "dims.json", {"mode": res.mode, **res.info})
    if args.eps is not None:
        problem = Benchmark(args.eps)
        mesh, cells = res.mesh, res.space.cells
        rep = ErrorReport(args.eps, res.space.macro.Nx, layout.nx, res.space.dim, res.mode,
                          broken_energy_error(mesh, layout, cells.kappa, res.u, problem.grad_u),
                          l2_error(mesh, layout, res.u, problem.u), 0.0)
        row = asdict(rep)
        row.pop("seconds")
        write_json(out / "report.json", row)
        print(f"{res.mode}: dim={rep.dim} rel_energy={rep.rel_energy:.4g} rel_l2={rep.rel_l2:.4g}")
    return 0


def cmd_study(args):
    levels = [(H, H * args.ratio) for H in args.invH]
    rows = run_study(args.eps, levels, tuple(args.modes), _options(args), args.reference)
    out = _out_dir(args.out_dir)
    write_study_csv(out / "study.csv", rows)
    for r in rows:
        print(",".join(str(x) for x in r.row()))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="algms", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def coarse_flags(sp):
        sp.add_argument("--moment", choices=("trace", "harmonic"), default="trace")
        sp.add_argument("--layers", type=int, default=0, help="snapshot oversampling rings")
        sp.add_argument("--moment-layers", type=int, default=1,
                        help="oversampling rings of the harmonic moment problems")
        sp.add_argument("--LE", type=int, default=None, help="moment modes per macro edge")

    g = sub.add_parser("generate", help="assemble and export the benchmark micro system")
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--invH", type=int, default=5)
    g.add_argument("--invh", type=int, default=50)
    g.add_argument("--coefficient", choices=("benchmark", "one"), default="benchmark")
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("recover", help="recover kappa and mesh sizes from A.mtx")
    r.add_argument("--in-dir", required=True)
    r.add_argument("--out-dir", required=True)
    r.set_defaults(func=cmd_recover)

    s = sub.add_parser("solve", help="coarse multiscale solve")
    s.add_argument("--mode", choices=(AMS, GMSFEM), default=AMS)
    s.add_argument("--in-dir", required=True)
    s.add_argument("--truth-dir", default=None)
    s.add_argument("--eps", type=float, default=None, help="benchmark eps for the error report")
    s.add_argument("--out-dir", required=True)
    coarse_flags(s)
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("study", help="convergence study over eps and mesh levels")
    t.add_argument("--eps", type=float, nargs="*", default=list(DEFAULT_EPS))
    t.add_argument("--invH", type=int, nargs="+", default=[5, 10, 20, 40])
    t.add_argument("--ratio", type=int, default=10, help="H/h")
    t.add_argument("--modes", nargs="+", choices=(GMSFEM, AMS), default=[GMSFEM, AMS])
    t.add_argument("--reference", choices=("exact", "micro"), default="exact")
    t.add_argument("--out-dir", required=True)
    coarse_flags(t)
    t.set_defaults(func=cmd_study)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AMSError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
