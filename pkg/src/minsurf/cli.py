"""Command line interface.

Exit codes: 0 success, 2 domain error (bad input, malformed mesh or
config), 3 certificate violation.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import functional as fn
from . import immersion as imm
from . import study, sweeps, varan
from .errors import CertificateViolation, DomainError
from .mesh import build_disk, lift, refine
from .objio import read_mesh, write_mesh
from .solve import minimality_residual, minimize, multistart_minimize, write_trace

EXIT_OK, EXIT_DOMAIN, EXIT_CERT = 0, 2, 3


def _config(args) -> study.StudyConfig:
    cfg = study.load_config(args.config) if args.config else study.StudyConfig()
    if args.seed is not None:
        cfg = replace(cfg, solver=replace(cfg.solver, seed=args.seed))
    if args.out:
        cfg = replace(cfg, outputs=args.out)
    if getattr(args, "levels", None) is not None:
        cfg = replace(cfg, levels=args.levels)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    """Minimize area on the configured domain at the finest level, or from a mesh file."""
    cfg = _config(args)
    curve = cfg.build_curve()
    solver = replace(cfg.solver, trace_path=args.trace)
    out = _out_dir(args)
    if args.trace:
        Path(args.trace).parent.mkdir(parents=True, exist_ok=True)
    if args.mesh:
        mesh, pos = read_mesh(args.mesh)
        pos[mesh.boundary_vertices] = curve.pin(mesh)
        res = minimize(imm.DiscreteImmersion(mesh, pos, curve), solver)
        best, value, converged = res.immersion, res.value, res.converged
        if args.trace:
            write_trace(args.trace, res.trace)
    else:
        mesh = refine(cfg.base_mesh(), cfg.levels)
        mins = multistart_minimize(mesh, curve, replace(solver, trace_path=None))
        if len(mins) == 0:
            raise DomainError("no minimizer found: " + "; ".join(mins.diagnostics))
        e = mins.best
        if args.trace:
            res = minimize(imm.DiscreteImmersion(mesh, e.immersion.positions, curve), solver)
            write_trace(args.trace, res.trace)
        best, value, converged = e.immersion, e.value, e.converged
    path = out / "solution.obj"
    write_mesh(path, best.mesh, best.positions)
    print(f"area {value!r}")
    print(f"residual {minimality_residual(best)!r}")
    print(f"converged {int(converged)}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_refine(args) -> int:
    """Subdivide a mesh file; new vertices take edge midpoints (pinned if a curve is configured)."""
    mesh, pos = read_mesh(args.mesh)
    fine = refine(mesh, args.levels)
    new = lift(pos, mesh, fine)
    if args.config:
        new[fine.boundary_vertices] = _config(args).build_curve().pin(fine)
    path = Path(args.output) if args.output else _out_dir(args) / f"refined{Path(args.mesh).suffix}"
    write_mesh(path, fine, new)
    print(f"vertices {fine.nv} simplices {fine.ns}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_metric(args) -> int:
    """Immersion distance between two configurations on the same mesh."""
    ma, pa = read_mesh(args.a)
    mb, pb = read_mesh(args.b)
    if not (np.array_equal(ma.simplices, mb.simplices) and np.allclose(ma.points, mb.points)):
        raise DomainError("meshes differ; the distance needs a shared triangulation")
    d = imm.dist_imm(imm.DiscreteImmersion(ma, pa), imm.DiscreteImmersion(ma, pb))
    w = csv.writer(sys.stdout, lineterminator="\n")
    cols = ("sup_pos", "sup_metric", "sup_ray", "boundary_pos", "boundary_metric",
            "boundary_ray", "total", "total_cross")
    w.writerow(cols)
    w.writerow([repr(float(getattr(d, c))) for c in cols])
    return EXIT_OK


def cmd_consistency(args) -> int:
    """Consistency (and optionally proximity) errors per level of the configured study."""
    cfg = _config(args)
    curve = cfg.build_curve()
    ref = study.analytic_reference(cfg, curve)
    if ref is None:
        raise DomainError("no analytic smooth reference for this configuration")
    mesh = cfg.base_mesh()
    reports = {}
    previous = None
    for level in range(cfg.levels + 1):
        if level:
            fine = refine(mesh, 1)
            previous = lift(previous, mesh, fine)
            mesh = fine
        mins = multistart_minimize(mesh, curve, cfg.solver, previous=previous)
        if len(mins) == 0:
            raise DomainError(f"level {level}: no minimizer found")
        previous = mins.best.immersion.positions
        if level:
            reports[level] = study.level_errors(mesh, curve, mins, ref, cfg)
    text = varan.reports_to_csv(reports)
    if args.out:
        path = _out_dir(args) / "consistency.csv"
        path.write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_converge_study(args) -> int:
    cfg = _config(args)
    if cfg.outputs is None:
        cfg = replace(cfg, outputs=".")
    rep = study.run_converge_study(cfg)
    sys.stdout.write(rep.to_csv())
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    """Analytic area gradient against central differences on a random disk mesh."""
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    mesh = refine(build_disk(1), args.level)
    worst = 0.0
    for _ in range(args.samples):
        pos = np.zeros((mesh.nv, 3))
        pos[:, :2] = mesh.points
        pos += 0.05 * rng.standard_normal(pos.shape)
        g = fn.volume_gradient_full(mesh, pos)[mesh.interior_vertices]
        fd = fn.finite_difference_gradient(mesh, pos, 1e-6)
        worst = max(worst, float(np.max(np.abs(g - fd)) / max(np.max(np.abs(g)), 1e-300)))
    print(f"max relative error {worst:.3e}")
    return EXIT_OK if worst <= 1e-6 else EXIT_CERT


def cmd_certify(args) -> int:
    """Randomized sweeps over every perturbation certificate."""
    total = 0
    names = args.only or list(sweeps.SWEEPS)
    for i, name in enumerate(names):
        r = sweeps.run_sweep(name, args.n, (args.seed or 0) + i)
        total += r.violations
        print(f"{name}: {r.applicable} applicable, {r.violations} violations, "
              f"worst actual/bound {r.worst_ratio:.4f}")
        for msg in r.messages:
            print(f"  {msg}")
    print(f"{total} violations")
    return EXIT_OK if total == 0 else EXIT_CERT


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="study configuration (INI)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--trace", metavar="PATH", help="per-iteration solver trace (CSV)")

    p = argparse.ArgumentParser(prog="minsurf", description="Discrete minimal surfaces.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="minimize area")
    s.add_argument("--mesh", help="start from this OBJ/OFF mesh")
    s.add_argument("--levels", type=int, default=None)
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("refine", parents=[common], help="4:1 subdivision of a mesh file")
    s.add_argument("mesh")
    s.add_argument("--levels", type=int, default=1)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_refine)
    s = sub.add_parser("metric", parents=[common], help="immersion distance of two meshes")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_metric)
    s = sub.add_parser("consistency", parents=[common], help="consistency errors per level")
    s.add_argument("--levels", type=int, default=None)
    s.set_defaults(func=cmd_consistency)
    s = sub.add_parser("converge-study", parents=[common], help="refinement convergence study")
    s.add_argument("--levels", type=int, default=None)
    s.set_defaults(func=cmd_converge_study)
    s = sub.add_parser("gradcheck", parents=[common], help="area gradient vs finite differences")
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--samples", type=int, default=1)
    s.set_defaults(func=cmd_gradcheck)
    s = sub.add_parser("certify", parents=[common], help="perturbation certificate sweeps")
    s.add_argument("-n", type=int, default=1000, help="applicable instances per certificate")
    s.add_argument("--only", nargs="*", choices=list(sweeps.SWEEPS) + list(sweeps.EXTRA_SWEEPS))
    s.set_defaults(func=cmd_certify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CertificateViolation as exc:
        print(f"certificate violation: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (DomainError, OSError) as exc:
        print(f"error: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
