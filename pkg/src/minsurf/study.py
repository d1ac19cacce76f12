"""Refinement convergence studies.

A study refines a base mesh level by level, minimizes the discrete area at
each level (seeded with the prolonged minimizer of the previous level),
and records error estimators and the distances between successive
minimizer sets.

Configuration is an INI file::

    [study]
    domain = disk            ; or cylinder
    levels = 4
    apriori_r = 3.0
    outputs = out
    proximity = false

    [mesh]
    n_rings = 1              ; disk
    n_around = 6             ; cylinder
    n_along = 1
    inner_radius = 1.0

    [curve]
    kind = circle            ; coaxial-circles, torus-knot, borromean, file
    radius = 1.0

    [solver]
    method = h1-iteration
    multistart_count = 2
"""

from __future__ import annotations

import configparser
import csv
import io
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import charts, curves
from . import functional as fn
from . import immersion as imm
from . import varan
from .errors import DomainError
from .mesh import Triangulation, annulus_ratio, build_cylinder, build_disk, lift, refine
from .objio import write_obj
from .solve import MinimizerSet, SolverConfig, minimality_residual, multistart_minimize

CSV_VERSION = "minsurf converge-study v1"
CSV_COLUMNS = ("level", "n_vertices", "n_simplices", "h_max", "area", "reference_area",
               "area_error", "residual", "apriori_worst", "apriori_member", "n_minimizers",
               "minimizer_delta", "delta_sampling", "delta_reconstruction", "delta_total",
               "eps_sampling", "eps_reconstruction", "eps_total", "rho", "inf_gap",
               "hausdorff_prev")


@dataclass(frozen=True)
class StudyConfig:
    domain: str = "disk"
    curve: dict = field(default_factory=lambda: {"kind": "circle", "radius": "1.0"})
    levels: int = 4
    solver: SolverConfig = SolverConfig(multistart_count=2)
    apriori_r: float = 3.0
    outputs: str | None = None
    mesh: dict = field(default_factory=dict)
    proximity: bool = False
    proxy_levels: int = 1
    collar_depth: float = 1.0
    cap_heights: tuple = (0.1, 0.25)

    def __post_init__(self):
        if self.domain not in ("disk", "cylinder"):
            raise DomainError(f"unknown domain {self.domain!r}")
        if self.levels < 0:
            raise DomainError("levels must be >= 0")
        if self.curve.get("kind") == "file" and not Path(self.curve.get("path", "")).is_file():
            raise DomainError(f"curve file not found: {self.curve.get('path')}")

    def build_curve(self) -> curves.BoundaryCurve:
        kw = {k: v for k, v in self.curve.items() if k != "kind"}
        return curves.from_spec(self.curve.get("kind", "circle"), **kw)

    def base_mesh(self) -> Triangulation:
        if self.domain == "disk":
            return build_disk(int(self.mesh.get("n_rings", 1)))
        return build_cylinder(int(self.mesh.get("n_around", 6)), int(self.mesh.get("n_along", 1)),
                              float(self.mesh.get("inner_radius", 1.0)))


def _solver_from(section) -> SolverConfig:
    kw = {}
    types = {f.name: f.type for f in fields(SolverConfig)}
    for key, raw in section.items():
        if key not in types:
            raise DomainError(f"unknown solver option {key!r}")
        t = types[key]
        if t == "int":
            kw[key] = int(raw)
        elif t == "float":
            kw[key] = float(raw)
        else:
            kw[key] = raw
    return SolverConfig(**{"multistart_count": 2, **kw})


def parse_config(text: str, base_dir: str | Path = ".") -> StudyConfig:
    """Parse an INI-style study configuration."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise DomainError(f"malformed config: {str(exc).splitlines()[0]}") from None
    st = cp["study"] if cp.has_section("study") else {}
    curve = dict(cp["curve"]) if cp.has_section("curve") else {"kind": "circle"}
    if curve.get("kind") == "file" and "path" in curve:
        curve["path"] = str(Path(base_dir) / curve["path"])
    try:
        return StudyConfig(
            domain=st.get("domain", "disk"),
            curve=curve,
            levels=int(st.get("levels", 4)),
            solver=_solver_from(cp["solver"]) if cp.has_section("solver") else SolverConfig(multistart_count=2),
            apriori_r=float(st.get("apriori_r", 3.0)),
            outputs=st.get("outputs"),
            mesh=dict(cp["mesh"]) if cp.has_section("mesh") else {},
            proximity=str(st.get("proximity", "false")).lower() in ("1", "true", "yes", "on"),
            proxy_levels=int(st.get("proxy_levels", 1)),
            collar_depth=float(st.get("collar_depth", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise DomainError(f"malformed config: {exc}") from None


def load_config(path) -> StudyConfig:
    p = Path(path)
    if not p.is_file():
        raise DomainError(f"config not found: {path}")
    return parse_config(p.read_text(), p.parent)


# ----------------------------------------------------------------------
# analytic references


@dataclass(frozen=True)
class Reference:
    area: float
    charts: tuple  # smooth candidate charts


def analytic_reference(cfg: StudyConfig, curve: curves.BoundaryCurve) -> Reference | None:
    """Closed-form minimal surface and smooth candidates, when known.

    The unit circle bounds the flat disk; two coaxial circles of radius
    ``cosh a`` at heights ``-a, a`` bound the catenoid (the stable one for
    ``a = 0.5``). Other boundaries have no reference.
    """
    kind = cfg.curve.get("kind", "circle")
    if cfg.domain == "disk" and kind == "circle" and float(cfg.curve.get("radius", 1.0)) == 1.0:
        cands = (charts.FlatDiskChart(),) + tuple(charts.CapChart(e) for e in cfg.cap_heights)
        return Reference(float(np.pi), cands)
    if cfg.domain == "cylinder" and kind in ("coaxial-circles", "catenoid") and "radius" not in cfg.curve:
        a = float(cfg.curve.get("half_height", 0.5))
        n_around = int(cfg.mesh.get("n_around", 6))
        n_along = int(cfg.mesh.get("n_along", 1))
        r_in = float(cfg.mesh.get("inner_radius", 1.0))
        r_out = r_in * annulus_ratio(n_around) ** n_along
        return Reference(charts.catenoid_area(a), (charts.CatenoidChart(n_around, r_in, r_out, a),))
    return None


# ----------------------------------------------------------------------
# the study


@dataclass
class LevelRecord:
    level: int
    mesh: Triangulation
    minimizers: MinimizerSet
    area: float
    residual: float
    apriori_worst: float
    apriori_member: bool
    reference_area: float = np.nan
    errors: varan.ErrorReport | None = None
    hausdorff_prev: float = np.nan
    solve_seconds: float = 0.0

    def row(self) -> dict:
        e = self.errors.row() if self.errors is not None else {}
        nan = np.nan
        return {
            "level": self.level, "n_vertices": self.mesh.nv, "n_simplices": self.mesh.ns,
            "h_max": self.mesh.max_edge_length(), "area": self.area,
            "reference_area": self.reference_area, "area_error": self.area - self.reference_area,
            "residual": self.residual, "apriori_worst": self.apriori_worst,
            "apriori_member": int(self.apriori_member), "n_minimizers": len(self.minimizers),
            "minimizer_delta": self.minimizers.delta,
            **{k: e.get(k, nan) for k in ("delta_sampling", "delta_reconstruction", "delta_total",
                                           "eps_sampling", "eps_reconstruction", "eps_total",
                                           "rho", "inf_gap")},
            "hausdorff_prev": self.hausdorff_prev,
        }


@dataclass
class ConvergenceReport:
    config: StudyConfig
    levels: list

    @property
    def areas(self) -> np.ndarray:
        return np.array([r.area for r in self.levels])

    @property
    def hausdorff(self) -> np.ndarray:
        """``H(M_{n-1}, M_n)`` for ``n = 1..levels`` (identity correspondence)."""
        return np.array([r.hausdorff_prev for r in self.levels[1:]])

    @property
    def solve_seconds(self) -> float:
        return float(sum(r.solve_seconds for r in self.levels))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {CSV_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.levels:
            row = r.row()
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def probes_for(reference: Reference | None, mesh: Triangulation):
    probes = [charts.QuadraticProbe()] if mesh.points.shape[1] == 2 else []
    if reference is not None:
        probes += list(reference.charts)
    return probes


def level_errors(mesh: Triangulation, curve, mins: MinimizerSet, reference: Reference,
                 cfg: StudyConfig) -> varan.ErrorReport:
    smooth = [fn.from_chart(mesh, c) for c in reference.charts]
    discrete = [e.immersion for e in mins.entries]
    rep = varan.consistency_errors(smooth, discrete, curve, cfg.collar_depth)
    if cfg.proximity:
        varan.proximity_errors(smooth, discrete, curve, cfg.collar_depth, cfg.proxy_levels, rep)
    rep.rho = varan.rho_estimate(mesh, curve, probes_for(reference, mesh))
    return rep


def set_distance(a: MinimizerSet, b: MinimizerSet, finest: Triangulation) -> float:
    """Hausdorff distance of two minimizer sets after lifting to ``finest``.

    Uses the identity correspondence, so it is an upper bound for the
    distance of the sets in shape space.
    """
    def lifted(e):
        f = e.immersion
        if f.mesh is finest:
            return f
        return imm.DiscreteImmersion(finest, lift(f.positions, f.mesh, finest), check=False)

    la = [lifted(e) for e in a.entries]
    lb = [lifted(e) for e in b.entries]
    table = np.array([[imm.dist_imm(x, y).total_cross for y in lb] for x in la])
    return varan.hausdorff_from_table(table)


def run_converge_study(cfg: StudyConfig, write: bool = True) -> ConvergenceReport:
    """Refine, minimize and diagnose level by level.

    Writes ``level_<n>.obj`` (best minimizer) and ``summary.csv`` into
    ``cfg.outputs`` when set and ``write`` is true.
    """
    curve = cfg.build_curve()
    reference = analytic_reference(cfg, curve)
    mesh = cfg.base_mesh()
    records: list[LevelRecord] = []
    previous = None
    meshes = [mesh]
    for _ in range(cfg.levels):
        meshes.append(refine(meshes[-1], 1))
    for level, mesh in enumerate(meshes):
        prev_pos = None
        if previous is not None:
            prev_pos = lift(previous.best.immersion.positions, meshes[level - 1], mesh)
        t0 = time.perf_counter()
        solver = replace(cfg.solver, trace_path=None)
        mins = multistart_minimize(mesh, curve, solver, previous=prev_pos)
        elapsed = time.perf_counter() - t0
        if len(mins) == 0:
            raise DomainError(f"level {level}: no minimizer found; " + "; ".join(mins.diagnostics))
        best = mins.best.immersion
        memb = imm.apriori_membership_discrete(best, imm.PullbackField.identity(mesh), cfg.apriori_r)
        rec = LevelRecord(level, mesh, mins, mins.best.value, minimality_residual(best),
                          memb.worst, memb.member, solve_seconds=elapsed)
        if reference is not None:
            rec.reference_area = reference.area
            if level >= 1:
                rec.errors = level_errors(mesh, curve, mins, reference, cfg)
        records.append(rec)
        previous = mins
    finest = meshes[-1]
    for n in range(1, len(records)):
        records[n].hausdorff_prev = set_distance(records[n - 1].minimizers, records[n].minimizers, finest)
    report = ConvergenceReport(cfg, records)
    if write and cfg.outputs:
        out = Path(cfg.outputs)
        out.mkdir(parents=True, exist_ok=True)
        for r in records:
            write_obj(out / f"level_{r.level}.obj", r.mesh, r.minimizers.best.immersion.positions)
        (out / "summary.csv").write_text(report.to_csv())
    return report
