"""Knaster solver: age-gated bisection of edges that touch Sperner cells.

Each outer step ages every edge by 2 and bisects, oldest first, each edge
older than ``3 + age_count`` that lies on a Sperner cell. If nothing was
bisected the scan is repeated once with threshold ``2 + age_count``.
``age_count`` grows by one after every step that refined something, which
keeps freshly split regions from being refined again too early.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import labeling as lab
from .geometry import barycentric
from .mesh import Mesh
from .trace import SolveTrace, vertex_labels

log = logging.getLogger(__name__)

MAIN_OFFSET = 3
FALLBACK_OFFSET = 2
DOMAIN_TOL = 1e-9
SPURIOUS_ORIGIN_TOL = 1e-6


class DomainViolation(RuntimeError):
    """F mapped a vertex outside the simplex."""

    def __init__(self, point, image, lam=None, domain="simplex"):
        self.point = np.asarray(point)
        self.image = np.asarray(image)
        msg = f"F({self.point.tolist()}) = {self.image.tolist()} lies outside the {domain}"
        if lam is not None:
            msg += f" (barycentric {np.asarray(lam).tolist()})"
        super().__init__(msg)


@dataclass
class SolverConfig:
    max_steps: int = 64
    max_evaluations: int = 10000
    target_diameter: float = 1e-6
    labeling: lab.LabelingStrategy = lab.NOT_CLOSER
    initial_refinement: int = 0
    record_trace: bool = True

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.target_diameter < 0:
            raise ValueError("target_diameter must be >= 0")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")
        if self.initial_refinement < 0:
            raise ValueError("initial_refinement must be >= 0")

    def as_dict(self):
        return {"max_steps": self.max_steps, "max_evaluations": self.max_evaluations,
                "target_diameter": self.target_diameter, "labeling": self.labeling.name,
                "tau": self.labeling.tau, "initial_refinement": self.initial_refinement}


@dataclass
class Candidate:
    point: np.ndarray
    residual: float
    cell: int
    diameter: float
    barycenter: np.ndarray
    vertex: int
    tags: tuple = ()


@dataclass
class StepReport:
    step: int
    bisected: list = field(default_factory=list)  # (edge, new vertex)
    ref_flag: bool = False
    fallback: bool = False
    age_count: int = 0
    exhausted: bool = False


@dataclass
class SolveResult:
    candidates: list
    evaluations_used: int
    steps_used: int
    trace: Optional[SolveTrace]
    mesh: Mesh
    stop_reason: str

    @property
    def best(self):
        return self.candidates[0] if self.candidates else None


def residual(mesh, v):
    return float(np.max(np.abs(mesh.lam_x[v] - mesh.lam_fx[v])))


def evaluate_vertex(mesh, problem, strategy, v, trace=None):
    """Evaluate F at vertex ``v`` (once) and attach barycentric data and labels."""
    if mesh.images[v] is not None:
        return
    x = mesh.positions[v]
    raw_eval = getattr(problem, "evaluate_raw", None)
    if raw_eval is not None:
        raw = raw_eval(x)
        mesh.raw[v] = raw
        image = problem.image_from_raw(x, raw)
    else:
        image = problem(x)
    image = np.asarray(image, dtype=np.float64).reshape(mesh.d)
    if not np.all(np.isfinite(image)):
        raise DomainViolation(x, image)
    lam_x = barycentric(x, mesh.root)
    lam_fx = barycentric(image, mesh.root)
    if lam_fx.min() < -DOMAIN_TOL:
        raise DomainViolation(x, image, lam_fx)
    mesh.images[v] = image
    mesh.lam_x[v] = lam_x
    mesh.lam_fx[v] = lam_fx
    mesh.label_masks[v] = lab.label_mask(lam_x, lam_fx, strategy)
    if trace is not None:
        trace.add("VertexEvaluated", id=v, position=x, image=image, lam_x=lam_x,
                  lam_fx=lam_fx, labels=vertex_labels(mesh, v))


def edge_touches_sperner(mesh, e):
    return any(lab.cell_is_sperner(mesh, c) for c in sorted(mesh.edge_cells[e]))


def _sweep(mesh, problem, strategy, offset, report, trace, max_evaluations):
    eligible = mesh.eligible_edges(offset)
    if not eligible:
        return
    # labels of existing vertices never change inside a sweep, so only the
    # cells created by a bisection need a fresh Sperner test
    sperner = set(lab.sperner_cells(mesh))
    for e in eligible:
        if not mesh.edge_alive[e] or sperner.isdisjoint(mesh.edge_cells[e]):
            continue
        if mesh.n_vertices >= max_evaluations:
            report.exhausted = True
            return
        ends = mesh.edge_ends[e]
        m, cells = mesh.bisect_edge(e)
        if trace is not None:
            trace.add("EdgeBisected", step=report.step, edge=e, endpoints=ends, vertex=m,
                      position=mesh.positions[m], cells=cells)
        evaluate_vertex(mesh, problem, strategy, m, trace)
        sperner.update(c for c in cells if lab.cell_is_sperner(mesh, c))
        report.bisected.append((e, m))


def step(mesh, problem, strategy=lab.NOT_CLOSER, trace=None, step_number=None,
         max_evaluations=np.inf):
    """One outer iteration of the solver on a labeled mesh."""
    n = step_number if step_number is not None else 0
    report = StepReport(step=n)
    if trace is not None:
        trace.add("StepStarted", step=n)
    mesh.increment_ages()
    _sweep(mesh, problem, strategy, MAIN_OFFSET, report, trace, max_evaluations)
    report.ref_flag = bool(report.bisected)
    if not report.ref_flag and not report.exhausted:
        report.fallback = True
        _sweep(mesh, problem, strategy, FALLBACK_OFFSET, report, trace, max_evaluations)
    if report.bisected:
        mesh.age_count += 1
        if trace is not None:
            trace.add("AgeCountChanged", value=mesh.age_count)
    report.age_count = mesh.age_count
    return report


def candidates(mesh, problem=None):
    """One record per alive Sperner cell, lowest residual first."""
    out = []
    for c in lab.sperner_cells(mesh):
        verts = mesh.cell_verts[c]
        best = min(verts, key=lambda v: (residual(mesh, v), v))
        tags = ()
        point = mesh.positions[best]
        if getattr(problem, "spurious_origin", False) and np.linalg.norm(point) < SPURIOUS_ORIGIN_TOL:
            tags = ("spurious: origin",)
        out.append(Candidate(point=point.copy(), residual=residual(mesh, best), cell=c,
                             diameter=mesh.cell_diameter(c), barycenter=mesh.cell_barycenter(c),
                             vertex=best, tags=tags))
    out.sort(key=lambda k: (k.residual, k.diameter, k.cell))
    return out


def initialize(problem, config: SolverConfig, trace=None):
    mesh = Mesh(problem.d)
    if trace is not None:
        trace.add("RunStarted", d=problem.d, problem=problem.name, labeling=config.labeling.name,
                  tau=config.labeling.tau, config=config.as_dict())
    for e, m in mesh.refine_uniformly(config.initial_refinement) if config.initial_refinement else []:
        if trace is not None:
            trace.add("EdgeBisected", step=0, edge=e, endpoints=mesh.edge_ends[e], vertex=m,
                      position=mesh.positions[m], cells=[])
    for v in range(mesh.n_vertices):
        evaluate_vertex(mesh, problem, config.labeling, v, trace)
    return mesh


def _record_sperner(mesh, trace, n):
    cells = lab.sperner_cells(mesh)
    if trace is not None:
        trace.add("SpernerSet", step=n, cells=cells)
    return cells


def solve(problem, config: SolverConfig = None) -> SolveResult:
    config = config or SolverConfig()
    trace = SolveTrace() if config.record_trace else None
    mesh = initialize(problem, config, trace)
    sperner = _record_sperner(mesh, trace, 0)

    reason = "max_steps"
    steps_used = 0
    for n in range(1, config.max_steps + 1):
        if sperner and max(mesh.cell_diameter(c) for c in sperner) < config.target_diameter:
            reason = "target_diameter"
            break
        if mesh.n_vertices >= config.max_evaluations:
            reason = "max_evaluations"
            break
        report = step(mesh, problem, config.labeling, trace, n, config.max_evaluations)
        steps_used = n
        sperner = _record_sperner(mesh, trace, n)
        log.debug("step %d: %d bisections, age_count %d, %d Sperner cells",
                  n, len(report.bisected), report.age_count, len(sperner))
        if report.exhausted:
            reason = "max_evaluations"
            break
    else:
        if sperner and max(mesh.cell_diameter(c) for c in sperner) < config.target_diameter:
            reason = "target_diameter"

    found = candidates(mesh, problem)
    if trace is not None:
        for rank, k in enumerate(found):
            trace.add("Candidate", rank=rank, cell=k.cell, vertex=k.vertex, point=k.point,
                      residual=k.residual, diameter=k.diameter, barycenter=k.barycenter,
                      tags=list(k.tags))
        trace.add("RunFinished", steps=steps_used, evaluations=mesh.n_vertices, reason=reason)
    return SolveResult(found, mesh.n_vertices, steps_used, trace, mesh, reason)
