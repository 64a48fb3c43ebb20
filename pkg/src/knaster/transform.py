"""Turning other problems into self-maps of the unit simplex.

* zero search ``G(x) = 0`` becomes the fixed-point problem
  ``F_i(x) = x_i (1 - damping * U_i(G(x)) / c_i)``, with ``c_i`` an upper
  bound of the gauge ``U_i(G)`` over the simplex. ``F`` shrinks every
  coordinate towards 0, so it maps the simplex into itself. Besides the zeros
  of ``G`` it fixes every ``x`` whose nonzero coordinates all have
  ``G_i(x) = 0``, in particular the origin, which is always a spurious
  solution.
* a self-map of ``[0,1]^d`` is conjugated with the cube/simplex change of
  domain.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from . import labeling as lab
from .mesh import mask_to_set
from .geometry import barycentric, cube_to_simplex, simplex_to_cube
from .problems import Problem
from .solver import DomainViolation

C_INFLATION = 1.05
CUBE_TOL = 1e-9


def square_gauge(g):
    return np.asarray(g, dtype=np.float64) ** 2


@dataclass
class ZeroProblem:
    G: Callable
    d: int
    c: Optional[np.ndarray] = None
    U: Callable = square_gauge
    damping: float = 0.9
    name: str = "zero-search"
    known_zeros: list = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping}")
        if self.c is not None:
            self.c = _check_c(self.c, self.d)


def _check_c(c, d):
    c = np.broadcast_to(np.asarray(c, dtype=np.float64), (d,)).copy()
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        raise ValueError(f"scale estimates must be positive, got {c}")
    return c


def simplex_samples(d, samples, seed):
    """Deterministic quasi-random points of the unit simplex (Halton points
    pushed through the sorted-spacings map), corners first."""
    corners = np.vstack([np.zeros(d), np.eye(d)])
    if samples <= 0:
        return corners
    u = qmc.Halton(d=d, scramble=True, seed=seed).random(samples)
    edges = np.sort(u, axis=1)
    spacings = np.diff(np.column_stack([np.zeros(samples), edges, np.ones(samples)]), axis=1)
    return np.vstack([corners, spacings[:, 1:]])


def estimate_c(zp: ZeroProblem, samples=1024, seed=0):
    """Sampled maximum of each gauge component, inflated by 5%."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pts = simplex_samples(zp.d, samples, seed)
    gauge = np.array([zp.U(zp.G(p)) for p in pts]).reshape(len(pts), zp.d)
    c = C_INFLATION * gauge.max(axis=0)
    # U_i identically 0 on the samples: F_i = x_i for any scale, pick 1
    c[c <= 0] = 1.0
    return c


@dataclass
class TransformedProblem(Problem):
    zero_problem: Optional[ZeroProblem] = None

    def evaluate_raw(self, x):
        return np.asarray(self.zero_problem.G(x), dtype=np.float64).reshape(self.d)

    def image_from_raw(self, x, raw):
        zp = self.zero_problem
        return x * (1.0 - zp.damping * zp.U(raw) / zp.c)


def to_fixed_point(zp: ZeroProblem) -> TransformedProblem:
    if zp.c is None:
        raise ValueError("scale estimates c are not set; use estimate_c first")
    zp.c = _check_c(zp.c, zp.d)
    tp = TransformedProblem(d=zp.d, evaluator=None, name=f"{zp.name}->fixed-point",
                            known_fixed_points=[np.zeros(zp.d)] + [np.asarray(z) for z in zp.known_zeros],
                            spurious_origin=True, zero_problem=zp)
    tp.evaluator = lambda x: tp.image_from_raw(x, tp.evaluate_raw(x))
    return tp


def rescale_and_relabel(mesh, problem: TransformedProblem, new_c, strategy=lab.NOT_CLOSER, trace=None):
    """Swap in new scale estimates and recompute images and labels from the
    cached raw values (no new evaluations of G). Returns how many vertices
    changed labels."""
    zp = problem.zero_problem
    zp.c = _check_c(new_c, zp.d)
    changed = 0
    for v in range(mesh.n_vertices):
        if v not in mesh.raw:
            continue
        x = mesh.positions[v]
        image = problem.image_from_raw(x, mesh.raw[v])
        lam_fx = barycentric(image, mesh.root)
        mask = lab.label_mask(mesh.lam_x[v], lam_fx, strategy)
        mesh.images[v] = image
        mesh.lam_fx[v] = lam_fx
        if mask != mesh.label_masks[v]:
            changed += 1
        mesh.label_masks[v] = mask
        if trace is not None:
            trace.add("VertexRelabeled", id=v, image=image, lam_fx=lam_fx,
                      labels=sorted(mask_to_set(mask)))
    mesh.sperner_cache.clear()
    return changed


def wrap_cube(F_cube, d, name="cube", known_fixed_points=()):
    """Self-map of the unit simplex conjugate to ``F_cube`` on ``[0,1]^d``."""

    def wrapped(x):
        y = np.asarray(F_cube(simplex_to_cube(x)), dtype=np.float64)
        if not np.all(np.isfinite(y)) or y.min() < -CUBE_TOL or y.max() > 1.0 + CUBE_TOL:
            raise DomainViolation(x, y, domain="cube [0,1]^d")
        return cube_to_simplex(np.clip(y, 0.0, 1.0))

    return Problem(d, wrapped, name=name,
                   known_fixed_points=[cube_to_simplex(p) for p in known_fixed_points])


def cube_problem(problem: Problem):
    """Read a problem's map as a self-map of the cube and wrap it."""
    return wrap_cube(problem, problem.d, name=f"{problem.name}@cube",
                     known_fixed_points=problem.known_fixed_points)
