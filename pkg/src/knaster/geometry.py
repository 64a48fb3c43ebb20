"""Simplex geometry: barycentric coordinates, the reference simplex, affine
charts and the change of domain between the unit cube and the unit simplex.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels

SUM_TOL = 1e-10


class DegenerateSimplexError(ValueError):
    pass


def as_point(p, d=None):
    x = np.asarray(p, dtype=np.float64).reshape(-1)
    if d is not None and x.shape[0] != d:
        raise ValueError(f"expected a point of dimension {d}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"point has non-finite coordinates: {x}")
    return x


@dataclass(frozen=True, eq=False)
class Simplex:
    """Ordered corners ``v_0, ..., v_d`` stored as a ``(d+1, d)`` array."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise ValueError(f"a d-simplex needs d+1 points in R^d, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("simplex corners must be finite")
        if np.linalg.matrix_rank(v[1:] - v[0]) < v.shape[1]:
            raise DegenerateSimplexError("simplex is degenerate (edge vectors are linearly dependent)")
        object.__setattr__(self, "vertices", v)

    @property
    def d(self):
        return self.vertices.shape[1]

    @property
    def edge_matrix(self):
        """Columns are the edge vectors ``v_i - v_0``."""
        return (self.vertices[1:] - self.vertices[0]).T

    def volume(self):
        d = self.d
        return abs(np.linalg.det(self.edge_matrix)) / float(np.prod(np.arange(1, d + 1)))

    def diameter(self):
        return max_pairwise_distance(self.vertices)

    def edge_lengths(self):
        v = self.vertices
        return np.array([np.linalg.norm(v[i] - v[j])
                         for i in range(len(v)) for j in range(i + 1, len(v))])


def unit_simplex(d):
    """conv(0, e_1, ..., e_d)."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    return Simplex(np.vstack([np.zeros(d), np.eye(d)]))


def _solve_edges(s: Simplex, rhs):
    try:
        return np.linalg.solve(s.edge_matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSimplexError("simplex is degenerate (edge vectors are linearly dependent)") from exc


def barycentric(p, s: Simplex):
    """Barycentric coordinates of ``p`` with respect to the corners of ``s``.

    Solves ``sum_i lam_i (v_i - v_0) = p - v_0`` for ``lam_1..lam_d`` (LU with
    partial pivoting) and sets ``lam_0 = 1 - sum(lam_1..lam_d)``.
    """
    x = as_point(p, s.d)
    rest = _solve_edges(s, x - s.vertices[0])
    return np.concatenate([[1.0 - rest.sum()], rest])


def from_barycentric(lam, s: Simplex):
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (s.d + 1,):
        raise ValueError(f"expected {s.d + 1} barycentric weights, got {lam.shape}")
    return lam @ s.vertices


class AffineChart:
    """Affine map between a general simplex and the reference unit simplex.

    Barycentric coordinates are invariant under the chart, so labels computed
    in reference coordinates are valid for the original simplex.
    """

    def __init__(self, s: Simplex):
        self.simplex = s
        self.origin = s.vertices[0].copy()
        self.matrix = s.edge_matrix
        if abs(np.linalg.det(self.matrix)) == 0.0:
            raise DegenerateSimplexError("cannot chart a degenerate simplex")
        self.inverse = np.linalg.inv(self.matrix)

    @property
    def d(self):
        return self.simplex.d

    def to_reference(self, p):
        return self.inverse @ (as_point(p, self.d) - self.origin)

    def from_reference(self, u):
        return self.origin + self.matrix @ as_point(u, self.d)

    def barycentric_many(self, points):
        """Row-wise barycentric coordinates for an ``(n, d)`` array."""
        return _kernels.barycentric_many(np.atleast_2d(points), self.origin, self.inverse)


def max_pairwise_distance(points):
    pts = np.asarray(points, dtype=np.float64)
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).max())


def cube_to_simplex(p):
    """Map ``[0,1]^d`` onto the unit simplex: ``x -> (|x|_inf / |x|_1) x``.

    The origin maps to itself.
    """
    x = as_point(p)
    l1 = np.abs(x).sum()
    if l1 == 0.0:
        return np.zeros_like(x)
    return (np.abs(x).max() / l1) * x


def simplex_to_cube(p):
    """Inverse of :func:`cube_to_simplex`: ``y -> (|y|_1 / |y|_inf) y``."""
    y = as_point(p)
    linf = np.abs(y).max()
    if linf == 0.0:
        return np.zeros_like(y)
    return (np.abs(y).sum() / linf) * y
