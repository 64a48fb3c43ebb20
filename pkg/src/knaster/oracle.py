"""Brute-force verifiers that share no code path with the solver loop."""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .labeling import DEFAULT_TAU, proper_labeling, support
from .mesh import Mesh


class SpernerPreconditionError(ValueError):
    """A vertex carries a label outside the root face it lies on."""


@dataclass
class GridReport:
    resolution: int
    d: int
    n_points: int
    threshold: float
    minima: np.ndarray      # (k, d) grid points that are local minima below threshold
    values: np.ndarray      # residual ||F(x) - x||_inf at those points
    global_min: float

    @property
    def grid_cell(self):
        return 1.0 / self.resolution

    def near(self, x, cells=2):
        """True if ``x`` lies within ``cells`` grid spacings (inf-norm) of a minimum."""
        if len(self.minima) == 0:
            return False
        dist = np.abs(self.minima - np.asarray(x, dtype=np.float64)).max(axis=1)
        return bool(dist.min() <= cells * self.grid_cell + 1e-12)

    def table(self, limit=20):
        head = f"{'#':>4}  " + "  ".join(f"{'x_' + str(i):>10}" for i in range(self.d)) + f"  {'residual':>12}"
        lines = [f"grid resolution {self.resolution}, {self.n_points} points, "
                 f"{len(self.minima)} local minima below {self.threshold:.4g}", head]
        for k, (p, v) in enumerate(zip(self.minima[:limit], self.values[:limit])):
            lines.append(f"{k:>4}  " + "  ".join(f"{c:>10.6f}" for c in p) + f"  {v:>12.4e}")
        if len(self.minima) > limit:
            lines.append(f"... {len(self.minima) - limit} more")
        return "\n".join(lines)


def barycentric_grid(d, resolution):
    """All points of the unit simplex whose barycentric coordinates are
    multiples of ``1/resolution``, as integer numerators and as points."""
    comps = _kernels.grid_compositions(d, resolution)
    return comps, comps / float(resolution)


def grid_fixed_points(problem, resolution) -> GridReport:
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    comps, pts = barycentric_grid(problem.d, resolution)
    images = problem.evaluate_many(pts)
    res = np.abs(images - pts).max(axis=1)
    threshold = 2.0 / resolution
    nbrs = _kernels.grid_neighbours(comps, resolution)
    mask = _kernels.plateau_minima(res, nbrs) & (res < threshold)
    idx = np.flatnonzero(mask)
    idx = idx[np.lexsort((idx, res[idx]))]
    return GridReport(resolution, problem.d, len(pts), threshold, pts[idx], res[idx],
                      float(res.min()))


def sperner_parity(mesh: Mesh, labels=None, tau=DEFAULT_TAU):
    """Count fully labeled alive cells under a single-valued labeling.

    ``labels`` holds one label per vertex; by default the mesh's label sets
    are reduced with :func:`knaster.labeling.proper_labeling`. Returns
    ``(count, count is odd)``.
    """
    if labels is None:
        labels = proper_labeling(mesh, tau)
    labels = np.asarray(labels, dtype=np.int64)
    used = sorted({v for c in mesh.alive_cells() for v in mesh.cell_verts[c]})
    for v in used:
        lam = mesh.lam_x[v]
        if lam is None:
            x = mesh.positions[v]
            lam = np.concatenate([[1.0 - x.sum()], x])
        if labels[v] < 0 or labels[v] not in support(lam, tau):
            raise SpernerPreconditionError(
                f"vertex {v} at {mesh.positions[v].tolist()} has label {labels[v]} outside its root face")
    cells, _ = mesh.cells_array()
    count = _kernels.count_full_cells(cells, labels)
    return count, count % 2 == 1


def corner_chain_diameters(d, chain_length, corner=1):
    """Longest-edge bisection along the nested chain of cells that keep root
    corner ``corner``; ties go to edges at that corner, then to lower ids.

    Returns the tracked cell's diameter after 0..chain_length bisections.
    """
    mesh = Mesh(d)
    corner = min(corner, d)
    cell = 0
    out = [mesh.cell_diameter(cell)]
    for _ in range(chain_length):
        verts = mesh.cell_verts[cell]
        edges = [mesh.edge_id(a, b) for i, a in enumerate(verts) for b in verts[i + 1:]]
        lengths = {e: mesh.edge_length(e) for e in edges}
        top = max(lengths.values())
        longest = [e for e in edges if lengths[e] >= top * (1 - 1e-12)]
        longest.sort(key=lambda e: (corner not in mesh.edge_ends[e], e))
        _, children = mesh.bisect_edge(longest[0])
        cell = next(c for c in children if corner in mesh.cell_verts[c])
        out.append(mesh.cell_diameter(cell))
    return out


def edge_halving_check(d, chain_length, tol=1e-12):
    """True iff after every ``k*d`` bisections of the corner chain the longest
    edge of the tracked cell is the root's longest edge over ``2**k``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    diam = corner_chain_diameters(d, chain_length)
    root = diam[0]
    return all(abs(diam[k * d] - root / 2 ** k) <= tol for k in range(1, chain_length // d + 1))
