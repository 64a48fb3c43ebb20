"""Conforming triangulation of the reference simplex with edge ages.

Cells are refined only by bisecting an edge *and every cell around it*, so an
inserted midpoint always becomes a corner of all cells that touch the split
edge and no hanging nodes appear. Dead vertices/edges/cells are never removed
or renumbered; ids index plain lists and stay valid for the life of the mesh.
"""
from dataclasses import dataclass
from itertools import combinations
from math import factorial
from typing import Optional

import numpy as np

from .geometry import unit_simplex

HALF_EDGE_AGE = 0
NEW_EDGE_AGE = 1
AGE_INCREMENT = 2


class MeshError(RuntimeError):
    pass


@dataclass(frozen=True)
class VertexRecord:
    id: int
    position: np.ndarray
    image: Optional[np.ndarray]
    lam_x: Optional[np.ndarray]
    lam_fx: Optional[np.ndarray]
    labels: frozenset


@dataclass(frozen=True)
class EdgeRecord:
    id: int
    endpoints: tuple
    age: int
    incident_cells: frozenset
    alive: bool


@dataclass(frozen=True)
class CellRecord:
    id: int
    vertex_ids: tuple
    alive: bool
    parent: Optional[int]


def _key(a, b):
    return (a, b) if a < b else (b, a)


def mask_to_set(mask):
    mask = int(mask)
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def set_to_mask(labels):
    m = 0
    for i in labels:
        m |= 1 << int(i)
    return m


class Mesh:
    """Triangulation of ``conv(0, e_1, ..., e_d)``.

    Per-vertex solver data (image, barycentric coordinates, label mask) lives
    here too so that a mesh plus its labels is a complete solver state.
    """

    def __init__(self, d, initial_refinement=0):
        if int(d) != d or d < 1:
            raise ValueError(f"dimension must be a positive integer, got {d!r}")
        self.d = int(d)
        self.root = unit_simplex(self.d)
        self.age_count = 0

        self.positions = []
        self.images = []
        self.lam_x = []
        self.lam_fx = []
        self.label_masks = []
        self.raw = {}  # vertex id -> cached raw evaluation (zero-search problems)

        self.edge_ends = []
        self.edge_age = []
        self.edge_alive = []
        self.edge_cells = []
        self._edge_index = {}

        self.cell_verts = []
        self.cell_alive = []
        self.cell_parent = []
        self.sperner_cache = {}

        for p in self.root.vertices:
            self.add_vertex(p)
        for a, b in combinations(range(self.d + 1), 2):
            # edges at the origin have length 1, the others sqrt(2)
            self._add_edge(a, b, 0 if a == 0 else 1)
        self._add_cell(tuple(range(self.d + 1)), None)

        if initial_refinement:
            self.refine_uniformly(initial_refinement)

    # ---------------------------------------------------------------- sizes
    @property
    def n_vertices(self):
        return len(self.positions)

    @property
    def n_edges(self):
        return len(self.edge_ends)

    @property
    def n_cells(self):
        return len(self.cell_verts)

    def alive_cells(self):
        return [c for c, ok in enumerate(self.cell_alive) if ok]

    def alive_edges(self):
        return [e for e, ok in enumerate(self.edge_alive) if ok]

    # -------------------------------------------------------------- records
    def vertex(self, v) -> VertexRecord:
        mask = self.label_masks[v]
        return VertexRecord(v, self.positions[v], self.images[v], self.lam_x[v],
                            self.lam_fx[v], mask_to_set(mask) if mask >= 0 else frozenset())

    def edge(self, e) -> EdgeRecord:
        return EdgeRecord(e, self.edge_ends[e], self.edge_age[e],
                          frozenset(self.edge_cells[e]), self.edge_alive[e])

    def cell(self, c) -> CellRecord:
        return CellRecord(c, self.cell_verts[c], self.cell_alive[c], self.cell_parent[c])

    def edge_id(self, a, b):
        return self._edge_index[_key(a, b)]

    def labels(self, v):
        return mask_to_set(self.label_masks[v])

    def is_labeled(self, v):
        return self.label_masks[v] >= 0

    # ----------------------------------------------------------- mutation
    def add_vertex(self, position):
        self.positions.append(np.asarray(position, dtype=np.float64).copy())
        self.images.append(None)
        self.lam_x.append(None)
        self.lam_fx.append(None)
        self.label_masks.append(-1)
        return len(self.positions) - 1

    def _add_edge(self, a, b, age):
        e = len(self.edge_ends)
        self.edge_ends.append(_key(a, b))
        self.edge_age.append(age)
        self.edge_alive.append(True)
        self.edge_cells.append(set())
        self._edge_index[_key(a, b)] = e
        return e

    def _add_cell(self, verts, parent):
        c = len(self.cell_verts)
        self.cell_verts.append(tuple(verts))
        self.cell_alive.append(True)
        self.cell_parent.append(parent)
        for a, b in combinations(verts, 2):
            self.edge_cells[self._edge_index[_key(a, b)]].add(c)
        return c

    def _kill_cell(self, c):
        self.cell_alive[c] = False
        for a, b in combinations(self.cell_verts[c], 2):
            self.edge_cells[self._edge_index[_key(a, b)]].discard(c)

    def bisect_edge(self, e):
        """Insert the midpoint of edge ``e`` and split every cell around it.

        Returns ``(new_vertex, new_cells)``. The two half edges get age 0, the
        edges joining the midpoint to the opposite corners get age 1.
        """
        if not self.edge_alive[e]:
            raise MeshError(f"edge {e} is not alive")
        a, b = self.edge_ends[e]
        m = self.add_vertex(0.5 * (self.positions[a] + self.positions[b]))
        self._add_edge(a, m, HALF_EDGE_AGE)
        self._add_edge(m, b, HALF_EDGE_AGE)

        new_cells = []
        for c in sorted(self.edge_cells[e]):
            verts = self.cell_verts[c]
            for w in verts:
                if w != a and w != b and _key(m, w) not in self._edge_index:
                    self._add_edge(m, w, NEW_EDGE_AGE)
            self._kill_cell(c)
            new_cells.append(self._add_cell(tuple(m if w == a else w for w in verts), c))
            new_cells.append(self._add_cell(tuple(m if w == b else w for w in verts), c))

        self.edge_alive[e] = False
        return m, new_cells

    def increment_ages(self, by=AGE_INCREMENT):
        ages, alive = self.edge_age, self.edge_alive
        for e in range(len(ages)):
            if alive[e]:
                ages[e] += by

    def eligible_edges(self, threshold_offset):
        """Alive edges with ``age > threshold_offset + age_count``, oldest
        first, ties by ascending id."""
        limit = threshold_offset + self.age_count
        found = [e for e in range(len(self.edge_age))
                 if self.edge_alive[e] and self.edge_age[e] > limit]
        found.sort(key=lambda e: (-self.edge_age[e], e))
        return found

    def refine_uniformly(self, passes=1):
        """Bisect every currently longest edge, ``passes`` times.

        Returns the list of ``(edge, new_vertex)`` pairs in bisection order.
        """
        done = []
        for _ in range(passes):
            lengths = {e: self.edge_length(e) for e in self.alive_edges()}
            longest = max(lengths.values())
            for e in sorted(e for e, L in lengths.items() if L >= longest * (1 - 1e-9)):
                if self.edge_alive[e]:
                    m, _ = self.bisect_edge(e)
                    done.append((e, m))
        return done

    # ------------------------------------------------------------ geometry
    def edge_length(self, e):
        a, b = self.edge_ends[e]
        return float(np.linalg.norm(self.positions[a] - self.positions[b]))

    def max_edge_length(self):
        return max(self.edge_length(e) for e in self.alive_edges())

    def cell_points(self, c):
        return np.array([self.positions[v] for v in self.cell_verts[c]])

    def cell_volume(self, c):
        p = self.cell_points(c)
        return abs(np.linalg.det(p[1:] - p[0])) / factorial(self.d)

    def cell_diameter(self, c):
        p = self.cell_points(c)
        diff = p[:, None, :] - p[None, :, :]
        return float(np.sqrt((diff ** 2).sum(axis=-1)).max())

    def cell_barycenter(self, c):
        return self.cell_points(c).mean(axis=0)

    def total_volume(self):
        return sum(self.cell_volume(c) for c in self.alive_cells())

    def on_root_face(self, v, tol=1e-12):
        """Indices ``j`` with ``lam_j(v) == 0``: v lies on the face opposite
        corner j of the root simplex."""
        x = self.positions[v]
        lam = np.concatenate([[1.0 - x.sum()], x])
        return {j for j in range(self.d + 1) if abs(lam[j]) <= tol}

    def cells_array(self):
        alive = self.alive_cells()
        if not alive:
            return np.zeros((0, self.d + 1), dtype=np.int64), alive
        return np.array([self.cell_verts[c] for c in alive], dtype=np.int64), alive

    def positions_array(self):
        return np.array(self.positions)

    # --------------------------------------------------------- invariants
    def conformity_errors(self):
        """List of violated structural invariants (empty when conforming)."""
        errors = []
        facets = {}
        pairs = set()
        for c in self.alive_cells():
            verts = self.cell_verts[c]
            if len(set(verts)) != self.d + 1:
                errors.append(f"cell {c} has repeated vertices")
            for f in combinations(sorted(verts), self.d):
                facets.setdefault(f, []).append(c)
            pairs.update(_key(a, b) for a, b in combinations(verts, 2))
        for f, owners in facets.items():
            if len(owners) > 2:
                errors.append(f"facet {f} shared by {len(owners)} cells")
            elif len(owners) == 1:
                if not set.intersection(*(self.on_root_face(v) for v in f)):
                    errors.append(f"interior facet {f} of cell {owners[0]} has no neighbour")
        for key in pairs:
            e = self._edge_index.get(key)
            if e is None or not self.edge_alive[e]:
                errors.append(f"vertex pair {key} has no alive edge")
        for e in range(self.n_edges):
            if self.edge_alive[e]:
                a, b = self.edge_ends[e]
                if not self.edge_cells[e]:
                    errors.append(f"alive edge {e} has no incident cell")
                for c in self.edge_cells[e]:
                    if not self.cell_alive[c] or a not in self.cell_verts[c] or b not in self.cell_verts[c]:
                        errors.append(f"edge {e} lists bad incident cell {c}")
            elif _key(*self.edge_ends[e]) in pairs:
                errors.append(f"dead edge {e} still spanned by an alive cell")
        return errors

    def is_conforming(self):
        return not self.conformity_errors()
