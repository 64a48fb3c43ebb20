"""Vertex labels (membership in the sets C_i) and the Sperner test for cells.

Three labeling rules are available:

``not-closer``
    ``i`` is a label iff ``lam_i(F(x)) <= lam_i(x)``: the image is not closer
    to corner ``i``.
``max-gain``
    the labels are the argmax set of ``lam_i(x) - lam_i(F(x))``. Ties are kept,
    so a fixed point carries every label.
``first-index``
    ``not-closer`` restricted to the support of ``x`` and reduced to its
    smallest index. Satisfies the face condition but is known to lose fixed
    points (e.g. the swap map); only useful as a negative control.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .mesh import mask_to_set, set_to_mask

DEFAULT_TAU = 1e-12


class Rule(str, Enum):
    NOT_CLOSER = "not-closer"
    MAX_GAIN = "max-gain"
    FIRST_INDEX = "first-index"


_KERNEL_MODE = {
    Rule.NOT_CLOSER: _kernels.NOT_CLOSER,
    Rule.MAX_GAIN: _kernels.MAX_GAIN,
    Rule.FIRST_INDEX: _kernels.FIRST_INDEX_REDUCED,
}


@dataclass(frozen=True)
class LabelingStrategy:
    rule: Rule = Rule.NOT_CLOSER
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        object.__setattr__(self, "rule", Rule(self.rule))
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ValueError(f"tau must be finite and >= 0, got {self.tau}")

    @classmethod
    def parse(cls, name, tau=DEFAULT_TAU):
        return cls(Rule(name), tau)

    @property
    def name(self):
        return self.rule.value


NOT_CLOSER = LabelingStrategy(Rule.NOT_CLOSER)
MAX_GAIN = LabelingStrategy(Rule.MAX_GAIN)
FIRST_INDEX = LabelingStrategy(Rule.FIRST_INDEX)


def label_mask(lam_x, lam_fx, strategy: LabelingStrategy = NOT_CLOSER):
    lam_x = np.asarray(lam_x, dtype=np.float64)
    lam_fx = np.asarray(lam_fx, dtype=np.float64)
    if lam_x.shape != lam_fx.shape or lam_x.ndim != 1:
        raise ValueError(f"barycentric coordinate shapes differ: {lam_x.shape} vs {lam_fx.shape}")
    tau = strategy.tau
    rule = strategy.rule
    if rule is Rule.MAX_GAIN:
        gain = lam_x - lam_fx
        return set_to_mask(np.flatnonzero(gain >= gain.max() - tau))
    not_closer = lam_fx <= lam_x + tau
    if rule is Rule.FIRST_INDEX:
        # lam_m(x) == 0 is enough to drop membership m
        keep = np.flatnonzero(not_closer & (lam_x > tau))
        return 1 << int(keep[0]) if keep.size else 0
    return set_to_mask(np.flatnonzero(not_closer))


def compute_labels(lam_x, lam_fx, strategy: LabelingStrategy = NOT_CLOSER):
    """Label set of a vertex with barycentric coordinates ``lam_x`` whose image
    has barycentric coordinates ``lam_fx``."""
    return mask_to_set(label_mask(lam_x, lam_fx, strategy))


def label_masks_many(lam_x, lam_fx, strategy: LabelingStrategy = NOT_CLOSER):
    """Vectorised :func:`label_mask` over rows of two ``(n, d+1)`` arrays."""
    return _kernels.label_masks(lam_x, lam_fx, _KERNEL_MODE[strategy.rule], strategy.tau)


def _as_mask(labels):
    if isinstance(labels, (int, np.integer)):
        return int(labels)
    return set_to_mask(labels)


def is_sperner(cell_label_sets):
    """True iff the corners can be given pairwise distinct labels 0..d, one
    from each corner's set (a system of distinct representatives)."""
    masks = [_as_mask(s) for s in cell_label_sets]
    k = len(masks)
    full = (1 << k) - 1
    union = 0
    for m in masks:
        union |= m
    if union & full != full:
        return False
    return bool(_kernels._sdr_single([m & full for m in masks]))


def cell_is_sperner(mesh, c):
    """Sperner status of a mesh cell, memoised on the mesh. Cells with an
    unlabeled corner are not Sperner and are not cached."""
    cached = mesh.sperner_cache.get(c)
    if cached is None:
        masks = [mesh.label_masks[v] for v in mesh.cell_verts[c]]
        if min(masks) < 0:
            return False
        cached = is_sperner(masks)
        mesh.sperner_cache[c] = cached
    return cached


def sperner_cells(mesh):
    """Alive cells admitting distinct labels, in ascending id order."""
    ids = mesh.alive_cells()
    cache = mesh.sperner_cache
    todo = [c for c in ids if c not in cache]
    if todo:
        labels = mesh.label_masks
        masks = np.array([[labels[v] for v in mesh.cell_verts[c]] for c in todo], dtype=np.int64)
        complete = masks.min(axis=1) >= 0
        ok = _kernels.sdr_many(np.where(masks < 0, 0, masks) & ((1 << (mesh.d + 1)) - 1))
        for c, flag, done in zip(todo, ok, complete):
            if done:
                cache[c] = bool(flag)
    return [c for c in ids if cache.get(c, False)]


def relabel(mesh, strategy: LabelingStrategy):
    """Recompute every evaluated vertex's labels under ``strategy``."""
    evaluated = [v for v in range(mesh.n_vertices) if mesh.lam_fx[v] is not None]
    if evaluated:
        masks = label_masks_many(np.array([mesh.lam_x[v] for v in evaluated]),
                                 np.array([mesh.lam_fx[v] for v in evaluated]), strategy)
        for v, m in zip(evaluated, masks):
            mesh.label_masks[v] = int(m)
    mesh.sperner_cache.clear()


def support(lam, tau=DEFAULT_TAU):
    """Corner indices ``j`` with ``lam_j > tau``: the smallest root face holding
    the point is spanned by these corners."""
    return np.flatnonzero(np.asarray(lam) > tau)


def face_cover_check(mesh, strategy: LabelingStrategy = None):
    """Every evaluated vertex on a root face carries a label of that face.

    With ``strategy`` given, labels are recomputed from the stored barycentric
    data under that rule; otherwise the labels stored on the mesh are checked.
    """
    for v in range(mesh.n_vertices):
        if mesh.lam_fx[v] is None:
            continue
        if strategy is None:
            mask = mesh.label_masks[v]
            tau = DEFAULT_TAU
        else:
            mask = label_mask(mesh.lam_x[v], mesh.lam_fx[v], strategy)
            tau = strategy.tau
        if not any((mask >> int(j)) & 1 for j in support(mesh.lam_x[v], tau)):
            return False
    return True


def proper_labeling(mesh, tau=DEFAULT_TAU):
    """One label per vertex: the smallest stored label inside the vertex's root
    face. This is a Sperner labeling whenever :func:`face_cover_check` holds,
    so Sperner's lemma applies to it directly."""
    out = np.full(mesh.n_vertices, -1, dtype=np.int64)
    for v in range(mesh.n_vertices):
        if mesh.lam_x[v] is None or mesh.label_masks[v] < 0:
            continue
        mask = mesh.label_masks[v]
        for j in support(mesh.lam_x[v], tau):
            if (mask >> int(j)) & 1:
                out[v] = j
                break
    return out
