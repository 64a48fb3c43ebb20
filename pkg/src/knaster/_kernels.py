"""Hot numeric kernels, each with a numba loop version and a numpy fallback.

The public names at the bottom dispatch on :data:`knaster._accel.USE_NUMBA`.
Both variants are importable (``*_numba`` / ``*_numpy``) so tests and the
benchmark can compare them directly.

Label sets are passed around as int64 bitmasks: bit ``i`` set means label
``i`` is present.
"""
from itertools import permutations
from math import comb

import numpy as np

from ._accel import USE_NUMBA, try_njit

NOT_CLOSER = 0
MAX_GAIN = 1
FIRST_INDEX_REDUCED = 2


# --------------------------------------------------------------------------
# barycentric coordinates of many points
# --------------------------------------------------------------------------

@try_njit
def barycentric_many_numba(points, origin, inv):
    n, d = points.shape
    out = np.empty((n, d + 1))
    for p in range(n):
        s = 0.0
        for i in range(d):
            acc = 0.0
            for k in range(d):
                acc += inv[i, k] * (points[p, k] - origin[k])
            out[p, i + 1] = acc
            s += acc
        out[p, 0] = 1.0 - s
    return out


def barycentric_many_numpy(points, origin, inv):
    rest = (points - origin) @ inv.T
    return np.column_stack([1.0 - rest.sum(axis=1), rest])


# --------------------------------------------------------------------------
# label masks
# --------------------------------------------------------------------------

@try_njit
def label_masks_numba(lam_x, lam_fx, mode, tau):
    n, m = lam_x.shape
    out = np.zeros(n, dtype=np.int64)
    for p in range(n):
        mask = 0
        if mode == 1:
            best = -np.inf
            for i in range(m):
                g = lam_x[p, i] - lam_fx[p, i]
                if g > best:
                    best = g
            for i in range(m):
                if lam_x[p, i] - lam_fx[p, i] >= best - tau:
                    mask |= 1 << i
        elif mode == 2:
            for i in range(m):
                if lam_x[p, i] > tau and lam_fx[p, i] <= lam_x[p, i] + tau:
                    mask = 1 << i
                    break
        else:
            for i in range(m):
                if lam_fx[p, i] <= lam_x[p, i] + tau:
                    mask |= 1 << i
        out[p] = mask
    return out


def label_masks_numpy(lam_x, lam_fx, mode, tau):
    n, m = lam_x.shape
    weights = np.left_shift(np.int64(1), np.arange(m, dtype=np.int64))
    if mode == MAX_GAIN:
        gain = lam_x - lam_fx
        member = gain >= gain.max(axis=1, keepdims=True) - tau
    elif mode == FIRST_INDEX_REDUCED:
        ok = (lam_x > tau) & (lam_fx <= lam_x + tau)
        first = np.argmax(ok, axis=1)
        member = np.zeros_like(ok)
        rows = np.flatnonzero(ok.any(axis=1))
        member[rows, first[rows]] = True
    else:
        member = lam_fx <= lam_x + tau
    return (member * weights).sum(axis=1).astype(np.int64)


# --------------------------------------------------------------------------
# systems of distinct representatives for many cells
# --------------------------------------------------------------------------

@try_njit
def _augment(u, masks, k, match_label, seen):
    for lab in range(k):
        if (masks[u] >> lab) & 1 and not seen[lab]:
            seen[lab] = True
            if match_label[lab] < 0 or _augment(match_label[lab], masks, k, match_label, seen):
                match_label[lab] = u
                return True
    return False


@try_njit
def sdr_many_numba(masks):
    n, k = masks.shape
    out = np.zeros(n, dtype=np.bool_)
    match_label = np.empty(k, dtype=np.int64)
    seen = np.empty(k, dtype=np.bool_)
    for c in range(n):
        match_label[:] = -1
        ok = True
        for u in range(k):
            seen[:] = False
            if not _augment(u, masks[c], k, match_label, seen):
                ok = False
                break
        out[c] = ok
    return out


def _sdr_single(row):
    k = len(row)
    match_label = [-1] * k

    def augment(u, seen):
        for lab in range(k):
            if (row[u] >> lab) & 1 and lab not in seen:
                seen.add(lab)
                if match_label[lab] < 0 or augment(match_label[lab], seen):
                    match_label[lab] = u
                    return True
        return False

    return all(augment(u, set()) for u in range(k))


_PERM_CACHE = {}


def sdr_many_numpy(masks):
    masks = np.asarray(masks, dtype=np.int64)
    n, k = masks.shape
    if k > 7:
        return np.array([_sdr_single([int(v) for v in row]) for row in masks], dtype=bool)
    perms = _PERM_CACHE.get(k)
    if perms is None:
        perms = _PERM_CACHE[k] = np.array(list(permutations(range(k))), dtype=np.int64)
    # bits[c, p, i]: corner i of cell c carries label perms[p, i]
    bits = (masks[:, None, :] >> perms[None, :, :]) & 1
    return bits.all(axis=2).any(axis=1)


# --------------------------------------------------------------------------
# barycentric grids
# --------------------------------------------------------------------------

def grid_size(d, r):
    return comb(r + d, d)


@try_njit
def grid_compositions_numba(d, r, n):
    out = np.zeros((n, d), dtype=np.int64)
    cur = np.zeros(d, dtype=np.int64)
    total = 0
    for p in range(1, n):
        # odometer step in lexicographic order with sum(cur) <= r
        j = d - 1
        if total < r:
            cur[j] += 1
            total += 1
        else:
            while cur[j] == 0:
                j -= 1
            total -= cur[j]
            cur[j] = 0
            j -= 1
            cur[j] += 1
            total += 1
        out[p, :] = cur
    return out


def grid_compositions_numpy(d, r, n=None):
    rows = np.zeros((1, 0), dtype=np.int64)
    budget = np.array([r], dtype=np.int64)
    for _ in range(d):
        counts = budget + 1
        idx = np.repeat(np.arange(len(rows)), counts)
        starts = np.cumsum(counts) - counts
        vals = np.arange(counts.sum()) - np.repeat(starts, counts)
        rows = np.column_stack([rows[idx], vals])
        budget = budget[idx] - vals
    return rows.astype(np.int64)


def _binom_table(rows, cols):
    table = np.zeros((rows, cols), dtype=np.int64)
    for a in range(rows):
        for b in range(min(a, cols - 1) + 1):
            table[a, b] = comb(a, b)
    return table


@try_njit
def _rank_numba(row, r, binom):
    d = row.shape[0]
    rank = 0
    s = r
    for j in range(d):
        m = d - j - 1
        k = row[j]
        rank += binom[s + m + 1, m + 1] - binom[s - k + m + 1, m + 1]
        s -= k
    return rank


@try_njit
def grid_neighbours_numba(comps, r, binom):
    n, d = comps.shape
    k = d * (d + 1)
    out = np.full((n, k), -1, dtype=np.int64)
    full = np.empty(d + 1, dtype=np.int64)
    nb = np.empty(d, dtype=np.int64)
    for p in range(n):
        s = 0
        for i in range(d):
            full[i + 1] = comps[p, i]
            s += comps[p, i]
        full[0] = r - s
        j = 0
        for a in range(d + 1):
            for b in range(d + 1):
                if b == a:
                    continue
                if full[a] > 0:
                    full[a] -= 1
                    full[b] += 1
                    for i in range(d):
                        nb[i] = full[i + 1]
                    out[p, j] = _rank_numba(nb, r, binom)
                    full[a] += 1
                    full[b] -= 1
                j += 1
    return out


def _rank_numpy(rows, r, binom):
    n, d = rows.shape
    rank = np.zeros(n, dtype=np.int64)
    s = np.full(n, r, dtype=np.int64)
    for j in range(d):
        m = d - j - 1
        k = rows[:, j]
        rank += binom[s + m + 1, m + 1] - binom[s - k + m + 1, m + 1]
        s = s - k
    return rank


def grid_neighbours_numpy(comps, r, binom):
    n, d = comps.shape
    full = np.column_stack([r - comps.sum(axis=1), comps])
    out = np.full((n, d * (d + 1)), -1, dtype=np.int64)
    j = 0
    for a in range(d + 1):
        for b in range(d + 1):
            if a == b:
                continue
            valid = full[:, a] > 0
            moved = full[valid].copy()
            moved[:, a] -= 1
            moved[:, b] += 1
            out[valid, j] = _rank_numpy(moved[:, 1:], r, binom)
            j += 1
    return out


# --------------------------------------------------------------------------
# fully labeled cells under a single-valued labeling
# --------------------------------------------------------------------------

@try_njit
def count_full_cells_numba(cells, labels):
    n, k = cells.shape
    full = (1 << k) - 1
    count = 0
    for c in range(n):
        mask = 0
        for i in range(k):
            mask |= 1 << labels[cells[c, i]]
        if mask == full:
            count += 1
    return count


def count_full_cells_numpy(cells, labels):
    k = cells.shape[1]
    masks = np.bitwise_or.reduce(np.left_shift(np.int64(1), labels[cells]), axis=1)
    return int(np.count_nonzero(masks == (1 << k) - 1))


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def barycentric_many(points, origin, inv):
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return barycentric_many_numba(points, np.asarray(origin, float), np.asarray(inv, float))
    return barycentric_many_numpy(points, origin, inv)


def label_masks(lam_x, lam_fx, mode, tau):
    lam_x = np.ascontiguousarray(lam_x, dtype=np.float64)
    lam_fx = np.ascontiguousarray(lam_fx, dtype=np.float64)
    if USE_NUMBA:
        return label_masks_numba(lam_x, lam_fx, int(mode), float(tau))
    return label_masks_numpy(lam_x, lam_fx, mode, tau)


def sdr_many(masks):
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    if masks.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    if USE_NUMBA:
        return sdr_many_numba(masks)
    return sdr_many_numpy(masks)


def grid_compositions(d, r):
    n = grid_size(d, r)
    if USE_NUMBA:
        return grid_compositions_numba(d, r, n)
    return grid_compositions_numpy(d, r)


def grid_neighbours(comps, r):
    """Row ``p`` lists the grid points one unit move away from point ``p``
    (one barycentric numerator down, another up); -1 pads missing moves."""
    comps = np.ascontiguousarray(comps, dtype=np.int64)
    binom = _binom_table(r + comps.shape[1] + 2, comps.shape[1] + 2)
    if USE_NUMBA:
        return grid_neighbours_numba(comps, r, binom)
    return grid_neighbours_numpy(comps, r, binom)


def plateau_minima(values, nbrs):
    """Points whose plateau of equal values has no strictly lower neighbour."""
    values = np.asarray(values, dtype=np.float64)
    valid = nbrs >= 0
    nv = np.where(valid, values[np.where(valid, nbrs, 0)], np.inf)
    ok = np.all(nv >= values[:, None], axis=1)
    same = valid & (nv == values[:, None])
    while True:
        bad = ok & np.any(same & ~ok[np.where(valid, nbrs, 0)], axis=1)
        if not bad.any():
            return ok
        ok &= ~bad


def count_full_cells(cells, labels):
    cells = np.ascontiguousarray(cells, dtype=np.int64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if cells.shape[0] == 0:
        return 0
    if USE_NUMBA:
        return int(count_full_cells_numba(cells, labels))
    return count_full_cells_numpy(cells, labels)
