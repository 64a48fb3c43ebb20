"""Acceptance criteria 1-12. Each test prints one PASS/FAIL line."""
import os
import subprocess
import sys
import time
from itertools import combinations

import numpy as np
import pytest

from knaster import labeling as lab
from knaster.labeling import FIRST_INDEX, MAX_GAIN, NOT_CLOSER, compute_labels
from knaster.mesh import Mesh, set_to_mask
from knaster.oracle import edge_halving_check, grid_fixed_points, sperner_parity
from knaster.problems import builtin, contraction_eps
from knaster.solver import SolverConfig, candidates, initialize, solve, step
from knaster.transform import ZeroProblem, estimate_c, to_fixed_point

SQRT2 = np.sqrt(2.0)


def parity_problems():
    out = []
    for d in (1, 2, 3):
        out += [builtin("half", d), builtin("contraction", d)]
        # the default shift is positive, which leaves the simplex for d=1
        out.append(contraction_eps(d, -0.005) if d == 1 else builtin("contraction-eps", d))
    out.append(builtin("swap", 2))
    return out


def run_steps(problem, strategy, steps, budget=400):
    mesh = initialize(problem, SolverConfig(labeling=strategy))
    yield mesh
    for n in range(1, steps + 1):
        if mesh.n_vertices >= budget:
            return
        step(mesh, problem, strategy, step_number=n, max_evaluations=budget)
        yield mesh


def test_c01_sperner_parity(criterion):
    t0 = time.perf_counter()
    bad = []
    checked = 0
    for p in parity_problems():
        for strategy in (NOT_CLOSER, MAX_GAIN):
            for n, mesh in enumerate(run_steps(p, strategy, 40)):
                assert lab.face_cover_check(mesh)
                count, odd = sperner_parity(mesh)
                checked += 1
                if not odd:
                    bad.append((p.name, p.d, strategy.name, n, count))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 10
    criterion(1, "Sperner parity, d=1..3, all built-ins, not-closer and max-gain", ok,
              f"{checked} meshes, {len(bad)} even, {elapsed:.2f}s")
    assert not bad
    assert elapsed < 10


@pytest.mark.xfail(strict=True, reason="set-valued labels: cells admitting distinct "
                   "representatives are not odd in number (both cells at a fixed vertex count)")
def test_c01_set_label_reading(criterion):
    even = 0
    for p in parity_problems():
        for strategy in (NOT_CLOSER, MAX_GAIN):
            for mesh in run_steps(p, strategy, 40):
                even += len(lab.sperner_cells(mesh)) % 2 == 0
    criterion("1b", "odd count of cells with distinct representatives (literal set-label reading)",
              even == 0, f"{even} meshes with an even count")
    assert even == 0


def test_c02_edge_halving(criterion):
    t0 = time.perf_counter()
    results = {(d, n): edge_halving_check(d, n) for d in (2, 3, 4, 5) for n in range(d, 3 * d + 1)}
    elapsed = time.perf_counter() - t0
    ok = all(results.values()) and elapsed < 1
    criterion(2, "edge halving after every d bisections, d=2..5, chains up to 3d", ok, f"{elapsed:.3f}s")
    assert all(results.values())
    assert elapsed < 1


def tracked_chain(d, steps):
    """Diameters of the nested Sperner cells holding the origin on the half map,
    one entry per bisection of the tracked cell."""
    res = solve(builtin("half", d), SolverConfig(max_steps=steps))
    mesh = Mesh(d)
    tracked = 0
    chain = [mesh.cell_diameter(0)]
    for e in res.trace.events:
        kind = e["event"]
        if kind == "StepStarted":
            mesh.increment_ages()
        elif kind == "EdgeBisected":
            mesh.bisect_edge(e["edge"])
        elif kind == "VertexEvaluated":
            v = e["id"]
            mesh.lam_x[v] = np.asarray(e["lam_x"])
            mesh.lam_fx[v] = np.asarray(e["lam_fx"])
            mesh.label_masks[v] = set_to_mask(e["labels"])
            mesh.sperner_cache.clear()
            if not mesh.cell_alive[tracked]:
                kids = [c for c in range(mesh.n_cells) if mesh.cell_parent[c] == tracked
                        and 0 in mesh.cell_verts[c] and lab.cell_is_sperner(mesh, c)]
                tracked = min(kids)
                chain.append(mesh.cell_diameter(tracked))
    return chain


def halves_every(chain, d, halvings=4):
    """Phase ``k0 < d`` with ``chain[k0 + j*d] == sqrt(2)/2**j`` for j=0..halvings."""
    for k0 in range(d):
        idx = [k0 + j * d for j in range(halvings + 1)]
        if idx[-1] < len(chain) and all(abs(chain[i] - SQRT2 / 2 ** j) <= 1e-12
                                        for j, i in enumerate(idx)):
            return k0
    return None


def test_c03_nested_convergence_rate(criterion):
    t0 = time.perf_counter()
    phases = {d: halves_every(tracked_chain(d, 40), d) for d in (2, 3)}
    elapsed = time.perf_counter() - t0
    ok = all(k is not None for k in phases.values()) and elapsed < 1
    criterion(3, "half map: tracked Sperner diameter halves every d bisections, d=2,3, 4 halvings",
              ok, f"phase offsets {phases}, {elapsed:.3f}s")
    assert phases[2] is not None and phases[3] is not None
    assert elapsed < 1


def best_error(problem, strategy, budget):
    res = solve(problem, SolverConfig(max_steps=10_000, max_evaluations=budget, labeling=strategy))
    return float(np.linalg.norm(res.best.point - problem.known_fixed_points[0])), res


def test_c04_table1_scale(criterion):
    t0 = time.perf_counter()
    err, res = best_error(builtin("contraction", 2), NOT_CLOSER, 60)
    elapsed = time.perf_counter() - t0
    ok = err <= 0.02 and res.evaluations_used <= 60 and elapsed < 1
    criterion(4, "contraction d=2 not-closer: error <= 0.02 within 60 evaluations", ok,
              f"error {err:.4f} at {res.evaluations_used} evaluations, {elapsed:.3f}s")
    assert err <= 0.02 and res.evaluations_used <= 60
    assert elapsed < 1


def test_c05_table2_scale(criterion):
    t0 = time.perf_counter()
    p = builtin("contraction-eps", 3)
    fp = p.known_fixed_points[0]
    err_mg, res_mg = best_error(p, MAX_GAIN, 40)
    # not-closer: best-candidate error along the whole run up to 80 evaluations
    nc_errors = [float(np.linalg.norm(candidates(m, p)[0].point - fp))
                 for m in run_steps(p, NOT_CLOSER, 10_000, budget=80)]
    elapsed = time.perf_counter() - t0
    ok = err_mg <= 0.05 and min(nc_errors) > 0.05 and elapsed < 2
    criterion(5, "contraction-eps d=3: max-gain <= 0.05 within 40, not-closer needs more than 80", ok,
              f"max-gain {err_mg:.4f} at {res_mg.evaluations_used}, not-closer best {min(nc_errors):.4f}"
              f" up to 80, {elapsed:.3f}s")
    assert err_mg <= 0.05 and res_mg.evaluations_used <= 40
    assert min(nc_errors) > 0.05
    assert elapsed < 2


def test_c06_table3_scale(criterion):
    t0 = time.perf_counter()
    err, res = best_error(builtin("contraction-eps", 4), MAX_GAIN, 120)
    elapsed = time.perf_counter() - t0
    ok = err <= 0.05 and elapsed < 5
    criterion(6, "contraction-eps d=4 max-gain: error <= 0.05 within 120 evaluations", ok,
              f"error {err:.4f} at {res.evaluations_used}, {elapsed:.3f}s")
    assert err <= 0.05 and res.evaluations_used <= 120
    assert elapsed < 5


def crosses_diagonal(mesh, c):
    diff = [mesh.positions[v][0] - mesh.positions[v][1] for v in mesh.cell_verts[c]]
    return min(diff) <= 0.0 <= max(diff)


def test_c07_swap(criterion):
    t0 = time.perf_counter()
    p = builtin("swap", 2)
    worst = 0.0
    for strategy in (NOT_CLOSER, MAX_GAIN):
        res = solve(p, SolverConfig(max_steps=30, labeling=strategy))
        for k in res.candidates:
            worst = max(worst, abs(k.point[0] - k.point[1]) - k.diameter)
    off_diagonal = 0
    for mesh in run_steps(p, MAX_GAIN, 30):
        off_diagonal += sum(not crosses_diagonal(mesh, c) for c in lab.sperner_cells(mesh))
    elapsed = time.perf_counter() - t0
    ok = worst <= 0 and off_diagonal == 0 and elapsed < 1
    criterion(7, "swap: |x1-x2| <= diameter for all candidates, max-gain Sperner cells meet the diagonal",
              ok, f"max excess {worst:.3g}, {off_diagonal} cells off the diagonal, {elapsed:.3f}s")
    assert worst <= 0 and off_diagonal == 0
    assert elapsed < 1


def test_c08_first_index_loses_fixed_points(criterion):
    t0 = time.perf_counter()
    res = solve(builtin("swap", 2), SolverConfig(max_steps=5, labeling=FIRST_INDEX))
    mesh = res.mesh

    def has_boundary_facet(c):
        return any(set.intersection(*(mesh.on_root_face(v) for v in f))
                   for f in combinations(mesh.cell_verts[c], mesh.d))

    cells = lab.sperner_cells(mesh)
    interior = [c for c in cells if not has_boundary_facet(c)]
    cover = lab.face_cover_check(mesh)
    elapsed = time.perf_counter() - t0
    ok = not interior and cover and elapsed < 1
    criterion(8, "first-index on swap: no interior Sperner cells after 5 steps", ok,
              f"{len(cells)} Sperner cells, {len(interior)} interior, {elapsed:.3f}s")
    assert cover and not interior
    assert elapsed < 1


def random_zero_problems(count=5, d=2, seed=20240611):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        A = rng.normal(size=(d, d))
        if abs(np.linalg.det(A)) < 0.3:
            continue
        a = rng.dirichlet(np.ones(d + 1) * 2)[1:]
        out.append((A, a))
    return out


def test_c09_transformation(criterion):
    t0 = time.perf_counter()
    rows = []
    for i, (A, a) in enumerate(random_zero_problems()):
        zp = ZeroProblem(lambda x, A=A, a=a: A @ (x - a), 2, known_zeros=[a])
        zp.c = estimate_c(zp, 1024, seed=i)
        F = to_fixed_point(zp)
        res = solve(F, SolverConfig(max_steps=40))
        zero_found = any(np.linalg.norm(k.point - a) <= 1e-3 for k in res.candidates)
        origin = any(np.linalg.norm(k.point) <= 1e-3 and "spurious: origin" in k.tags
                     for k in res.candidates)
        grid = grid_fixed_points(F, 128)
        grid_ok = grid.near(a) and grid.near(np.zeros(2))
        grid_ok &= all(grid.near(k.point) for k in res.candidates if k.residual < 1e-3)
        rows.append((zero_found or origin, grid_ok, zero_found, origin))
    elapsed = time.perf_counter() - t0
    ok = all(r[0] and r[1] for r in rows) and elapsed < 10
    criterion(9, "zero search: candidate at each zero or at the tagged origin, grid agrees at 128", ok,
              f"zeros found {sum(r[2] for r in rows)}/5, tagged origin {sum(r[3] for r in rows)}/5,"
              f" grid {sum(r[1] for r in rows)}/5, {elapsed:.2f}s")
    assert all(r[0] for r in rows) and all(r[1] for r in rows)
    assert elapsed < 10


def test_c10_max_gain_boundary(criterion):
    t0 = time.perf_counter()
    p = builtin("contraction", 2)

    def labels(x):
        x = np.asarray(x, dtype=float)
        fx = p(x)
        return compute_labels(np.r_[1 - x.sum(), x], np.r_[1 - fx.sum(), fx], MAX_GAIN)

    # the tie between labels 0 and 2 is the maximal gain only while x_1 <= 1/3
    on_line = [np.array([t, 0.5 - t / 2]) for t in np.linspace(0.0, 0.3, 61)]
    res = solve(p, SolverConfig(max_steps=60, labeling=MAX_GAIN))
    on_line += [x for x in res.mesh.positions
                if abs(x[1] - (0.5 - x[0] / 2)) <= 1e-6 and x[0] < 1 / 3 - 1e-3]
    normal = np.array([0.5, 1.0]) / np.linalg.norm([0.5, 1.0])
    both = all({0, 2} <= labels(x) for x in on_line)
    exactly_one = all(len(labels(x + s * 1e-3 * normal) & {0, 2}) == 1
                      for x in on_line for s in (-1, 1))
    elapsed = time.perf_counter() - t0
    ok = both and exactly_one and elapsed < 1
    criterion(10, "max-gain on contraction d=2: labels 0 and 2 meet on x2 = -x1/2 + 1/2", ok,
              f"{len(on_line)} points on the line, {elapsed:.3f}s")
    assert both and exactly_one
    assert elapsed < 1


def test_c11_conformity_and_volume(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst, errors = 0.0, []
    for d in (2, 3, 4):
        mesh = Mesh(d)
        root = mesh.root.volume()
        for _ in range(1000):
            alive = mesh.alive_edges()
            mesh.bisect_edge(alive[rng.integers(len(alive))])
        worst = max(worst, abs(mesh.total_volume() - root) / root)
        errors += mesh.conformity_errors()
    elapsed = time.perf_counter() - t0
    ok = not errors and worst <= 1e-9 and elapsed < 5
    criterion(11, "1000 random bisections, d=2,3,4: conforming, volume conserved", ok,
              f"relative drift {worst:.2e}, {len(errors)} conformity errors, {elapsed:.2f}s")
    assert not errors and worst <= 1e-9
    assert elapsed < 5


def test_c12_deterministic_traces(criterion, tmp_path):
    paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for path in paths:
        subprocess.run([sys.executable, "-m", "knaster", "solve", "--problem", "contraction",
                        "--d", "3", "--seed", "7", "--trace-out", str(path)],
                       check=True, capture_output=True, env=dict(os.environ))
    same = paths[0].read_bytes() == paths[1].read_bytes()
    criterion(12, "solve --problem contraction --d 3 --seed 7 twice: identical trace bytes", same,
              f"{paths[0].stat().st_size} bytes")
    assert same
