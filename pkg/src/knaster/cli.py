"""``knaster`` command line: solve, list, verify, export-plot.

Exit codes: 0 ok, 2 bad configuration, 3 domain violation, 4 verification
failure, 5 I/O error. ``KNASTER_LOG`` sets the log level (name or number).
"""
import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import oracle, problems
from . import solver as solver_mod
from . import transform
from .geometry import simplex_to_cube
from .labeling import LabelingStrategy, Rule
from .problems import AffineSpec, ProblemError
from .solver import DomainViolation, SolverConfig
from .trace import SolveTrace, TraceError, vertex_labels

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_VERIFY = 4
EXIT_IO = 5

CANDIDATE_TOL = 1e-3

log = logging.getLogger("knaster")

DESCRIPTIONS = {
    "half": "x -> x/2, fixed point 0",
    "swap": "(x, y) -> (y, x), d=2 only, the diagonal is fixed",
    "contraction": "x -> x/(2d) + 1/(2d), fixed point 1/(2d-1) in every coordinate",
    "contraction-eps": "contraction shifted by a small asymmetric epsilon",
}


class ConfigError(Exception):
    pass


def _configure_logging():
    level = os.environ.get("KNASTER_LOG", "WARNING").strip()
    value = int(level) if level.isdigit() else getattr(logging, level.upper(), None)
    if not isinstance(value, int):
        value = logging.WARNING
    logging.basicConfig(level=value, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _epsilon(text):
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_problem_args(p):
    p.add_argument("--problem", help="built-in problem name (see `knaster list`)")
    p.add_argument("--config", help="JSON affine spec {dimension, A, b}")
    p.add_argument("--d", type=int, default=2, help="dimension for built-in problems")
    p.add_argument("--epsilon", type=_epsilon, help="perturbation for contraction-eps")
    p.add_argument("--mode", choices=("fixed-point", "zero-search"), default="fixed-point",
                   help="zero-search reads the config as G(x) = Ax + b")
    p.add_argument("--domain", choices=("simplex", "cube"), default="simplex",
                   help="treat the map as a self-map of [0,1]^d when 'cube'")
    p.add_argument("--seed", type=int, default=0, help="seed for the scale sampling of zero-search")
    p.add_argument("--samples", type=int, default=1024, help="sample count for the zero-search scale")


def build_parser():
    parser = argparse.ArgumentParser(prog="knaster", description="Sperner-cell fixed-point solver")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the solver")
    _add_problem_args(s)
    s.add_argument("--steps", type=int, default=SolverConfig.max_steps)
    s.add_argument("--max-evals", type=int, default=SolverConfig.max_evaluations)
    s.add_argument("--target-diameter", type=float, default=SolverConfig.target_diameter)
    s.add_argument("--labeling", choices=[r.value for r in Rule], default=Rule.NOT_CLOSER.value)
    s.add_argument("--initial-refinement", type=int, default=0)
    s.add_argument("--trace-out", help="write the JSON-lines trace here")
    s.add_argument("--points-out", help="write evaluated vertices as CSV here")
    s.add_argument("--top", type=int, default=5, help="candidates to print")

    sub.add_parser("list", help="list built-in problems")

    v = sub.add_parser("verify", help="brute-force grid check")
    _add_problem_args(v)
    v.add_argument("--resolution", type=int, default=64)
    v.add_argument("--trace", help="cross-check candidates of this trace against the grid")
    v.add_argument("--expect", type=_epsilon, help="point that must lie near a grid minimum")

    e = sub.add_parser("export-plot", help="dump vertices and cells of a traced step as CSV")
    e.add_argument("trace", help="trace file written by `solve --trace-out`")
    e.add_argument("--step", type=int, required=True)
    e.add_argument("--out", required=True, help="prefix; writes <out>_vertices.csv and <out>_cells.csv")
    return parser


# ---------------------------------------------------------------- problems

def _load_spec(path):
    try:
        return AffineSpec.load(path)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc


def resolve_problem(args):
    if (args.problem is None) == (args.config is None):
        raise ConfigError("give exactly one of --problem or --config")
    if args.mode == "zero-search":
        if args.config is None:
            raise ConfigError("zero-search needs an affine G given with --config")
        spec = _load_spec(args.config)
        A, b = spec.A, spec.b
        zeros = []
        try:
            zeros = [np.linalg.solve(A, -b)]
        except np.linalg.LinAlgError:
            pass
        zp = transform.ZeroProblem(lambda x: A @ x + b, spec.d, name=os.path.basename(args.config),
                                   known_zeros=zeros)
        zp.c = transform.estimate_c(zp, samples=args.samples, seed=args.seed)
        log.info("zero-search scale estimates c = %s", zp.c.tolist())
        problem = transform.to_fixed_point(zp)
    elif args.config is not None:
        problem = problems.from_affine(_load_spec(args.config), name=os.path.basename(args.config))
    else:
        problem = problems.builtin(args.problem, args.d, args.epsilon)
    if args.domain == "cube":
        problem = transform.cube_problem(problem)
    return problem


def _labeling(args):
    return LabelingStrategy.parse(args.labeling)


# -------------------------------------------------------------- commands

def write_points(path, mesh):
    d = mesh.d
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + [f"x_{i}" for i in range(d)] + ["labels", "residual"])
        for v in range(mesh.n_vertices):
            if mesh.lam_fx[v] is None:
                continue
            res = float(np.max(np.abs(mesh.lam_x[v] - mesh.lam_fx[v])))
            w.writerow([v] + [repr(float(c)) for c in mesh.positions[v]]
                       + [";".join(map(str, vertex_labels(mesh, v))), repr(res)])


def _fmt(p):
    return "(" + ", ".join(f"{c:.6f}" for c in p) + ")"


def cmd_solve(args):
    problem = resolve_problem(args)
    try:
        config = SolverConfig(max_steps=args.steps, max_evaluations=args.max_evals,
                              target_diameter=args.target_diameter, labeling=_labeling(args),
                              initial_refinement=args.initial_refinement,
                              record_trace=True)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = solver_mod.solve(problem, config)
    if args.trace_out:
        result.trace.write(args.trace_out)
    if args.points_out:
        write_points(args.points_out, result.mesh)

    print(f"problem {problem.name}  d={problem.d}  labeling {config.labeling.name}")
    print(f"steps {result.steps_used}  evaluations {result.evaluations_used}  stop: {result.stop_reason}")
    print(f"{len(result.candidates)} Sperner cells")
    for rank, k in enumerate(result.candidates[:args.top]):
        point = simplex_to_cube(k.point) if args.domain == "cube" else k.point
        tags = f"  [{', '.join(k.tags)}]" if k.tags else ""
        print(f"  #{rank} {_fmt(point)}  residual {k.residual:.3e}  diameter {k.diameter:.3e}{tags}")
    return EXIT_OK


def cmd_list(args):
    for name in sorted(problems.BUILTINS):
        print(f"{name:<16} {DESCRIPTIONS.get(name, '')}")
    return EXIT_OK


def cmd_verify(args):
    problem = resolve_problem(args)
    if args.resolution < 2:
        raise ConfigError("--resolution must be >= 2")
    report = oracle.grid_fixed_points(problem, args.resolution)
    print(report.table())
    ok = len(report.minima) > 0
    if not ok:
        print("no grid minimum below threshold")
    if args.trace:
        trace = SolveTrace.read(args.trace)
        if trace.dimension != problem.d:
            raise ConfigError(f"trace is for d={trace.dimension}, problem has d={problem.d}")
        for k in trace.of_kind("Candidate"):
            if k["residual"] >= CANDIDATE_TOL:
                continue
            near = report.near(k["point"])
            print(f"candidate #{k['rank']} {_fmt(k['point'])}: {'near a grid minimum' if near else 'NO grid minimum nearby'}")
            ok &= near
    if args.expect is not None:
        if len(args.expect) != problem.d:
            raise ConfigError(f"--expect needs {problem.d} coordinates")
        near = report.near(args.expect)
        print(f"expected point {_fmt(args.expect)}: {'near a grid minimum' if near else 'NO grid minimum nearby'}")
        ok &= near
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_export_plot(args):
    trace = SolveTrace.read(args.trace)
    available = trace.steps()
    if args.step not in available:
        raise ConfigError(f"step {args.step} is not in the trace; available steps: "
                          + ", ".join(map(str, available)))
    mesh = trace.replay(upto_step=args.step)
    write_points(args.out + "_vertices.csv", mesh)
    cells, ids = mesh.cells_array()
    with open(args.out + "_cells.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell"] + [f"v_{i}" for i in range(mesh.d + 1)])
        for c, row in zip(ids, cells):
            w.writerow([c] + row.tolist())
    print(f"step {args.step}: {mesh.n_vertices} vertices, {len(ids)} cells -> {args.out}_*.csv")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "list": cmd_list,
    "verify": cmd_verify,
    "export-plot": cmd_export_plot,
}


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DomainViolation as exc:
        print(f"domain violation: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConfigError, ProblemError, TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
