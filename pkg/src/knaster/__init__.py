"""Derivative-free global fixed-point solver for self-maps of a simplex."""
from ._accel import HAS_NUMBA, USE_NUMBA
from .geometry import (AffineChart, Simplex, barycentric, cube_to_simplex,
                       simplex_to_cube, unit_simplex)
from .labeling import (FIRST_INDEX, MAX_GAIN, NOT_CLOSER, LabelingStrategy, Rule,
                       compute_labels, face_cover_check, is_sperner)
from .mesh import Mesh
from .oracle import GridReport, edge_halving_check, grid_fixed_points, sperner_parity
from .problems import AffineSpec, Problem, builtin, from_affine
from .solver import DomainViolation, SolverConfig, SolveResult, candidates, solve, step
from .trace import SolveTrace
from .transform import ZeroProblem, cube_problem, estimate_c, to_fixed_point, wrap_cube

__version__ = "0.1.0"
