"""Built-in self-maps of the unit simplex and an affine problem loader."""
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import AffineChart, Simplex

DEFAULT_EPSILON = (0.011, 0.007, 0.005, 0.003)


class ProblemError(ValueError):
    pass


@dataclass
class Problem:
    """A continuous map of ``conv(0, e_1, ..., e_d)`` into itself."""

    d: int
    evaluator: Callable
    name: str = "custom"
    known_fixed_points: list = field(default_factory=list)
    # distance from a point to the whole known fixed set; defaults to the
    # nearest entry of known_fixed_points
    fixed_set_distance: Optional[Callable] = None
    spurious_origin: bool = False
    vectorized: Optional[Callable] = None

    def __call__(self, x):
        return np.asarray(self.evaluator(np.asarray(x, dtype=np.float64)), dtype=np.float64)

    def evaluate_many(self, points):
        points = np.asarray(points, dtype=np.float64)
        if self.vectorized is not None:
            return np.asarray(self.vectorized(points), dtype=np.float64)
        return np.array([self(p) for p in points]).reshape(points.shape)

    def distance_to_fixed_set(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.fixed_set_distance is not None:
            return float(self.fixed_set_distance(x))
        if not self.known_fixed_points:
            raise ProblemError(f"problem {self.name!r} has no known fixed points")
        return min(float(np.linalg.norm(x - p)) for p in self.known_fixed_points)


@dataclass(frozen=True)
class AffineSpec:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if A.shape != (b.shape[0], b.shape[0]):
            raise ProblemError(f"A has shape {A.shape} but b has length {b.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ProblemError("affine spec contains non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def d(self):
        return self.b.shape[0]

    @classmethod
    def from_dict(cls, doc):
        try:
            spec = cls(doc["A"], doc["b"])
        except KeyError as exc:
            raise ProblemError(f"affine spec is missing key {exc}") from exc
        if "dimension" in doc and int(doc["dimension"]) != spec.d:
            raise ProblemError(f"dimension {doc['dimension']} does not match A/b of size {spec.d}")
        return spec

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"dimension": self.d, "A": self.A.tolist(), "b": self.b.tolist()}


def affine_fixed_points(spec: AffineSpec):
    """Unique fixed point of ``x -> Ax + b`` if ``I - A`` is invertible."""
    try:
        return [np.linalg.solve(np.eye(spec.d) - spec.A, spec.b)]
    except np.linalg.LinAlgError:
        return []


def from_affine(spec: AffineSpec, name="affine"):
    A, b = spec.A, spec.b
    return Problem(spec.d, lambda x: A @ x + b, name=name,
                   known_fixed_points=affine_fixed_points(spec),
                   vectorized=lambda X: X @ A.T + b)


def _check_d(d, lo=1):
    if int(d) != d or d < lo:
        raise ProblemError(f"invalid dimension {d!r}")
    return int(d)


def half(d=2):
    d = _check_d(d)
    return Problem(d, lambda x: 0.5 * x, name="half",
                   known_fixed_points=[np.zeros(d)], vectorized=lambda X: 0.5 * X)


def swap(d=2):
    if d != 2:
        raise ProblemError("the swap problem is defined for d=2 only")
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    return Problem(2, lambda x: P @ x, name="swap",
                   known_fixed_points=[np.array([t, t]) for t in (0.0, 0.25, 0.5)],
                   fixed_set_distance=lambda x: abs(x[0] - x[1]) / np.sqrt(2.0),
                   vectorized=lambda X: X[:, ::-1].copy())


def contraction(d=2):
    d = _check_d(d)
    s = 1.0 / (2 * d)
    return Problem(d, lambda x: s * x + s, name="contraction",
                   known_fixed_points=[np.full(d, 1.0 / (2 * d - 1))],
                   vectorized=lambda X: s * X + s)


def default_epsilon(d):
    eps = np.zeros(d)
    k = min(d, len(DEFAULT_EPSILON))
    eps[:k] = DEFAULT_EPSILON[:k]
    return eps


def contraction_eps(d=2, epsilon=None):
    d = _check_d(d)
    if epsilon is None:
        eps = default_epsilon(d)
    else:
        eps = np.broadcast_to(np.asarray(epsilon, dtype=np.float64), (d,)).copy()
    s = 1.0 / (2 * d)
    # F lands in the simplex iff eps_i >= -s and sum(eps) <= 1/2 - s
    if np.any(eps < -s) or eps.sum() > 0.5 - s + 1e-15:
        raise ProblemError(f"epsilon {eps.tolist()} pushes the contraction outside the simplex "
                           f"(need eps_i >= {-s:g} and sum(eps) <= {0.5 - s:g})")
    return Problem(d, lambda x: s * x + s + eps, name="contraction-eps",
                   known_fixed_points=[(1.0 + 2 * d * eps) / (2 * d - 1)],
                   vectorized=lambda X: s * X + s + eps)


BUILTINS = {
    "half": half,
    "swap": swap,
    "contraction": contraction,
    "contraction-eps": contraction_eps,
}


def builtin(name, d=2, epsilon=None):
    try:
        make = BUILTINS[name]
    except KeyError:
        raise ProblemError(f"unknown problem {name!r}; choose from {sorted(BUILTINS)}") from None
    if name == "contraction-eps":
        return make(d, epsilon)
    return make(d)


def on_simplex(F, simplex: Simplex, name="charted"):
    """Pull a self-map of an arbitrary simplex back to the unit simplex."""
    chart = AffineChart(simplex)
    return Problem(simplex.d,
                   lambda u: chart.to_reference(F(chart.from_reference(u))),
                   name=name)
