"""Box-constrained multi-objective benchmark problems with analytic gradients.

Provides the classic two-objective ZDT1/ZDT2/ZDT3 problems and the
three-objective DTLZ7 problem (30 decision variables on the unit box by
default), each with a closed-form evaluator, an analytic Jacobian, and a
sampled reference Pareto front.  Fronts with disconnected geometry carry a
per-point segment label.

The square-root term of ZDT1/ZDT3 has an unbounded partial derivative at
``x1 = 0``; the Jacobian clamps ``x1`` to ``BOUNDARY_CLAMP`` inside that
term so that drifts stay finite at the box boundary.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import OutOfDomainError, UnsupportedProblemError

# Clamp applied to x1 inside the 1/sqrt(x1) factor of the ZDT1/ZDT3 Jacobian.
BOUNDARY_CLAMP = 1e-12

# Grid sizes for the dense front oracles (nondominated filtering of a dense
# sample of the g = 1 surface).
_ZDT3_ORACLE_GRID = 1_000_000
_DTLZ7_ORACLE_GRID = 1000  # per axis => 10^6 candidate points

# Consecutive front points belong to the same segment iff their coordinate
# gap is below this multiple of the median positive gap.
_SEGMENT_GAP_FACTOR = 10.0


@dataclass(frozen=True)
class Problem:
    """A box-constrained vector-valued objective.

    Attributes
    ----------
    name : str
        Registry identifier.
    d, m : int
        Decision dimension and objective count.
    lower, upper : ndarray, shape (d,)
        Feasible box bounds (lower < upper componentwise).
    evaluator : callable
        Maps a single point ``(d,)`` to objectives ``(m,)``.
    jacobian : callable
        Maps a single point ``(d,)`` to the ``(m, d)`` Jacobian.
    batch_evaluator, batch_jacobian : callable or None
        Optional vectorized forms over ``(N, d)`` inputs; filled in with
        row loops when absent.
    """

    name: str
    d: int
    m: int
    lower: np.ndarray
    upper: np.ndarray
    evaluator: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    batch_evaluator: Callable[[np.ndarray], np.ndarray] | None = None
    batch_jacobian: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != (self.d,) or upper.shape != (self.d,):
            raise ValueError("bounds must have shape (d,)")
        if not np.all(lower < upper):
            raise ValueError("lower bound must be strictly below upper bound")


@dataclass(frozen=True)
class ReferenceFront:
    """Objective-space samples of a true Pareto front.

    ``points`` is ``(P, m)`` and mutually nondominated; ``segment_labels``
    assigns each point to a connected component (0-based, contiguous).
    """

    points: np.ndarray
    segment_labels: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        labels = self.segment_labels
        if labels is None:
            labels = np.zeros(len(pts), dtype=int)
        object.__setattr__(self, "segment_labels", np.asarray(labels, dtype=int))

    @property
    def n_segments(self) -> int:
        return int(self.segment_labels.max()) + 1 if len(self.points) else 0


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------

def _check_box(problem: Problem, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.d,):
        raise ValueError(f"expected point of shape ({problem.d},), got {x.shape}")
    below = x < problem.lower
    above = x > problem.upper
    if below.any() or above.any():
        i = int(np.argmax(below | above))
        raise OutOfDomainError(i, x[i], problem.lower[i], problem.upper[i])
    return x


def evaluate(problem: Problem, x: np.ndarray) -> np.ndarray:
    """Evaluate the objective vector at a feasible point.

    Raises :class:`OutOfDomainError` (carrying the violating coordinate
    index) when ``x`` leaves the box.
    """
    x = _check_box(problem, x)
    return np.asarray(problem.evaluator(x), dtype=float)


def jacobian(problem: Problem, x: np.ndarray) -> np.ndarray:
    """Analytic Jacobian at ``x``; row i is the gradient of objective i.

    For ZDT1/ZDT3 the 1/sqrt(x1) factor is evaluated with x1 clamped to
    ``BOUNDARY_CLAMP``, so the result is finite (but large) on the x1 = 0
    face; :func:`boundary_singular` reports when the clamp engaged.
    """
    x = _check_box(problem, x)
    return np.asarray(problem.jacobian(x), dtype=float)


def boundary_singular(problem: Problem, x: np.ndarray) -> bool:
    """True when the Jacobian at ``x`` relied on the square-root clamp."""
    if problem.name in ("zdt1", "zdt3"):
        return float(np.asarray(x)[0]) < BOUNDARY_CLAMP
    return False


def evaluate_batch(problem: Problem, X: np.ndarray) -> np.ndarray:
    """Objective values for rows of ``X``; shape (N, m)."""
    X = np.asarray(X, dtype=float)
    if problem.batch_evaluator is not None:
        return problem.batch_evaluator(X)
    return np.stack([problem.evaluator(row) for row in X])


def jacobian_batch(problem: Problem, X: np.ndarray) -> np.ndarray:
    """Jacobians for rows of ``X``; shape (N, m, d)."""
    X = np.asarray(X, dtype=float)
    if problem.batch_jacobian is not None:
        return problem.batch_jacobian(X)
    return np.stack([problem.jacobian(row) for row in X])


def sample_feasible(problem: Problem, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points uniformly from the feasible box; shape (n, d)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = rng.random((n, problem.d))
    return problem.lower + u * (problem.upper - problem.lower)


def project_feasible(problem: Problem, x: np.ndarray) -> np.ndarray:
    """Componentwise clamp onto the feasible box (idempotent).

    Accepts a single point ``(d,)`` or a batch ``(N, d)``.
    """
    return np.clip(np.asarray(x, dtype=float), problem.lower, problem.upper)


# ---------------------------------------------------------------------------
# ZDT family (d decision variables, 2 objectives)
# ---------------------------------------------------------------------------

def _zdt_g(X: np.ndarray, d: int) -> np.ndarray:
    return 1.0 + (9.0 / (d - 1)) * X[:, 1:].sum(axis=1)


def _zdt_eval(X: np.ndarray, variant: str, d: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f1 = X[:, 0]
    g = _zdt_g(X, d)
    r = f1 / g
    if variant == "zdt1":
        h = 1.0 - np.sqrt(r)
    elif variant == "zdt2":
        h = 1.0 - r**2
    elif variant == "zdt3":
        h = 1.0 - np.sqrt(r) - r * np.sin(10.0 * np.pi * f1)
    else:  # pragma: no cover
        raise ValueError(variant)
    return np.stack([f1, g * h], axis=1)


def _zdt_jac(X: np.ndarray, variant: str, d: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    f1 = X[:, 0]
    g = _zdt_g(X, d)
    c0 = 9.0 / (d - 1)
    J = np.zeros((n, 2, d))
    J[:, 0, 0] = 1.0
    f1c = np.maximum(f1, BOUNDARY_CLAMP)
    if variant == "zdt1":
        J[:, 1, 0] = -0.5 * np.sqrt(g / f1c)
        J[:, 1, 1:] = (c0 * (1.0 - 0.5 * np.sqrt(f1 / g)))[:, None]
    elif variant == "zdt2":
        J[:, 1, 0] = -2.0 * f1 / g
        J[:, 1, 1:] = (c0 * (1.0 + (f1 / g) ** 2))[:, None]
    elif variant == "zdt3":
        w = 10.0 * np.pi * f1
        J[:, 1, 0] = -0.5 * np.sqrt(g / f1c) - np.sin(w) - w * np.cos(w)
        J[:, 1, 1:] = (c0 * (1.0 - 0.5 * np.sqrt(f1 / g)))[:, None]
    else:  # pragma: no cover
        raise ValueError(variant)
    return J


def _make_zdt(variant: str, d: int = 30) -> Problem:
    return Problem(
        name=variant,
        d=d,
        m=2,
        lower=np.zeros(d),
        upper=np.ones(d),
        evaluator=lambda x: _zdt_eval(x, variant, d)[0],
        jacobian=lambda x: _zdt_jac(x, variant, d)[0],
        batch_evaluator=lambda X: _zdt_eval(X, variant, d),
        batch_jacobian=lambda X: _zdt_jac(X, variant, d),
    )


# ---------------------------------------------------------------------------
# DTLZ7 (d decision variables, 3 objectives), implemented exactly as
# f3 = (1 + g) * h with g = 1 + 9/(d-1) * sum_{i>=3} x_i and
# h = 3 - sum_{i=1,2} f_i / (1 + g) * (1 + sin(3 pi f_i)), which collapses to
# f3 = 3 (1 + g) - psi(x1) - psi(x2) with psi(u) = u (1 + sin(3 pi u)).
# ---------------------------------------------------------------------------

def _dtlz7_psi(u: np.ndarray) -> np.ndarray:
    return u * (1.0 + np.sin(3.0 * np.pi * u))


def _dtlz7_psi_prime(u: np.ndarray) -> np.ndarray:
    return 1.0 + np.sin(3.0 * np.pi * u) + 3.0 * np.pi * u * np.cos(3.0 * np.pi * u)


def _dtlz7_eval(X: np.ndarray, d: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    g = 1.0 + (9.0 / (d - 1)) * X[:, 2:].sum(axis=1)
    f3 = 3.0 * (1.0 + g) - _dtlz7_psi(X[:, 0]) - _dtlz7_psi(X[:, 1])
    return np.stack([X[:, 0], X[:, 1], f3], axis=1)


def _dtlz7_jac(X: np.ndarray, d: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    J = np.zeros((n, 3, d))
    J[:, 0, 0] = 1.0
    J[:, 1, 1] = 1.0
    J[:, 2, 0] = -_dtlz7_psi_prime(X[:, 0])
    J[:, 2, 1] = -_dtlz7_psi_prime(X[:, 1])
    J[:, 2, 2:] = 3.0 * 9.0 / (d - 1)
    return J


def _make_dtlz7(d: int = 30) -> Problem:
    return Problem(
        name="dtlz7",
        d=d,
        m=3,
        lower=np.zeros(d),
        upper=np.ones(d),
        evaluator=lambda x: _dtlz7_eval(x, d)[0],
        jacobian=lambda x: _dtlz7_jac(x, d)[0],
        batch_evaluator=lambda X: _dtlz7_eval(X, d),
        batch_jacobian=lambda X: _dtlz7_jac(X, d),
    )


_REGISTRY: dict[str, Callable[[], Problem]] = {
    "zdt1": lambda: _make_zdt("zdt1"),
    "zdt2": lambda: _make_zdt("zdt2"),
    "zdt3": lambda: _make_zdt("zdt3"),
    "dtlz7": lambda: _make_dtlz7(),
}

PROBLEM_NAMES = tuple(sorted(_REGISTRY))


def get_problem(name: str) -> Problem:
    """Look up a registered benchmark problem by name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise UnsupportedProblemError(
            f"unknown problem {name!r}; known: {', '.join(PROBLEM_NAMES)}"
        ) from None
    return factory()


# ---------------------------------------------------------------------------
# Reference fronts
# ---------------------------------------------------------------------------

def _zdt_curve_f2(variant: str, t: np.ndarray) -> np.ndarray:
    # Objective curve at g = 1 (all trailing coordinates zero).
    if variant == "zdt1":
        return 1.0 - np.sqrt(t)
    if variant == "zdt2":
        return 1.0 - t**2
    if variant == "zdt3":
        return 1.0 - np.sqrt(t) - t * np.sin(10.0 * np.pi * t)
    raise UnsupportedProblemError(variant)


def _segment_labels_1d(values: np.ndarray) -> np.ndarray:
    """Cluster sorted coordinate values by the gap rule.

    A new segment starts wherever the gap between consecutive distinct
    values reaches ``_SEGMENT_GAP_FACTOR`` times the median positive gap.
    """
    uniq, inverse = np.unique(values, return_inverse=True)
    if len(uniq) < 2:
        return np.zeros(len(values), dtype=int)
    gaps = np.diff(uniq)
    med = np.median(gaps[gaps > 0])
    breaks = gaps >= _SEGMENT_GAP_FACTOR * med
    uniq_labels = np.concatenate([[0], np.cumsum(breaks)])
    return uniq_labels[inverse]


def _subsample(points: np.ndarray, labels: np.ndarray, n: int):
    if len(points) <= n:
        return points, labels
    idx = (np.arange(n) * len(points)) // n
    return points[idx], labels[idx]


def _zdt3_dense_front() -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, 1.0, _ZDT3_ORACLE_GRID)
    f2 = _zdt_curve_f2("zdt3", t)
    # Dominance sweep: f1 strictly increasing, so a point is dominated iff
    # an earlier point has f2 <= its f2.
    prev_min = np.minimum.accumulate(f2)
    keep = np.empty(len(t), dtype=bool)
    keep[0] = True
    keep[1:] = f2[1:] < prev_min[:-1]
    pts = np.stack([t[keep], f2[keep]], axis=1)
    return pts, _segment_labels_1d(pts[:, 0])


def dtlz7_grid_front(grid: int) -> np.ndarray:
    """Exact nondominated subset of a grid sample of the g = 1 surface.

    Candidates are f = (u, v, 6 - psi(u) - psi(v)) over a ``grid x grid``
    lattice.  Because f1, f2 are the lattice coordinates, a point is
    dominated exactly when some other lattice point weakly below-left has
    f3 no larger; that is an exclusive 2-D prefix minimum, computed here
    in closed form rather than by an O(n^2) scan.
    """
    u = np.linspace(0.0, 1.0, grid)
    W = 6.0 - _dtlz7_psi(u)[:, None] - _dtlz7_psi(u)[None, :]
    M = np.minimum.accumulate(np.minimum.accumulate(W, axis=0), axis=1)
    best_above = np.full_like(W, np.inf)
    best_left = np.full_like(W, np.inf)
    best_above[1:, :] = M[:-1, :]
    best_left[:, 1:] = M[:, :-1]
    keep = W < np.minimum(best_above, best_left)
    ii, jj = np.nonzero(keep)
    return np.stack([u[ii], u[jj], W[ii, jj]], axis=1)


def _dtlz7_dense_front() -> tuple[np.ndarray, np.ndarray]:
    pts = dtlz7_grid_front(_DTLZ7_ORACLE_GRID)
    lab1 = _segment_labels_1d(pts[:, 0])
    lab2 = _segment_labels_1d(pts[:, 1])
    pair = lab1 * (lab2.max() + 1) + lab2
    # Relabel patches contiguously in order of first appearance.
    _, first = np.unique(pair, return_index=True)
    order = {pair[i]: rank for rank, i in enumerate(np.sort(first))}
    labels = np.array([order[p] for p in pair], dtype=int)
    return pts, labels


def _compute_front(name: str, n: int) -> ReferenceFront:
    if name in ("zdt1", "zdt2"):
        t = np.linspace(0.0, 1.0, n)
        pts = np.stack([t, _zdt_curve_f2(name, t)], axis=1)
        return ReferenceFront(pts, np.zeros(n, dtype=int))
    if name == "zdt3":
        pts, labels = _zdt3_dense_front()
    elif name == "dtlz7":
        pts, labels = _dtlz7_dense_front()
    else:
        raise UnsupportedProblemError(f"no reference front for {name!r}")
    pts, labels = _subsample(pts, labels, n)
    return ReferenceFront(pts, labels)


def _cache_dir(cache_dir) -> Path:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get("FRONTFLOW_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "frontflow"


def _front_path(base: Path, name: str, n: int) -> Path:
    return base / f"front_{name}_{n}.csv"


def save_front(front: ReferenceFront, path: Path, name: str, n: int) -> None:
    """Write a front cache file: header line, then f1,...,fm,label rows."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"{name},{n}\n")
        for row, lab in zip(front.points, front.segment_labels):
            fh.write(",".join("%.17g" % v for v in row) + f",{lab}\n")


def load_front(path: Path) -> ReferenceFront:
    with open(path) as fh:
        fh.readline()  # header: problem name and n
        rows = [line.strip().split(",") for line in fh if line.strip()]
    pts = np.array([[float(v) for v in r[:-1]] for r in rows])
    labels = np.array([int(r[-1]) for r in rows], dtype=int)
    return ReferenceFront(pts, labels)


def reference_front(problem: Problem | str, n: int, cache_dir=None) -> ReferenceFront:
    """Sampled true Pareto front with segment labels, cached on disk.

    ZDT1/ZDT2 fronts are the g = 1 curve on a uniform f1 grid; ZDT3 and
    DTLZ7 fronts come from nondominated filtering of a dense sample of the
    g = 1 surface, subsampled to ``n`` points.  The cache key is
    ``(problem, n)``.
    """
    name = problem if isinstance(problem, str) else problem.name
    if name not in _REGISTRY:
        raise UnsupportedProblemError(f"no reference front for {name!r}")
    base = _cache_dir(cache_dir)
    path = _front_path(base, name, n)
    if path.exists():
        return load_front(path)
    front = _compute_front(name, n)
    save_front(front, path, name, n)
    return front
