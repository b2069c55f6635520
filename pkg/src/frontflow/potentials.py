"""Energy terms over a particle population.

The composite energy combines four ingredients, weighted by the config:

* a Pareto-stationarity term (squared norm of the minimal-norm gradient
  combination per particle),
* a dominance penalty that is positive exactly for particles dominated by
  others (objective-space kernel, optionally relaxed by a small ``c`` to
  break exact ties),
* a symmetric pairwise repulsion in objective space (Gaussian or Coulomb),
* an entropy term whose per-particle value is estimated by kernel density
  in position space.

Pairwise sums exclude the particle itself and are normalized by ``N - 1``.
Per-particle reductions sort their terms before summing, so every scalar
here is bit-identical under any relabeling of the population.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegeneratePopulationError
from .minnorm import MinNormBatch, min_norm_batch

_REPULSIVE_KINDS = ("gaussian", "coulomb")

# Floor for the KDE mixture before taking the log, applied when every
# kernel term underflows.
_KDE_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class PotentialConfig:
    """Weights and kernel parameters of the composite energy.

    ``repulsive_sigma`` / ``kde_bandwidth`` may be ``None``, meaning
    "resolve from the population when the run starts" (median pairwise
    objective distance, Silverman-style bandwidth respectively).
    """

    alpha1: float = 1.0
    alpha2: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    dominance_relax_c: float = 1e-3
    repulsive_kind: str = "gaussian"
    repulsive_sigma: float | None = None
    kde_bandwidth: float | None = None
    coulomb_eps: float = 1e-8
    dominance_front_only: bool = False

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta", "gamma", "dominance_relax_c", "coulomb_eps"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and nonnegative, got {v!r}")
        if self.repulsive_kind not in _REPULSIVE_KINDS:
            raise ValueError(f"repulsive_kind must be one of {_REPULSIVE_KINDS}")
        for name in ("repulsive_sigma", "kde_bandwidth"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise ValueError(f"{name} must be positive, got {v!r}")

    def resolved(self) -> bool:
        return self.repulsive_sigma is not None and self.kde_bandwidth is not None


@dataclass
class Population:
    """Particle state: positions plus cached objective data.

    ``positions`` is (N, d); ``objectives`` (N, m) and ``jacobians``
    (N, m, d) cache the problem evaluations; ``minnorm`` caches the
    per-particle minimal-norm solutions.
    """

    positions: np.ndarray
    objectives: np.ndarray
    jacobians: np.ndarray
    minnorm: MinNormBatch

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    @property
    def m(self) -> int:
        return self.objectives.shape[1]

    def clone(self) -> "Population":
        return Population(
            positions=self.positions.copy(),
            objectives=self.objectives.copy(),
            jacobians=self.jacobians.copy(),
            minnorm=MinNormBatch(
                alpha=self.minnorm.alpha.copy(),
                g_dagger=self.minnorm.g_dagger.copy(),
                norm_sq=self.minnorm.norm_sq.copy(),
                iterations=self.minnorm.iterations.copy(),
                converged=self.minnorm.converged.copy(),
            ),
        )

    def copy_row(self, src: int, dst: int) -> None:
        """Overwrite slot ``dst`` with the cached state of slot ``src``."""
        if src == dst:
            return
        self.positions[dst] = self.positions[src]
        self.objectives[dst] = self.objectives[src]
        self.jacobians[dst] = self.jacobians[src]
        self.minnorm.alpha[dst] = self.minnorm.alpha[src]
        self.minnorm.g_dagger[dst] = self.minnorm.g_dagger[src]
        self.minnorm.norm_sq[dst] = self.minnorm.norm_sq[src]
        self.minnorm.iterations[dst] = self.minnorm.iterations[src]
        self.minnorm.converged[dst] = self.minnorm.converged[src]


def build_population(problem, positions: np.ndarray, tol: float = 1e-10, max_iter: int = 200) -> Population:
    """Evaluate all caches for the given positions."""
    from .problems import evaluate_batch, jacobian_batch

    positions = np.asarray(positions, dtype=float)
    objectives = evaluate_batch(problem, positions)
    jacobians = jacobian_batch(problem, positions)
    return Population(
        positions=positions,
        objectives=objectives,
        jacobians=jacobians,
        minnorm=min_norm_batch(jacobians, tol=tol, max_iter=max_iter),
    )


# ---------------------------------------------------------------------------
# Order-insensitive reductions (sort before summing): particle relabeling
# permutes the summands but not the sorted sequence, so sums are
# bit-reproducible as functions of the value multiset.
# ---------------------------------------------------------------------------

def _stable_sum(values: np.ndarray) -> float:
    return float(np.sort(values, kind="stable").sum())


def _stable_row_sums(matrix: np.ndarray) -> np.ndarray:
    return np.sort(matrix, axis=1).sum(axis=1)


def _stable_mean(values: np.ndarray) -> float:
    return _stable_sum(values) / len(values)


def _offdiag(matrix: np.ndarray) -> np.ndarray:
    """Drop the diagonal of an (N, N) matrix, giving (N, N-1)."""
    n = matrix.shape[0]
    return matrix[~np.eye(n, dtype=bool)].reshape(n, n - 1)


# ---------------------------------------------------------------------------
# Dominance kernel and potential
# ---------------------------------------------------------------------------

def dominance_kernel(fx: np.ndarray, fy: np.ndarray, c: float = 0.0) -> float:
    """Product kernel positive iff ``fy`` (weakly, with c > 0) dominates ``fx``.

    Computes ``prod_i (max(0, fx_i - fy_i) + c * [fx_i - fy_i >= 0])``.
    With ``c = 0`` the factor for objective i is the plain hinge, so the
    kernel is nonzero exactly when fx is strictly worse in every
    objective.
    """
    diff = np.asarray(fx, dtype=float) - np.asarray(fy, dtype=float)
    factors = np.maximum(diff, 0.0)
    if c:
        factors = factors + c * (diff >= 0.0)
    return float(np.prod(factors))


def _dominance_matrix(F: np.ndarray, c: float) -> np.ndarray:
    """(N, N) matrix D[k, j] = dominance_kernel(F[k], F[j], c)."""
    diff = F[:, None, :] - F[None, :, :]
    factors = np.maximum(diff, 0.0)
    if c:
        factors = factors + c * (diff >= 0.0)
    return factors.prod(axis=2)


def _partner_mask(pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """(N, N) bool mask of admissible partners (self always excluded)."""
    n = pop.n
    mask = ~np.eye(n, dtype=bool)
    if cfg.dominance_front_only:
        from .metrics import nondominated_filter

        front = np.zeros(n, dtype=bool)
        front[nondominated_filter(pop.objectives)] = True
        mask &= front[None, :]
    return mask


def dominance_potential_all(pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """Mean dominance-kernel value against the population, per particle."""
    if pop.n < 2:
        raise DegeneratePopulationError("dominance potential needs N >= 2")
    D = _dominance_matrix(pop.objectives, cfg.dominance_relax_c)
    mask = _partner_mask(pop, cfg)
    counts = mask.sum(axis=1)
    sums = np.sort(np.where(mask, D, 0.0), axis=1).sum(axis=1)
    return np.divide(sums, counts, out=np.zeros(pop.n), where=counts > 0)


def dominance_potential(k: int, pop: Population, cfg: PotentialConfig) -> float:
    """Empirical dominance potential of particle ``k``.

    The population itself (minus particle k) stands in for the front
    measure: ``(1 / (N - 1)) * sum_{k' != k} D(f_k, f_k')``.
    """
    return float(dominance_potential_all(pop, cfg)[k])


def _hinge_partials(diff: np.ndarray) -> np.ndarray:
    """Per-objective partials of the c = 0 product kernel.

    ``diff`` is (..., m); returns (..., m) where entry i is
    ``prod_{j != i} max(0, diff_j) * [diff_i > 0]`` (subgradient 0 at
    ties).
    """
    relu = np.maximum(diff, 0.0)
    m = diff.shape[-1]
    out = np.empty_like(relu)
    for i in range(m):
        others = np.prod(np.delete(relu, i, axis=-1), axis=-1)
        out[..., i] = others * (diff[..., i] > 0.0)
    return out


def dominance_drift_all(pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """Position-space gradient of the (unrelaxed) dominance potential."""
    if pop.n < 2:
        raise DegeneratePopulationError("dominance drift needs N >= 2")
    diff = pop.objectives[:, None, :] - pop.objectives[None, :, :]
    partials = _hinge_partials(diff)
    mask = _partner_mask(pop, cfg)
    partials = np.where(mask[:, :, None], partials, 0.0)
    counts = np.maximum(mask.sum(axis=1), 1)
    weights = partials.sum(axis=1) / counts[:, None]
    return np.einsum("km,kmd->kd", weights, pop.jacobians)


def dominance_drift(k: int, pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """Gradient of the dominance potential at particle ``k``.

    Uses the unrelaxed (c = 0) kernel: the relaxation exists to break ties
    in the selection channel and is not differentiable.
    """
    return dominance_drift_all(pop, cfg)[k]


# ---------------------------------------------------------------------------
# Repulsive kernel and drift
# ---------------------------------------------------------------------------

def repulsive_kernel(fx: np.ndarray, fy: np.ndarray, cfg: PotentialConfig) -> float:
    """Symmetric objective-space repulsion: Gaussian or guarded Coulomb."""
    delta = np.asarray(fx, dtype=float) - np.asarray(fy, dtype=float)
    r2 = float(delta @ delta)
    if cfg.repulsive_kind == "gaussian":
        return float(np.exp(-r2 / cfg.repulsive_sigma**2))
    return 1.0 / max(np.sqrt(r2), cfg.coulomb_eps)


def _repulsive_matrix(F: np.ndarray, cfg: PotentialConfig) -> np.ndarray:
    delta = F[:, None, :] - F[None, :, :]
    r2 = np.einsum("ijm,ijm->ij", delta, delta)
    if cfg.repulsive_kind == "gaussian":
        return np.exp(-r2 / cfg.repulsive_sigma**2)
    return 1.0 / np.maximum(np.sqrt(r2), cfg.coulomb_eps)


def repulsive_potential_all(pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """Mean repulsive-kernel value against the rest of the population."""
    if pop.n < 2:
        raise DegeneratePopulationError("repulsive potential needs N >= 2")
    R = _repulsive_matrix(pop.objectives, cfg)
    return _stable_row_sums(_offdiag(R)) / (pop.n - 1)


def repulsive_drift_all(pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """Position-space gradient of the pairwise repulsion at each particle."""
    if pop.n < 2:
        raise DegeneratePopulationError("repulsive drift needs N >= 2")
    F = pop.objectives
    delta = F[:, None, :] - F[None, :, :]
    r2 = np.einsum("ijm,ijm->ij", delta, delta)
    if cfg.repulsive_kind == "gaussian":
        R = np.exp(-r2 / cfg.repulsive_sigma**2)
        dR = (-2.0 / cfg.repulsive_sigma**2) * delta * R[:, :, None]
    else:
        r = np.maximum(np.sqrt(r2), cfg.coulomb_eps)
        dR = -delta / (r**3)[:, :, None]
    n = pop.n
    dR[np.arange(n), np.arange(n), :] = 0.0
    grad_f = dR.sum(axis=1) / (n - 1)
    return np.einsum("km,kmd->kd", grad_f, pop.jacobians)


def repulsive_drift(k: int, pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """Gradient of the mean repulsion at particle ``k`` (chain rule through f)."""
    return repulsive_drift_all(pop, cfg)[k]


# ---------------------------------------------------------------------------
# KDE entropy surrogate
# ---------------------------------------------------------------------------

def _kde_terms(x: np.ndarray, positions: np.ndarray, h: float) -> np.ndarray:
    delta = (x[None, :] - positions) / h
    return np.exp(-np.einsum("nd,nd->n", delta, delta))


def kde_log_density(x: np.ndarray, pop: Population, cfg: PotentialConfig) -> float:
    """Log of the Gaussian-kernel density estimate at ``x``.

    Uses the unnormalized kernel ``exp(-||u||^2)``; the missing constant is
    additive in the log and cancels inside the centered birth-death rate.
    When every term underflows the value is floored at ``log(tiny)``.
    """
    x = np.asarray(x, dtype=float)
    terms = _kde_terms(x, pop.positions, cfg.kde_bandwidth)
    mix = _stable_sum(terms) / pop.n
    return float(np.log(max(mix, _KDE_FLOOR)))


def kde_log_density_all(pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """KDE log density at every particle position."""
    X = pop.positions
    sq = np.einsum("nd,nd->n", X, X)
    r2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    K = np.exp(-r2 / cfg.kde_bandwidth**2)
    mix = np.maximum(_stable_row_sums(K) / pop.n, _KDE_FLOOR)
    return np.log(mix)


# ---------------------------------------------------------------------------
# Fréchet derivative and empirical energy
# ---------------------------------------------------------------------------

def frechet_derivative_all(pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """Per-particle value of the energy's first variation.

    Weighted sum of squared minimal-gradient norm, dominance potential,
    mean repulsion, and ``log density + 1``; terms with zero weight are
    skipped entirely.
    """
    out = np.zeros(pop.n)
    if cfg.alpha1:
        out += cfg.alpha1 * pop.minnorm.norm_sq
    if cfg.alpha2:
        out += cfg.alpha2 * dominance_potential_all(pop, cfg)
    if cfg.beta:
        out += cfg.beta * repulsive_potential_all(pop, cfg)
    if cfg.gamma:
        out += cfg.gamma * (kde_log_density_all(pop, cfg) + 1.0)
    return out


def frechet_derivative(k: int, pop: Population, cfg: PotentialConfig) -> float:
    """First-variation value at particle ``k`` (uncentered)."""
    return float(frechet_derivative_all(pop, cfg)[k])


def empirical_energy(pop: Population, cfg: PotentialConfig) -> float:
    """Particle estimate of the composite energy, used as a decay diagnostic."""
    total = 0.0
    if cfg.alpha1:
        total += cfg.alpha1 * _stable_mean(pop.minnorm.norm_sq)
    if cfg.alpha2:
        total += cfg.alpha2 * _stable_mean(dominance_potential_all(pop, cfg))
    if cfg.beta:
        R = _offdiag(_repulsive_matrix(pop.objectives, cfg))
        total += 0.5 * cfg.beta * _stable_mean(R.ravel())
    if cfg.gamma:
        total += cfg.gamma * _stable_mean(kde_log_density_all(pop, cfg))
    return float(total)


def langevin_drift_all(pop: Population, cfg: PotentialConfig) -> np.ndarray:
    """Total deterministic drift of the transport step, per particle."""
    drift = np.zeros_like(pop.positions)
    if cfg.alpha1:
        drift += cfg.alpha1 * 2.0 * pop.minnorm.g_dagger
    if cfg.alpha2:
        drift += cfg.alpha2 * dominance_drift_all(pop, cfg)
    if cfg.beta:
        drift += cfg.beta * repulsive_drift_all(pop, cfg)
    return drift


def resolve_auto(cfg: PotentialConfig, sigma: float | None = None, bandwidth: float | None = None) -> PotentialConfig:
    """Fill in any auto kernel parameters with concrete values."""
    updates = {}
    if cfg.repulsive_sigma is None:
        if sigma is None:
            raise ValueError("repulsive_sigma is auto but no value supplied")
        updates["repulsive_sigma"] = float(sigma)
    if cfg.kde_bandwidth is None:
        if bandwidth is None:
            raise ValueError("kde_bandwidth is auto but no value supplied")
        updates["kde_bandwidth"] = float(bandwidth)
    return replace(cfg, **updates) if updates else cfg
