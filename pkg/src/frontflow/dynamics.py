"""Population driver: alternating noisy transport and birth-death selection.

Each epoch applies (a) a noisy descent step per particle along the energy
drift with projection back onto the feasible box, then (b) a sequential
birth-death pass in which particles with above-average first-variation
values are replaced and below-average ones duplicated, keeping the
population size constant (mass compensation).  Multi-stage schedules ramp
the dominance penalty up and the exploration terms down.

All randomness flows through per-(epoch, channel) counter-based
substreams, so a run is bit-reproducible for a fixed seed regardless of
how the per-particle work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import RunAborted
from .metrics import MetricsConfig, hypervolume_exact
from .potentials import (
    Population,
    PotentialConfig,
    build_population,
    empirical_energy,
    frechet_derivative_all,
    langevin_drift_all,
    resolve_auto,
)
from .problems import Problem, project_feasible, reference_front, sample_feasible
from .rng import (
    CHANNEL_BIRTH_DEATH,
    CHANNEL_INIT,
    CHANNEL_NOISE,
    CHANNEL_WEIGHTS,
    substream,
)

BASELINE_KINDS = ("weighted_sum", "langevin_only", "mgda_only")


@dataclass(frozen=True)
class StageConfig:
    """Hyperparameters for one schedule stage."""

    potential: PotentialConfig
    tau: float
    epochs: int
    birth_death_enabled: bool = True
    langevin_enabled: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass(frozen=True)
class Schedule:
    """Stage list plus run-level settings."""

    stages: tuple
    seed: int
    n_particles: int
    snapshot_every: int = 0

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError("schedule needs at least one stage")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")

    @property
    def total_epochs(self) -> int:
        return sum(s.epochs for s in self.stages)


@dataclass
class BirthDeathOutcome:
    """Event log of one birth-death pass."""

    rates: np.ndarray
    duplicated: list  # (source slot, overwritten slot)
    removed: list     # (removed slot, replacement source slot)

    @property
    def events(self) -> int:
        return len(self.duplicated) + len(self.removed)


@dataclass
class Snapshot:
    epoch: int
    positions: np.ndarray
    objectives: np.ndarray


@dataclass
class RunRecord:
    """Per-epoch metrics, periodic snapshots, and the final population."""

    problem_name: str
    n_particles: int
    seed: int
    epochs: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    energy: np.ndarray = field(default_factory=lambda: np.empty(0))
    hv: np.ndarray = field(default_factory=lambda: np.empty(0))
    gd: np.ndarray = field(default_factory=lambda: np.empty(0))
    igd: np.ndarray = field(default_factory=lambda: np.empty(0))
    births: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    deaths: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    snapshots: list = field(default_factory=list)
    stage_potentials: list = field(default_factory=list)
    held_particles: list = field(default_factory=list)  # (epoch, index)
    final: Population | None = None


# ---------------------------------------------------------------------------
# Elementary steps
# ---------------------------------------------------------------------------

def langevin_step(
    problem: Problem,
    pop: Population,
    stage: StageConfig,
    rng: np.random.Generator,
) -> tuple[Population, np.ndarray]:
    """One noisy descent step for every particle, with box projection.

    Particles whose drift turns out non-finite are held in place instead
    of propagating NaNs; their indices are returned alongside the new
    population.  Caches are refreshed afterwards.
    """
    cfg = stage.potential
    drift = langevin_drift_all(pop, cfg)
    step = -(stage.tau / 2.0) * drift
    if cfg.gamma > 0.0:
        step += math.sqrt(cfg.gamma * stage.tau) * rng.standard_normal(pop.positions.shape)
    held = ~np.isfinite(step).all(axis=1)
    new_x = np.where(held[:, None], pop.positions, pop.positions + step)
    new_x = project_feasible(problem, new_x)
    return build_population(problem, new_x), np.flatnonzero(held)


def birth_death_rates(pop: Population, stage: StageConfig) -> np.ndarray:
    """Centered first-variation values; always sums to ~0."""
    values = frechet_derivative_all(pop, stage.potential)
    return values - float(np.sort(values, kind="stable").sum()) / len(values)


def birth_death_step(
    pop: Population,
    rates: np.ndarray,
    tau: float,
    rng: np.random.Generator,
) -> tuple[Population, BirthDeathOutcome]:
    """Sequential duplicate/remove pass with mass compensation.

    Slot k fires with probability ``min(1, |1 - exp(-rate_k tau / 2)|)``.
    A negative rate duplicates slot k onto a uniformly drawn slot k'
    (compensating removal); otherwise slot k is overwritten by slot k'
    (compensating duplication).  Overwrites land in place, so later
    iterations see earlier ones; caches are copied, never recomputed.
    """
    n = pop.n
    rates = np.asarray(rates, dtype=float)
    partners = rng.integers(0, n, size=n)
    etas = rng.random(n)
    prob = np.minimum(1.0, np.abs(1.0 - np.exp(-rates * tau / 2.0)))
    new_pop = pop.clone()
    duplicated = []
    removed = []
    for k in np.flatnonzero(etas < prob):
        kp = int(partners[k])
        if rates[k] < 0.0:
            new_pop.copy_row(src=int(k), dst=kp)
            duplicated.append((int(k), kp))
        else:
            new_pop.copy_row(src=kp, dst=int(k))
            removed.append((int(k), kp))
    return new_pop, BirthDeathOutcome(rates=rates.copy(), duplicated=duplicated, removed=removed)


# ---------------------------------------------------------------------------
# Auto kernel parameters
# ---------------------------------------------------------------------------

def _median_pairwise(values: np.ndarray) -> float:
    if len(values) < 2:
        return 1.0
    d = pdist(values)
    med = float(np.median(d))
    return med if med > 0.0 else 1.0


def _silverman_bandwidth(positions: np.ndarray) -> float:
    n, d = positions.shape
    spread = float(positions.std(axis=0).mean())
    h = 1.06 * spread * n ** (-1.0 / (d + 4))
    return h if h > 0.0 else 1e-12


def _resolve_stage(stage: StageConfig, pop: Population, sigma0: float) -> StageConfig:
    cfg = stage.potential
    if cfg.resolved():
        return stage
    cfg = resolve_auto(cfg, sigma=sigma0, bandwidth=_silverman_bandwidth(pop.positions))
    return replace(stage, potential=cfg)


# ---------------------------------------------------------------------------
# Run drivers
# ---------------------------------------------------------------------------

class _MetricsRecorder:
    def __init__(self, problem, metrics_cfg, reference, record):
        self.record = record
        self.cfg = metrics_cfg
        self.reference = reference
        self.ref_point = None if metrics_cfg is None else np.asarray(metrics_cfg.hv_reference)
        self.front_tree = None
        if reference is not None and len(reference.points):
            self.front_tree = cKDTree(reference.points)
        self.rows: list[tuple] = []

    def measure(self, epoch: int, pop: Population, cfg: PotentialConfig, births: int, deaths: int):
        energy = empirical_energy(pop, cfg)
        hv = math.nan
        if self.ref_point is not None and len(self.ref_point) == pop.m and pop.m in (2, 3):
            hv = hypervolume_exact(pop.objectives, self.ref_point)
        gd = igd = math.nan
        if self.front_tree is not None:
            gd = float(self.front_tree.query(pop.objectives)[0].mean())
            igd = float(cKDTree(pop.objectives).query(self.reference.points)[0].mean())
        self.rows.append((epoch, energy, hv, gd, igd, births, deaths))

    def finalize(self):
        if self.rows:
            cols = list(zip(*self.rows))
            self.record.epochs = np.array(cols[0], dtype=int)
            self.record.energy = np.array(cols[1])
            self.record.hv = np.array(cols[2])
            self.record.gd = np.array(cols[3])
            self.record.igd = np.array(cols[4])
            self.record.births = np.array(cols[5], dtype=int)
            self.record.deaths = np.array(cols[6], dtype=int)


def _default_metrics(problem: Problem) -> MetricsConfig:
    from .defaults import default_metrics_config

    return default_metrics_config(problem.name)


def _load_reference(problem: Problem, metrics_cfg: MetricsConfig):
    try:
        return reference_front(problem, metrics_cfg.front_n)
    except Exception:
        return None  # custom problems have no known front; distances stay NaN


def run_particle_wfr(
    problem: Problem,
    schedule: Schedule,
    metrics_cfg: MetricsConfig | None = None,
    reference=None,
    metrics_every: int = 1,
) -> RunRecord:
    """Run the full method under a multi-stage schedule.

    Initializes the population uniformly in the box, then alternates the
    transport and selection steps epoch by epoch, recording the empirical
    energy, hypervolume, distance metrics, and event counts.  Fully
    deterministic for a fixed seed.
    """
    if metrics_cfg is None:
        metrics_cfg = _default_metrics(problem)
    if reference is None and metrics_every:
        reference = _load_reference(problem, metrics_cfg)

    record = RunRecord(problem.name, schedule.n_particles, schedule.seed)
    recorder = _MetricsRecorder(problem, metrics_cfg, reference, record)

    positions = sample_feasible(problem, schedule.n_particles, substream(schedule.seed, 0, CHANNEL_INIT))
    pop = build_population(problem, positions)
    record.snapshots.append(Snapshot(0, pop.positions.copy(), pop.objectives.copy()))
    sigma0 = _median_pairwise(pop.objectives)

    epoch = 0
    try:
        for stage in schedule.stages:
            stage = _resolve_stage(stage, pop, sigma0)
            record.stage_potentials.append(stage.potential)
            for _ in range(stage.epochs):
                epoch += 1
                births = deaths = 0
                if stage.langevin_enabled:
                    pop, held = langevin_step(
                        problem, pop, stage, substream(schedule.seed, epoch, CHANNEL_NOISE)
                    )
                    record.held_particles.extend((epoch, int(i)) for i in held)
                if stage.birth_death_enabled:
                    rates = birth_death_rates(pop, stage)
                    pop, outcome = birth_death_step(
                        pop, rates, stage.tau, substream(schedule.seed, epoch, CHANNEL_BIRTH_DEATH)
                    )
                    births = len(outcome.duplicated)
                    deaths = len(outcome.removed)
                if metrics_every and epoch % metrics_every == 0:
                    recorder.measure(epoch, pop, stage.potential, births, deaths)
                if schedule.snapshot_every and epoch % schedule.snapshot_every == 0:
                    record.snapshots.append(Snapshot(epoch, pop.positions.copy(), pop.objectives.copy()))
    except Exception as exc:
        record.snapshots.append(Snapshot(epoch, pop.positions.copy(), pop.objectives.copy()))
        recorder.finalize()
        record.final = pop
        raise RunAborted(epoch, record, exc) from exc

    if not record.snapshots or record.snapshots[-1].epoch != epoch:
        record.snapshots.append(Snapshot(epoch, pop.positions.copy(), pop.objectives.copy()))
    recorder.finalize()
    record.final = pop
    return record


def _weighted_sum_run(
    problem: Problem,
    schedule: Schedule,
    metrics_cfg: MetricsConfig,
    reference,
    metrics_every: int,
) -> RunRecord:
    from .problems import jacobian_batch

    record = RunRecord(problem.name, schedule.n_particles, schedule.seed)
    recorder = _MetricsRecorder(problem, metrics_cfg, reference, record)

    positions = sample_feasible(problem, schedule.n_particles, substream(schedule.seed, 0, CHANNEL_INIT))
    weights = substream(schedule.seed, 0, CHANNEL_WEIGHTS).dirichlet(
        np.ones(problem.m), size=schedule.n_particles
    )
    pop = build_population(problem, positions)
    record.snapshots.append(Snapshot(0, pop.positions.copy(), pop.objectives.copy()))
    sigma0 = _median_pairwise(pop.objectives)

    epoch = 0
    for stage in schedule.stages:
        stage = _resolve_stage(stage, pop, sigma0)
        record.stage_potentials.append(stage.potential)
        for _ in range(stage.epochs):
            epoch += 1
            jacs = jacobian_batch(problem, pop.positions)
            drift = np.einsum("nm,nmd->nd", weights, jacs)
            new_x = project_feasible(problem, pop.positions - (stage.tau / 2.0) * drift)
            pop = build_population(problem, new_x)
            if metrics_every and epoch % metrics_every == 0:
                recorder.measure(epoch, pop, stage.potential, 0, 0)
            if schedule.snapshot_every and epoch % schedule.snapshot_every == 0:
                record.snapshots.append(Snapshot(epoch, pop.positions.copy(), pop.objectives.copy()))
    if not record.snapshots or record.snapshots[-1].epoch != epoch:
        record.snapshots.append(Snapshot(epoch, pop.positions.copy(), pop.objectives.copy()))
    recorder.finalize()
    record.final = pop
    return record


def run_baseline(
    problem: Problem,
    kind: str,
    schedule: Schedule,
    metrics_cfg: MetricsConfig | None = None,
    reference=None,
    metrics_every: int = 1,
) -> RunRecord:
    """Ablation baselines sharing the main driver's seed and schedule shape.

    ``weighted_sum``: plain descent of a fixed random convex combination
    of objectives per particle.  ``langevin_only``: the full method with
    the selection channel disabled.  ``mgda_only``: pure minimal-norm
    descent (no noise, no pairwise terms, no selection).
    """
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {BASELINE_KINDS}")
    if metrics_cfg is None:
        metrics_cfg = _default_metrics(problem)
    if reference is None and metrics_every:
        reference = _load_reference(problem, metrics_cfg)

    if kind == "weighted_sum":
        return _weighted_sum_run(problem, schedule, metrics_cfg, reference, metrics_every)

    if kind == "langevin_only":
        stages = tuple(replace(s, birth_death_enabled=False) for s in schedule.stages)
    else:  # mgda_only
        stages = tuple(
            replace(
                s,
                birth_death_enabled=False,
                potential=replace(s.potential, alpha1=1.0, alpha2=0.0, beta=0.0, gamma=0.0),
            )
            for s in schedule.stages
        )
    ablated = replace(schedule, stages=stages)
    return run_particle_wfr(problem, ablated, metrics_cfg, reference, metrics_every)
