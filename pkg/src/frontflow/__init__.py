"""Interacting-particle multi-objective optimization.

A population of particles is flowed toward the Pareto front by
alternating two channels: a noisy descent step along the gradient of a
composite energy (Pareto-stationarity term, dominance penalty, pairwise
repulsion, entropy), and a birth-death selection step that duplicates
particles with below-average energy contribution and removes those above
average.  The selection channel is what relocates particles stuck at
merely-local Pareto points, which matters on disconnected fronts.
"""

__version__ = "0.1.0"

from .config import RunConfig, parse_config, serialize_config
from .dynamics import (
    BASELINE_KINDS,
    BirthDeathOutcome,
    RunRecord,
    Schedule,
    Snapshot,
    StageConfig,
    birth_death_rates,
    birth_death_step,
    langevin_step,
    run_baseline,
    run_particle_wfr,
)
from .errors import (
    ConfigError,
    DegeneratePopulationError,
    FrontflowError,
    NumericError,
    OutOfDomainError,
    RunAborted,
    UnsupportedDimensionError,
    UnsupportedProblemError,
)
from .metrics import (
    MetricsConfig,
    front_distance,
    hypervolume_exact,
    hypervolume_mc,
    nondominated_filter,
)
from .minnorm import (
    MinNormBatch,
    MinNormSolution,
    min_norm_batch,
    min_norm_point,
    objective_term_drift,
)
from .potentials import (
    Population,
    PotentialConfig,
    build_population,
    dominance_drift,
    dominance_kernel,
    dominance_potential,
    empirical_energy,
    frechet_derivative,
    kde_log_density,
    repulsive_drift,
    repulsive_kernel,
)
from .problems import (
    Problem,
    ReferenceFront,
    boundary_singular,
    evaluate,
    evaluate_batch,
    get_problem,
    jacobian,
    jacobian_batch,
    project_feasible,
    reference_front,
    sample_feasible,
)
from .cli import execute_run
from .plotting import render_scatter
from .rng import substream
