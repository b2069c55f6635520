"""Shipped per-benchmark defaults: schedules, reference points, sizes.

The stage templates follow the same arc on every benchmark: an explore
stage (no dominance pressure, strong repulsion, noticeable noise), a
balance stage (dominance ramps up, noise shrinks), and a purge stage
(dominance dominates, noise off) that lets the selection channel remove
the remaining dominated particles.  Values are expressed in the config
vocabulary; anything omitted falls back to ``STAGE_DEFAULTS``.
"""

STAGE_DEFAULTS = {
    "epochs": 1000,
    "tau": 0.05,
    "alpha1": 1.0,
    "alpha2": 0.0,
    "beta": 0.0,
    "gamma": 0.0,
    "relax_c": 1e-3,
    "repulsive_kind": "gaussian",
    "repulsive_sigma": "auto",
    "kde_bandwidth": "auto",
    "coulomb_eps": 1e-8,
    "dominance_front_only": False,
    "birth_death": True,
    "langevin": True,
}

DEFAULT_SCHEDULES = {
    "zdt1": (
        {"epochs": 1500, "tau": 0.05, "alpha2": 0.0, "beta": 0.6, "gamma": 1e-3},
        {"epochs": 2000, "tau": 0.05, "alpha2": 2.0, "beta": 0.3, "gamma": 1e-4},
        {"epochs": 1500, "tau": 0.05, "alpha2": 10.0, "beta": 0.1, "gamma": 0.0},
    ),
    "zdt2": (
        {"epochs": 1500, "tau": 0.05, "alpha2": 0.0, "beta": 0.6, "gamma": 1e-3},
        {"epochs": 2000, "tau": 0.05, "alpha2": 2.0, "beta": 0.3, "gamma": 1e-4},
        {"epochs": 1500, "tau": 0.05, "alpha2": 10.0, "beta": 0.1, "gamma": 0.0},
    ),
    "zdt3": (
        {"epochs": 1500, "tau": 0.05, "alpha2": 0.0, "beta": 0.6, "gamma": 1e-3},
        {"epochs": 2000, "tau": 0.05, "alpha2": 2.0, "beta": 0.3, "gamma": 1e-4},
        {"epochs": 1500, "tau": 0.05, "alpha2": 10.0, "beta": 0.1, "gamma": 0.0},
    ),
    "dtlz7": (
        {"epochs": 900, "tau": 0.05, "alpha2": 0.0, "beta": 0.6, "gamma": 1e-3},
        {"epochs": 1200, "tau": 0.05, "alpha2": 2.0, "beta": 0.3, "gamma": 1e-4},
        {"epochs": 900, "tau": 0.05, "alpha2": 10.0, "beta": 0.1, "gamma": 0.0},
    ),
}

# Hypervolume reference points chosen to bound the attainable fronts with
# margin; harness configuration, not benchmark definitions.
DEFAULT_HV_REFERENCE = {
    "zdt1": (1.1, 1.1),
    "zdt2": (1.1, 1.1),
    "zdt3": (1.1, 1.1),
    "dtlz7": (1.1, 1.1, 6.5),
}

DEFAULT_PARTICLES = {
    "zdt1": 50,
    "zdt2": 50,
    "zdt3": 50,
    "dtlz7": 200,
}


def default_metrics_config(name: str, m: int | None = None):
    """MetricsConfig for a named benchmark (empty reference for unknowns)."""
    from .metrics import MetricsConfig

    ref = DEFAULT_HV_REFERENCE.get(name, ())
    return MetricsConfig(hv_reference=ref)
