"""Run-configuration parsing and serialization.

Configs are flat key-value text with dotted section keys, a strict subset
of TOML: comments start with ``#``, strings are double-quoted, booleans
are ``true``/``false``, and lists hold numbers.  Stages are numbered
sections (``stage1.tau = 0.05``); when a config names no stages at all,
the shipped default schedule for the problem is used.  Unknown keys are
rejected, and every error names the offending key (with its line where
available).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .defaults import (
    DEFAULT_HV_REFERENCE,
    DEFAULT_PARTICLES,
    DEFAULT_SCHEDULES,
    STAGE_DEFAULTS,
)
from .dynamics import BASELINE_KINDS, Schedule, StageConfig
from .errors import ConfigError
from .metrics import MetricsConfig
from .potentials import PotentialConfig
from .problems import PROBLEM_NAMES

_KEY_RE = re.compile(r"^[A-Za-z0-9_]+(\.[A-Za-z0-9_]+)*$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_STAGE_RE = re.compile(r"^stage(\d+)$")

# key -> (type tag, default); None default means "required" or "computed".
_TOP_KEYS = {
    "problem": ("str", None),
    "seed": ("int", None),
    "particles": ("int", None),
    "snapshot_every": ("int", 1000),
    "output": ("str", None),
    "baseline": ("str", "none"),
    "plot": ("bool", True),
}

_METRICS_KEYS = {
    "hv_reference": ("floatlist", None),
    "mc_samples": ("int", 100_000),
    "tolerance": ("float", 0.05),
    "front_points": ("int", 1000),
}

_STAGE_KEYS = {
    "epochs": "int",
    "tau": "float",
    "alpha1": "float",
    "alpha2": "float",
    "beta": "float",
    "gamma": "float",
    "relax_c": "float",
    "repulsive_kind": "str",
    "repulsive_sigma": "float_or_auto",
    "kde_bandwidth": "float_or_auto",
    "coulomb_eps": "float",
    "dominance_front_only": "bool",
    "birth_death": "bool",
    "langevin": "bool",
}


@dataclass(frozen=True)
class RunConfig:
    """Fully-resolved description of one experiment run."""

    problem_name: str
    n_particles: int
    schedule: Schedule
    metrics: MetricsConfig
    output_dir: str
    baseline: str | None
    plot: bool


def _parse_value(raw: str, key: str, lineno: int):
    raw = raw.strip()
    if not raw:
        raise ConfigError(f"line {lineno}: key {key!r} has no value")
    if raw == "true":
        return True
    if raw == "false":
        return False
    if raw.startswith('"'):
        if not (raw.endswith('"') and len(raw) >= 2):
            raise ConfigError(f"line {lineno}: unterminated string for key {key!r}")
        return raw[1:-1]
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ConfigError(f"line {lineno}: unterminated list for key {key!r}")
        body = raw[1:-1].strip()
        if not body:
            return []
        try:
            return [float(tok.strip()) for tok in body.split(",")]
        except ValueError:
            raise ConfigError(f"line {lineno}: key {key!r} has a non-numeric list entry") from None
    if _INT_RE.match(raw):
        return int(raw)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"line {lineno}: cannot parse value {raw!r} for key {key!r} "
            "(strings must be double-quoted)"
        ) from None


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    for ch in line:
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            break
        out.append(ch)
    return "".join(out)


def _parse_lines(text: str) -> dict[str, tuple[object, int]]:
    entries: dict[str, tuple[object, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            raise ConfigError(
                f"line {lineno}: table headers are not supported; use dotted keys"
            )
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: malformed key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (_parse_value(value, key, lineno), lineno)
    return entries


def _coerce(kind: str, value, key: str, lineno) -> object:
    where = f"line {lineno}: " if lineno is not None else ""
    if kind == "bool":
        if isinstance(value, bool):
            return value
    elif kind == "int":
        if isinstance(value, bool):
            pass
        elif isinstance(value, int):
            return value
    elif kind == "float":
        if isinstance(value, bool):
            pass
        elif isinstance(value, (int, float)):
            return float(value)
    elif kind == "str":
        if isinstance(value, str):
            return value
    elif kind == "floatlist":
        if isinstance(value, list):
            return tuple(float(v) for v in value)
    elif kind == "float_or_auto":
        if isinstance(value, str):
            if value == "auto":
                return "auto"
            raise ConfigError(f"{where}key {key!r} expects a number or \"auto\", got {value!r}")
        if isinstance(value, bool):
            pass
        elif isinstance(value, (int, float)):
            return float(value)
    raise ConfigError(f"{where}key {key!r} expects {kind}, got {value!r}")


def _build_stage(values: dict) -> StageConfig:
    sigma = values["repulsive_sigma"]
    bandwidth = values["kde_bandwidth"]
    try:
        potential = PotentialConfig(
            alpha1=values["alpha1"],
            alpha2=values["alpha2"],
            beta=values["beta"],
            gamma=values["gamma"],
            dominance_relax_c=values["relax_c"],
            repulsive_kind=values["repulsive_kind"],
            repulsive_sigma=None if sigma == "auto" else sigma,
            kde_bandwidth=None if bandwidth == "auto" else bandwidth,
            coulomb_eps=values["coulomb_eps"],
            dominance_front_only=values["dominance_front_only"],
        )
        return StageConfig(
            potential=potential,
            tau=values["tau"],
            epochs=values["epochs"],
            birth_death_enabled=values["birth_death"],
            langevin_enabled=values["langevin"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _collect_stages(entries: dict) -> dict[int, dict]:
    staged: dict[int, dict] = {}
    for key, (value, lineno) in entries.items():
        head, dot, rest = key.partition(".")
        match = _STAGE_RE.match(head)
        if not match:
            continue
        idx = int(match.group(1))
        if not dot or rest not in _STAGE_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        staged.setdefault(idx, {})[rest] = _coerce(_STAGE_KEYS[rest], value, key, lineno)
    if staged:
        expected = list(range(1, len(staged) + 1))
        if sorted(staged) != expected:
            raise ConfigError(
                f"stage sections must be numbered 1..{len(staged)} without gaps; "
                f"got {sorted(staged)}"
            )
    return staged


def parse_config(text: str) -> RunConfig:
    """Parse a config document into a fully-defaulted :class:`RunConfig`."""
    entries = _parse_lines(text)

    top: dict[str, object] = {}
    metrics_raw: dict[str, object] = {}
    for key, (value, lineno) in entries.items():
        head, dot, rest = key.partition(".")
        if _STAGE_RE.match(head):
            continue  # handled by _collect_stages
        if head == "metrics" and dot:
            if rest not in _METRICS_KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            metrics_raw[rest] = _coerce(_METRICS_KEYS[rest][0], value, key, lineno)
        elif not dot and key in _TOP_KEYS:
            top[key] = _coerce(_TOP_KEYS[key][0], value, key, lineno)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    for required in ("problem", "seed"):
        if required not in top:
            raise ConfigError(f"missing required key {required!r}")
    problem = top["problem"]
    if problem not in PROBLEM_NAMES:
        raise ConfigError(f"key 'problem': unknown problem {problem!r}")

    baseline = top.get("baseline", "none")
    if baseline != "none" and baseline not in BASELINE_KINDS:
        raise ConfigError(
            f"key 'baseline': expected one of none, {', '.join(BASELINE_KINDS)}; got {baseline!r}"
        )

    staged = _collect_stages(entries)
    if staged:
        stage_dicts = [
            {**STAGE_DEFAULTS, **staged[i]} for i in sorted(staged)
        ]
    else:
        stage_dicts = [
            {**STAGE_DEFAULTS, **overrides} for overrides in DEFAULT_SCHEDULES[problem]
        ]
    stages = tuple(_build_stage(d) for d in stage_dicts)

    metrics_values = {k: default for k, (_, default) in _METRICS_KEYS.items()}
    metrics_values["hv_reference"] = DEFAULT_HV_REFERENCE.get(problem, ())
    metrics_values.update(metrics_raw)
    try:
        metrics = MetricsConfig(
            hv_reference=tuple(metrics_values["hv_reference"]),
            mc_samples=metrics_values["mc_samples"],
            tolerance=metrics_values["tolerance"],
            front_n=metrics_values["front_points"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    n_particles = top.get("particles", DEFAULT_PARTICLES.get(problem, 50))
    try:
        schedule = Schedule(
            stages=stages,
            seed=top["seed"],
            n_particles=n_particles,
            snapshot_every=top.get("snapshot_every", _TOP_KEYS["snapshot_every"][1]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    return RunConfig(
        problem_name=problem,
        n_particles=n_particles,
        schedule=schedule,
        metrics=metrics,
        output_dir=top.get("output", f"runs/{problem}"),
        baseline=None if baseline == "none" else baseline,
        plot=top.get("plot", True),
    )


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(repr(float(v)) for v in value) + "]"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """Render a RunConfig as config text; parsing it back gives an equal config."""
    lines = [
        f"problem = {_format_value(cfg.problem_name)}",
        f"seed = {cfg.schedule.seed}",
        f"particles = {cfg.n_particles}",
        f"snapshot_every = {cfg.schedule.snapshot_every}",
        f"output = {_format_value(cfg.output_dir)}",
        f"baseline = {_format_value(cfg.baseline if cfg.baseline else 'none')}",
        f"plot = {_format_value(cfg.plot)}",
        f"metrics.hv_reference = {_format_value(cfg.metrics.hv_reference)}",
        f"metrics.mc_samples = {cfg.metrics.mc_samples}",
        f"metrics.tolerance = {_format_value(cfg.metrics.tolerance)}",
        f"metrics.front_points = {cfg.metrics.front_n}",
    ]
    for i, stage in enumerate(cfg.schedule.stages, start=1):
        pot = stage.potential
        sigma = "auto" if pot.repulsive_sigma is None else pot.repulsive_sigma
        bandwidth = "auto" if pot.kde_bandwidth is None else pot.kde_bandwidth
        lines.extend(
            [
                f"stage{i}.epochs = {stage.epochs}",
                f"stage{i}.tau = {_format_value(stage.tau)}",
                f"stage{i}.alpha1 = {_format_value(pot.alpha1)}",
                f"stage{i}.alpha2 = {_format_value(pot.alpha2)}",
                f"stage{i}.beta = {_format_value(pot.beta)}",
                f"stage{i}.gamma = {_format_value(pot.gamma)}",
                f"stage{i}.relax_c = {_format_value(pot.dominance_relax_c)}",
                f"stage{i}.repulsive_kind = {_format_value(pot.repulsive_kind)}",
                f"stage{i}.repulsive_sigma = {_format_value(sigma)}",
                f"stage{i}.kde_bandwidth = {_format_value(bandwidth)}",
                f"stage{i}.coulomb_eps = {_format_value(pot.coulomb_eps)}",
                f"stage{i}.dominance_front_only = {_format_value(pot.dominance_front_only)}",
                f"stage{i}.birth_death = {_format_value(stage.birth_death_enabled)}",
                f"stage{i}.langevin = {_format_value(stage.langevin_enabled)}",
            ]
        )
    return "\n".join(lines) + "\n"
