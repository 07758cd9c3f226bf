"""Experiment harness: scenario presets, parameter sweeps, replication
aggregation, and deterministic CSV emission.

A preset encodes the benchmark's parameter formulas, not fixed values:
shrinking the network-size range keeps every derived parameter correct.
Sweep rows are keyed and sorted before writing, so reruns with the same
seed are byte-identical.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import overhead_upper_bound
from .core import (
    BackoffParams,
    NetworkConfig,
    ParameterError,
    RngStream,
    recommended_defaults,
)
from .engine import run
from .policies import Policy, PolicyKind

DESK_SCALE_N = (2, 5, 10, 20, 30)
DEFAULT_HORIZON = 100_000

SWEEPABLE = ("n_sources", "alpha", "beta", "b_offset")

CSV_COLUMNS = (
    "scenario", "policy", "n_sources", "sweep_param", "sweep_value",
    "normalized_weighted_avg_aoi", "aoi_stderr",
    "normalized_avg_aoii", "aoii_stderr",
    "collision_rate", "avg_overhead_minislots", "overhead_bound_minislots",
    "seed",
)


class ConfigError(Exception):
    """Raised for malformed experiment configuration."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment table."""

    scenario: str
    policies: tuple[PolicyKind, ...]
    n_sources: int
    weights: "str | tuple[float, ...]" = "ones"
    horizon: int = DEFAULT_HORIZON
    horizon_unit: str = "deliveries"
    base_seed: int = 20260808
    replications: int = 1
    markov_q: float | None = None
    # None fields fall back to the benchmark formulas for the point's N.
    alpha: float | None = None
    beta: float | None = None
    b_offset: int | None = None
    minislots_per_update: int = 10_000
    delta_scale: float = 0.01
    aoii_defaults: bool = False
    log_base: float = 10.0
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] | None = None
    output_path: str | None = None

    def __post_init__(self):
        if not self.policies:
            raise ConfigError("at least one policy is required")
        if (self.sweep_param is None) != (self.sweep_values is None):
            raise ConfigError("sweep_param and sweep_values go together")
        if self.sweep_param is not None:
            if self.sweep_param not in SWEEPABLE:
                raise ConfigError(f"cannot sweep {self.sweep_param!r}; "
                                  f"choose one of {SWEEPABLE}")
            if len(self.sweep_values) == 0:
                raise ConfigError("sweep_values is empty")
        if self.horizon_unit not in ("frames", "deliveries"):
            raise ConfigError(f"unknown horizon_unit {self.horizon_unit!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")


@dataclass(frozen=True)
class SweepPoint:
    sweep_value: float | None
    config: NetworkConfig
    params: BackoffParams


def _build_weights(spec_weights, n: int) -> tuple[float, ...]:
    if spec_weights == "ones":
        return tuple(1.0 for _ in range(n))
    if spec_weights == "sqrt":
        return tuple(math.sqrt(k) for k in range(1, n + 1))
    weights = tuple(float(w) for w in spec_weights)
    if len(weights) != n:
        raise ConfigError(f"need {n} weights, got {len(weights)}")
    return weights


def resolve_points(spec: ExperimentSpec) -> list[SweepPoint]:
    """Materialize (config, params) for each sweep point, sorted by the
    swept value; a sweep-less spec yields a single point."""
    values: Sequence[float | None]
    if spec.sweep_param is None:
        values = [None]
    else:
        values = sorted(spec.sweep_values)

    points = []
    for value in values:
        n = spec.n_sources
        if spec.sweep_param == "n_sources":
            n = int(value)
        weights = _build_weights(spec.weights, n)
        base = recommended_defaults(n, weights, aoii=spec.aoii_defaults,
                                    log_base=spec.log_base)
        params = BackoffParams(
            alpha=spec.alpha if spec.alpha is not None else base.alpha,
            beta=spec.beta if spec.beta is not None else base.beta,
            b_offset=spec.b_offset if spec.b_offset is not None else base.b_offset,
            minislots_per_update=spec.minislots_per_update,
            delta_scale=spec.delta_scale,
        )
        if spec.sweep_param == "alpha":
            params = replace(params, alpha=float(value))
        elif spec.sweep_param == "beta":
            params = replace(params, beta=float(value))
        elif spec.sweep_param == "b_offset":
            params = replace(params, b_offset=int(value))
        config = NetworkConfig(n_sources=n, weights=weights,
                               horizon_frames=spec.horizon,
                               seed=spec.base_seed)
        points.append(SweepPoint(sweep_value=value, config=config, params=params))
    return points


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_AOI_POLICIES = (PolicyKind.MAX_WEIGHT, PolicyKind.STATIONARY_RANDOMIZED,
                 PolicyKind.IDEALIZED_FRESH_CSMA,
                 PolicyKind.NEAR_REALISTIC_FRESH_CSMA)
_AOII_POLICIES = (PolicyKind.MAX_WEIGHT, PolicyKind.IDEALIZED_FRESH_CSMA_AOII,
                  PolicyKind.NEAR_REALISTIC_FRESH_CSMA_AOII)

PRESET_NAMES = (
    "fig3_symmetric", "fig4_sqrt_weights", "fig5_alpha_sweep",
    "fig6_beta_collisions", "fig7_B_collisions",
    "fig8_beta_overhead", "fig9_B_overhead",
    "fig10_aoii", "fig11_aoii_aoi",
)


def preset(name: str, *, seed: int = 20260808, horizon: int | None = None,
           replications: int = 1, n_values: Sequence[int] | None = None,
           log_base: float = 10.0,
           output_path: str | None = None) -> ExperimentSpec:
    """Desk-scale experiment spec for a named benchmark scenario.

    Network-size sweeps default to DESK_SCALE_N; the parameter formulas
    are evaluated per point, so any size range is faithful.  Scenarios
    that measure collision or overhead rates run a fixed number of
    frames (a non-delivering configuration would never finish a
    delivery-based horizon); the AoI/AoII scenarios run to a fixed
    number of delivered updates.
    """
    n_sweep = tuple(float(v) for v in (n_values or DESK_SCALE_N))
    common = dict(base_seed=seed, replications=replications,
                  log_base=log_base, output_path=output_path)

    if name == "fig3_symmetric":
        return ExperimentSpec(scenario=name, policies=_AOI_POLICIES,
                              n_sources=10, weights="ones",
                              horizon=horizon or DEFAULT_HORIZON,
                              horizon_unit="deliveries",
                              sweep_param="n_sources", sweep_values=n_sweep,
                              **common)
    if name == "fig4_sqrt_weights":
        return ExperimentSpec(scenario=name, policies=_AOI_POLICIES,
                              n_sources=10, weights="sqrt",
                              horizon=horizon or DEFAULT_HORIZON,
                              horizon_unit="deliveries",
                              sweep_param="n_sources", sweep_values=n_sweep,
                              **common)
    if name == "fig5_alpha_sweep":
        return ExperimentSpec(scenario=name,
                              policies=(PolicyKind.MAX_WEIGHT,
                                        PolicyKind.IDEALIZED_FRESH_CSMA,
                                        PolicyKind.NEAR_REALISTIC_FRESH_CSMA),
                              n_sources=10, weights="ones",
                              horizon=horizon or DEFAULT_HORIZON,
                              horizon_unit="deliveries",
                              sweep_param="alpha",
                              sweep_values=(1.01, 1.05, 1.1, 1.5, 2.0, 5.0, 9.0),
                              **common)
    if name in ("fig6_beta_collisions", "fig8_beta_overhead"):
        return ExperimentSpec(scenario=name,
                              policies=(PolicyKind.NEAR_REALISTIC_FRESH_CSMA,),
                              n_sources=10, weights="ones",
                              horizon=horizon or DEFAULT_HORIZON,
                              horizon_unit="frames",
                              sweep_param="beta",
                              sweep_values=(1.01, 1.05, 1.1, 1.2, 1.5, 2.0),
                              **common)
    if name in ("fig7_B_collisions", "fig9_B_overhead"):
        return ExperimentSpec(scenario=name,
                              policies=(PolicyKind.NEAR_REALISTIC_FRESH_CSMA,),
                              n_sources=10, weights="ones",
                              horizon=horizon or DEFAULT_HORIZON,
                              horizon_unit="frames",
                              sweep_param="b_offset",
                              sweep_values=(0, 5, 10, 50, 100, 250, 260, 300),
                              **common)
    if name in ("fig10_aoii", "fig11_aoii_aoi"):
        return ExperimentSpec(scenario=name, policies=_AOII_POLICIES,
                              n_sources=10, weights="ones",
                              horizon=horizon or DEFAULT_HORIZON,
                              horizon_unit="deliveries",
                              markov_q=0.05, aoii_defaults=True,
                              sweep_param="n_sources", sweep_values=n_sweep,
                              **common)
    raise ConfigError(f"unknown preset {name!r}; choose one of {PRESET_NAMES}")


# ---------------------------------------------------------------------------
# Running and aggregating
# ---------------------------------------------------------------------------

def _kind_index(kind: PolicyKind) -> int:
    return list(PolicyKind).index(kind)


def run_replication(spec: ExperimentSpec, point: SweepPoint, kind: PolicyKind,
                    rep: int):
    """One simulation with the canonical substream layout.

    Streams hang off (base_seed, replication): the engine owns path
    (rep, 0) and each policy owns (rep, 1, kind), so results never shift
    when other policies or replications are added.
    """
    engine_stream = RngStream(spec.base_seed, (rep, 0))
    policy_stream = RngStream(spec.base_seed, (rep, 1, _kind_index(kind)))
    policy = Policy(kind, point.config, point.params, stream=policy_stream)
    return run(point.config, policy, point.params, engine_stream,
               markov_q=spec.markov_q, horizon_unit=spec.horizon_unit)


def _mean_stderr(values: list[float]) -> tuple[float, float | None]:
    mean = float(np.mean(values))
    if len(values) < 2:
        return mean, None
    return mean, float(np.std(values, ddof=1) / math.sqrt(len(values)))


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    """Execute every (sweep point, policy, replication) and aggregate.

    Returns one row per (sweep point, policy), sorted by sweep value
    with policies in listed order.  Rows carry replication means, their
    standard errors (blank for a single replication), and the
    closed-form overhead bound evaluated at the simulated average ages
    for minislot-model runs.
    """
    rows = []
    for point in resolve_points(spec):
        for kind in spec.policies:
            aois, aoiis, collisions, overheads, bounds = [], [], [], [], []
            for rep in range(spec.replications):
                result = run_replication(spec, point, kind, rep)
                aois.append(result.normalized_weighted_avg_aoi)
                if result.normalized_avg_aoii is not None:
                    aoiis.append(result.normalized_avg_aoii)
                collisions.append(result.collision_rate)
                overheads.append(result.avg_overhead_minislots)
                if kind.discrete_timers:
                    avg_ages = np.asarray(result.per_source_avg_aoi)
                    bounds.append(overhead_upper_bound(
                        avg_ages, point.config.weights_array, point.params,
                        minislots=True))
            aoi_mean, aoi_se = _mean_stderr(aois)
            aoii_mean, aoii_se = _mean_stderr(aoiis) if aoiis else (None, None)
            rows.append({
                "scenario": spec.scenario,
                "policy": kind.value,
                "n_sources": point.config.n_sources,
                "sweep_param": spec.sweep_param or "",
                "sweep_value": point.sweep_value,
                "normalized_weighted_avg_aoi": aoi_mean,
                "aoi_stderr": aoi_se,
                "normalized_avg_aoii": aoii_mean,
                "aoii_stderr": aoii_se,
                "collision_rate": float(np.mean(collisions)),
                "avg_overhead_minislots": float(np.mean(overheads)),
                "overhead_bound_minislots": (float(np.mean(bounds))
                                             if bounds else None),
                "seed": spec.base_seed,
            })
    return rows


def _format_cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows: list[dict], path: "str | Path") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(rows), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Flat config files
# ---------------------------------------------------------------------------

_CONFIG_KEYS = (
    "scenario", "policies", "n_sources", "weights", "horizon", "horizon_unit",
    "seed", "replications", "alpha", "beta", "b_offset",
    "minislots_per_update", "delta_scale", "markov_q",
    "sweep_param", "sweep_values", "output",
)


def parse_config(text: str) -> ExperimentSpec:
    """Parse a flat `key = value` experiment file.

    Lines starting with '#' are comments; unknown keys are errors, not
    warnings, so typos cannot silently change an experiment.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()

    if "policies" not in raw:
        raise ConfigError("config needs a 'policies' key")
    if "n_sources" not in raw:
        raise ConfigError("config needs an 'n_sources' key")

    try:
        policies = tuple(PolicyKind(p.strip())
                         for p in raw["policies"].split(","))
    except ValueError as exc:
        raise ConfigError(f"unknown policy name: {exc}") from None

    def _get(key, conv, default):
        return conv(raw[key]) if key in raw else default

    weights: "str | tuple[float, ...]" = raw.get("weights", "ones")
    if weights not in ("ones", "sqrt"):
        weights = tuple(float(w) for w in str(weights).split(","))

    sweep_values = None
    if "sweep_values" in raw:
        sweep_values = tuple(float(v) for v in raw["sweep_values"].split(","))

    try:
        return ExperimentSpec(
            scenario=raw.get("scenario", "custom"),
            policies=policies,
            n_sources=int(raw["n_sources"]),
            weights=weights,
            horizon=_get("horizon", int, DEFAULT_HORIZON),
            horizon_unit=raw.get("horizon_unit", "deliveries"),
            base_seed=_get("seed", int, 20260808),
            replications=_get("replications", int, 1),
            markov_q=_get("markov_q", float, None),
            alpha=_get("alpha", float, None),
            beta=_get("beta", float, None),
            b_offset=_get("b_offset", int, None),
            minislots_per_update=_get("minislots_per_update", int, 10_000),
            delta_scale=_get("delta_scale", float, 0.01),
            sweep_param=raw.get("sweep_param"),
            sweep_values=sweep_values,
            output_path=raw.get("output"),
        )
    except (ValueError, ParameterError) as exc:
        raise ConfigError(str(exc)) from None
