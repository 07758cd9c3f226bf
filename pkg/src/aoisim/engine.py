"""Frame-by-frame network evolution under a chosen scheduling rule.

Two channel models share one loop.  In the idealized slotted model a
frame is one unit of time and continuous timers never tie, so every
frame delivers.  In the near-realistic model timers count whole
minislots: the frame lasts 1 + D/M time units where D is the winning
timer, equal minima collide and waste the frame, and the idle head of
the frame is charged as backoff overhead.  Markov two-state sources can
be layered on either model to drive mismatch-age (AoII) scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .core import (
    AgeState,
    BackoffParams,
    FrameOutcome,
    NetworkConfig,
    ParameterError,
    RngStream,
)
from .policies import Policy, PolicyKind, TimerVector

# Substream ids under the root (seed,) stream.
ENGINE_SUBSTREAM = 0
POLICY_SUBSTREAM = 1


@dataclass
class MarkovNetState:
    """Symmetric two-state Markov sources and the monitor's view of them.

    aoii counts frames since the estimate last matched the true state;
    it is zero exactly while they agree and grows by one per frame of
    sustained mismatch.
    """

    q: np.ndarray
    x_true: np.ndarray
    x_est: np.ndarray
    aoii: np.ndarray

    @classmethod
    def initial(cls, q) -> "MarkovNetState":
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any((q < 0) | (q > 1)):
            raise ParameterError(f"transition probabilities must be in [0,1], got {q}")
        n = len(q)
        return cls(q=q,
                   x_true=np.zeros(n, dtype=np.int8),
                   x_est=np.zeros(n, dtype=np.int8),
                   aoii=np.zeros(n, dtype=np.int64))


@dataclass
class MetricsAccumulator:
    """Running sums for time-averaged AoI/AoII, collisions and overhead."""

    n: int
    frame_count: int = 0
    collision_count: int = 0
    delivery_count: int = 0
    overhead_sum_minislots: int = 0
    elapsed_time: float = 0.0
    frame_age_sum: np.ndarray = field(init=False)
    clock_age_integral: np.ndarray = field(init=False)
    aoii_sum: np.ndarray = field(init=False)
    delivery_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.frame_age_sum = np.zeros(self.n, dtype=float)
        self.clock_age_integral = np.zeros(self.n, dtype=float)
        self.aoii_sum = np.zeros(self.n, dtype=float)
        self.delivery_counts = np.zeros(self.n, dtype=np.int64)


@dataclass(frozen=True)
class SimulationResult:
    """Aggregate outcome of one run.

    per_source_avg_aoi is the reported age average: the plain frame mean
    in the idealized model, the duration-weighted mean of the wall-clock
    age sampled at frame starts in the near-realistic model
    (per_source_avg_frame_aoi carries the frame-count mean in both).
    normalized_weighted_avg_aoi is (1/N) sum_i w_i * avg_i.
    """

    policy: PolicyKind
    normalized_weighted_avg_aoi: float
    per_source_avg_aoi: tuple[float, ...]
    per_source_avg_frame_aoi: tuple[float, ...]
    normalized_avg_aoii: float | None
    collision_rate: float
    avg_overhead_minislots: float
    frame_count: int
    delivery_count: int
    elapsed_time: float
    config: NetworkConfig
    params: BackoffParams | None
    seed: int


# ---------------------------------------------------------------------------
# Single-frame transitions
# ---------------------------------------------------------------------------

def _resolve_timers(timers: TimerVector) -> tuple[np.ndarray, float]:
    key = timers.comparison_key()
    min_key = key.min()
    winners = np.flatnonzero(key == min_key)
    jmin = int(winners[0])
    return winners, float(timers.values[jmin])


def _apply_frame_ages(ages: AgeState, delivered: int | None) -> None:
    ages.frame_age += 1
    if delivered is not None:
        ages.frame_age[delivered] = 1


def step_idealized(ages: AgeState, policy: Policy,
                   aoii: np.ndarray | None = None) -> FrameOutcome:
    """Advance one unit-duration frame; updates ages in place.

    Continuous timers tie only through floating-point coincidence; if
    that ever happens the frame is counted as a collision rather than
    silently picking a winner.
    """
    if policy.kind.centralized:
        j = policy.decide(ages, aoii)
        outcome = FrameOutcome(winners=frozenset((j,)), min_timer=0.0,
                               collided=False, delivered=j, frame_duration=1.0)
    else:
        if policy.kind.discrete_timers:
            raise ParameterError(f"{policy.kind.value} emits minislot timers; "
                                 "use step_near_realistic")
        timers = policy.timers(ages, aoii)
        winners, min_timer = _resolve_timers(timers)
        collided = len(winners) > 1
        outcome = FrameOutcome(
            winners=frozenset(int(i) for i in winners),
            min_timer=min_timer,
            collided=collided,
            delivered=None if collided else int(winners[0]),
            frame_duration=1.0,
        )
    _apply_frame_ages(ages, outcome.delivered)
    return outcome


def step_near_realistic(ages: AgeState, policy: Policy, params: BackoffParams,
                        aoii: np.ndarray | None = None) -> FrameOutcome:
    """Advance one minislot-model frame; updates ages in place.

    The frame spends D idle minislots (the minimum timer) before a full
    M-minislot transmission, so it lasts 1 + D/M time units whether or
    not it collides: colliding sources still transmit complete updates
    that the base station cannot decode.
    """
    if not policy.kind.discrete_timers:
        raise ParameterError(f"{policy.kind.value} does not emit minislot timers")
    timers = policy.timers(ages, aoii)
    winners, min_timer = _resolve_timers(timers)
    d = int(min_timer)
    duration = 1.0 + d / params.minislots_per_update
    collided = len(winners) > 1
    delivered = None if collided else int(winners[0])
    outcome = FrameOutcome(
        winners=frozenset(int(i) for i in winners),
        min_timer=d,
        collided=collided,
        delivered=delivered,
        frame_duration=duration,
    )
    _apply_frame_ages(ages, delivered)
    ages.clock_age += duration
    if delivered is not None:
        # The delivered update was generated at the frame start, so the
        # monitor's information is exactly one frame-duration old.
        ages.clock_age[delivered] = duration
    return outcome


def step_markov(markov: MarkovNetState, ages: AgeState, policy: Policy,
                params: BackoffParams | None, stream: RngStream,
                model: str = "idealized") -> FrameOutcome:
    """One frame with Markov source dynamics layered on the channel model.

    Order within the frame: sources flip, contention resolves (the
    policy sees the mismatch ages as of the previous frame end), a
    unique winner refreshes the monitor's estimate with its
    post-transition state, then the mismatch counters update.
    """
    n = len(markov.q)
    flips = stream.uniforms(n) < markov.q
    markov.x_true = np.where(flips, 1 - markov.x_true, markov.x_true).astype(np.int8)

    if model == "idealized":
        outcome = step_idealized(ages, policy, aoii=markov.aoii)
    elif model == "near_realistic":
        outcome = step_near_realistic(ages, policy, params, aoii=markov.aoii)
    else:
        raise ParameterError(f"unknown model {model!r}")

    if outcome.delivered is not None:
        markov.x_est[outcome.delivered] = markov.x_true[outcome.delivered]
    matched = markov.x_true == markov.x_est
    markov.aoii = np.where(matched, 0, markov.aoii + 1)
    return outcome


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------

def make_policy(kind: PolicyKind, config: NetworkConfig,
                params: BackoffParams | None = None) -> Policy:
    """Policy bound to the canonical substream layout for config.seed."""
    root = RngStream(config.seed)
    return Policy(kind, config, params,
                  stream=root.child(POLICY_SUBSTREAM, _kind_index(kind)))


def _kind_index(kind: PolicyKind) -> int:
    return list(PolicyKind).index(kind)


def _trace_line(frame: int, outcome: FrameOutcome) -> str:
    winners = ",".join(str(i) for i in sorted(outcome.winners))
    delivered = "-" if outcome.delivered is None else str(outcome.delivered)
    return (f"frame={frame} min_timer={outcome.min_timer:g} winners={winners} "
            f"collided={int(outcome.collided)} delivered={delivered} "
            f"duration={outcome.frame_duration:.6f}")


def run(config: NetworkConfig, policy: Policy,
        params: BackoffParams | None = None,
        stream: RngStream | None = None, *,
        markov_q: "float | np.ndarray | None" = None,
        horizon_unit: str = "frames",
        max_frames: int | None = None,
        trace: IO[str] | None = None) -> SimulationResult:
    """Simulate config.horizon_frames frames (or delivered updates) and
    return time-averaged metrics.

    horizon_unit="deliveries" runs until config.horizon_frames updates
    have been delivered, so collision-prone configurations are compared
    at equal useful work; a frame cap (default 100x the target) turns a
    non-delivering configuration into an error instead of a hang.
    """
    if horizon_unit not in ("frames", "deliveries"):
        raise ParameterError(f"unknown horizon_unit {horizon_unit!r}")
    if params is None:
        params = policy.params
    near_realistic = policy.kind.discrete_timers
    if near_realistic and params is None:
        raise ParameterError("near-realistic model needs backoff parameters")
    if policy.kind.freshness == "aoii" and markov_q is None:
        raise ParameterError(f"{policy.kind.value} needs Markov sources "
                             "(markov_q) to compute mismatch ages")
    if stream is None:
        stream = RngStream(config.seed, (ENGINE_SUBSTREAM,))

    n = config.n_sources
    ages = AgeState.initial(n)
    markov = None
    if markov_q is not None:
        q = np.broadcast_to(np.atleast_1d(np.asarray(markov_q, dtype=float)),
                            (n,)).copy()
        markov = MarkovNetState.initial(q)
    metrics = MetricsAccumulator(n)

    target = config.horizon_frames
    if horizon_unit == "deliveries":
        cap = max_frames if max_frames is not None else 100 * target
    else:
        cap = max_frames if max_frames is not None else target

    while True:
        if horizon_unit == "frames":
            if metrics.frame_count >= target:
                break
        else:
            if metrics.delivery_count >= target:
                break
            if metrics.frame_count >= cap:
                raise RuntimeError(
                    f"frame cap {cap} reached with only {metrics.delivery_count} "
                    f"of {target} deliveries; the configuration is not delivering")

        # Ages entering the frame feed the frame-mean AoI.
        metrics.frame_age_sum += ages.frame_age
        clock_before = ages.clock_age.copy() if near_realistic else None

        if markov is not None:
            outcome = step_markov(markov, ages, policy, params, stream,
                                  model="near_realistic" if near_realistic
                                  else "idealized")
        elif near_realistic:
            outcome = step_near_realistic(ages, policy, params)
        else:
            outcome = step_idealized(ages, policy)

        d = outcome.frame_duration
        metrics.frame_count += 1
        metrics.elapsed_time += d
        if outcome.collided:
            metrics.collision_count += 1
        if outcome.delivered is not None:
            metrics.delivery_count += 1
            metrics.delivery_counts[outcome.delivered] += 1
        if near_realistic:
            metrics.overhead_sum_minislots += int(outcome.min_timer)
            # Duration-weighted age sampled at the frame start; under
            # unit-length frames this reduces exactly to the frame mean,
            # so both channel models report commensurable averages.
            metrics.clock_age_integral += clock_before * d
        if markov is not None:
            metrics.aoii_sum += markov.aoii
        if trace is not None:
            trace.write(_trace_line(metrics.frame_count, outcome) + "\n")

    frames = metrics.frame_count
    frame_mean = metrics.frame_age_sum / frames
    if near_realistic:
        per_source = metrics.clock_age_integral / metrics.elapsed_time
    else:
        per_source = frame_mean
    w = config.weights_array
    normalized = float((w * per_source).sum() / n)
    aoii_mean = (float(metrics.aoii_sum.mean() / frames)
                 if markov is not None else None)

    return SimulationResult(
        policy=policy.kind,
        normalized_weighted_avg_aoi=normalized,
        per_source_avg_aoi=tuple(float(x) for x in per_source),
        per_source_avg_frame_aoi=tuple(float(x) for x in frame_mean),
        normalized_avg_aoii=aoii_mean,
        collision_rate=metrics.collision_count / frames,
        avg_overhead_minislots=metrics.overhead_sum_minislots / frames,
        frame_count=frames,
        delivery_count=metrics.delivery_count,
        elapsed_time=metrics.elapsed_time,
        config=config,
        params=params,
        seed=config.seed,
    )
