"""Shared domain types, seeded randomness, and scalar timer kernels.

Everything rate-related is kept in log domain: a contention rate of the
form alpha**(w * age**2) overflows 64-bit floats as soon as the exponent
times ln(alpha) passes ~700, so rates travel as log-rates and timers are
compared through their logarithms.  Linear-domain values exist only for
reporting and for cross-checking small cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Exponents above this cannot be materialized as linear-domain rates.
SAFE_LINEAR_LOG_RATE = 700.0

_SEED_MASK = (1 << 64) - 1


class ParameterError(ValueError):
    """Raised for structurally invalid configuration or call parameters."""


# ---------------------------------------------------------------------------
# Seeded randomness
# ---------------------------------------------------------------------------

class RngStream:
    """A reproducible pseudorandom substream.

    A stream is identified by a 64-bit seed plus a path of non-negative
    integer substream ids.  Identical (seed, path, call sequence) always
    reproduces identical draws bit-for-bit.  Every draw is funnelled
    through a single buffered uniform source so the call sequence is the
    only thing that matters.
    """

    _BUFFER = 4096

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= seed <= _SEED_MASK:
            raise ParameterError(f"seed must fit in 64 bits, got {seed}")
        if any(p < 0 for p in path):
            raise ParameterError(f"substream ids must be non-negative, got {path}")
        self.seed = seed
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence((seed, *self.path))
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self._buf = np.empty(0)
        self._pos = 0

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path})"

    def child(self, *ids: int) -> "RngStream":
        """Derive an independent substream; never perturbs this stream."""
        return RngStream(self.seed, self.path + tuple(int(i) for i in ids))

    def uniform(self) -> float:
        """One draw from Uniform[0, 1); served from an internal block cache."""
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(self._BUFFER)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def uniforms(self, n: int) -> np.ndarray:
        """Bulk Uniform[0, 1) draws, bypassing the scalar cache.

        Deterministic for a fixed call sequence, like every draw here,
        but interleaving scalar and bulk draws maps onto the underlying
        generator differently than scalar draws alone would.
        """
        return self._gen.random(n)

    def unit_exponentials(self, n: int) -> np.ndarray:
        """Bulk inverse-CDF draws from exp(1); strictly positive."""
        u = self._gen.random(n)
        while np.any(u == 0.0):
            zeros = u == 0.0
            u[zeros] = self._gen.random(int(zeros.sum()))
        return -np.log1p(-u)

    def integer(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ParameterError(f"integer() needs n >= 1, got {n}")
        return min(int(self.uniform() * n), n - 1)

    def unit_exponential(self) -> float:
        """Inverse-CDF draw from exp(1); strictly positive."""
        u = self.uniform()
        while u == 0.0:
            u = self.uniform()
        return -math.log1p(-u)


# ---------------------------------------------------------------------------
# Configuration types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetworkConfig:
    """Static description of one single-hop network run.

    theorem_exact restricts weights to positive integers, which the
    per-frame match and drift guarantees assume; the default leaves
    weights free (sqrt-of-index weights are a standard benchmark).
    """

    n_sources: int
    weights: tuple[float, ...]
    horizon_frames: int
    seed: int
    theorem_exact: bool = False

    def __post_init__(self):
        if self.n_sources < 1:
            raise ParameterError(f"n_sources must be >= 1, got {self.n_sources}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != self.n_sources:
            raise ParameterError(
                f"need {self.n_sources} weights, got {len(self.weights)}")
        if any(not (w > 0) for w in self.weights):
            raise ParameterError(f"weights must be positive, got {self.weights}")
        if self.horizon_frames < 1:
            raise ParameterError(f"horizon_frames must be >= 1, got {self.horizon_frames}")
        if not 0 <= self.seed <= _SEED_MASK:
            raise ParameterError(f"seed must fit in 64 bits, got {self.seed}")
        if self.theorem_exact:
            bad = [w for w in self.weights if w != int(w)]
            if bad:
                raise ParameterError(
                    f"theorem-exactness mode requires integer weights, got {bad}")

    @property
    def weights_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True)
class BackoffParams:
    """Contention-protocol parameters.

    alpha drives the state-dependent rate alpha**exponent, beta and
    b_offset control the log-scale minislot discretization, and
    minislots_per_update (M) is the update transmission length in
    minislots.  delta_scale only rescales the continuous idealized
    timers; it cannot change which timer is smallest, and is carried for
    protocol fidelity and trace output.
    """

    alpha: float
    beta: float = 1.1
    b_offset: int = 250
    minislots_per_update: int = 10_000
    delta_scale: float = 0.01

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ParameterError(f"alpha must be > 1, got {self.alpha}")
        if not self.beta > 1.0:
            raise ParameterError(f"beta must be > 1, got {self.beta}")
        if self.b_offset < 0:
            raise ParameterError(f"b_offset must be >= 0, got {self.b_offset}")
        if self.minislots_per_update < 1:
            raise ParameterError(
                f"minislots_per_update must be >= 1, got {self.minislots_per_update}")
        if not 0.0 < self.delta_scale <= 1.0:
            raise ParameterError(
                f"delta_scale must be in (0, 1], got {self.delta_scale}")

    @property
    def ln_alpha(self) -> float:
        return math.log(self.alpha)

    @property
    def ln_beta(self) -> float:
        return math.log(self.beta)


# ---------------------------------------------------------------------------
# Dynamic state
# ---------------------------------------------------------------------------

@dataclass
class AgeState:
    """Per-source ages.

    frame_age counts whole frames since the last delivered update and is
    what the scheduling rules consume (always >= 1: a delivery resets to
    1, never 0).  clock_age measures wall-clock time units and is only
    advanced by the minislot-level model, where frames have variable
    duration.
    """

    frame_age: np.ndarray
    clock_age: np.ndarray

    @classmethod
    def initial(cls, n_sources: int) -> "AgeState":
        # All sources start one frame-equivalent old, so runs are
        # comparable across policies.
        return cls(frame_age=np.ones(n_sources, dtype=np.int64),
                   clock_age=np.ones(n_sources, dtype=float))

    @property
    def n(self) -> int:
        return len(self.frame_age)

    def copy(self) -> "AgeState":
        return AgeState(self.frame_age.copy(), self.clock_age.copy())


@dataclass(frozen=True)
class FrameOutcome:
    """What happened in one contention frame."""

    winners: frozenset[int]
    min_timer: float
    collided: bool
    delivered: int | None
    frame_duration: float

    def __post_init__(self):
        if self.collided != (len(self.winners) >= 2):
            raise ParameterError("collided must hold exactly when >= 2 winners")
        if (self.delivered is not None) != (len(self.winners) == 1):
            raise ParameterError("delivered is set exactly when there is one winner")


# ---------------------------------------------------------------------------
# Log-domain rate construction
# ---------------------------------------------------------------------------

def aoi_log_rates(frame_age: np.ndarray, weights: np.ndarray, alpha: float) -> np.ndarray:
    """log of alpha**(w_i * age_i**2) per source."""
    age = np.asarray(frame_age, dtype=float)
    return np.asarray(weights, dtype=float) * age * age * math.log(alpha)


def aoii_log_rates(aoii: np.ndarray, alpha: float) -> np.ndarray:
    """log of alpha**aoii_i per source; mismatch ages enter unweighted."""
    return np.asarray(aoii, dtype=float) * math.log(alpha)


def linear_rates(log_rates: np.ndarray, max_log: float = SAFE_LINEAR_LOG_RATE) -> np.ndarray:
    """Materialize linear-domain rates; refuses exponents that overflow."""
    log_rates = np.asarray(log_rates, dtype=float)
    if np.any(log_rates > max_log):
        raise ParameterError(
            f"log-rate {log_rates.max():.1f} exceeds the linear-domain safety "
            f"threshold {max_log:.0f}; stay in log domain")
    return np.exp(log_rates)


def log_sum_exp(values: np.ndarray) -> float:
    """Stable log of a sum of exponentials."""
    values = np.asarray(values, dtype=float)
    m = float(values.max())
    return m + math.log(float(np.exp(values - m).sum()))


# ---------------------------------------------------------------------------
# Scalar timer kernels
# ---------------------------------------------------------------------------

def sample_exponential(stream: RngStream, log_rate: float) -> float:
    """Draw Z ~ exp(rate) where ln(rate) = log_rate.

    Computed as E * exp(-log_rate) from a unit exponential E, so the
    rate itself is never formed.  For extreme log-rates the linear value
    may round to 0 or inf; comparisons should use sample_exponential_log.
    """
    if not math.isfinite(log_rate):
        raise ParameterError(f"log_rate must be finite, got {log_rate}")
    return stream.unit_exponential() * math.exp(-log_rate)


def sample_exponential_log(stream: RngStream, log_rate: float) -> float:
    """Draw ln(Z) for Z ~ exp(rate) with ln(rate) = log_rate; always finite."""
    if not math.isfinite(log_rate):
        raise ParameterError(f"log_rate must be finite, got {log_rate}")
    return math.log(stream.unit_exponential()) - log_rate


def discretize_timer(params: BackoffParams, *, z: float | None = None,
                     log_z: float | None = None) -> int:
    """Map a continuous timer onto the minislot grid.

    Returns max(B + floor(log_beta(z)), 0).  Accepts the timer either
    directly or as log_z = ln(z), so callers already working in log
    domain never exponentiate.
    """
    if (z is None) == (log_z is None):
        raise ParameterError("pass exactly one of z or log_z")
    if z is not None:
        if not z > 0:
            raise ParameterError(f"timer must be positive, got {z}")
        log_z = math.log(z)
    if not math.isfinite(log_z):
        raise ParameterError(f"log_z must be finite, got {log_z}")
    return max(params.b_offset + math.floor(log_z / params.ln_beta), 0)


def discretize_log_timers(log_z: np.ndarray, params: BackoffParams) -> np.ndarray:
    """Vector form of discretize_timer over ln-timers."""
    slots = params.b_offset + np.floor(np.asarray(log_z, dtype=float) / params.ln_beta)
    return np.maximum(slots, 0).astype(np.int64)


# ---------------------------------------------------------------------------
# Parameter validation and recommended defaults
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamsReport:
    """Advisory report on protocol parameters for a given network.

    match_alpha_threshold is the alpha above which the distributed rule
    lands on the max-weight argmax set with probability >= 1 - delta in
    every frame; drift_alpha_threshold is the alpha above which its
    one-frame Lyapunov drift is dominated by the optimal stationary
    randomized policy's.  Falling short of either is a warning, not an
    error: small alphas are routinely used and perform well.
    """

    match_delta: float
    match_alpha_threshold: float
    match_ok: bool
    drift_alpha_threshold: float
    drift_ok: bool
    recommended: BackoffParams
    warnings: tuple[str, ...] = field(default_factory=tuple)


def match_alpha_threshold(n_sources: int, delta: float) -> float:
    """Smallest alpha guaranteeing per-frame match probability 1 - delta."""
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must be in (0, 1), got {delta}")
    return (n_sources - 1) * (1.0 - delta) / delta


def drift_alpha_threshold(weights: Sequence[float]) -> float:
    """Alpha above which the drift-domination guarantee applies."""
    w = np.asarray(weights, dtype=float)
    if len(w) == 0 or np.any(w <= 0):
        raise ParameterError("weights must be a non-empty positive vector")
    n = len(w)
    return (n - 1) * float(np.sqrt(w).sum()) / float(np.sqrt(w).min())


def recommended_defaults(n_sources: int, weights: Sequence[float], *,
                         aoii: bool = False,
                         log_base: float = 10.0) -> BackoffParams:
    """Benchmark parameter formulas for a network of this size and weighting.

    log_base selects the logarithm used inside the beta formula.  The
    base-10 default keeps beta near 1.1 for mid-sized networks, which is
    where the collision rate bottoms out; pass math.e for a natural-log
    sensitivity check (it yields markedly coarser minislot grids).
    """
    if n_sources < 1:
        raise ParameterError(f"n_sources must be >= 1, got {n_sources}")
    w = np.asarray(weights, dtype=float)

    def _log(x: float) -> float:
        return math.log(x, log_base)

    # log(log(n)) is undefined at n = 1 and negative for small n; the
    # outer max() clamp keeps beta strictly above 1 in both formulas.
    loglog = _log(_log(n_sources)) if n_sources >= 2 and _log(n_sources) > 0 else -math.inf
    if aoii:
        return BackoffParams(alpha=2.1,
                             beta=1.05 + max(loglog, 0.0),
                             b_offset=250 + n_sources // 4)
    return BackoffParams(alpha=1.0 + 1.0 / float(w.sum()),
                         beta=1.1 + max(loglog, 0.0),
                         b_offset=250 + n_sources)


def validate_params(config: NetworkConfig, params: BackoffParams,
                    delta: float = 0.1) -> ParamsReport:
    """Check protocol parameters against the per-frame and long-horizon
    guarantee thresholds and report the recommended defaults.

    Structural validity is enforced by the dataclasses themselves; this
    only grades an already-valid pairing.
    """
    n = config.n_sources
    thr_match = match_alpha_threshold(n, delta)
    thr_drift = drift_alpha_threshold(config.weights)
    warnings = []
    match_ok = params.alpha >= thr_match
    drift_ok = params.alpha > thr_drift
    if not match_ok:
        warnings.append(
            f"alpha={params.alpha:g} is below the per-frame match threshold "
            f"{thr_match:g} for delta={delta:g}; match probability is not guaranteed")
    if not drift_ok:
        warnings.append(
            f"alpha={params.alpha:g} is below the drift-domination threshold "
            f"{thr_drift:g}; the long-horizon guarantee does not apply")
    return ParamsReport(
        match_delta=delta,
        match_alpha_threshold=thr_match,
        match_ok=match_ok,
        drift_alpha_threshold=thr_drift,
        drift_ok=drift_ok,
        recommended=recommended_defaults(n, config.weights),
        warnings=tuple(warnings),
    )
