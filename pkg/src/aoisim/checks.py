"""Randomized verifiers for the protocol's analytical guarantees.

Each check draws a batch of random network states from a seeded stream,
evaluates the guarantee it targets (exactly where a closed form exists,
by Monte Carlo where it does not), and reports the worst margin seen.
A check passes when its worst margin is non-negative.  The CLI `verify`
subcommand maps stable ids onto these functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import (
    distinct_timer_bound,
    lyapunov_drift_pair,
    max_aoii_match_probability,
    max_weight_match_probability,
    overhead_upper_bound,
    timer_separation_term,
)
from .core import (
    BackoffParams,
    RngStream,
    aoi_log_rates,
    discretize_log_timers,
    drift_alpha_threshold,
    match_alpha_threshold,
)
from .policies import scheduling_probabilities

DEFAULT_SEED = 20260808


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    worst_margin: float
    trials: int
    detail: str

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (f"{status} {self.name}: worst margin {self.worst_margin:.6g} "
                f"over {self.trials} trials ({self.detail})")


def _state_stream(seed: int) -> RngStream:
    return RngStream(seed, (2,))


# ---------------------------------------------------------------------------
# Per-frame match with the centralized argmax rules
# ---------------------------------------------------------------------------

def check_max_weight_match(trials: int = 10_000, n: int = 10,
                           delta: float = 0.1, alpha: float | None = None,
                           seed: int = DEFAULT_SEED) -> CheckResult:
    """Closed-form contention mass on the max-weight argmax set is at
    least 1 - delta at every random integer-age, integer-weight state."""
    stream = _state_stream(seed)
    if alpha is None:
        alpha = match_alpha_threshold(n, delta)
    worst = math.inf
    for _ in range(trials):
        ages = np.array([1 + stream.integer(20) for _ in range(n)])
        weights = np.array([1 + stream.integer(5) for _ in range(n)], dtype=float)
        mass = max_weight_match_probability(ages, weights, alpha)
        worst = min(worst, mass - (1.0 - delta))
    return CheckResult(name="max-weight match probability", ok=worst >= 0.0,
                       worst_margin=worst, trials=trials,
                       detail=f"n={n} alpha={alpha:g} delta={delta:g}, "
                              f"margin = mass - (1 - delta)")


def check_max_aoii_match(trials: int = 10_000, n: int = 10,
                         delta: float = 0.1, alpha: float | None = None,
                         seed: int = DEFAULT_SEED) -> CheckResult:
    """Same guarantee with integer mismatch ages as the exponents."""
    stream = _state_stream(seed)
    if alpha is None:
        alpha = match_alpha_threshold(n, delta)
    worst = math.inf
    for _ in range(trials):
        aoii = np.array([stream.integer(30) for _ in range(n)])
        mass = max_aoii_match_probability(aoii, alpha)
        worst = min(worst, mass - (1.0 - delta))
    return CheckResult(name="max-mismatch-age match probability", ok=worst >= 0.0,
                       worst_margin=worst, trials=trials,
                       detail=f"n={n} alpha={alpha:g} delta={delta:g}, "
                              f"margin = mass - (1 - delta)")


# ---------------------------------------------------------------------------
# Closed-form win distribution against sampled contention
# ---------------------------------------------------------------------------

def check_winner_distribution(states: int = 20, samples: int = 100_000,
                              seed: int = DEFAULT_SEED) -> CheckResult:
    """Empirical winner frequencies of the idealized contention match the
    closed-form distribution within 3 Monte Carlo standard errors."""
    stream = _state_stream(seed)
    grid = [(n, alpha) for n in (2, 5, 10) for alpha in (1.1, 2.0, 9.0)]
    worst = math.inf
    for s in range(states):
        n, alpha = grid[s % len(grid)]
        ages = np.array([1 + stream.integer(8) for _ in range(n)])
        weights = np.ones(n)
        probs = scheduling_probabilities(alpha, frame_age=ages, weights=weights)
        log_rate = aoi_log_rates(ages, weights, alpha)
        # winner = argmin of ln E_i - log_rate_i across samples
        keys = np.vstack([np.log(stream.unit_exponentials(samples)) - log_rate[i]
                          for i in range(n)])
        wins = np.bincount(np.argmin(keys, axis=0), minlength=n) / samples
        stderr = np.sqrt(probs * (1.0 - probs) / samples)
        margin = float((3.0 * stderr - np.abs(wins - probs)).min())
        worst = min(worst, margin)
    return CheckResult(name="contention winner distribution", ok=worst >= 0.0,
                       worst_margin=worst, trials=states,
                       detail=f"{samples} contentions per state, "
                              f"margin = 3*stderr - |freq - closed form|")


# ---------------------------------------------------------------------------
# Drift domination
# ---------------------------------------------------------------------------

def check_drift_dominance(trials: int = 10_000, n: int = 10,
                          seed: int = DEFAULT_SEED) -> CheckResult:
    """Contention drift never exceeds the optimal stationary randomized
    drift at random integer states once alpha clears its threshold."""
    stream = _state_stream(seed)
    worst = math.inf
    for _ in range(trials):
        weights = np.array([1 + stream.integer(5) for _ in range(n)], dtype=float)
        ages = np.array([1 + stream.integer(20) for _ in range(n)])
        alpha = 1.01 * drift_alpha_threshold(weights)
        d_csma, d_sr = lyapunov_drift_pair(ages, weights, alpha)
        # 1e-9 absorbs float rounding at exactly-tied states
        worst = min(worst, (d_sr - d_csma) + 1e-9)
    return CheckResult(name="drift domination", ok=worst >= 0.0,
                       worst_margin=worst, trials=trials,
                       detail=f"n={n}, margin = randomized drift - contention drift")


# ---------------------------------------------------------------------------
# Distinct-timer bound
# ---------------------------------------------------------------------------

def check_distinct_timer_bound(samples: int = 100_000,
                               seed: int = DEFAULT_SEED) -> CheckResult:
    """Monte Carlo P(distinct minislot timers) respects its closed-form
    lower bound on a (rate, beta, B) grid, and the bound's directional
    terms are non-decreasing in B."""
    stream = _state_stream(seed)
    log_rates = (0.0, 10.0, 20.0)
    betas = (1.1, 1.5, 2.0)
    b_grid = (0, 10, 250)
    worst = math.inf
    cells = 0
    for lri in log_rates:
        for lrj in log_rates:
            for beta in betas:
                prev = -math.inf
                for b in b_grid:
                    params = BackoffParams(alpha=2.0, beta=beta, b_offset=b)
                    report = distinct_timer_bound(lri, lrj, params,
                                                  mc_trials=samples,
                                                  stream=stream)
                    slack = (report.empirical_value
                             - (report.bound_value - 3.0 * report.mc_std_error))
                    worst = min(worst, slack)
                    psi = timer_separation_term(b, beta, lri, lrj)
                    # 1e-15 absorbs ulp-level rounding where psi is ~0
                    worst = min(worst, psi - prev + 1e-15)
                    prev = psi
                    cells += 1
    return CheckResult(name="distinct-timer lower bound", ok=worst >= 0.0,
                       worst_margin=worst, trials=cells,
                       detail=f"{samples} timer pairs per cell, margin = "
                              "min(MC slack, B-monotonicity step)")


# ---------------------------------------------------------------------------
# Idle-time bound
# ---------------------------------------------------------------------------

def check_idle_time_bound(states: int = 10, samples: int = 100_000,
                          n: int = 10, seed: int = DEFAULT_SEED) -> CheckResult:
    """Sampled mean winning timer stays below the closed-form idle-time
    bound at random states."""
    stream = _state_stream(seed)
    worst = math.inf
    for _ in range(states):
        ages = np.array([1 + stream.integer(10) for _ in range(n)])
        weights = np.ones(n)
        params = BackoffParams(alpha=1.2, beta=1.0 + 0.1 + 0.4 * stream.uniform(),
                               b_offset=200 + stream.integer(100))
        log_rate = aoi_log_rates(ages, weights, params.alpha)
        d_matrix = np.vstack([
            discretize_log_timers(
                np.log(stream.unit_exponentials(samples)) - log_rate[i], params)
            for i in range(n)])
        mean_d = float(d_matrix.min(axis=0).mean())
        bound = overhead_upper_bound(ages, weights, params, minislots=True)
        worst = min(worst, bound - mean_d)
    return CheckResult(name="idle-time upper bound", ok=worst >= 0.0,
                       worst_margin=worst, trials=states,
                       detail=f"{samples} contentions per state, "
                              "margin in minislots = bound - sampled mean")


CHECKS = {
    "thm1": check_max_weight_match,
    "lemma1": check_winner_distribution,
    "lemma2": check_drift_dominance,
    "thm3": check_distinct_timer_bound,
    "thm4": check_idle_time_bound,
    "thm5": check_max_aoii_match,
}
