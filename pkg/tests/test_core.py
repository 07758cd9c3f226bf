import math

import numpy as np
import pytest

from aoisim import (
    AgeState,
    BackoffParams,
    FrameOutcome,
    NetworkConfig,
    ParameterError,
    RngStream,
    discretize_timer,
    drift_alpha_threshold,
    match_alpha_threshold,
    recommended_defaults,
    sample_exponential,
    sample_exponential_log,
    validate_params,
)
from aoisim.core import discretize_log_timers, linear_rates, log_sum_exp


class FixedStream:
    """Stands in for RngStream where a test needs a pinned unit draw."""

    def __init__(self, value):
        self.value = value

    def unit_exponential(self):
        return self.value


# ---------------------------------------------------------------------------
# RngStream
# ---------------------------------------------------------------------------

def test_stream_reproducible_across_instances():
    a = RngStream(123456789, (4, 2))
    b = RngStream(123456789, (4, 2))
    seq_a = [a.uniform() for _ in range(10)] + list(a.uniforms(5)) + [a.unit_exponential()]
    seq_b = [b.uniform() for _ in range(10)] + list(b.uniforms(5)) + [b.unit_exponential()]
    assert seq_a == seq_b


def test_stream_children_are_independent_of_parent_position():
    parent = RngStream(7)
    child_before = parent.child(3)
    parent.uniform()
    child_after = RngStream(7).child(3)
    assert child_before.uniform() == child_after.uniform()


def test_stream_distinct_substreams_differ():
    root = RngStream(7)
    assert root.child(0).uniform() != root.child(1).uniform()


def test_stream_rejects_bad_seed_and_path():
    with pytest.raises(ParameterError):
        RngStream(-1)
    with pytest.raises(ParameterError):
        RngStream(1 << 64)
    with pytest.raises(ParameterError):
        RngStream(3, (-2,))


def test_unit_exponential_positive():
    s = RngStream(1)
    draws = [s.unit_exponential() for _ in range(1000)]
    assert all(d > 0 for d in draws)


# ---------------------------------------------------------------------------
# Exponential sampling
# ---------------------------------------------------------------------------

def test_sample_exponential_rate_one_identity():
    assert sample_exponential(FixedStream(0.693), 0.0) == pytest.approx(0.693)


def test_sample_exponential_rate_two():
    # E / rate by hand: 0.693 / 2
    z = sample_exponential(FixedStream(0.693), math.log(2.0))
    assert z == pytest.approx(0.3465, abs=1e-10)


def test_sample_exponential_monte_carlo_mean():
    # Monte Carlo oracle on the unit exponential
    s = RngStream(2024)
    mean = float(s.unit_exponentials(1_000_000).mean())
    assert 0.997 <= mean <= 1.003


def test_sample_exponential_log_matches_linear():
    for i in range(50):
        lin = sample_exponential(RngStream(50, (i,)), 1.5)
        log = sample_exponential_log(RngStream(50, (i,)), 1.5)
        assert math.log(lin) == pytest.approx(log, abs=1e-12)


def test_sample_exponential_rejects_non_finite_rate():
    s = RngStream(0)
    with pytest.raises(ParameterError):
        sample_exponential(s, math.inf)
    with pytest.raises(ParameterError):
        sample_exponential_log(s, math.nan)


# ---------------------------------------------------------------------------
# Timer discretization
# ---------------------------------------------------------------------------

def test_discretize_timer_anchor_values():
    assert discretize_timer(BackoffParams(2.0, beta=2.0, b_offset=5), z=1.0) == 5
    # 2 + floor(log2 8) by hand
    assert discretize_timer(BackoffParams(2.0, beta=2.0, b_offset=2), z=8.0) == 5
    # floor(log2 0.001) = -10, max(3 - 10, 0)
    assert discretize_timer(BackoffParams(2.0, beta=2.0, b_offset=3), z=0.001) == 0


def test_discretize_timer_log_form_agrees():
    params = BackoffParams(2.0, beta=1.3, b_offset=40)
    s = RngStream(9)
    for _ in range(200):
        z = s.unit_exponential()
        assert (discretize_timer(params, z=z)
                == discretize_timer(params, log_z=math.log(z)))


def test_discretize_timer_argument_validation():
    params = BackoffParams(2.0)
    with pytest.raises(ParameterError):
        discretize_timer(params)
    with pytest.raises(ParameterError):
        discretize_timer(params, z=1.0, log_z=0.0)
    with pytest.raises(ParameterError):
        discretize_timer(params, z=-1.0)


def test_discretize_monotone_in_z_and_b():
    s = RngStream(31)
    zs = sorted(s.unit_exponential() * 10 for _ in range(100))
    for beta in (1.05, 1.5, 2.0):
        for b in (0, 10, 100):
            params = BackoffParams(2.0, beta=beta, b_offset=b)
            timers = [discretize_timer(params, z=z) for z in zs]
            assert timers == sorted(timers)
    for z in zs:
        prev = -1
        for b in (0, 5, 50, 500):
            cur = discretize_timer(BackoffParams(2.0, beta=1.2, b_offset=b), z=z)
            assert cur >= prev
            prev = cur


def test_discretize_beta_monotonicity_splits_at_z_one():
    # coarsening the grid pulls log_beta(z) toward zero: timers above the
    # offset (z > 1) sink toward it, timers below (z < 1) rise toward it
    for z, sign in ((8.0, -1), (150.0, -1), (0.9, +1), (0.5, +1), (0.01, +1)):
        prev = None
        for beta in (1.05, 1.2, 1.5, 2.0, 5.0):
            cur = discretize_timer(BackoffParams(2.0, beta=beta, b_offset=30), z=z)
            if prev is not None:
                assert sign * (cur - prev) >= 0
            prev = cur


def test_discretize_log_timers_matches_scalar():
    params = BackoffParams(2.0, beta=1.4, b_offset=25)
    log_z = np.array([-80.0, -3.2, 0.0, 2.7])
    vec = discretize_log_timers(log_z, params)
    assert vec.dtype == np.int64
    for lz, d in zip(log_z, vec):
        assert discretize_timer(params, log_z=float(lz)) == d


# ---------------------------------------------------------------------------
# Log-domain equivalence
# ---------------------------------------------------------------------------

def test_argmin_agrees_between_log_and_linear_domain():
    s = RngStream(77)
    for _ in range(200):
        log_rates = np.array([s.uniform() * 20 for _ in range(6)])
        e = s.unit_exponentials(6)
        linear = e / np.exp(log_rates)
        logs = np.log(e) - log_rates
        assert int(np.argmin(linear)) == int(np.argmin(logs))


def test_linear_rates_guard():
    assert linear_rates(np.array([0.0, 1.0]))[1] == pytest.approx(math.e)
    with pytest.raises(ParameterError):
        linear_rates(np.array([10.0, 800.0]))


def test_log_sum_exp_stable_and_correct():
    vals = np.array([1.0, 2.0, 3.0])
    assert log_sum_exp(vals) == pytest.approx(math.log(np.exp(vals).sum()))
    big = np.array([1000.0, 1001.0])
    assert log_sum_exp(big) == pytest.approx(1001.0 + math.log1p(math.exp(-1.0)))


# ---------------------------------------------------------------------------
# Config validation
# ---------------------------------------------------------------------------

def test_network_config_validation():
    NetworkConfig(2, (1.0, 2.5), 10, 0)
    with pytest.raises(ParameterError):
        NetworkConfig(0, (), 10, 0)
    with pytest.raises(ParameterError):
        NetworkConfig(2, (1.0,), 10, 0)
    with pytest.raises(ParameterError):
        NetworkConfig(2, (1.0, -1.0), 10, 0)
    with pytest.raises(ParameterError):
        NetworkConfig(2, (1.0, 1.0), 0, 0)
    with pytest.raises(ParameterError):
        NetworkConfig(2, (1.0, 1.0), 10, -5)


def test_theorem_exact_mode_requires_integer_weights():
    NetworkConfig(2, (1.0, 4.0), 10, 0, theorem_exact=True)
    with pytest.raises(ParameterError):
        NetworkConfig(2, (1.0, math.sqrt(2)), 10, 0, theorem_exact=True)


def test_backoff_params_validation():
    with pytest.raises(ParameterError):
        BackoffParams(alpha=1.0)
    with pytest.raises(ParameterError):
        BackoffParams(alpha=2.0, beta=0.9)
    with pytest.raises(ParameterError):
        BackoffParams(alpha=2.0, b_offset=-1)
    with pytest.raises(ParameterError):
        BackoffParams(alpha=2.0, minislots_per_update=0)
    with pytest.raises(ParameterError):
        BackoffParams(alpha=2.0, delta_scale=0.0)


def test_age_state_initial():
    ages = AgeState.initial(4)
    assert ages.frame_age.tolist() == [1, 1, 1, 1]
    assert ages.clock_age.tolist() == [1.0, 1.0, 1.0, 1.0]


def test_frame_outcome_consistency():
    FrameOutcome(frozenset({1}), 0.0, False, 1, 1.0)
    FrameOutcome(frozenset({1, 2}), 3.0, True, None, 1.0)
    with pytest.raises(ParameterError):
        FrameOutcome(frozenset({1, 2}), 3.0, False, None, 1.0)
    with pytest.raises(ParameterError):
        FrameOutcome(frozenset({1}), 0.0, False, None, 1.0)


# ---------------------------------------------------------------------------
# Thresholds and recommended defaults
# ---------------------------------------------------------------------------

def test_match_threshold_anchor():
    # (N - 1)(1 - delta)/delta by hand
    assert match_alpha_threshold(10, 0.1) == pytest.approx(81.0)


def test_drift_threshold_anchor():
    # (1 * 2) / 1 by hand
    assert drift_alpha_threshold([1.0, 1.0]) == pytest.approx(2.0)


def test_recommended_alpha_formula():
    params = recommended_defaults(10, [1.0] * 10)
    assert params.alpha == pytest.approx(1.1)
    assert params.b_offset == 260
    assert params.minislots_per_update == 10_000


def test_recommended_beta_log_bases():
    # base-10 default keeps beta at the collision-minimizing 1.1 for n=10
    assert recommended_defaults(10, [1.0] * 10).beta == pytest.approx(1.1)
    natural = recommended_defaults(10, [1.0] * 10, log_base=math.e)
    assert natural.beta == pytest.approx(1.1 + math.log(math.log(10)))
    # small networks clamp the log-log term instead of pushing beta below 1
    assert recommended_defaults(2, [1.0, 1.0]).beta == pytest.approx(1.1)
    assert recommended_defaults(1, [1.0]).beta == pytest.approx(1.1)


def test_recommended_aoii_variant():
    params = recommended_defaults(10, [1.0] * 10, aoii=True)
    assert params.alpha == pytest.approx(2.1)
    assert params.beta == pytest.approx(1.05)
    assert params.b_offset == 252


def test_validate_params_report():
    config = NetworkConfig(10, tuple([1.0] * 10), 100, 1)
    report = validate_params(config, BackoffParams(alpha=81.0), delta=0.1)
    assert report.match_alpha_threshold == pytest.approx(81.0)
    assert report.match_ok
    assert report.drift_alpha_threshold == pytest.approx(90.0)
    assert not report.drift_ok
    assert len(report.warnings) == 1

    report_small = validate_params(config, BackoffParams(alpha=1.1), delta=0.1)
    assert not report_small.match_ok and not report_small.drift_ok
    assert len(report_small.warnings) == 2
    assert report_small.recommended.alpha == pytest.approx(1.1)
