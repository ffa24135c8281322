import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convdyn.activity import (
    CompletionCurve,
    aggregate_curve,
    change_rate,
    change_rate_ratio,
    completion_points,
    fit_saturation,
    model_value,
)

from helpers import conv_from_parents, population_sd, step_value


def test_completion_points_examples():
    conv = conv_from_parents([-1, 0], seconds=[0, 100])
    assert completion_points(conv) == [(0.0, 0.5), (1.0, 1.0)]
    conv = conv_from_parents([-1, 0, 0, 0], seconds=[0, 10, 20, 100])
    assert completion_points(conv) == pytest.approx([(0, .25), (.1, .5), (.2, .75), (1, 1)], abs=1e-15)
    with pytest.raises(ValueError, match="zero duration"):
        completion_points(conv_from_parents([-1, 0, 0], seconds=[5, 5, 5]))


def test_model_value_examples():
    assert model_value(3.0, 0.0) == 0.0
    assert model_value(32.5, 1 / 32.5) == pytest.approx(1 - 1 / math.e, abs=1e-12)
    assert model_value(32.5, 1.0) == pytest.approx(1 - math.exp(-32.5), abs=1e-15)
    with pytest.raises(ValueError):
        model_value(0.0, 0.5)
    with pytest.raises(ValueError):
        model_value(1.0, 1.5)


def test_change_rate_examples():
    assert change_rate(32.5, 0.0) == 32.5
    assert change_rate(1.0, 1.0) == pytest.approx(math.exp(-1), abs=1e-15)
    for a, t in [(2.0, 0.3), (32.5, 0.01), (100.0, 0.9)]:
        assert change_rate(a, t) == pytest.approx(a * (1 - model_value(a, t)), rel=1e-12)


def test_change_rate_ratio_examples():
    assert change_rate_ratio(32.5, 0.05, 0.2) == pytest.approx(math.exp(4.875), rel=1e-14)
    assert round(change_rate_ratio(32.5, 0.05, 0.2), 1) == 131.0
    assert change_rate_ratio(7.0, 0.3, 0.3) == 1.0
    assert change_rate_ratio(5, 0.1, 0.4) * change_rate_ratio(5, 0.4, 0.7) == pytest.approx(
        change_rate_ratio(5, 0.1, 0.7), rel=1e-14
    )


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(0.01, 100), t=st.floats(1e-6, 1 - 1e-6))
def test_change_rate_is_derivative(alpha, t):
    h = 1e-6
    lo, hi = max(t - h, 0.0), min(t + h, 1.0)
    fd = (model_value(alpha, hi) - model_value(alpha, lo)) / (hi - lo)
    assert abs(fd - change_rate(alpha, t)) < 1e-6 * max(1.0, alpha)


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(0.01, 200), t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_model_monotone_and_bounded(alpha, t1, t2):
    lo, hi = sorted((t1, t2))
    # float rounding reaches 1.0 once exp(-alpha * t) < 2**-53
    assert 0.0 <= model_value(alpha, lo) <= model_value(alpha, hi) <= 1.0
    assert model_value(alpha, hi) <= model_value(alpha * 1.5, hi)
    gamma = 1 / alpha
    if gamma <= 1:
        assert model_value(alpha, gamma) == pytest.approx(1 - 1 / math.e, abs=1e-15)


def test_aggregate_single_conversation_matches_step_oracle():
    conv = conv_from_parents([-1, 0, 0, 1, 0], seconds=[0, 3, 7, 40, 100])
    times = [p[0] for p in completion_points(conv)]
    curve = aggregate_curve([conv], resolution=1e-3)
    for g in range(0, 1001, 7):
        assert curve.mean[g] == step_value(times, g / 1000)
    assert np.all(curve.sd == 0)
    assert curve.mean[-1] == 1.0


def test_aggregate_identical_conversations_have_zero_sd():
    conv = conv_from_parents([-1, 0, 0, 1], seconds=[0, 13, 17, 100])
    curve = aggregate_curve([conv, conv], resolution=1e-4)
    assert np.all(curve.sd == 0.0)


def test_aggregate_two_curves_mean_and_sd():
    a = [0.0, 0.1, 0.6, 0.7, 1.0]
    b = [0.0, 0.1, 0.2, 0.8, 1.0]
    curve = aggregate_curve([a, b], resolution=0.1)
    # at 0.5: a has 2/5, b has 3/5
    assert curve.mean[5] == pytest.approx(0.5, abs=1e-15)
    assert curve.sd[5] == pytest.approx(0.1, abs=1e-15)
    assert curve.n[5] == 2


def test_aggregate_rejects_empty_and_bad_resolution():
    with pytest.raises(ValueError):
        aggregate_curve([])
    with pytest.raises(ValueError):
        aggregate_curve([conv_from_parents([-1, 0], seconds=[1, 1])])
    with pytest.raises(ValueError):
        aggregate_curve([[0.0, 1.0]], resolution=0.3)


@settings(max_examples=30, deadline=None)
@given(
    curves=st.lists(
        st.lists(st.floats(0, 1), min_size=0, max_size=12).map(lambda xs: [0.0] + sorted(xs) + [1.0]),
        min_size=1, max_size=6,
    ),
    res=st.sampled_from([0.1, 0.05, 0.01, 1e-3]),
)
def test_aggregate_against_two_pass_oracle(curves, res):
    curve = aggregate_curve(curves, resolution=res)
    size = round(1 / res)
    for g in range(0, size + 1, max(1, size // 37)):
        lam = g / size
        vals = [step_value(c, lam) for c in curves]
        assert curve.mean[g] == pytest.approx(sum(vals) / len(vals), abs=1e-12)
        assert curve.sd[g] == pytest.approx(population_sd(vals), abs=1e-9)
    assert curve.mean[-1] == 1.0
    assert np.all(np.diff(curve.mean) >= -1e-15)


def _model_curve(alpha, n=100_001, sd=None):
    x = np.linspace(0.0, 1.0, n)
    y = 1 - np.exp(-alpha * x)
    return CompletionCurve(
        resolution=1 / (n - 1), lambda_time=x, mean=y,
        sd=np.zeros(n) if sd is None else np.full(n, sd), n=np.ones(n, dtype=np.int64),
    )


@pytest.mark.parametrize("alpha", [1.0, 5.0, 32.5, 100.0])
def test_fit_recovers_noiseless_alpha(alpha):
    fit = fit_saturation(_model_curve(alpha))
    assert fit.alpha == pytest.approx(alpha, rel=1e-6)
    assert fit.gamma == 1.0 / fit.alpha
    assert fit.chi2_reduced < 1e-12
    assert fit.n_points == 100_001


def test_fit_noise_chi2_near_one():
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        curve = _model_curve(32.5, n=2001, sd=0.02)
        noisy = CompletionCurve(
            curve.resolution, curve.lambda_time,
            curve.mean + rng.normal(0, 0.02, len(curve)), curve.sd, curve.n,
        )
        fit = fit_saturation(noisy)
        assert fit.alpha == pytest.approx(32.5, rel=0.05)
        hits += 0.8 <= fit.chi2_reduced <= 1.2
    assert hits >= 16


def test_fit_linear_curve_misfit():
    x = np.linspace(0, 1, 1001)
    curve = CompletionCurve(1e-3, x, x.copy(), np.zeros_like(x), np.ones(1001, dtype=np.int64))
    fit = fit_saturation(curve)
    assert 0 < fit.alpha < 5
    assert fit.chi2_reduced > 1e-3


def test_fit_errors():
    x = np.linspace(0, 1, 50)
    zero = CompletionCurve(0.02, x, np.zeros(50), np.zeros(50), np.ones(50, dtype=np.int64))
    with pytest.raises(ValueError):
        fit_saturation(zero)
    short = CompletionCurve(0.2, x[:5], x[:5], np.zeros(5), np.ones(5, dtype=np.int64))
    with pytest.raises(ValueError):
        fit_saturation(short)
    with pytest.raises(ValueError):
        fit_saturation(_model_curve(3.0, n=101), weighting="bogus")


def test_inverse_variance_weights_use_sd():
    rng = np.random.default_rng(1)
    base = _model_curve(10.0, n=501)
    sd = np.where(base.lambda_time < 0.5, 0.01, 0.2)
    noisy = CompletionCurve(base.resolution, base.lambda_time, base.mean + rng.normal(0, sd), sd, base.n)
    weighted = fit_saturation(noisy, weighting="inverse_variance")
    uniform = fit_saturation(noisy, weighting="uniform")
    assert weighted.weighting == "inverse_variance" and uniform.weighting == "uniform"
    assert abs(weighted.alpha - 10) < abs(uniform.alpha - 10) + 0.5
    assert weighted.chi2_reduced == pytest.approx(1.0, abs=0.2)
