import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ripple_sim.forecast import (
    InsufficientHistory,
    PredictorKind,
    estimate_connection_prob,
    horizon_steps,
    no_connect_over_horizon,
    predict_positions,
)
from ripple_sim.mobility import connection_probabilities
from ripple_sim.topology import ResourceVector, build_tree

CV = PredictorKind.CONSTANT_VELOCITY
ORACLE = PredictorKind.ORACLE


@pytest.fixture
def pair():
    return build_tree(2, 1, [(0.0, 0.0), (100.0, 0.0)], ResourceVector(1, 1, 1))


def test_zero_horizon_uses_current_position(pair):
    f = no_connect_over_horizon(0, pair, 0.0, 1.0, CV, 20.0, [(10.0, 0.0)])
    p = connection_probabilities((10.0, 0.0), pair.bs_positions(), 20.0)
    assert [f.no_connect[0], f.no_connect[1]] == pytest.approx((1 - p).tolist())
    assert len(f.predicted_positions) == 0


def test_two_even_ticks_give_a_quarter(pair):
    f = no_connect_over_horizon(0, pair, 1.0, 1.0, ORACLE, 30.0, [(50.0, 0.0)], future=np.array([[50.0, 0.0]]))
    assert f.no_connect[0] == pytest.approx(0.25) and f.no_connect[1] == pytest.approx(0.25)


def test_far_base_station_is_never_reached():
    net = build_tree(2, 1, [(0.0, 0.0), (1e5, 0.0)], ResourceVector(1, 1, 1))
    f = no_connect_over_horizon(0, net, 3.0, 1.0, CV, 1.0, [(0.0, 0.0), (1.0, 0.0)])
    assert f.no_connect[1] == 1.0


def test_observed_attachment_is_certain(pair):
    f = no_connect_over_horizon(0, pair, 0.0, 1.0, CV, 20.0, [(90.0, 0.0)], attached_bs=0)
    assert f.no_connect[0] == 0.0


def test_constant_velocity_straight_line():
    hist = [(float(i), 0.0) for i in range(5)]
    out = predict_positions(hist, 3.0, 1.0, CV)
    assert np.allclose(out, [[5.0, 0.0], [6.0, 0.0], [7.0, 0.0]])


def test_constant_velocity_matches_polyfit():
    rng = np.random.default_rng(5)
    t = np.arange(5.0)
    hist = np.column_stack([2.0 * t + rng.normal(0, 0.3, 5), -1.0 * t + rng.normal(0, 0.3, 5)])
    out = predict_positions(hist, 2.0, 1.0, CV)
    vx = np.polyfit(t, hist[:, 0], 1)[0]
    vy = np.polyfit(t, hist[:, 1], 1)[0]
    assert out[1] == pytest.approx(hist[-1] + 2 * np.array([vx, vy]), abs=1e-9)


def test_prediction_errors():
    with pytest.raises(InsufficientHistory):
        predict_positions([(0.0, 0.0)], 2.0, 1.0, CV)
    with pytest.raises(InsufficientHistory):
        predict_positions([(0.0, 0.0), (1.0, 0.0)], 2.0, 1.0, ORACLE)


def test_horizon_steps_rounds_up():
    assert horizon_steps(12.63, 1.0) == 13
    assert horizon_steps(12.0, 1.0) == 12
    assert horizon_steps(0.0, 1.0) == 0


def test_estimator_matches_ground_truth_when_well_specified(tree16):
    est = estimate_connection_prob((130.0, 70.0), tree16, 20.0)
    truth = connection_probabilities((130.0, 70.0), tree16.bs_positions(), 20.0)
    assert list(est.values()) == pytest.approx(truth.tolist())
    assert sum(est.values()) == pytest.approx(1.0, abs=1e-9)


def test_estimator_equidistant_pair(pair):
    assert list(estimate_connection_prob((50.0, 10.0), pair, 5.0).values()) == pytest.approx([0.5, 0.5])


def test_softness_mismatch_total_variation(pair):
    # two base stations: P(b0) = 1 / (1 + exp(-(d1 - d0) / s)), closed form
    d0, d1 = 30.0, 70.0
    true_p = 1 / (1 + np.exp(-(d1 - d0) / 10.0))
    wide_p = 1 / (1 + np.exp(-(d1 - d0) / 20.0))
    est = estimate_connection_prob((30.0, 0.0), pair, 20.0)
    truth = estimate_connection_prob((30.0, 0.0), pair, 10.0)
    tv = 0.5 * sum(abs(est[b] - truth[b]) for b in est)
    assert tv == pytest.approx(abs(true_p - wide_p), abs=1e-12)
    assert est[0] < truth[0]  # overdispersed


@given(st.floats(0.0, 20.0), st.floats(0.0, 20.0), st.floats(-200.0, 800.0), st.floats(-200.0, 800.0))
def test_no_connect_non_increasing_in_horizon(h1, h2, x, y):
    from ripple_sim.topology import block_grid_positions

    net = build_tree(16, 4, block_grid_positions(4, 4, 2, 2, 200.0), ResourceVector(5, 8, 10))
    lo, hi = sorted((h1, h2))
    hist = [(x - 10.0, y), (x, y)]
    a = no_connect_over_horizon(0, net, lo, 1.0, CV, 20.0, hist)
    b = no_connect_over_horizon(0, net, hi, 1.0, CV, 20.0, hist)
    for bs in net.bs_set:
        assert 0.0 <= b.no_connect[bs] <= a.no_connect[bs] + 1e-15 <= 1.0 + 1e-15


def test_oracle_forecast_matches_resampled_connections(tree16):
    rng = np.random.default_rng(9)
    now = np.array([[150.0, 90.0]])
    future = now + np.cumsum(rng.normal(0, 15, (6, 2)), axis=0)
    f = no_connect_over_horizon(0, tree16, 6.0, 1.0, ORACLE, 40.0, now, future=future)
    points = np.vstack([now, future])
    n = 100_000
    hit = np.zeros((n, len(tree16.bs_set)), dtype=bool)
    for p in points:
        cdf = np.cumsum(connection_probabilities(p, tree16.bs_positions(), 40.0))
        idx = np.minimum(np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right"), len(cdf) - 1)
        hit[np.arange(n), idx] = True
    empirical = 1.0 - hit.mean(axis=0)
    for bs in tree16.bs_set:
        assert empirical[bs] == pytest.approx(f.no_connect[bs], abs=0.02)
