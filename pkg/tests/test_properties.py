"""Invariants checked over randomly drawn inputs."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mmrelay.analytic import coverage_mmwave_cellular, coverage_overall, interference_radii
from mmrelay.config import loads, preset
from mmrelay.geometry import LosModel, expected_los_count, los_probability, thinning_factor
from mmrelay.radio import db2lin, derive_pattern, gain_mixture, lin2db
from mmrelay.simulator import wilson_interval
from mmrelay.spectral import CoverageTable, se_conditional_above, se_conditional_below

prob = st.floats(0.0, 1.0)
UMA_INPUTS = preset("uma").coverage_inputs()


@given(prob, prob)
def test_relaying_never_hurts(p, q):
    r = coverage_overall(p, q)
    assert p - 1e-15 <= r <= 1.0


@given(st.integers(2, 64), st.integers(2, 64))
def test_gain_mixture_is_a_distribution(n_tx, n_rx):
    mix = gain_mixture(derive_pattern(n_tx), derive_pattern(n_rx))
    assert math.isclose(sum(mix.probs), 1.0, abs_tol=1e-12)
    assert all(p >= 0 for p in mix.probs)
    assert mix.gains[0] >= max(mix.gains[1:])


@given(st.floats(0.01, 1.0), st.floats(0.0, 0.1), st.floats(0, 1e4), st.floats(0, 1e4))
def test_los_probability_monotone(c, beta, d1, d2):
    model = LosModel(c, beta)
    lo, hi = sorted((d1, d2))
    assert los_probability(hi, model) <= los_probability(lo, model) + 1e-15


@given(st.floats(1e-7, 1e-2), st.floats(0.01, 1.0), st.floats(1e-4, 0.1), st.floats(0.0, 2e3),
       st.floats(0.1, 10.0))
def test_los_count_is_linear_in_intensity(lam, c, beta, d, k):
    model = LosModel(c, beta)
    a = expected_los_count(d, lam, model)
    assert math.isclose(expected_los_count(d, k * lam, model), k * a, rel_tol=1e-12, abs_tol=1e-300)


@given(st.floats(0.0, 30.0), st.floats(0.0, 30.0), st.floats(0.0, 10.0), st.floats(0.0, 30.0))
def test_thinning_factor_range(h_tx, h_rx, h_lo, span):
    eta = thinning_factor(h_tx, h_rx, (h_lo, h_lo + span))
    assert 0.0 <= eta <= 1.0
    if min(h_tx, h_rx) >= h_lo + span:
        assert eta == 0.0


@given(st.floats(-150.0, 150.0))
def test_db_round_trip(x):
    assert math.isclose(lin2db(db2lin(x)), x, rel_tol=1e-12, abs_tol=1e-12)


@given(st.floats(-20.0, 50.0), st.floats(1.0, 500.0))
def test_radii_grow_with_threshold(tau_db, d0):
    mix = UMA_INPUTS.mix_cellular
    tau = 10 ** (tau_db / 10)
    r1 = interference_radii(tau, d0, mix.boresight_gain, mix, 1.0, 2.0, 0.0)
    r2 = interference_radii(2 * tau, d0, mix.boresight_gain, mix, 1.0, 2.0, 0.0)
    assert all(b >= a for a, b in zip(r1.radii, r2.radii))


@settings(max_examples=20, deadline=None)
@given(st.floats(-10.0, 40.0), st.floats(0.1, 6.0))
def test_cellular_coverage_monotone_in_threshold(tau_db, step_db):
    t1 = 10 ** (tau_db / 10)
    t2 = 10 ** ((tau_db + step_db) / 10)
    p1 = coverage_mmwave_cellular(UMA_INPUTS, t1)
    p2 = coverage_mmwave_cellular(UMA_INPUTS, t2)
    assert 0.0 <= p2 <= p1 + 1e-9 <= 1.0 + 1e-9


_SMOOTH = CoverageTable(lambda t: 0.8 / (1.0 + t / 30.0))


@given(st.floats(-30.0, 39.0))
def test_conditional_se_brackets_threshold_rate(tau_db):
    tau = 10 ** (tau_db / 10)
    rate = math.log2(1 + tau)
    assert se_conditional_above(_SMOOTH, tau) >= rate - 1e-9
    assert se_conditional_below(_SMOOTH, tau) <= rate + 1e-9


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_interval_contains_estimate(k, n):
    k = min(k, n)
    center, half = wilson_interval(k, n)
    assert center - half <= k / n + 1e-12 <= center + half + 2e-12
    assert 0.0 <= center - half + 1e-12 and center + half <= 1.0 + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.9), st.integers(1, 30), st.floats(0.0, 1.0))
def test_config_round_trip(xi, relays, rho):
    cfg = preset("uma").with_coverage_ratio(xi).replace(relays_per_cell=relays, multiplexing_factor=rho)
    again = loads(cfg.dumps())
    assert again == cfg and again.digest() == cfg.digest()


@given(st.lists(st.floats(0.0, 1e5), min_size=1, max_size=50))
def test_coverage_estimate_monotone(samples):
    from mmrelay.simulator import coverage_from_samples

    est, _ = coverage_from_samples(np.array(samples), [0.1, 1.0, 10.0, 100.0])
    assert np.all(np.diff(est) <= 0)
