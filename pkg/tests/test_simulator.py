import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mmrelay.analytic import association_probs_microwave
from mmrelay.errors import InvalidParameter
from mmrelay.geometry import ObstacleField, los_total_mass
from mmrelay.simulator import (
    Layout,
    NetworkRealization,
    associate,
    association_frequencies,
    coverage_from_samples,
    drop_network,
    drop_rng,
    empirical_los_curve,
    estimate_coverage,
    hex_sites,
    ind_sites,
    sample_sinr,
    sinr_d2d,
    sinr_downlink,
    wilson_interval,
    window_radii,
)


def _realization(cfg, bs=(), bs_los=(), bs_boresight=(), relays=(), relay_los=()):
    bs = np.asarray(bs, dtype=float).reshape(-1, 2)
    relays = np.asarray(relays, dtype=float).reshape(-1, 2)
    empty = np.empty((0, 2))
    return NetworkRealization(
        config=cfg, bs=bs, bs_los=np.asarray(bs_los, dtype=bool),
        bs_boresight=np.asarray(bs_boresight, dtype=float),
        relays=relays, relay_los=np.asarray(relay_los, dtype=bool),
        interferers=empty, interferer_los=np.empty(0, bool), interferer_boresight=np.empty(0),
        relay_fading=np.ones(len(relays)), interferer_fading=np.empty(0))


# -- layouts and windows ----------------------------------------------------


def test_hex_sites():
    sites = hex_sites(500.0)
    assert sites.shape == (19, 2)
    d = np.sort(np.hypot(sites[:, 0], sites[:, 1]))
    assert d[0] == 0
    assert_allclose(d[1:7], 500.0)
    assert_allclose(d[7:13], 500.0 * math.sqrt(3))
    assert_allclose(d[13:], 1000.0)


def test_ind_sites():
    sites = ind_sites()
    assert sites.shape == (12, 2)
    assert np.all((sites >= 0) & (sites <= (120.0, 50.0)))


def test_layout_validation():
    with pytest.raises(InvalidParameter):
        Layout("hex-grid")
    with pytest.raises(InvalidParameter):
        Layout("imported-footprints")
    with pytest.raises(InvalidParameter):
        Layout("moon")


def test_window_rules(uma):
    win = window_radii(uma)
    los = uma.los_cellular
    assert los.c * math.exp(-los.beta * win.bs) <= 1e-4 * (1 + 1e-9)
    assert win.bs >= 5 * 0.5 / math.sqrt(uma.lambda_b)
    assert win.interferer >= win.relay
    free = window_radii(uma.with_coverage_ratio(0.0))
    assert_allclose(free.bs, 4 * 5 * 0.5 / math.sqrt(uma.lambda_b))


def test_relays_per_cell(uma):
    win = window_radii(uma)
    counts = [len(drop_network(uma, Layout(), drop_rng(3, k), links=("mmwave_d2d",)).relays)
              for k in range(400)]
    expected = uma.lambda_r * math.pi * win.relay**2
    assert abs(np.mean(counts) - expected) < 3 * math.sqrt(expected / len(counts))


# -- association and SINR ---------------------------------------------------


def test_associate_edge_cases(uma):
    real = _realization(uma, bs=[[100, 0]], bs_los=[False], bs_boresight=[0.0])
    assert associate(real, "cellular") is None
    assert sinr_downlink(real) == 0.0
    assert associate(real, "mmwave_d2d") is None
    assert associate(real, "microwave_d2d") is None
    assert sinr_d2d(real, band="microwave") == 0.0
    with pytest.raises(InvalidParameter):
        associate(real, "laser")


def test_microwave_prefers_lower_path_loss(uma):
    # a LOS relay farther away can beat a nearer NLOS one
    real = _realization(uma, relays=[[40, 0], [90, 0]], relay_los=[False, True])
    assert associate(real, "microwave_d2d") == 1
    assert associate(real, "mmwave_d2d") == 1


def test_downlink_sinr_by_hand(uma):
    a = uma.path_loss("cellular")
    s2 = uma.sigma2("cellular")
    bs, ue = uma.bs_pattern, uma.ue_pattern
    # serving BS east, interferer west with its main lobe on the UE
    real = _realization(uma, bs=[[50, 0], [-80, 0]], bs_los=[True, True], bs_boresight=[math.pi, 0.0])
    sig = bs.main_gain * ue.main_gain * 50.0**-a.exponent
    intf = bs.main_gain * ue.side_gain * 80.0**-a.exponent
    assert_allclose(sinr_downlink(real), sig / (a.intercept * s2 + intf), rtol=1e-12)
    assert_allclose(sinr_downlink(real, interference=False), sig / (a.intercept * s2), rtol=1e-12)
    # an identical co-located interferer aimed at the UE gives SINR just below one
    twin = _realization(uma, bs=[[50, 0], [50, 0]], bs_los=[True, True], bs_boresight=[math.pi, math.pi])
    assert 0.99 < sinr_downlink(twin) < 1.0


def test_microwave_without_interferers_is_snr(uma):
    cfg = uma.replace(multiplexing_factor=0.0)
    for k in range(20):
        real = drop_network(cfg, Layout(), drop_rng(9, k), links=("microwave_d2d",))
        idx = associate(real, "microwave_d2d")
        if idx is None:
            continue
        pl = cfg.path_loss("microwave-los" if real.relay_los[idx] else "microwave-nlos")
        d = real.relay_dist[idx]
        snr = real.relay_fading[idx] / (pl.intercept * d**pl.exponent) / cfg.sigma2("d2d-microwave")
        assert_allclose(sinr_d2d(real, band="microwave"), snr, rtol=1e-12)


def test_d2d_band_validation(uma):
    real = _realization(uma)
    with pytest.raises(InvalidParameter):
        sinr_d2d(real, band="thz")


# -- drop runner ------------------------------------------------------------


def test_deterministic_across_workers(uma):
    a = sample_sinr(uma, Layout(), "overall", 60, seed=17, workers=1)
    b = sample_sinr(uma, Layout(), "overall", 60, seed=17, workers=3)
    assert_array_equal(a, b)
    c = sample_sinr(uma, Layout(), "overall", 60, seed=18)
    assert not np.array_equal(a, c)


def test_paired_overall_never_below_direct(uma):
    cell = sample_sinr(uma, Layout(), "cell", 300, seed=4)
    both = sample_sinr(uma, Layout(), "overall", 300, seed=4)
    assert np.all(both >= cell)


def test_low_threshold_is_void_probability(uma):
    n = 4000
    samples = sample_sinr(uma, Layout(), "noise-limited", n, seed=8)
    p = np.mean(samples > 0)
    ref = los_total_mass(uma.lambda_b, uma.los_cellular)
    assert abs(p - ref) < 3 * math.sqrt(ref * (1 - ref) / n)


def test_window_doubling_is_stable(uma):
    a = estimate_coverage(uma, Layout(), [10.0], 4000, seed=1, curve="cell")
    b = estimate_coverage(uma, Layout(), [10.0], 4000, seed=1, curve="cell", window_scale=2.0)
    assert abs(a.estimate[0] - b.estimate[0]) <= a.ci_halfwidth[0] + b.ci_halfwidth[0]


def test_hex_layout_runs(uma):
    cfg = uma.with_isd(500.0)
    res = estimate_coverage(cfg, Layout("hex-grid", isd_m=500.0), [0.1, 10.0], 300, seed=2)
    assert res.estimate[0] >= res.estimate[1]


def test_unknown_curve(uma):
    with pytest.raises(InvalidParameter):
        sample_sinr(uma, Layout(), "sideways", 10, 0)


# -- estimators -------------------------------------------------------------


def test_wilson_interval_reference():
    # statsmodels proportion_confint(50, 100, 0.01, 'wilson') = (0.37528, 0.62472)
    center, half = wilson_interval(50, 100)
    assert_allclose(center, 0.5)
    assert_allclose(half, 0.1247204, atol=1e-7)
    center, half = wilson_interval(0, 100)
    assert center > 0 and center - half <= 1e-12


def test_coverage_from_samples_is_strict():
    s = np.array([0.0, 1.0, 2.0, 3.0])
    est, _ = coverage_from_samples(s, [0.5, 1.0, 3.0])
    assert_allclose(est, [0.75, 0.5, 0.0])


# -- oracles ----------------------------------------------------------------


def test_empty_field_sees_everything():
    curve = empirical_los_curve(ObstacleField.empty(), [0.0, 50.0, 500.0], 100, seed=0)
    assert_array_equal(curve.los_fraction, 1.0)


def test_association_frequencies_match_analytic(uma):
    n = 3000
    f_los, f_nlos = association_frequencies(uma, n, seed=5)
    s_los, _ = association_probs_microwave(uma.coverage_inputs())
    assert abs(f_los - s_los) < 3 * math.sqrt(s_los * (1 - s_los) / n) + 1e-3
    assert_allclose(f_los + f_nlos, 1.0)
