import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mmrelay.errors import InvalidParameter
from mmrelay.radio import (
    AntennaPattern,
    LinkBudget,
    PathLossModel,
    db2lin,
    derive_pattern,
    gain_mixture,
    lin2db,
    named_path_loss,
    normalized_noise,
    path_loss_linear,
    rx_power_microwave,
    rx_power_mmwave,
    sample_interferer_gain,
)


def test_pattern_4x4_anchor():
    p = derive_pattern(4)
    assert_allclose(lin2db(p.main_gain), 12.04, atol=0.005)
    assert_allclose(lin2db(p.side_gain), 0.69, atol=0.005)
    assert_allclose(math.degrees(p.beamwidth), 24.8, atol=0.05)


def test_pattern_2x2_and_8x8():
    p = derive_pattern(2)
    assert_allclose([p.beamwidth, p.main_gain, p.side_gain], [0.866, 4.0, 2.0], rtol=1e-12)
    p = derive_pattern(8)
    assert p.main_gain == 64.0
    assert_allclose(lin2db(p.main_gain), 18.06, atol=0.005)


@pytest.mark.parametrize("n", [0, 1, 2.5])
def test_pattern_rejects_small_arrays(n):
    with pytest.raises(InvalidParameter):
        derive_pattern(n)


def test_isotropic_mixture():
    iso = AntennaPattern.isotropic()
    mix = gain_mixture(iso, iso)
    assert mix.gains == (1.0, 1.0, 1.0, 1.0)
    assert_allclose(sum(mix.probs), 1.0)


def test_bs_ue_mixture_main_main_probability():
    mix = gain_mixture(derive_pattern(8), derive_pattern(2))
    p1 = (0.2165 / (2 * math.pi)) * (0.866 / (2 * math.pi))
    assert_allclose(mix.probs[0], p1, rtol=1e-12)
    assert_allclose(mix.probs[0], 4.75e-3, atol=5e-6)


def test_mixture_matches_boresight_sampling():
    tx, rx = derive_pattern(8), derive_pattern(2)
    mix = gain_mixture(tx, rx)
    rng = np.random.default_rng(1)
    n = 10**6
    t = np.abs(rng.uniform(-np.pi, np.pi, n)) <= tx.beamwidth / 2
    r = np.abs(rng.uniform(-np.pi, np.pi, n)) <= rx.beamwidth / 2
    freq = [np.mean(t & r), np.mean(t & ~r), np.mean(~t & r), np.mean(~t & ~r)]
    se = np.sqrt(np.asarray(mix.probs) * (1 - np.asarray(mix.probs)) / n)
    assert np.all(np.abs(np.asarray(freq) - mix.probs) < 3 * se + 1e-12)


def test_sample_interferer_gain_frequencies():
    mix = gain_mixture(derive_pattern(8), derive_pattern(2))
    rng = np.random.default_rng(2)
    n = 10**6
    g = sample_interferer_gain(mix, rng, n)
    p = np.asarray(mix.probs)
    freq = np.array([np.mean(g == v) for v in mix.gains])
    assert np.all(np.abs(freq - p) < 3 * np.sqrt(p * (1 - p) / n))


def test_sample_interferer_gain_degenerate(rng):
    iso = AntennaPattern.isotropic()
    assert np.all(sample_interferer_gain(gain_mixture(iso, iso), rng, 100) == 1.0)
    from mmrelay.radio import GainMixture

    mix = GainMixture((7.0, 3.0, 2.0, 1.0), (1.0, 0.0, 0.0, 0.0))
    assert np.all(sample_interferer_gain(mix, rng, 100) == 7.0)


def test_path_loss_uma_mmwave_at_1m():
    pl = named_path_loss("uma-mmwave-los", 28.0)
    assert_allclose(pl.db(1.0), 32.4 + 20 * math.log10(28), rtol=1e-12)
    assert_allclose(pl.db(1.0), 61.34, atol=0.005)
    assert_allclose(lin2db(path_loss_linear(pl, 1.0)), pl.db(1.0), rtol=1e-12)


def test_path_loss_ind_mmwave_at_10m():
    pl = named_path_loss("ind-mmwave-los", 28.0)
    assert_allclose(pl.db(10.0), 78.64, atol=0.005)


def test_path_loss_ind_microwave_uses_km():
    pl = named_path_loss("ind-microwave-los", 2.0)
    assert_allclose(pl.db(1000.0), 89.5, rtol=1e-12)
    pl = named_path_loss("ind-microwave-nlos", 2.0)
    assert_allclose(pl.db(20.0), 147.4 + 43.3 * math.log10(0.02), rtol=1e-12)


def test_path_loss_uma_microwave_nlos():
    pl = named_path_loss("uma-microwave-nlos", 2.0)
    lh = math.log10(1.5)
    ref = 14.78 + 5.83 * lh + (44.9 - 6.55 * lh) * math.log10(300.0) + 34.97 * math.log10(2.0)
    assert_allclose(pl.db(300.0), ref, rtol=1e-12)


def test_path_loss_at_unit_distance_is_intercept():
    pl = PathLossModel(a1=30.0, a2=10.0, a3=15.0, x=2.0, carrier_ghz=3.0)
    assert_allclose(pl.db(1.0), 10.0 + 2.0 + 15.0 * math.log10(3.0))


def test_path_loss_rejects_nonpositive_distance():
    with pytest.raises(InvalidParameter):
        path_loss_linear(named_path_loss("uma-mmwave-los", 28.0), 0.0)


def test_rx_power_mmwave():
    budget = LinkBudget(30.0, 1e-12, 1e8)
    pl = PathLossModel(20.0, 0.0, 0.0, carrier_ghz=1.0)
    assert rx_power_mmwave(budget, 1.0, pl, 10.0, blocked=True) == 0.0
    assert_allclose(rx_power_mmwave(budget, 1.0, pl, 1.0), 1.0)
    assert_allclose(rx_power_mmwave(budget, 1.0, pl, 5.0) / rx_power_mmwave(budget, 1.0, pl, 10.0), 4.0)


def test_rx_power_microwave():
    budget = LinkBudget(23.0, 1e-12, 2e7, band="microwave")
    pl = PathLossModel(30.0, 0.0, 0.0, carrier_ghz=1.0)
    assert rx_power_microwave(budget, 0.0, pl, 10.0) == 0.0
    assert_allclose(rx_power_microwave(budget, 0.7, pl, 1.0), budget.tx_power_w * 0.7)
    mu = 1.0
    h = np.random.default_rng(0).exponential(1 / mu, 10**6)
    pl = named_path_loss("uma-microwave-nlos", 2.0)
    mean = np.mean(rx_power_microwave(budget, h, pl, 150.0))
    assert_allclose(mean, budget.tx_power_w / path_loss_linear(pl, 150.0) / mu, rtol=0.01)


def test_normalized_noise():
    assert_allclose(normalized_noise(-174, 100e6, 9, 35), 1e-12, rtol=1e-12)
    assert_allclose(normalized_noise(-174, 1.0, 0, 0), 10**-17.4, rtol=1e-12)
    ratio = normalized_noise(-174, 2e6, 9, 23) / normalized_noise(-174, 1e6, 9, 23)
    assert_allclose(lin2db(ratio), 3.0103, atol=1e-4)


def test_db_round_trip():
    x = np.array([1e-15, 0.3, 1.0, 42.0, 1e9])
    assert_allclose(db2lin(lin2db(x)), x, rtol=1e-12)
