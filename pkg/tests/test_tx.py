import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pam4qpsk.tx import (
    Pam4LevelMap,
    TxConfig,
    apply_gain,
    gain_for_peak_power,
    levels_to_bits,
    map_bits_to_levels,
    synthesize_pam4,
)


def test_gray_and_natural_labeling():
    bits = [0, 0, 0, 1, 1, 1, 1, 0]
    assert map_bits_to_levels(bits).tolist() == [0, 1, 2, 3]
    nat = Pam4LevelMap(labeling="natural")
    assert map_bits_to_levels([0, 0, 0, 1, 1, 0, 1, 1], nat).tolist() == [0, 1, 2, 3]


@given(st.lists(st.integers(0, 1), min_size=0, max_size=64).filter(lambda b: len(b) % 2 == 0),
       st.sampled_from(["gray", "natural"]))
def test_bit_level_round_trip(bits, labeling):
    m = Pam4LevelMap(labeling=labeling)
    assert levels_to_bits(map_bits_to_levels(bits, m), m).tolist() == bits


def test_odd_bits_rejected():
    with pytest.raises(ValueError):
        map_bits_to_levels([0, 1, 1])


def test_level_map_invariants():
    m = Pam4LevelMap(0.055)
    assert m.level_powers[0] == 0
    assert np.all(np.diff(m.level_powers) > 0)
    np.testing.assert_array_equal(m.level_fields, np.sqrt(m.level_powers))
    spacing = np.diff(m.level_fields)
    assert spacing[0] > spacing[1] > spacing[2]
    assert m.average_power == pytest.approx(0.0275)


def test_synthesize_noiseless_examples():
    m = Pam4LevelMap(0.055)
    cfg = TxConfig(samples_per_symbol=2)
    w = synthesize_pam4([0, 3, 1], cfg, m)
    p = np.abs(w.samples) ** 2
    assert np.all(p[:2] == 0)
    assert p[2:4] == pytest.approx([0.055, 0.055], rel=1e-15)
    assert p[4:6] == pytest.approx([0.055 / 3] * 2, rel=1e-15)
    assert np.all(w.samples.imag == 0)
    assert w.samples_per_symbol == 2 and w.symbol_rate == 10e9


def test_level_power_linearity_with_noise():
    m = Pam4LevelMap(1.0)
    levels = np.repeat(np.arange(4), 50_000)
    w = synthesize_pam4(levels, TxConfig(samples_per_symbol=1, pam4_snr_db=20.0), m, seed=2)
    noise_var = m.average_power / 100
    for k in range(4):
        got = np.mean(np.abs(w.samples[levels == k]) ** 2)
        assert got == pytest.approx(k / 3 + noise_var, abs=5e-3)


def test_gain_examples():
    m = Pam4LevelMap(0.055)
    w = synthesize_pam4([3], TxConfig(samples_per_symbol=1), m)
    assert np.array_equal(apply_gain(w, 0.0).samples, w.samples)
    g = gain_for_peak_power(0.0385, 0.055)
    assert g == pytest.approx(-1.549, abs=1e-3)
    assert abs(apply_gain(w, g).samples[0]) ** 2 == pytest.approx(0.0385, rel=1e-12)
    g = gain_for_peak_power(0.0605, 0.055)
    assert g == pytest.approx(0.413, abs=1e-3)
    assert abs(apply_gain(w, g).samples[0]) ** 2 == pytest.approx(0.0605, rel=1e-12)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_gain_composability(a, b):
    x = np.array([0.3 + 0.1j, 1.0, -2j])
    np.testing.assert_allclose(apply_gain(apply_gain(x, a), b), apply_gain(x, a + b),
                               rtol=1e-12, atol=0)


def test_gain_scales_noise_with_signal():
    m = Pam4LevelMap(1e-3)
    cfg = TxConfig(samples_per_symbol=1, pam4_snr_db=15.0)
    w = synthesize_pam4(np.arange(4).repeat(1000), cfg, m, seed=1)
    amp = apply_gain(w, 17.4)
    np.testing.assert_allclose(amp.samples, w.samples * 10 ** (17.4 / 20), rtol=1e-14)
