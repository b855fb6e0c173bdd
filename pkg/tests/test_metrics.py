import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from statsmodels.stats.proportion import proportion_confint

from pam4qpsk.metrics import (
    ber_count,
    circular_stats,
    gmi_from_llrs,
    phase_stats_per_level,
    wilson_interval,
)


def test_ber_examples():
    truth = np.zeros(13400, dtype=np.uint8)
    dec = truth.copy()
    dec[:10] = 1
    r = ber_count(dec, truth)
    assert (r.bit_errors, r.total_bits) == (10, 13400)
    assert r.ber == pytest.approx(7.46e-4, abs=1e-6)
    assert r.ci_lo < r.ber < r.ci_hi
    assert ber_count(truth, truth).ber == 0.0
    assert ber_count(1 - truth, truth).ber == 1.0
    with pytest.raises(ValueError):
        ber_count(truth[:10], truth)
    with pytest.raises(ValueError):
        ber_count([0, 2], [0, 1])


@given(st.integers(1, 10**6), st.data())
def test_wilson_matches_statsmodels(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(k, n)
    rlo, rhi = proportion_confint(k, n, alpha=0.05, method="wilson")
    assert lo == pytest.approx(rlo, abs=1e-12)
    assert hi == pytest.approx(rhi, abs=1e-12)


def test_gmi_limits():
    bits = np.random.default_rng(0).integers(0, 2, 10000)
    perfect = 30.0 * (1 - 2.0 * bits)
    assert gmi_from_llrs(perfect, bits).gmi_per_bit == pytest.approx(1.0, abs=1e-9)
    zero = gmi_from_llrs(np.zeros(bits.size), bits)
    assert zero.gmi_per_bit == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        gmi_from_llrs([np.nan, 1.0], [0, 1])
    with pytest.raises(ValueError):
        gmi_from_llrs([], [])
    with pytest.raises(ValueError):
        gmi_from_llrs([1.0], [0, 1])


def biawgn_capacity(snr_db):
    """Oracle: I(X;Y) for equiprobable BPSK in AWGN by numerical integration."""
    s2 = 10 ** (-snr_db / 10)
    s = math.sqrt(s2)

    def integrand(y):
        pdf = math.exp(-((y - 1) ** 2) / (2 * s2)) / math.sqrt(2 * math.pi * s2)
        return pdf * np.logaddexp(0.0, -2 * y / s2) / math.log(2)

    return 1.0 - quad(integrand, 1 - 12 * s, 1 + 12 * s, limit=200)[0]


def bpsk_llrs(n, snr_db, seed):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, n)
    s2 = 10 ** (-snr_db / 10)
    y = (1 - 2.0 * bits) + math.sqrt(s2) * rng.standard_normal(n)
    return 2 * y / s2, bits


@pytest.mark.parametrize("snr_db", [-3.0, 0.0, 5.0])
def test_gmi_matches_biawgn_oracle(snr_db):
    llr, bits = bpsk_llrs(200_000, snr_db, seed=int(snr_db) + 10)
    r = gmi_from_llrs(llr, bits)
    assert r.gmi_per_bit == pytest.approx(biawgn_capacity(snr_db), abs=0.01)
    # exact LLRs need no rescaling
    assert r.llr_scale_used == pytest.approx(1.0, rel=0.1)


@pytest.mark.parametrize("c", [0.3, 4.0])
def test_gmi_invariant_to_llr_scale(c):
    llr, bits = bpsk_llrs(50_000, 2.0, seed=1)
    a = gmi_from_llrs(llr, bits).gmi_per_bit
    b = gmi_from_llrs(c * llr, bits).gmi_per_bit
    assert b == pytest.approx(a, abs=1e-6)


def test_flipped_llrs_carry_no_positive_gmi():
    llr, bits = bpsk_llrs(50_000, 2.0, seed=2)
    assert gmi_from_llrs(-llr, bits).gmi_per_bit <= 0.0


def test_gmi_decreases_with_bit_flips():
    llr, bits = bpsk_llrs(50_000, 4.0, seed=3)
    rng = np.random.default_rng(4)
    vals = []
    for frac in (0.0, 0.05, 0.15, 0.3):
        b = bits.copy()
        idx = rng.choice(b.size, int(frac * b.size), replace=False)
        b[idx] ^= 1
        vals.append(gmi_from_llrs(llr, b).gmi_per_bit)
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_circular_stats():
    mean, std = circular_stats(np.full(10, 2 * np.pi - 0.1))
    assert mean == pytest.approx(2 * np.pi - 0.1)
    assert std == pytest.approx(0.0, abs=1e-6)
    # wrapped normal: circular std equals sigma
    ph = 0.2 * np.random.default_rng(0).standard_normal(200_000) + np.pi
    mean, std = circular_stats(ph)
    assert mean == pytest.approx(np.pi, abs=3e-3)
    assert std == pytest.approx(0.2, rel=0.01)


def test_phase_stats_per_level():
    s = np.exp(1j * np.array([0.0, 0.0, np.pi / 2, np.pi / 2, np.pi / 2]))
    stats = phase_stats_per_level(s, [0, 0, 1, 1, 1])
    assert stats[0][2] == 2 and stats[1][2] == 3
    assert stats[1][0] == pytest.approx(np.pi / 2)
    assert stats[2] is None and stats[3] is None
    with pytest.raises(ValueError):
        phase_stats_per_level(s, [0, 1])
