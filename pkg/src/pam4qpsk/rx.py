"""Coherent receiver impairments and the offline DSP chain.

Chain order: downsample -> 4th-power FOC -> decision-directed CPR ->
data-aided phase-ambiguity resolution on a known prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .constellation import ShapedConstellation
from .signal import ComplexWaveform, awgn_add, stage_rng


@dataclass(frozen=True)
class RxImpairments:
    linewidth_hz: float = 100e3
    freq_offset_hz: float = 0.0
    rx_snr_db: float | None = None

    def __post_init__(self):
        if self.linewidth_hz < 0:
            raise ValueError("linewidth_hz must be non-negative")

    @classmethod
    def disabled(cls):
        return cls(linewidth_hz=0.0, freq_offset_hz=0.0, rx_snr_db=None)


@dataclass(frozen=True)
class CprConfig:
    loop_gain: float = 0.01
    enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.loop_gain <= 1.0:
            raise ValueError("loop_gain must lie in (0, 1]")


def wiener_phase(n, linewidth_hz, sample_rate, rng):
    """Wiener phase walk with per-sample increment variance 2*pi*linewidth/fs."""
    if linewidth_hz == 0 or n == 0:
        return np.zeros(n)
    var = 2.0 * np.pi * linewidth_hz / sample_rate
    steps = rng.standard_normal(n) * np.sqrt(var)
    steps[0] = 0.0
    return np.cumsum(steps)


def apply_rx_impairments(w, imp, seed=0):
    """LO frequency offset, lumped laser phase noise, and receiver AWGN.

    Receiver SNR is relative to the unit probe power.
    """
    fs = w.sample_rate
    n = np.arange(len(w))
    theta = wiener_phase(len(w), imp.linewidth_hz, fs, stage_rng(seed, "rx_phase_noise"))
    rot = 2.0 * np.pi * imp.freq_offset_hz * n / fs + theta
    out = w.samples * np.exp(1j * rot) if np.any(rot) else w.samples.copy()
    out = w.replace(out)
    if imp.rx_snr_db is not None:
        out = awgn_add(out, imp.rx_snr_db, 1.0, stage_rng(seed, "rx_awgn"))
    return out


def downsample(w):
    """One value per symbol from the mid-symbol sample."""
    if isinstance(w, ComplexWaveform):
        sps = w.samples_per_symbol
        return np.array(w.samples[sps // 2 :: sps])
    return np.asarray(w, dtype=np.complex128).copy()


def foc_estimate_and_correct(symbols, symbol_rate=10e9, m_power=4):
    """Frequency offset from the peak of the m-th power spectrum.

    Resolution is ``symbol_rate / (m_power * N)``; the unambiguous range is
    +/- ``symbol_rate / (2 * m_power)``.
    """
    y = np.asarray(symbols, dtype=np.complex128)
    if y.size < 1024:
        raise ValueError(f"FOC needs at least 1024 symbols, got {y.size}")
    z = y**m_power
    spec = np.abs(np.fft.fft(z))
    if not np.any(spec > 0):
        raise ValueError("degenerate spectrum: all-zero input to FOC")
    k = int(np.argmax(spec))
    est = np.fft.fftfreq(y.size, d=1.0 / symbol_rate)[k] / m_power
    if est == 0.0:
        return y.copy(), 0.0
    n = np.arange(y.size)
    return y * np.exp(-2j * np.pi * est * n / symbol_rate), float(est)


@numba.njit(cache=True)
def _dd_pll(y, ref, mu, phi0):
    out = np.empty_like(y)
    track = np.empty(y.size)
    phi = phi0
    for n in range(y.size):
        r = y[n] * np.exp(-1j * phi)
        best = 0
        dbest = np.abs(r - ref[0])
        for m in range(1, ref.size):
            d = np.abs(r - ref[m])
            if d < dbest:
                dbest = d
                best = m
        out[n] = r
        track[n] = phi
        e = r * np.conj(ref[best])
        phi += mu * np.arctan2(e.imag, e.real)
    return out, track


def cpr_decision_directed(symbols, reference, loop_gain=0.01, initial_phase=0.0):
    """First-order decision-directed PLL against ``reference`` points.

    Returns ``(corrected, phase_track)``; ``phase_track[n]`` is the estimate
    used to derotate symbol ``n``.
    """
    if not 0.0 < loop_gain <= 1.0:
        raise ValueError("loop_gain must lie in (0, 1]")
    pts = reference.points if isinstance(reference, ShapedConstellation) else reference
    pts = np.ascontiguousarray(pts, dtype=np.complex128)
    y = np.ascontiguousarray(symbols, dtype=np.complex128)
    return _dd_pll(y, pts, float(loop_gain), float(initial_phase))


def resolve_phase_ambiguity(symbols, known_points, step=np.pi / 2):
    """Remove a static rotation estimated on a known prefix.

    The rotation is snapped to a multiple of ``step`` (the 4th-power FOC and
    DD-CPR ambiguity); pass ``step=None`` to remove the raw estimate.
    Returns ``(symbols, rotation_rad)``.
    """
    y = np.asarray(symbols, dtype=np.complex128)
    ref = np.asarray(known_points, dtype=np.complex128)
    c = np.vdot(ref, y[: ref.size])  # sum(y * conj(ref))
    if c == 0:
        return y.copy(), 0.0
    rot = float(np.angle(c))
    if step is not None:
        rot = step * np.round(rot / step)
    if rot == 0.0:
        return y.copy(), 0.0
    return y * np.exp(-1j * rot), rot


@dataclass(frozen=True)
class DspConfig:
    foc: bool = True
    cpr: CprConfig = CprConfig()
    prefix_symbols: int = 256


def run_dsp_chain(w, reference, prefix_points=None, cfg=None):
    """Downsample, FOC, CPR and prefix ambiguity resolution.

    Returns ``(symbols, info)`` with the frequency estimate and applied
    rotation in ``info``.
    """
    cfg = cfg or DspConfig()
    y = downsample(w)
    info = {"foc_hz": 0.0, "ambiguity_rad": 0.0}
    if cfg.foc and y.size >= 1024:
        rate = w.symbol_rate if isinstance(w, ComplexWaveform) else 10e9
        y, info["foc_hz"] = foc_estimate_and_correct(y, rate)
    if cfg.cpr.enabled:
        y, track = cpr_decision_directed(y, reference, cfg.cpr.loop_gain)
        info["cpr_final_phase"] = float(track[-1]) if track.size else 0.0
    if prefix_points is not None and cfg.prefix_symbols > 0:
        y, info["ambiguity_rad"] = resolve_phase_ambiguity(
            y, np.asarray(prefix_points)[: cfg.prefix_symbols]
        )
    return y, info
