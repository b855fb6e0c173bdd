"""PAM4 transmitter: bit mapping, unequally spaced optical field, EDFA gain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import labeling_table
from .signal import DEFAULT_SYMBOL_RATE, ComplexWaveform, awgn_add, check_bits


@dataclass(frozen=True)
class Pam4LevelMap:
    """Equally spaced power levels ``P_k = k/3 * peak``; fields ``E_k = sqrt(P_k)``."""

    peak_power_w: float = 1e-3
    labeling: str = "gray"

    def __post_init__(self):
        if not self.peak_power_w > 0:
            raise ValueError("peak_power_w must be positive")
        labeling_table(self.labeling)

    @property
    def level_powers(self):
        return self.peak_power_w * np.arange(4) / 3.0

    @property
    def level_fields(self):
        return np.sqrt(self.level_powers)

    @property
    def average_power(self):
        return float(np.mean(self.level_powers))

    @property
    def bit_labeling(self):
        return labeling_table(self.labeling)


@dataclass(frozen=True)
class TxConfig:
    symbol_rate: float = DEFAULT_SYMBOL_RATE
    samples_per_symbol: int = 2
    pam4_snr_db: float | None = None
    edfa_gain_db: float = 0.0

    def __post_init__(self):
        if int(self.samples_per_symbol) < 1:
            raise ValueError("samples_per_symbol must be >= 1")


def map_bits_to_levels(bits, level_map=None):
    """Two bits (MSB first) per PAM4 level index."""
    table = labeling_table("gray" if level_map is None else level_map.labeling)
    b = check_bits(bits).reshape(-1, 2)
    lookup = np.empty(4, dtype=np.int64)
    lookup[table[:, 0] * 2 + table[:, 1]] = np.arange(4)
    return lookup[b[:, 0] * 2 + b[:, 1]]


def levels_to_bits(levels, level_map=None):
    table = labeling_table("gray" if level_map is None else level_map.labeling)
    return table[np.asarray(levels, dtype=np.int64)].ravel()


def synthesize_pam4(levels, cfg, level_map, seed=0):
    """NRZ PAM4 field with optional transmitter AWGN.

    Noise variance is referenced to the average of the four level powers,
    i.e. ``peak/2``, so ``cfg.pam4_snr_db`` is average power over total noise.
    """
    levels = np.asarray(levels, dtype=np.int64).ravel()
    if levels.size and (levels.min() < 0 or levels.max() > 3):
        raise ValueError("PAM4 levels must be in 0..3")
    field = np.repeat(level_map.level_fields[levels], cfg.samples_per_symbol)
    w = ComplexWaveform(field.astype(np.complex128), cfg.samples_per_symbol, cfg.symbol_rate)
    return awgn_add(w, cfg.pam4_snr_db, level_map.average_power, seed)


def apply_gain(w, gain_db):
    """Amplifier gain on the (already noisy) field."""
    scale = 10.0 ** (gain_db / 20.0)
    if isinstance(w, ComplexWaveform):
        return w.replace(w.samples * scale)
    return np.asarray(w) * scale


def gain_for_peak_power(target_peak_w, launch_peak_w):
    """EDFA gain (dB) that moves the launch peak power to ``target_peak_w``."""
    if not (target_peak_w > 0 and launch_peak_w > 0):
        raise ValueError("peak powers must be positive")
    return 10.0 * np.log10(target_peak_w / launch_peak_w)
