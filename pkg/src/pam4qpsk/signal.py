"""Core signal containers, unit conversions, seeding, PRBS and AWGN.

Every stochastic routine takes an integer seed (or a ``numpy.random.Generator``)
and is a pure function of its inputs.  A single experiment seed is split into
independent per-stage streams by :func:`stage_rng`::

    SeedSequence(entropy=seed, spawn_key=(crc32(stage), *extra_keys))

so switching one stage's noise on or off never reshuffles another stage.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

DEFAULT_SYMBOL_RATE = 10e9

# Fibonacci LFSR feedback taps (x^a + x^b + 1), ITU-T O.150 polynomials.
PRBS_TAPS = {7: (7, 6), 15: (15, 14), 23: (23, 18), 31: (31, 28)}


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(p_w):
    return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def _stage_key(name):
    if isinstance(name, str):
        return zlib.crc32(name.encode("utf-8"))
    return int(name)


def stage_rng(seed, stage, *keys):
    """Independent generator for one pipeline stage.

    ``keys`` may be strings or integers; floats (e.g. an SNR value) are
    keyed by their repr so 20.0 and 20.5 get different streams.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    parts = [_stage_key(stage)]
    for k in keys:
        if isinstance(k, float):
            k = repr(k)
        parts.append(_stage_key(k))
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(parts))
    return np.random.default_rng(ss)


def as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))


@dataclass(frozen=True)
class ComplexWaveform:
    """Complex baseband samples with their sampling metadata.

    The sample array is copied and made read-only, so instances can be
    shared freely between trials.
    """

    samples: np.ndarray
    samples_per_symbol: int = 1
    symbol_rate: float = DEFAULT_SYMBOL_RATE
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.complex128).ravel()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        sps = int(self.samples_per_symbol)
        if sps < 1:
            raise ValueError("samples_per_symbol must be >= 1")
        if self.symbol_rate <= 0:
            raise ValueError("symbol_rate must be positive")
        if s.size % sps:
            raise ValueError(
                f"waveform length {s.size} not divisible by samples_per_symbol={sps}"
            )
        object.__setattr__(self, "samples_per_symbol", sps)

    @property
    def sample_rate(self):
        return self.symbol_rate * self.samples_per_symbol

    @property
    def n_symbols(self):
        return self.samples.size // self.samples_per_symbol

    def __len__(self):
        return self.samples.size

    def power(self):
        return float(np.mean(np.abs(self.samples) ** 2))

    def replace(self, samples, **meta):
        return ComplexWaveform(
            samples,
            self.samples_per_symbol,
            self.symbol_rate,
            {**self.meta, **meta},
        )

    def is_finite(self):
        return bool(np.all(np.isfinite(self.samples)))


def check_bits(bits, even=True):
    b = np.asarray(bits)
    if b.ndim == 2:
        b = b.ravel()
    if b.ndim != 1:
        raise ValueError("bit sequence must be one-dimensional")
    if b.size and not np.all((b == 0) | (b == 1)):
        raise ValueError("bit sequence must contain only 0 and 1")
    if even and b.size % 2:
        raise ValueError(f"bit sequence length must be even, got {b.size}")
    return b.astype(np.uint8)


def lfsr_initial_state(order, seed):
    """Non-zero register contents for ``seed``.

    Drawn from the seeded generator rather than taken from the seed
    directly: low-weight states (e.g. ``0b100``) make long LFSRs emit
    biased, zero-heavy output for tens of thousands of bits.
    """
    return int(as_rng(seed).integers(1, 2**order))


def prbs_generate(order, n_bits, seed=1):
    """Maximal-length PRBS of the given order, cycled/truncated to ``n_bits``.

    The recurrence is ``x[n] = x[n-a] ^ x[n-b]``; the first ``a`` output
    bits are the seed-derived register contents (LSB first).  Blocks of
    ``b`` bits are produced per numpy step.
    """
    if order not in PRBS_TAPS:
        raise ValueError(f"unsupported PRBS order {order}; choose from {sorted(PRBS_TAPS)}")
    n_bits = int(n_bits)
    if n_bits <= 0:
        raise ValueError("n_bits must be positive")
    a, b = PRBS_TAPS[order]
    period = 2**order - 1
    n_gen = min(n_bits, period)
    state = lfsr_initial_state(order, seed)
    out = np.empty(max(n_gen, a), dtype=np.uint8)
    out[:a] = [(state >> i) & 1 for i in range(a)]
    n = a
    while n < n_gen:
        m = min(b, n_gen - n)
        out[n : n + m] = out[n - a : n - a + m] ^ out[n - b : n - b + m]
        n += m
    out = out[:n_gen]
    if n_bits > n_gen:
        out = np.resize(out, n_bits)
    return out


def awgn_add(w, snr_db, signal_power_ref, seed):
    """Add circular complex Gaussian noise at ``snr_db`` relative to ``signal_power_ref``.

    ``snr_db`` of ``None`` or ``+inf`` disables the noise and returns an
    identical copy.
    """
    if signal_power_ref is None or not signal_power_ref > 0:
        raise ValueError("signal_power_ref must be positive")
    samples = w.samples if isinstance(w, ComplexWaveform) else np.asarray(w, dtype=complex)
    if snr_db is None or np.isposinf(snr_db):
        out = samples.copy()
    else:
        var = signal_power_ref / 10.0 ** (snr_db / 10.0)
        rng = as_rng(seed)
        noise = rng.standard_normal((2, samples.size))
        out = samples + np.sqrt(var / 2.0) * (noise[0] + 1j * noise[1])
    if isinstance(w, ComplexWaveform):
        return w.replace(out)
    return out
