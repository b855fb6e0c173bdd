"""BER with Wilson intervals, per-bit GMI from LLRs, per-level phase statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import check_bits

Z95 = 1.959963984540054
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BerReport:
    bit_errors: int
    total_bits: int
    ber: float
    ci_lo: float
    ci_hi: float


def wilson_interval(k, n, z=Z95):
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def ber_count(decided, truth):
    d = check_bits(decided, even=False)
    t = check_bits(truth, even=False)
    if d.size != t.size:
        raise ValueError(f"length mismatch: {d.size} decided vs {t.size} true bits")
    k = int(np.count_nonzero(d != t))
    n = int(t.size)
    lo, hi = wilson_interval(k, n)
    return BerReport(k, n, k / n if n else 0.0, lo, hi)


@dataclass(frozen=True)
class GmiReport:
    gmi_per_bit: float
    llr_scale_used: float


def _gmi_at_scale(signed_llr, s):
    # signed_llr = (1 - 2b) * L, positive when the LLR agrees with the bit;
    # base-2 log-sum-exp so zero LLRs give exactly 0
    return 1.0 - np.mean(np.logaddexp2(0.0, -s * signed_llr / np.log(2.0)))


def gmi_from_llrs(llr, bits, scale_bounds=(1e-2, 1e2), tol=1e-6):
    """Per-bit GMI maximised over a global LLR scale.

    Golden-section search over ``log s`` within ``scale_bounds``; the
    bracket end points are also evaluated so a monotone objective returns
    the boundary value.
    """
    L = np.asarray(llr, dtype=np.float64).ravel()
    b = check_bits(bits, even=False)
    if L.size == 0:
        raise ValueError("empty LLR frame")
    if L.size != b.size:
        raise ValueError("LLR/bit length mismatch")
    if not np.all(np.isfinite(L)):
        raise ValueError("LLRs must be finite")
    signed = (1.0 - 2.0 * b) * L
    f = lambda u: _gmi_at_scale(signed, np.exp(u))  # noqa: E731
    lo, hi = np.log(scale_bounds[0]), np.log(scale_bounds[1])
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(d)
    cands = [(fc, c), (fd, d), (f(np.log(scale_bounds[0])), np.log(scale_bounds[0])),
             (f(np.log(scale_bounds[1])), np.log(scale_bounds[1]))]
    best, u = max(cands, key=lambda t: t[0])
    return GmiReport(float(min(best, 1.0)), float(np.exp(u)))


def circular_stats(phases):
    """Circular mean in [0, 2*pi) and circular standard deviation."""
    z = np.mean(np.exp(1j * np.asarray(phases, dtype=float)))
    r = min(abs(z), 1.0)
    std = np.sqrt(-2.0 * np.log(r)) if r > 0 else np.inf
    return float(np.mod(np.angle(z), 2 * np.pi)), float(std)


def phase_stats_per_level(symbols, true_levels, n_levels=4):
    """``{k: (mean, std, count)}``; levels absent from the data map to ``None``."""
    s = np.asarray(symbols, dtype=np.complex128).ravel()
    lv = np.asarray(true_levels).ravel()
    if s.size != lv.size:
        raise ValueError("symbols/levels length mismatch")
    ph = np.angle(s)
    out = {}
    for k in range(n_levels):
        sel = lv == k
        if not np.any(sel):
            out[k] = None
            continue
        mean, std = circular_stats(ph[sel])
        out[k] = (mean, std, int(sel.sum()))
    return out
