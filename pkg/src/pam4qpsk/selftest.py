"""Quick consistency checks behind ``pam4qpsk selftest`` (a few seconds)."""

import numpy as np

from .constellation import unshaped_qpsk
from .demappers import MlpModel, gradient_check, hard_decide
from .gateway import (
    HNLF_A,
    HNLF_B,
    FiberCascade,
    XpmModelConfig,
    cascade_effective_length,
    effective_length,
    xpm_phase,
)
from .metrics import gmi_from_llrs
from .signal import ComplexWaveform, awgn_add, prbs_generate


def _checks():
    cal = XpmModelConfig()
    yield "calibrated phase at 55 mW is 3*pi/2", xpm_phase(0.055, cal) == 1.5 * np.pi
    yield "L_eff of fiber A ~ 1.866 km", abs(effective_length(HNLF_A) - 1.866) < 1e-3
    yield "L_eff of fiber B ~ 0.917 km", abs(effective_length(HNLF_B) - 0.917) < 1e-3
    yield "cascade L_eff ~ 2.362 km", abs(cascade_effective_length(FiberCascade()) - 2.362) < 2e-3
    p7 = prbs_generate(7, 127, 1)
    yield "PRBS7 balance 64/63", int(p7.sum()) == 64
    w = ComplexWaveform(np.ones(200_000, dtype=complex))
    n = awgn_add(w, 20.0, 1.0, 0).samples - 1.0
    yield "AWGN variance at 20 dB within 3%", abs(np.var(n) / 0.01 - 1) < 0.03
    q = unshaped_qpsk()
    yield "noiseless hard decision", np.array_equal(hard_decide(q.points, q), q.labels.ravel())
    yield "GMI of zero LLRs is 0", gmi_from_llrs(np.zeros(100), np.arange(100) % 2).gmi_per_bit == 0.0
    rng = np.random.default_rng(0)
    m = MlpModel(n_blocks=1, width=6, dropout=0.0, seed=1)
    x = rng.standard_normal((16, 2))
    b = rng.integers(0, 2, (16, 2))
    yield "MLP gradient check < 1e-4", gradient_check(m, x, b) < 1e-4


def run_selftest(verbose=False):
    ok = True
    for name, passed in _checks():
        passed = bool(passed)
        ok &= passed
        if verbose:
            print(f"[{'PASS' if passed else 'FAIL'}] {name}")
    return ok
