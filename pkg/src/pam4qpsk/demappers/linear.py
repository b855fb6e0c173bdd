"""Conventional baseline: one-tap affine LS equalizer fitted on pilots, then regular-QPSK decision."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import as_complex, check_bit_targets
from ..constellation import unshaped_qpsk
from .hard import saturated_llrs


def fit_linear_equalizer(rx_pilots, tx_pilots, bias=False):
    """Least-squares ``tx ~ a * rx (+ b)``; returns ``(a, b)``."""
    x = as_complex(rx_pilots)
    t = np.asarray(tx_pilots, dtype=np.complex128).ravel()
    if x.size != t.size:
        raise ValueError("pilot length mismatch")
    if x.size < 64:
        raise ValueError(f"need at least 64 pilots, got {x.size}")
    A = np.column_stack([x, np.ones_like(x)]) if bias else x[:, None]
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise np.linalg.LinAlgError("singular pilot matrix")
    coef, *_ = np.linalg.lstsq(A, t, rcond=None)
    return complex(coef[0]), complex(coef[1]) if bias else 0.0j


def linear_equalize(symbols, a, b=0.0):
    return a * as_complex(symbols) + b


class LinearEqualizerDemapper(ClassifierMixin, BaseEstimator):
    """Pilot-trained one-tap equalizer followed by regular-QPSK detection.

    The equalizer targets the unshaped points; it has no knowledge of the
    shaping.  The default is the affine map ``a * x + b``; ``bias=False``
    drops the offset.  Soft output
    is either saturated hard-decision LLRs (``llr="hard"``) or exact
    Gaussian LLRs with the pilot residual variance (``llr="gaussian"``).
    """

    def __init__(self, bias=True, llr="hard", labeling="gray", llr_max=20.0):
        self.bias = bias
        self.llr = llr
        self.labeling = labeling
        self.llr_max = llr_max

    def fit(self, X, y):
        x = as_complex(X)
        bits = check_bit_targets(y, x.size)
        ref = unshaped_qpsk(self.labeling)
        t = ref.points[ref.index_of_bits(bits)]
        self.a_, self.b_ = fit_linear_equalizer(x, t, self.bias)
        z = linear_equalize(x, self.a_, self.b_)
        self.noise_var_ = max(float(np.mean(np.abs(z - t) ** 2)), 1e-12)
        self.reference_ = ref
        return self

    def transform(self, X):
        check_is_fitted(self, "a_")
        return linear_equalize(X, self.a_, self.b_)

    def predict(self, X):
        z = self.transform(X)
        return self.reference_.bits_of(self.reference_.nearest(z))

    def predict_llr(self, X):
        if self.llr == "hard":
            return saturated_llrs(self.predict(X), self.llr_max)
        if self.llr != "gaussian":
            raise ValueError(f"unknown llr mode {self.llr!r}")
        z = self.transform(X)
        ref = self.reference_
        metric = -np.abs(z[:, None] - ref.points[None, :]) ** 2 / self.noise_var_
        out = np.empty((z.size, 2))
        for i in range(2):
            zero = ref.labels[:, i] == 0
            out[:, i] = np.logaddexp.reduce(metric[:, zero], axis=1) - np.logaddexp.reduce(
                metric[:, ~zero], axis=1
            )
        return out
