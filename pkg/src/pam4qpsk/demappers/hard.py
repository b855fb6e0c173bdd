"""Nearest-point hard decision."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .._validation import as_complex
from ..constellation import ShapedConstellation, unshaped_qpsk


def hard_decide(symbols, constellation):
    """Label of the nearest point per symbol, flattened to a bit sequence.

    Ties go to the lowest point index.
    """
    idx = constellation.nearest(as_complex(symbols))
    return constellation.bits_of(idx).ravel()


def saturated_llrs(bits, llr_max=20.0):
    """``+llr_max`` for a decided 0, ``-llr_max`` for a decided 1."""
    b = np.asarray(bits, dtype=float)
    return llr_max * (1.0 - 2.0 * b)


class HardDemapper(ClassifierMixin, BaseEstimator):
    """Hard decision against a fixed reference constellation.

    ``fit`` does not learn anything; it records the constellation so the
    demapper composes with the other estimators.
    """

    def __init__(self, constellation=None, llr_max=20.0):
        self.constellation = constellation
        self.llr_max = llr_max

    def fit(self, X=None, y=None):
        c = self.constellation
        if c is None:
            c = unshaped_qpsk()
        elif not isinstance(c, ShapedConstellation):
            c = ShapedConstellation(c)
        self.constellation_ = c
        return self

    def predict(self, X):
        c = getattr(self, "constellation_", None) or self.fit().constellation_
        return hard_decide(X, c).reshape(-1, 2)

    def predict_llr(self, X):
        return saturated_llrs(self.predict(X), self.llr_max)

    def score(self, X, y, sample_weight=None):
        return float(np.mean(self.predict(X) == np.asarray(y).reshape(-1, 2)))
