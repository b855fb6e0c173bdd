"""Input checks shared by the estimators.

Symbol inputs are accepted either as a complex 1-D array or as a real
``(n, 2)`` array of (I, Q) columns; bit targets as ``(n, 2)`` or a flat
array of length ``2n``.
"""

import numpy as np
from sklearn.utils.validation import check_array


def as_complex(X):
    if np.iscomplexobj(X):
        x = np.asarray(X, dtype=np.complex128).ravel()
        if not np.all(np.isfinite(x)):
            raise ValueError("symbols contain NaN or Inf")
        return x
    arr = check_array(X, ensure_2d=True, dtype=np.float64)
    if arr.shape[1] != 2:
        raise ValueError(f"expected (n, 2) I/Q features, got shape {arr.shape}")
    return arr[:, 0] + 1j * arr[:, 1]


def as_iq(X):
    x = as_complex(X)
    return np.column_stack([x.real, x.imag])


def check_bit_targets(y, n_symbols):
    b = np.asarray(y)
    if b.size != 2 * n_symbols:
        raise ValueError(f"expected {2 * n_symbols} bits for {n_symbols} symbols, got {b.size}")
    b = b.reshape(n_symbols, 2)
    if not np.all((b == 0) | (b == 1)):
        raise ValueError("bit targets must be 0/1")
    return b.astype(np.uint8)


def check_llrs(llr):
    a = np.asarray(llr, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("LLRs must be finite")
    return a
