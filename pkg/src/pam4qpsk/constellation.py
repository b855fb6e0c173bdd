"""Four-point (possibly shaped) QPSK constellations and 2-bit labelings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# level index -> 2-bit label (MSB first)
LABELINGS = {
    "gray": np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.uint8),
    "natural": np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.uint8),
}


def labeling_table(labeling="gray"):
    if isinstance(labeling, str):
        try:
            return LABELINGS[labeling].copy()
        except KeyError:
            raise ValueError(f"unknown labeling {labeling!r}") from None
    table = np.asarray(labeling, dtype=np.uint8)
    if table.shape != (4, 2):
        raise ValueError("labeling table must have shape (4, 2)")
    codes = set((table[:, 0] * 2 + table[:, 1]).tolist())
    if codes != {0, 1, 2, 3}:
        raise ValueError("labeling must be a bijection onto {00, 01, 10, 11}")
    return table


@dataclass(frozen=True)
class ShapedConstellation:
    """Reference points of the received QPSK and their bit labels.

    ``points[k]`` is the noiseless image of PAM4 level ``k``.
    """

    points: np.ndarray
    labels: np.ndarray = field(default_factory=lambda: labeling_table("gray"))
    peak_power_w: float | None = None
    mode: str = "ideal"

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.complex128).ravel()
        if pts.size != 4:
            raise ValueError("a QPSK constellation has exactly 4 points")
        if np.min(np.abs(pts[:, None] - pts[None, :]) + np.eye(4)) <= 1e-12:
            raise ValueError("constellation points must be distinct")
        pts.setflags(write=False)
        labels = labeling_table(self.labels)
        labels.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    @property
    def phases(self):
        """Point phases wrapped to [0, 2*pi)."""
        return np.mod(np.angle(self.points), 2 * np.pi)

    def nearest(self, symbols):
        """Index of the nearest point (ties go to the lowest index)."""
        s = np.asarray(symbols, dtype=np.complex128).ravel()
        d = np.abs(s[:, None] - self.points[None, :])
        return np.argmin(d, axis=1)

    def bits_of(self, indices):
        return self.labels[np.asarray(indices)]

    def index_of_bits(self, bits):
        b = np.asarray(bits, dtype=np.uint8).reshape(-1, 2)
        lookup = np.empty(4, dtype=np.int64)
        lookup[self.labels[:, 0] * 2 + self.labels[:, 1]] = np.arange(4)
        return lookup[b[:, 0] * 2 + b[:, 1]]


def unshaped_qpsk(labeling="gray"):
    """Regular QPSK at phases 0, pi/2, pi, 3pi/2 (level k at k*pi/2)."""
    return ShapedConstellation(
        np.exp(1j * np.pi / 2 * np.arange(4)), labeling_table(labeling), mode="ideal"
    )
