"""XPM gateway: PAM4 intensity -> phase of a unit-amplitude CW probe.

The probe phase follows the instantaneous pump power,
``dphi = 2 * gamma * L_eff * P``, with ``L_eff`` accumulated over a cascade
of lossy HNLFs.  Conversion is memoryless: walk-off, dispersion and FWM
are ignored.

Two modes are available.  ``physical`` evaluates the expression from the
fiber parameters.  ``calibrated`` (default) pins the phase at a reference
power, 55 mW -> 3*pi/2, so regular QPSK comes out at the nominal operating
point and other powers scale linearly from there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .constellation import ShapedConstellation, labeling_table
from .signal import ComplexWaveform

LN10_OVER_10 = np.log(10.0) / 10.0


@dataclass(frozen=True)
class FiberSpec:
    length_km: float
    gamma_per_w_km: float
    dispersion_ps_nm_km: float = 0.0
    slope_ps_nm_km2: float = 0.0
    loss_db_km: float = 0.0
    name: str = ""

    def __post_init__(self):
        for attr in ("length_km", "gamma_per_w_km", "loss_db_km"):
            if getattr(self, attr) < 0:
                raise ValueError(f"{attr} must be non-negative")

    @property
    def alpha_per_km(self):
        return self.loss_db_km * LN10_OVER_10

    @property
    def total_loss_db(self):
        return self.loss_db_km * self.length_km

    @classmethod
    def from_dict(cls, d):
        # accepts both field names and the table-style keys
        aliases = {
            "length": "length_km",
            "nonlinearity": "gamma_per_w_km",
            "gamma": "gamma_per_w_km",
            "dispersion": "dispersion_ps_nm_km",
            "slope": "slope_ps_nm_km2",
            "loss": "loss_db_km",
        }
        kw = {aliases.get(k, k): v for k, v in d.items()}
        return cls(**kw)


HNLF_A = FiberSpec(2.5, 10.0, 0.57, 0.018, 1.07, name="A")
HNLF_B = FiberSpec(1.0, 10.0, 0.52, 0.016, 0.76, name="B")


@dataclass(frozen=True)
class FiberCascade:
    fibers: tuple = (HNLF_A, HNLF_B)
    extra_connection_loss_db: float = 0.0

    def __post_init__(self):
        fibers = tuple(
            f if isinstance(f, FiberSpec) else FiberSpec.from_dict(f) for f in self.fibers
        )
        if not fibers:
            raise ValueError("a fiber cascade needs at least one fiber")
        object.__setattr__(self, "fibers", fibers)

    def transmittances(self):
        """Power transmittance seen at the input of each fiber (first is 1)."""
        t = [1.0]
        conn = 10.0 ** (-self.extra_connection_loss_db / 10.0)
        for f in self.fibers[:-1]:
            t.append(t[-1] * 10.0 ** (-f.total_loss_db / 10.0) * conn)
        return np.array(t)

    @property
    def gamma_per_w_km(self):
        return self.fibers[0].gamma_per_w_km


def effective_length(f):
    """``(1 - exp(-alpha L)) / alpha`` in km; the length itself when lossless."""
    a = f.alpha_per_km
    if a == 0:
        return float(f.length_km)
    return float(-np.expm1(-a * f.length_km) / a)


def cascade_effective_length(c):
    return float(sum(t * effective_length(f) for t, f in zip(c.transmittances(), c.fibers)))


@dataclass(frozen=True)
class XpmModelConfig:
    mode: str = "calibrated"
    reference_power_w: float = 0.055
    reference_phase_rad: float = 1.5 * np.pi

    def __post_init__(self):
        if self.mode not in ("calibrated", "physical"):
            raise ValueError(f"unknown XPM mode {self.mode!r}")
        if not self.reference_power_w > 0:
            raise ValueError("reference_power_w must be positive")
        if self.mode == "calibrated" and not self.reference_phase_rad > 0:
            raise ValueError("calibrated mode needs a positive reference phase")

    @property
    def phase_scale(self):
        """rad/W used in calibrated mode."""
        return self.reference_phase_rad / self.reference_power_w


def xpm_phase(power_w, cfg=None, cascade=None):
    """Probe phase shift (rad) for pump power ``power_w`` (scalar or array)."""
    cfg = cfg or XpmModelConfig()
    p = np.asarray(power_w, dtype=float)
    if np.any(p < 0):
        raise ValueError("pump power must be non-negative")
    if cfg.mode == "calibrated":
        out = cfg.reference_phase_rad * (p / cfg.reference_power_w)
    else:
        cascade = cascade or FiberCascade()
        out = 2.0 * cascade.gamma_per_w_km * cascade_effective_length(cascade) * p
    return float(out) if out.ndim == 0 else out


def convert_pam4_to_qpsk(pam4, cfg=None, cascade=None):
    """Unit-amplitude probe ``exp(j * dphi(|E|^2))`` for every input sample."""
    samples = pam4.samples if isinstance(pam4, ComplexWaveform) else np.asarray(pam4)
    if not np.all(np.isfinite(samples)):
        raise ValueError("non-finite samples entering the gateway")
    phase = xpm_phase(np.abs(samples) ** 2, cfg, cascade)
    out = np.exp(1j * phase)
    if isinstance(pam4, ComplexWaveform):
        return pam4.replace(out)
    return out


def reference_constellation(cfg=None, cascade=None, peak_power_w=0.055, labeling="gray"):
    """Noiseless gateway output for PAM4 levels ``k * peak / 3``."""
    cfg = cfg or XpmModelConfig()
    if not peak_power_w > 0:
        raise ValueError("peak_power_w must be positive")
    phases = xpm_phase(np.arange(4) * peak_power_w / 3.0, cfg, cascade)
    return ShapedConstellation(
        np.exp(1j * phases), labeling_table(labeling), peak_power_w=peak_power_w, mode=cfg.mode
    )


class XpmGateway(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`convert_pam4_to_qpsk`.

    Stateless; ``fit`` only validates parameters so the gateway can sit in
    a ``sklearn.pipeline.Pipeline``.
    """

    def __init__(self, mode="calibrated", reference_power_w=0.055,
                 reference_phase_rad=1.5 * np.pi, cascade=None):
        self.mode = mode
        self.reference_power_w = reference_power_w
        self.reference_phase_rad = reference_phase_rad
        self.cascade = cascade

    def _cfg(self):
        return XpmModelConfig(self.mode, self.reference_power_w, self.reference_phase_rad)

    def fit(self, X=None, y=None):
        self.config_ = self._cfg()
        self.cascade_ = self.cascade or FiberCascade()
        return self

    def transform(self, X):
        cfg = getattr(self, "config_", None) or self._cfg()
        return convert_pam4_to_qpsk(X, cfg, getattr(self, "cascade_", self.cascade))

    def reference(self, peak_power_w, labeling="gray"):
        return reference_constellation(self._cfg(), self.cascade, peak_power_w, labeling)
