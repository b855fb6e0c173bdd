"""Experiment configuration.

Configs are JSON or YAML files whose nested keys mirror the dataclasses
below, e.g.::

    sweep:
      pam4_snr_db: [20, 22, 24]
      power_mw: [38.5, 55]
    dnn:
      epochs: 20

Any leaf can also be overridden on the command line with a flag of the
same dotted name (``--sweep.power_mw 38.5,55``).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..gateway import FiberCascade, FiberSpec, HNLF_A, HNLF_B, XpmModelConfig
from ..rx import CprConfig, DspConfig, RxImpairments


def _fiber_dict(f):
    return {
        "length_km": f.length_km, "gamma_per_w_km": f.gamma_per_w_km,
        "dispersion_ps_nm_km": f.dispersion_ps_nm_km, "slope_ps_nm_km2": f.slope_ps_nm_km2,
        "loss_db_km": f.loss_db_km, "name": f.name,
    }


@dataclass
class TxSection:
    symbol_rate: float = 10e9
    samples_per_symbol: int = 2
    launch_peak_mw: float = 1.0
    labeling: str = "gray"
    prbs_order: int = 31


@dataclass
class GatewaySection:
    mode: str = "calibrated"
    reference_power_mw: float = 55.0
    reference_phase_rad: float = 1.5 * math.pi
    fibers: list = field(default_factory=lambda: [_fiber_dict(HNLF_A), _fiber_dict(HNLF_B)])
    extra_connection_loss_db: float = 0.0

    def xpm(self):
        return XpmModelConfig(self.mode, self.reference_power_mw * 1e-3, self.reference_phase_rad)

    def cascade(self):
        return FiberCascade(tuple(FiberSpec.from_dict(f) for f in self.fibers),
                            self.extra_connection_loss_db)


@dataclass
class RxSection:
    impairments: bool = False
    linewidth_hz: float = 100e3
    freq_offset_hz: float = 0.0
    rx_snr_db: float | None = None

    def impairments_model(self):
        if not self.impairments:
            return RxImpairments.disabled()
        return RxImpairments(self.linewidth_hz, self.freq_offset_hz, self.rx_snr_db)


@dataclass
class DspSection:
    foc: bool = True
    cpr: bool = True
    loop_gain: float = 0.01
    prefix_symbols: int = 256

    def dsp(self):
        return DspConfig(self.foc, CprConfig(self.loop_gain, self.cpr), self.prefix_symbols)


@dataclass
class DnnSection:
    n_blocks: int = 3
    width: int = 32
    dropout: float = 0.1
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 256
    epochs: int = 50
    train_bits: int = 120600
    train_mode: str = "per_cell"  # or "once"
    train_snr_db: float = 25.0


@dataclass
class LinearSection:
    bias: bool = True
    llr: str = "hard"
    n_pilots: int = 4096


@dataclass
class SweepSection:
    pam4_snr_db: list = field(default_factory=lambda: [float(s) for s in range(20, 31)])
    power_mw: list = field(default_factory=lambda: [38.5, 44.0, 49.5, 55.0, 60.5])
    demappers: list = field(default_factory=lambda: ["hard", "linear", "dnn"])
    seeds: list = field(default_factory=lambda: [0])
    test_bits: int = 2**20


@dataclass
class Fig4Section:
    pam4_snr_db: list = field(default_factory=lambda: [20.0, 25.0, 30.0])
    power_mw: list = field(default_factory=lambda: [38.5, 44.0, 49.5, 55.0, 60.5])


@dataclass
class Fig6Section:
    unshaped_power_mw: float = 55.0
    shaped_power_mw: float = 38.5
    gmi_threshold: float = 0.8


@dataclass
class ExperimentConfig:
    tx: TxSection = field(default_factory=TxSection)
    gateway: GatewaySection = field(default_factory=GatewaySection)
    rx: RxSection = field(default_factory=RxSection)
    dsp: DspSection = field(default_factory=DspSection)
    dnn: DnnSection = field(default_factory=DnnSection)
    linear: LinearSection = field(default_factory=LinearSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    fig4: Fig4Section = field(default_factory=Fig4Section)
    fig6: Fig6Section = field(default_factory=Fig6Section)
    output_dir: str = "runs"
    workers: int = 1
    dump_symbols: int = 4096

    def validate(self):
        if not self.sweep.pam4_snr_db or not self.sweep.power_mw or not self.sweep.seeds:
            raise ValueError("sweep axes must be non-empty")
        bad = set(self.sweep.demappers) - {"hard", "linear", "dnn"}
        if bad:
            raise ValueError(f"unknown demapper(s): {sorted(bad)}")
        if self.dnn.train_mode not in ("per_cell", "once"):
            raise ValueError("dnn.train_mode must be 'per_cell' or 'once'")
        if self.dnn.train_bits % 2 or self.sweep.test_bits % 2:
            raise ValueError("bit counts must be even")
        self.gateway.xpm()
        self.gateway.cascade()
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    def hash(self):
        """Identifies the experiment; where outputs go and how many workers run it do not count."""
        d = self.to_dict()
        for k in ("output_dir", "workers"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, default=_json_default)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d):
        return _build(cls, d or {})

    @classmethod
    def load(cls, path):
        text = Path(path).read_text()
        if str(path).endswith((".yaml", ".yml")):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
        return cls.from_dict(data)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _build(cls, d):
    kwargs = {}
    names = {f.name: f for f in dataclasses.fields(cls)}
    for k, v in d.items():
        if k not in names:
            raise KeyError(f"unknown config key {k!r} in {cls.__name__}")
        sub = _section_type(cls, k)
        kwargs[k] = _build(sub, v) if sub is not None else v
    return cls(**kwargs)


def _section_type(cls, name):
    default = cls()
    val = getattr(default, name)
    return type(val) if dataclasses.is_dataclass(val) else None


def flat_keys(cfg=None, prefix=""):
    """Dotted leaf keys with their current values."""
    cfg = cfg if cfg is not None else ExperimentConfig()
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        key = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(v):
            out.update(flat_keys(v, key + "."))
        else:
            out[key] = v
    return out


def parse_value(text, current):
    """Parse a command-line value using the type of the current setting."""
    if isinstance(current, list) and not text.lstrip().startswith("["):
        items = [yaml.safe_load(t) for t in text.split(",") if t.strip()]
        if current and all(isinstance(c, float) for c in current):
            items = [float(x) for x in items]
        return items
    val = yaml.safe_load(text)
    if isinstance(current, float) and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    return val


def apply_overrides(cfg, overrides):
    """Set dotted keys, e.g. ``{"dnn.epochs": "10"}``; values may be strings."""
    for key, raw in overrides.items():
        parts = key.split(".")
        target = cfg
        for p in parts[:-1]:
            target = getattr(target, p)
        if not hasattr(target, parts[-1]):
            raise KeyError(f"unknown config key {key!r}")
        cur = getattr(target, parts[-1])
        val = parse_value(raw, cur) if isinstance(raw, str) else raw
        setattr(target, parts[-1], val)
    return cfg
