"""Tx -> gateway -> Rx -> DSP -> demapper -> metrics for one grid cell.

Every cell draws its data from one PRBS: the first ``dnn.train_bits`` bits
form the training segment, the next ``sweep.test_bits`` the test segment.
Transmitter noise for a segment is keyed by ``(seed, segment)`` only, so
cells that differ in SNR or power see the same unit-variance noise draws,
scaled.  Comparisons across the grid are therefore paired.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..demappers import HardDemapper, LinearEqualizerDemapper, NeuralDemapper
from ..demappers.mlp import TrainingDivergedError
from ..gateway import convert_pam4_to_qpsk, reference_constellation
from ..metrics import ber_count, gmi_from_llrs
from ..rx import apply_rx_impairments, run_dsp_chain
from ..signal import prbs_generate, stage_rng
from ..tx import (
    Pam4LevelMap,
    TxConfig,
    apply_gain,
    gain_for_peak_power,
    levels_to_bits,
    map_bits_to_levels,
    synthesize_pam4,
)

CSV_FIELDS = ["snr_db", "power_mw", "demapper", "ber", "ber_ci_lo", "ber_ci_hi",
              "gmi", "n_bits", "seed", "config_hash"]


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"stage {stage!r} failed: {exc}")
        self.stage = stage


@dataclass
class Segment:
    symbols: np.ndarray
    bits: np.ndarray  # (n, 2)
    levels: np.ndarray
    info: dict


def simulate_segment(cfg, bits, snr_db, power_mw, seed, segment):
    """Push one bit block through the link; returns post-DSP symbols."""
    tx = cfg.tx
    level_map = Pam4LevelMap(tx.launch_peak_mw * 1e-3, tx.labeling)
    stage = "tx"
    try:
        levels = map_bits_to_levels(bits, level_map)
        tx_cfg = TxConfig(tx.symbol_rate, tx.samples_per_symbol, snr_db,
                          gain_for_peak_power(power_mw, tx.launch_peak_mw))
        w = synthesize_pam4(levels, tx_cfg, level_map, stage_rng(seed, "tx_noise", segment))
        w = apply_gain(w, tx_cfg.edfa_gain_db)
        stage = "gateway"
        xpm, cascade = cfg.gateway.xpm(), cfg.gateway.cascade()
        q = convert_pam4_to_qpsk(w, xpm, cascade)
        stage = "rx"
        q = apply_rx_impairments(q, cfg.rx.impairments_model(), stage_rng(seed, "rx", segment))
        stage = "dsp"
        ref = reference_constellation(xpm, cascade, power_mw * 1e-3, tx.labeling)
        y, info = run_dsp_chain(q, ref, ref.points[levels], cfg.dsp.dsp())
    except Exception as exc:  # noqa: BLE001
        raise StageError(stage, exc) from exc
    return Segment(y, levels_to_bits(levels, level_map).reshape(-1, 2), levels, info)


def simulate_cell(cfg, snr_db, power_mw, seed):
    """Training and test segments for one (SNR, power, seed)."""
    n_train = cfg.dnn.train_bits
    bits = prbs_generate(cfg.tx.prbs_order, n_train + cfg.sweep.test_bits, seed)
    train = simulate_segment(cfg, bits[:n_train], snr_db, power_mw, seed, "train")
    test = simulate_segment(cfg, bits[n_train:], snr_db, power_mw, seed, "test")
    return train, test


def make_neural(cfg, seed):
    d = cfg.dnn
    return NeuralDemapper(d.n_blocks, d.width, d.dropout, d.learning_rate, d.beta1,
                          d.beta2, d.epsilon, d.batch_size, d.epochs, seed)


def fit_demapper(name, cfg, train, power_mw, seed):
    if name == "hard":
        ref = reference_constellation(cfg.gateway.xpm(), cfg.gateway.cascade(),
                                      power_mw * 1e-3, cfg.tx.labeling)
        return HardDemapper(ref).fit()
    if name == "linear":
        n = min(cfg.linear.n_pilots, train.symbols.size)
        dem = LinearEqualizerDemapper(cfg.linear.bias, cfg.linear.llr, cfg.tx.labeling)
        return dem.fit(train.symbols[:n], train.bits[:n])
    if name == "dnn":
        return make_neural(cfg, seed).fit(train.symbols, train.bits)
    raise ValueError(f"unknown demapper {name!r}")


def score(dem, test):
    llr = dem.predict_llr(test.symbols)
    decided = dem.predict(test.symbols)
    ber = ber_count(decided.ravel(), test.bits.ravel())
    gmi = gmi_from_llrs(llr.ravel(), test.bits.ravel())
    return ber, gmi, llr


def make_row(snr_db, power_mw, name, ber, gmi, seed, config_hash):
    return {
        "snr_db": float(snr_db), "power_mw": float(power_mw), "demapper": name,
        "ber": ber.ber if ber else float("nan"),
        "ber_ci_lo": ber.ci_lo if ber else float("nan"),
        "ber_ci_hi": ber.ci_hi if ber else float("nan"),
        "gmi": gmi.gmi_per_bit if gmi else float("nan"),
        "n_bits": ber.total_bits if ber else 0,
        "seed": int(seed), "config_hash": config_hash,
    }


def run_single(cfg, snr_db, power_mw, seed=0, demappers=None, models=None,
               return_symbols=False):
    """Rows for every requested demapper at one grid point.

    ``models`` maps demapper name to an already fitted estimator (used by
    the train-once variant).  A diverged DNN yields a NaN row instead of
    aborting the sweep.
    """
    demappers = demappers or cfg.sweep.demappers
    h = cfg.hash()
    train, test = simulate_cell(cfg, snr_db, power_mw, seed)
    rows = []
    for name in demappers:
        try:
            dem = (models or {}).get(name) or fit_demapper(name, cfg, train, power_mw, seed)
            ber, gmi, _ = score(dem, test)
        except TrainingDivergedError:
            ber = gmi = None
        rows.append(make_row(snr_db, power_mw, name, ber, gmi, seed, h))
    if return_symbols:
        return rows, test
    return rows


def _run_point(cfg, snr, power, seed, models):
    return run_single(cfg, snr, power, seed, models=models)


def run_sweep(cfg, snrs=None, powers=None, seeds=None):
    """Full grid; rows sorted by (power, demapper, snr, seed)."""
    from joblib import Parallel, delayed

    cfg.validate()
    snrs = snrs if snrs is not None else cfg.sweep.pam4_snr_db
    powers = powers if powers is not None else cfg.sweep.power_mw
    seeds = seeds if seeds is not None else cfg.sweep.seeds
    once = {}
    if cfg.dnn.train_mode == "once" and "dnn" in cfg.sweep.demappers:
        for p in powers:
            for s in seeds:
                train, _ = simulate_cell(cfg, cfg.dnn.train_snr_db, p, s)
                once[(p, s)] = {"dnn": make_neural(cfg, s).fit(train.symbols, train.bits)}
    jobs = [(snr, p, s) for p in powers for snr in snrs for s in seeds]
    results = Parallel(n_jobs=cfg.workers)(
        delayed(_run_point)(cfg, snr, p, s, once.get((p, s))) for snr, p, s in jobs
    )
    rows = [r for rs in results for r in rs]
    rows.sort(key=lambda r: (r["power_mw"], r["demapper"], r["snr_db"], r["seed"]))
    return rows
