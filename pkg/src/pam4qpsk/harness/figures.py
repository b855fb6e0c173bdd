"""Figure-reproduction pipelines: calibration report, constellation grid, BER/GMI curves."""

from __future__ import annotations

import copy
from pathlib import Path

import numpy as np

from ..gateway import (
    XpmModelConfig,
    cascade_effective_length,
    effective_length,
    reference_constellation,
    xpm_phase,
)
from ..metrics import phase_stats_per_level
from .io import write_csv, write_json, write_manifest
from .pipeline import CSV_FIELDS, run_single, run_sweep


def calibrate(cfg):
    """Both XPM modes at every sweep power.

    Returns a dict with the effective lengths, the calibrated rad/W scale
    and one record per power (phase of the top level, spacing in units of
    pi, physical/calibrated ratio).
    """
    cascade = cfg.gateway.cascade()
    cal = XpmModelConfig("calibrated", cfg.gateway.reference_power_mw * 1e-3,
                         cfg.gateway.reference_phase_rad)
    phys = XpmModelConfig("physical")
    records = []
    for p in sorted({*cfg.sweep.power_mw, cfg.gateway.reference_power_mw}):
        c3 = xpm_phase(p * 1e-3, cal, cascade)
        p3 = xpm_phase(p * 1e-3, phys, cascade)
        records.append({
            "power_mw": float(p),
            "calibrated_phase3_rad": c3,
            "calibrated_spacing_over_pi": c3 / 3 / np.pi,
            "physical_phase3_rad": p3,
            "physical_spacing_over_pi": p3 / 3 / np.pi,
            "physical_over_calibrated": p3 / c3,
            "calibrated_phases_over_pi": (reference_constellation(cal, cascade, p * 1e-3).phases
                                          / np.pi).tolist(),
        })
    return {
        "leff_km": [effective_length(f) for f in cascade.fibers],
        "cascade_leff_km": cascade_effective_length(cascade),
        "phase_scale_rad_per_w": cal.phase_scale,
        "records": records,
        "note": ("physical mode evaluates 2*gamma*L_eff*P from the fiber table and falls "
                 "short of the calibrated 3*pi/2 at the reference power; the calibrated "
                 "mode is used for all reproduction runs"),
    }


def format_calibration(report):
    lines = [
        "L_eff per fiber [km]: " + ", ".join(f"{x:.4f}" for x in report["leff_km"]),
        f"cascade L_eff [km]: {report['cascade_leff_km']:.4f}",
        f"calibrated phase scale [rad/W]: {report['phase_scale_rad_per_w']:.4f}",
        f"{'P [mW]':>8} {'cal dphi3':>10} {'cal sp/pi':>10} {'phys dphi3':>11} "
        f"{'phys sp/pi':>11} {'phys/cal':>9}",
    ]
    for r in report["records"]:
        lines.append(
            f"{r['power_mw']:8.2f} {r['calibrated_phase3_rad']:10.4f} "
            f"{r['calibrated_spacing_over_pi']:10.4f} {r['physical_phase3_rad']:11.4f} "
            f"{r['physical_spacing_over_pi']:11.4f} {r['physical_over_calibrated']:9.4f}"
        )
    lines.append("note: " + report["note"])
    return "\n".join(lines)


def run_fig4(cfg, out_dir=None):
    """Post-DSP constellation dumps (i, q, level, bits) for each SNR x power cell."""
    out = Path(out_dir or cfg.output_dir) / "fig4"
    c = copy.deepcopy(cfg)
    c.sweep.demappers = ["hard"]
    files, summary = [], []
    for snr in cfg.fig4.pam4_snr_db:
        for p in cfg.fig4.power_mw:
            _, test = run_single(c, snr, p, cfg.sweep.seeds[0], return_symbols=True)
            n = min(cfg.dump_symbols, test.symbols.size)
            y = test.symbols[:n]
            bits = ["".join(map(str, b)) for b in test.bits[:n]]
            rows = [(z.real, z.imag, int(lv), b) for z, lv, b in zip(y, test.levels[:n], bits)]
            path = out / f"constellation_snr{snr:g}_p{p:g}.csv"
            files.append(write_csv(path, rows, ["i", "q", "level", "bits"]))
            stats = phase_stats_per_level(test.symbols, test.levels)
            summary.append({
                "snr_db": float(snr), "power_mw": float(p), "file": path.name,
                "levels": {str(k): (None if v is None else
                                    {"mean_rad": v[0], "std_rad": v[1], "count": v[2]})
                           for k, v in stats.items()},
            })
    files.append(write_json(out / "fig4_summary.json", summary))
    write_manifest(out, "fig4", cfg, files)
    return summary


def gmi_crossing(snrs, gmis, threshold):
    """First SNR at which the (seed-averaged) GMI curve reaches ``threshold``.

    Linear interpolation between neighbouring points; ``None`` when the
    curve starts above the threshold or never reaches it.
    """
    snrs = np.asarray(snrs, dtype=float)
    g = np.asarray(gmis, dtype=float)
    order = np.argsort(snrs)
    snrs, g = snrs[order], g[order]
    if g.size == 0 or np.isnan(g[0]) or g[0] >= threshold:
        return None
    for i in range(1, g.size):
        if np.isnan(g[i]):
            continue
        if g[i] >= threshold:
            g0, g1 = g[i - 1], g[i]
            return float(snrs[i - 1] + (threshold - g0) * (snrs[i] - snrs[i - 1]) / (g1 - g0))
    return None


def curves_from_rows(rows, key):
    """``{(demapper, power): (snrs, seed-averaged values)}``."""
    acc = {}
    for r in rows:
        acc.setdefault((r["demapper"], r["power_mw"]), {}).setdefault(r["snr_db"], []).append(r[key])
    out = {}
    for k, d in acc.items():
        snrs = sorted(d)
        out[k] = (np.array(snrs), np.array([np.mean(d[s]) for s in snrs]))
    return out


def fig6_gains(rows, cfg):
    thr = cfg.fig6.gmi_threshold
    curves = curves_from_rows(rows, "gmi")
    pu, ps = float(cfg.fig6.unshaped_power_mw), float(cfg.fig6.shaped_power_mw)
    cross = {f"{d}@{p:g}": gmi_crossing(*curves[(d, p)], thr) for (d, p) in curves}
    lin_u, dnn_u, dnn_s = (cross.get(f"linear@{pu:g}"), cross.get(f"dnn@{pu:g}"),
                           cross.get(f"dnn@{ps:g}"))
    return {
        "gmi_threshold": thr,
        "crossings_db": cross,
        "dnn_over_linear_db": None if lin_u is None or dnn_u is None else lin_u - dnn_u,
        "shaping_gain_db": None if dnn_u is None or dnn_s is None else dnn_u - dnn_s,
    }


def run_fig6(cfg, out_dir=None, snrs=None, seeds=None):
    """BER and GMI vs PAM4 SNR for linear/DNN at the unshaped and shaped powers."""
    out = Path(out_dir or cfg.output_dir) / "fig6"
    c = copy.deepcopy(cfg)
    c.sweep.demappers = ["linear", "dnn"]
    c.rx.impairments = False
    powers = [float(cfg.fig6.shaped_power_mw), float(cfg.fig6.unshaped_power_mw)]
    rows = run_sweep(c, snrs=snrs, powers=powers, seeds=seeds)
    files = [write_csv(out / "fig6_rows.csv", rows, CSV_FIELDS)]
    for key in ("ber", "gmi"):
        curves = curves_from_rows(rows, key)
        names = sorted(curves)
        snr_axis = curves[names[0]][0]
        table = [[s] + [curves[n][1][i] for n in names] for i, s in enumerate(snr_axis)]
        header = ["snr_db"] + [f"{d}@{p:g}mW" for d, p in names]
        files.append(write_csv(out / f"fig6_{key}.csv", table, header))
    gains = fig6_gains(rows, c)
    files.append(write_json(out / "fig6_summary.json", gains))
    write_manifest(out, "fig6", c, files)
    return rows, gains
