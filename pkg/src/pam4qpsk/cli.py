"""Command-line entry point: ``pam4qpsk <subcommand> [--config FILE] [--<key> VALUE ...]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness.config import ExperimentConfig, apply_overrides, flat_keys
from .harness.figures import calibrate, format_calibration, run_fig4, run_fig6
from .harness.io import write_csv, write_json, write_manifest
from .harness.pipeline import CSV_FIELDS, make_neural, run_sweep, simulate_cell, simulate_segment
from .signal import prbs_generate


def _add_config_flags(p):
    p.add_argument("--config", help="JSON or YAML experiment config")
    for key, val in flat_keys().items():
        p.add_argument(f"--{key}", dest=f"cfg__{key}", metavar=type(val).__name__.upper(),
                       help=f"(default: {val!r})")


def _point_flags(p, n_symbols=False):
    p.add_argument("--snr-db", type=float, default=25.0)
    p.add_argument("--power-mw", type=float, default=55.0)
    p.add_argument("--seed", type=int, default=0)
    if n_symbols:
        p.add_argument("--n-symbols", type=int, default=4096)


def build_parser():
    ap = argparse.ArgumentParser(prog="pam4qpsk", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    specs = {
        "calibrate": "XPM calibration report (both modes, every sweep power)",
        "convert": "one-shot PAM4 -> QPSK conversion, dump gateway output symbols",
        "train-dnn": "train the neural demapper at one operating point and save it",
        "sweep": "grid sweep over SNR x power x demapper -> CSV",
        "fig4": "constellation dumps for the SNR x power grid",
        "fig6": "BER/GMI curves and GMI-threshold gains",
        "selftest": "fast built-in consistency checks",
    }
    for name, help_ in specs.items():
        p = sub.add_parser(name, help=help_)
        _add_config_flags(p)
        if name == "convert":
            _point_flags(p, n_symbols=True)
        if name == "train-dnn":
            _point_flags(p)
    return ap


def resolve_config(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {k[5:]: v for k, v in vars(args).items()
                 if k.startswith("cfg__") and v is not None}
    return apply_overrides(cfg, overrides).validate()


def cmd_calibrate(cfg, args):
    report = calibrate(cfg)
    print(format_calibration(report))
    out = Path(cfg.output_dir)
    f = write_json(out / "calibration.json", report)
    write_manifest(out, "calibrate", cfg, [f])


def cmd_convert(cfg, args):
    n = args.n_symbols
    bits = prbs_generate(cfg.tx.prbs_order, 2 * n, args.seed)
    c = ExperimentConfig.from_dict(cfg.to_dict())
    c.dsp.foc = c.dsp.cpr = False
    c.dsp.prefix_symbols = 0
    seg = simulate_segment(c, bits, args.snr_db, args.power_mw, args.seed, "convert")
    rows = [(z.real, z.imag, int(lv), f"{b[0]}{b[1]}")
            for z, lv, b in zip(seg.symbols, seg.levels, seg.bits)]
    out = Path(cfg.output_dir)
    f = write_csv(out / f"convert_snr{args.snr_db:g}_p{args.power_mw:g}.csv", rows,
                  ["i", "q", "level", "bits"])
    write_manifest(out, "convert", cfg, [f])
    print(f"wrote {len(rows)} symbols to {f}")


def cmd_train_dnn(cfg, args):
    train, test = simulate_cell(cfg, args.snr_db, args.power_mw, args.seed)
    dem = make_neural(cfg, args.seed).fit(train.symbols, train.bits,
                                          eval_set=(test.symbols, test.bits))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"dnn_snr{args.snr_db:g}_p{args.power_mw:g}_s{args.seed}"
    model_path = out / f"{stem}.mlp"
    dem.model_.save(model_path)
    curve = [(i + 1, a, b) for i, (a, b) in
             enumerate(zip(dem.loss_curve_, dem.test_loss_curve_))]
    f = write_csv(out / f"{stem}_loss.csv", curve, ["epoch", "train_loss", "test_loss"])
    write_manifest(out, "train-dnn", cfg, [model_path, f])
    print(f"model ({dem.model_.n_params} parameters) saved to {model_path}")


def cmd_sweep(cfg, args):
    rows = run_sweep(cfg)
    out = Path(cfg.output_dir)
    f = write_csv(out / "sweep.csv", rows, CSV_FIELDS)
    write_manifest(out, "sweep", cfg, [f])
    print(f"{len(rows)} rows written to {f}")


def cmd_fig4(cfg, args):
    summary = run_fig4(cfg)
    for cell in summary:
        stds = [cell["levels"][str(k)]["std_rad"] if cell["levels"][str(k)] else float("nan")
                for k in range(4)]
        print(f"SNR {cell['snr_db']:5.1f} dB  P {cell['power_mw']:5.1f} mW  "
              "phase std per level: " + " ".join(f"{s:.4f}" for s in stds))


def cmd_fig6(cfg, args):
    _, gains = run_fig6(cfg)
    print(json.dumps(gains, indent=2))


def cmd_selftest(cfg, args):
    from .selftest import run_selftest

    ok = run_selftest(verbose=True)
    if not ok:
        raise SystemExit(1)


COMMANDS = {
    "calibrate": cmd_calibrate, "convert": cmd_convert, "train-dnn": cmd_train_dnn,
    "sweep": cmd_sweep, "fig4": cmd_fig4, "fig6": cmd_fig6, "selftest": cmd_selftest,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    COMMANDS[args.command](cfg, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
