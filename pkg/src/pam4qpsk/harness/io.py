"""CSV/JSON writers with deterministic formatting."""

import csv
import json
import math
import sys
from pathlib import Path

import numpy as np


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, rows, fields):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            vals = [r[f] for f in fields] if isinstance(r, dict) else r
            w.writerow([fmt(v) for v in vals])
    return path


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n")
    return path


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_manifest(out_dir, command, cfg, outputs, extra=None):
    from .. import __version__

    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "outputs": sorted(str(Path(p).name) for p in outputs),
        "versions": {"pam4qpsk": __version__, "numpy": np.__version__},
    }
    if extra:
        manifest.update(extra)
    return write_json(Path(out_dir) / f"manifest_{command}.json", manifest)
