"""Bit-stable output files.

Floats are always written with 17 significant digits and dict keys keep
insertion order, so identical runs produce identical bytes.
"""

import math
import os

import numpy as np

from weingarten.basegrid import save_field


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def dumps(obj):
    """Compact JSON with 17-digit floats (NaN/Infinity as in Python's json module)."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in (obj.tolist() if isinstance(obj, np.ndarray) else obj)) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")


def write_jsonl(path, records):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def _write_csv(path, header, columns):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(fmt_float(v) for v in row) + "\n")


def write_plotdata(dirpath, mfld, z, records=None):
    """1D cuts of the field (one per grid axis through index 0) and the continuation path."""
    os.makedirs(dirpath, exist_ok=True)
    coords = mfld.coords
    if z.ndim == 1:
        _write_csv(os.path.join(dirpath, "cut_axis1.csv"), ["u1", "z"], [coords[0], z])
    else:
        _write_csv(os.path.join(dirpath, "cut_axis1.csv"), ["u1", "z"], [coords[0], z[:, 0]])
        _write_csv(os.path.join(dirpath, "cut_axis2.csv"), ["u2", "z"], [coords[1], z[0, :]])
    if records:
        acc = [r for r in records if "event" not in r]
        keys = ["s", "iter", "residual", "kappa_max", "gradmax", "tau_min", "min_shape_eig"]
        cols = [[float("nan") if r.get(k) is None else r[k] for r in acc] for k in keys]
        _write_csv(os.path.join(dirpath, "path.csv"), keys, cols)


def emit_outputs(outdir, mfld=None, z=None, records=None, report=None, config=None):
    """Write whatever parts of a run are available; returns the list of written paths."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    if z is not None:
        p = os.path.join(outdir, "solution.csv")
        save_field(p, z)
        written.append(p)
    if records is not None:
        p = os.path.join(outdir, "diagnostics.jsonl")
        write_jsonl(p, records)
        written.append(p)
    if report is not None:
        p = os.path.join(outdir, "report.json")
        write_json(p, report)
        written.append(p)
    if config is not None:
        p = os.path.join(outdir, "config.echo.json")
        write_json(p, config)
        written.append(p)
    if z is not None and mfld is not None:
        write_plotdata(os.path.join(outdir, "plotdata"), mfld, np.asarray(z), records)
        written.append(os.path.join(outdir, "plotdata"))
    return written
