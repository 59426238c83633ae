"""Deterministic writers for JSON summaries, CSV tables and PGM heatmaps."""

import csv
import json
import math
from pathlib import Path

import numpy as np


def _plain(value):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        return x
    if isinstance(value, Path):
        return str(value)
    return value


def format_number(x):
    """Shortest round-trip text for a float; ints stay ints."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def write_json(path, payload):
    text = json.dumps(_plain(payload), indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row {row!r} does not match header {header!r}")
            w.writerow([format_number(v) for v in row])


def pgm_bytes(field):
    """Binary P5 image: rows from y = 0, ``round(255 (f - min) / (max - min))``."""
    f = np.asarray(field, dtype=float)
    n_rows, n_cols = f.shape
    lo, hi = float(np.min(f)), float(np.max(f))
    if hi > lo:
        pix = np.rint(255.0 * (f - lo) / (hi - lo))
    else:
        pix = np.zeros_like(f)
    header = f"P5\n{n_cols} {n_rows}\n255\n".encode("ascii")
    return header + np.clip(pix, 0, 255).astype(np.uint8).tobytes(order="C")


def write_pgm(path, field):
    Path(path).write_bytes(pgm_bytes(field))


def read_pgm(path):
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
