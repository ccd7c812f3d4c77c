"""CSV and JSON artifacts.

Floats are written with ``repr`` so every value reloads bit-for-bit.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .plants import FreqResponseData

RESPONSE_HEADER = ("omega_rad_s", "re", "im")
STEP_HEADER = ("t_s", "y")


def _fmt(x):
    return repr(float(x))


def write_response_csv(path, data):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESPONSE_HEADER)
        for om, z in zip(data.omegas, data.samples):
            w.writerow((_fmt(om), _fmt(z.real), _fmt(z.imag)))
    return path


def read_response_csv(path):
    """Load a response CSV written by :func:`write_response_csv` (or by hand)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != RESPONSE_HEADER:
        raise ValidationError(f"{path}: header must be {','.join(RESPONSE_HEADER)}")
    body = [r for r in rows[1:] if r]
    try:
        arr = np.array([[float(c) for c in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValidationError(f"{path}: every row needs exactly three columns")
    return FreqResponseData(arr[:, 0], arr[:, 1] + 1j * arr[:, 2])


def write_columns_csv(path, header, columns):
    path = Path(path)
    cols = [np.asarray(c) for c in columns]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([str(int(v)) if isinstance(v, (int, np.integer)) else _fmt(v) for v in row])
    return path


def read_columns_csv(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = tuple(rows[0])
    data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return header, data


def write_step_csv(path, t, y):
    return write_columns_csv(path, STEP_HEADER, (t, y))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj):
    path = Path(path)
    text = json.dumps(_clean(obj), indent=2, sort_keys=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
