"""On-disk formats: time-series CSV, summary JSON and binary checkpoints.

Every float is written with 17 significant digits so files round-trip exactly.

Checkpoint layout: one line of JSON header terminated by ``\\n``, then the
coefficients as little-endian float64 (re, im) pairs, component-major, with k
in lexicographic order over [-M/2+1, M/2-1]^3 (Nyquist modes are not stored).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsSample
from .errors import ConfigurationError
from .spectral import GridSpec, SpectralVelocity

CHECKPOINT_FORMAT = "tamed_ns-checkpoint"
NORMALIZATION_TAG = "u_hat(k) = (2pi)^-3 int u(x) exp(-i k.x) dx"


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj):
    Path(path).write_text(dumps(obj) + "\n")


def write_timeseries(path, samples):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for s in samples:
            row = s.csv_row()
            fh.write(",".join([fmt_float(v) for v in row[:-1]] + [str(int(row[-1]))]) + "\n")


def read_timeseries(path) -> list[DiagnosticsSample]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ConfigurationError(f"unexpected time-series header in {path}: {header}")
        out = []
        for row in reader:
            vals = [float(v) for v in row[:-1]]
            out.append(DiagnosticsSample(*vals, activation=bool(int(row[-1]))))
    return out


def _full_indices(M):
    ks = np.arange(-M // 2 + 1, M // 2)
    KX, KY, KZ = np.meshgrid(ks, ks, ks, indexing="ij")
    return KX, KY, KZ


def half_to_full(u: SpectralVelocity) -> np.ndarray:
    """Coefficients over the full retained k set, shape (3, M-1, M-1, M-1)."""
    M = u.grid.size
    KX, KY, KZ = _full_indices(M)
    pos = KZ >= 0
    sx = np.where(pos, KX, -KX) % M
    sy = np.where(pos, KY, -KY) % M
    sz = np.abs(KZ)
    vals = u.coeffs[:, sx, sy, sz]
    return np.where(pos, vals, np.conj(vals))


def full_to_half(full: np.ndarray, grid: GridSpec) -> np.ndarray:
    M = grid.size
    KX, KY, KZ = _full_indices(M)
    pos = KZ >= 0
    out = np.zeros((3,) + grid.spectral_shape, complex)
    out[:, KX[pos] % M, KY[pos] % M, KZ[pos]] = full[:, pos]
    return out


def write_checkpoint(path, u: SpectralVelocity, t: float, nu: float, N, step_count: int = 0):
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": 1,
        "grid_size": u.grid.size,
        "time": float(t),
        "nu": float(nu),
        "N": None if N is None else float(N),
        "step_count": int(step_count),
        "normalization": NORMALIZATION_TAG,
        "layout": "component-major; k lexicographic over [-M/2+1, M/2-1]^3; <f8 (re, im) pairs",
    }
    data = half_to_full(u)
    pairs = np.empty(data.shape + (2,), dtype="<f8")
    pairs[..., 0] = data.real
    pairs[..., 1] = data.imag
    with open(path, "wb") as fh:
        fh.write((dumps(header, indent=0).replace("\n", "") + "\n").encode())
        fh.write(pairs.tobytes(order="C"))


def read_checkpoint(path):
    """Return ``(header, SpectralVelocity)``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ConfigurationError(f"{path} is not a checkpoint file")
        if header.get("normalization") != NORMALIZATION_TAG:
            raise ConfigurationError(f"{path}: unsupported normalization")
        grid = GridSpec(int(header["grid_size"]))
        n = grid.size - 1
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != 3 * n**3 * 2:
        raise ConfigurationError(f"{path}: truncated checkpoint payload")
    pairs = raw.reshape(3, n, n, n, 2)
    full = pairs[..., 0] + 1j * pairs[..., 1]
    return header, SpectralVelocity(full_to_half(full, grid), grid, divfree=True)
