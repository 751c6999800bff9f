"""File formats: CSV with JSON schema sidecars, parameter files, state blobs.

Every CSV artifact gets a ``<name>.meta.json`` sidecar describing its
columns (name and unit) plus free-form metadata, and numbers are written
with 17 significant digits so a round trip through text is lossless.
Writes are atomic: content goes to a temporary file in the target
directory which is then renamed over the destination.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile

import numpy as np

from .exceptions import ConfigError
from .fock import DensityMatrix
from .response import SpectrumGrid

_FLOAT_FMT = "%.17g"


# ---------------------------------------------------------------------------
# Atomic writes
# ---------------------------------------------------------------------------

def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path, blob: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# CSV with schema sidecar
# ---------------------------------------------------------------------------

def format_csv(columns, rows) -> str:
    """Render rows as CSV text with a header; floats keep 17 digits."""
    names = [c[0] for c in columns]
    lines = [",".join(names)]
    for row in rows:
        cells = []
        for value in row:
            if isinstance(value, str):
                cells.append(value)
            elif value is None or (isinstance(value, float) and np.isnan(value)):
                cells.append("nan")
            else:
                cells.append(_FLOAT_FMT % float(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(path, columns, rows, metadata: dict | None = None) -> int:
    """Write a CSV plus its ``.meta.json`` schema sidecar; returns the row count.

    ``columns`` is a sequence of (name, unit) pairs.
    """
    rows = list(rows)
    atomic_write_text(path, format_csv(columns, rows))
    sidecar = {
        "columns": [{"name": n, "unit": u} for n, u in columns],
        "rows": len(rows),
    }
    if metadata:
        sidecar.update(metadata)
    atomic_write_text(str(path) + ".meta.json",
                      json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return len(rows)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV written by :func:`write_csv`; returns (names, array)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty CSV") from None
        data = [[float(cell) for cell in row] for row in reader if row]
    return names, np.array(data) if data else np.empty((0, len(names)))


# ---------------------------------------------------------------------------
# Spectrum grids and peaks
# ---------------------------------------------------------------------------

def write_spectrum_grid(path, grid: SpectrumGrid, metadata: dict | None = None) -> int:
    """Spectrum map in long format (bias, frequency_Hz, amplitude) + sidecar.

    Axis arrays and branch/coupling metadata go to the sidecar so a grid
    can be reconstructed exactly.
    """
    rows = []
    for i, b in enumerate(grid.bias):
        for j, f in enumerate(grid.probe_hz):
            rows.append((b, f, grid.amplitude[i, j]))
    meta = {
        "coefficient": grid.coefficient,
        "bias_kind": grid.bias_kind,
        "bias_axis": [float(x) for x in grid.bias],
        "probe_axis_hz": [float(x) for x in grid.probe_hz],
    }
    for key, arr in (("g_r_rad_per_s", grid.g_r),
                     ("branch_minus_hz", grid.branch_minus_hz),
                     ("branch_plus_hz", grid.branch_plus_hz)):
        if arr is not None:
            meta[key] = [float(x) for x in arr]
    if metadata:
        meta.update(metadata)
    bias_unit = "rad" if grid.bias_kind == "phi_ex" else "rad/s"
    return write_csv(path, [("bias", bias_unit), ("frequency_Hz", "Hz"),
                            ("amplitude", "arb")], rows, meta)


def read_spectrum_grid(path) -> SpectrumGrid:
    """Rebuild a :class:`SpectrumGrid` from a long-format CSV and its sidecar."""
    names, data = read_csv(path)
    if names[:3] != ["bias", "frequency_Hz", "amplitude"]:
        raise ConfigError(f"{path}: not a spectrum grid CSV")
    sidecar_path = str(path) + ".meta.json"
    meta = {}
    if os.path.exists(sidecar_path):
        with open(sidecar_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    if "bias_axis" in meta and "probe_axis_hz" in meta:
        bias = np.array(meta["bias_axis"], dtype=float)
        probe = np.array(meta["probe_axis_hz"], dtype=float)
    else:
        bias = np.unique(data[:, 0])
        probe = np.unique(data[:, 1])
    amp = data[:, 2].reshape(bias.size, probe.size)

    def optional(key):
        return np.array(meta[key], dtype=float) if key in meta else None

    return SpectrumGrid(
        bias=bias, probe_hz=probe, amplitude=amp,
        coefficient=meta.get("coefficient", "unknown"),
        bias_kind=meta.get("bias_kind", "phi_ex"),
        g_r=optional("g_r_rad_per_s"),
        branch_minus_hz=optional("branch_minus_hz"),
        branch_plus_hz=optional("branch_plus_hz"))


def write_peaks(path, peaks: np.ndarray, metadata: dict | None = None) -> int:
    return write_csv(path, [("phi_ex", "rad"), ("frequency_Hz", "Hz"),
                            ("weight", "1")], peaks, metadata)


def read_peaks(path) -> np.ndarray:
    names, data = read_csv(path)
    if len(names) < 2:
        raise ConfigError(f"{path}: not a peaks CSV")
    if data.shape[1] == 2:
        data = np.hstack([data, np.ones((data.shape[0], 1))])
    return data


# ---------------------------------------------------------------------------
# Computation records
# ---------------------------------------------------------------------------

RECORD_COLUMNS = [
    ("phi_ex", "rad"), ("phi_star", "rad"), ("M_star", "H"), ("L_star", "H"),
    ("omega_a", "rad/s"), ("omega_b", "rad/s"), ("g_r", "rad/s"),
    ("omega_plus", "rad/s"), ("omega_minus", "rad/s"),
    ("omega_plus_rwa", "rad/s"), ("omega_minus_rwa", "rad/s"),
]


def record_rows(coefficients) -> list[tuple]:
    """Rows matching :data:`RECORD_COLUMNS` for a list of ModeCoefficients."""
    from .circuit import eigenmodes, rwa_modes
    from .exceptions import UnstableModeError

    rows = []
    for c in coefficients:
        rec = c.record
        try:
            wp, wm = eigenmodes(c)
        except UnstableModeError:
            wp, wm = float("nan"), float("nan")
        wpr, wmr = rwa_modes(c)
        rows.append((rec.phi_ex, rec.phi_star, rec.M_star, rec.L_star,
                     c.omega_a, c.omega_b, c.g_r, wp, wm, wpr, wmr))
    return rows


# ---------------------------------------------------------------------------
# Wigner grids and photon distributions
# ---------------------------------------------------------------------------

def write_wigner(path, grid, metadata: dict | None = None) -> int:
    rows = []
    for i, q in enumerate(grid.q):
        for j, p in enumerate(grid.p):
            rows.append((q, p, grid.values[i, j]))
    return write_csv(path, [("q", "1"), ("p", "1"), ("wigner", "1")],
                     rows, metadata)


def write_fock_distribution(path, probabilities, metadata: dict | None = None) -> int:
    rows = [(n, p) for n, p in enumerate(probabilities)]
    return write_csv(path, [("n", "1"), ("probability", "1")], rows, metadata)


# ---------------------------------------------------------------------------
# Binary state blobs
# ---------------------------------------------------------------------------

_BLOB_MAGIC = b"CSDM"


def density_matrix_to_blob(rho: DensityMatrix) -> bytes:
    """Serialize a density matrix (little-endian, see docs/formats.md).

    Layout: magic ``CSDM``, u32 mode count, u32 levels per mode, then the
    row-major complex128 matrix entries (real, imag) over the product basis.
    """
    parts = [_BLOB_MAGIC, struct.pack("<I", len(rho.dims))]
    parts += [struct.pack("<I", d) for d in rho.dims]
    parts.append(np.ascontiguousarray(rho.matrix, dtype="<c16").tobytes())
    return b"".join(parts)


def density_matrix_from_blob(blob: bytes) -> DensityMatrix:
    if blob[:4] != _BLOB_MAGIC:
        raise ConfigError("not a density-matrix blob")
    (n_modes,) = struct.unpack_from("<I", blob, 4)
    dims = struct.unpack_from(f"<{n_modes}I", blob, 8)
    offset = 8 + 4 * n_modes
    dim = int(np.prod(dims))
    matrix = np.frombuffer(blob, dtype="<c16", count=dim * dim, offset=offset)
    return DensityMatrix(dims=tuple(dims), matrix=matrix.reshape(dim, dim).copy())


def save_density_matrix(path, rho: DensityMatrix) -> None:
    atomic_write_bytes(path, density_matrix_to_blob(rho))


def load_density_matrix(path) -> DensityMatrix:
    with open(path, "rb") as fh:
        return density_matrix_from_blob(fh.read())
