"""On-disk formats: KSF1 field snapshots and the diagnostics CSV.

KSF1 layout (little-endian)::

    magic  b"KSF1"     4 bytes
    version u32 = 1
    nx, ny  u64
    Lx, Ly, t f64
    nx*ny f64 samples, row-major with x fastest
"""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .diagnostics import DiagRecord
from .errors import BadMagic, SchemaError, TruncatedFile, ValidationError, VersionMismatch
from .grid import Field, Grid

MAGIC = b"KSF1"
VERSION = 1
_HEADER = struct.Struct("<4sIQQddd")


def snapshot_bytes(f: Field, t: float) -> bytes:
    g = f.grid
    header = _HEADER.pack(MAGIC, VERSION, g.nx, g.ny, g.Lx, g.Ly, float(t))
    return header + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def write_snapshot(f: Field, t: float, path) -> None:
    Path(path).write_bytes(snapshot_bytes(f, t))


def parse_snapshot(data: bytes, grid: Grid | None = None):
    if len(data) < 4:
        raise TruncatedFile("file shorter than the magic bytes")
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < _HEADER.size:
        raise TruncatedFile("file shorter than the KSF1 header")
    _, version, nx, ny, Lx, Ly, t = _HEADER.unpack_from(data)
    if version != VERSION:
        raise VersionMismatch(f"KSF version {version}, expected {VERSION}")
    expected = _HEADER.size + 8 * nx * ny
    if len(data) < expected:
        raise TruncatedFile(f"payload has {len(data) - _HEADER.size} bytes, expected {8 * nx * ny}")
    if len(data) > expected:
        raise ValidationError(f"{len(data) - expected} trailing bytes after payload")
    if grid is None:
        grid = Grid(int(nx), int(ny), Lx, Ly)
    elif (grid.nx, grid.ny) != (nx, ny) or (grid.Lx, grid.Ly) != (Lx, Ly):
        raise ValidationError(
            f"snapshot grid {nx}x{ny} on [{Lx}, {Ly}] does not match "
            f"{grid.nx}x{grid.ny} on [{grid.Lx}, {grid.Ly}]"
        )
    values = np.frombuffer(data, dtype="<f8", count=nx * ny, offset=_HEADER.size)
    return Field(grid, values.reshape(int(ny), int(nx))), t


def read_snapshot(path, grid: Grid | None = None):
    """Returns ``(field, t)``; checks the header against ``grid`` if given."""
    return parse_snapshot(Path(path).read_bytes(), grid)


# ---------------------------------------------------------------------------
# diagnostics CSV

CSV_COLUMNS = [
    "step", "time", "mass", "min_rho", "max_rho", "energy", "d_energy", "diss_rho",
    "diss_c_grad", "diss_c", "l2_rho", "l4_rho", "linf_rho", "dc_dt_l2",
]
_ATTR = {"step": "n", "time": "t"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def csv_header() -> str:
    return ",".join(CSV_COLUMNS) + "\n"


def csv_line(record: DiagRecord) -> str:
    return ",".join(_fmt(getattr(record, _ATTR.get(c, c))) for c in CSV_COLUMNS) + "\n"


def write_diag_csv(records) -> bytes:
    return (csv_header() + "".join(csv_line(r) for r in records)).encode()


def parse_diag_csv(text: str) -> list:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_COLUMNS:
        raise SchemaError("header", f"unexpected diagnostics header {header}")
    out = []
    for row in reader:
        values = {}
        for col, cell in zip(CSV_COLUMNS, row):
            key = _ATTR.get(col, col)
            if col == "step":
                values[key] = int(cell)
            else:
                values[key] = float(cell) if cell != "" else None
        out.append(DiagRecord(**values))
    return out


def read_diag_csv(path) -> list:
    return parse_diag_csv(Path(path).read_text())


class CsvSink:
    """Diagnostics sink writing one flushed line per record."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._fh.write(csv_header())
        self._fh.flush()
        self.records = []

    def emit(self, record):
        self.records.append(record)
        self._fh.write(csv_line(record))
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
