"""Matrix files and synthetic data.

Binary layout (little-endian)::

    bytes 0-7    magic b"RNMFMAT1"
    bytes 8-15   rows, uint64
    bytes 16-23  cols, uint64
    bytes 24-    rows*cols float64 values, row-major

CSV files have no header, ',' as delimiter, '.' as decimal separator and one
matrix row per line. Values are written with 17 significant digits, which
round-trips float64 exactly.
"""

import csv
import os
import struct

import numpy as np

from .errors import DataError, ParameterError
from .linalg import as_matrix, make_rng
from .sketch import ColumnSource

MAGIC = b"RNMFMAT1"
HEADER = struct.Struct("<8sQQ")
FORMATS = ("csv", "bin")


def format_from_path(path):
    return "csv" if os.fspath(path).lower().endswith(".csv") else "bin"


def write_matrix(path, A, format=None):
    A = as_matrix(A, finite=True)
    format = format or format_from_path(path)
    if format == "bin":
        rows, cols = A.shape
        with open(path, "wb") as fh:
            fh.write(HEADER.pack(MAGIC, rows, cols))
            fh.write(A.astype("<f8", copy=False).tobytes(order="C"))
    elif format == "csv":
        with open(path, "w", newline="\n") as fh:
            for row in A:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    else:
        raise ParameterError(f"unknown matrix format {format!r}")


def read_bin_header(fh, path=""):
    raw = fh.read(HEADER.size)
    if len(raw) < HEADER.size:
        raise DataError(f"{path}: truncated header ({len(raw)} of {HEADER.size} bytes)")
    magic, rows, cols = HEADER.unpack(raw)
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic!r} at byte 0")
    return rows, cols


def _read_bin(path):
    with open(path, "rb") as fh:
        rows, cols = read_bin_header(fh, path)
        payload = fh.read()
    expected = rows * cols * 8
    if len(payload) != expected:
        raise DataError(
            f"{path}: payload is {len(payload)} bytes at byte {HEADER.size}, expected {expected} for {rows}x{cols}"
        )
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)


def _read_csv(path):
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields:
                continue
            try:
                values = [float(f) for f in fields]
            except ValueError:
                bad = next(i for i, f in enumerate(fields) if not _is_float(f))
                raise DataError(f"{path}: non-numeric cell {fields[bad]!r} at line {lineno}, column {bad + 1}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise DataError(f"{path}: ragged row at line {lineno}: {len(values)} cells, expected {width}")
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data")
    return np.array(rows, dtype=np.float64)


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_matrix(path, format=None):
    format = format or format_from_path(path)
    if format == "bin":
        A = _read_bin(path)
    elif format == "csv":
        A = _read_csv(path)
    else:
        raise ParameterError(f"unknown matrix format {format!r}")
    bad = ~np.isfinite(A)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DataError(f"{path}: non-finite value at ({i},{j})")
    return A


class BinColumnSource(ColumnSource):
    """Column blocks of a binary matrix file, read through a memory map.

    The file is row-major, so a block read is strided; larger blocks
    amortize that.
    """

    def __init__(self, path):
        self.path = os.fspath(path)
        with open(self.path, "rb") as fh:
            rows, cols = read_bin_header(fh, self.path)
        size = os.path.getsize(self.path)
        if size != HEADER.size + rows * cols * 8:
            raise DataError(f"{self.path}: file is {size} bytes, expected {HEADER.size + rows * cols * 8}")
        self.shape = (rows, cols)
        self._map = np.memmap(self.path, dtype="<f8", mode="r", offset=HEADER.size, shape=(rows, cols))

    def _read(self, start, stop):
        return np.array(self._map[:, start:stop], dtype=np.float64)


SYNTH_DISTS = ("rectified", "folded")


def synth_lowrank(m, n, r, noise=0.0, seed=0, dist="rectified"):
    """Nonnegative ``m x n`` matrix of rank ``r``.

    ``X = F(G1) @ F(G2)`` with standard normal ``G1`` (m x r) and ``G2``
    (r x n). ``dist="rectified"`` uses ``F = max(0, .)``, giving factors
    with about half their entries exactly zero; ``dist="folded"`` uses
    ``F = abs``, giving dense factors. HALS recovers rectified instances to
    machine precision, while folded ones converge sublinearly.

    With ``noise > 0``, ``noise * |G|`` is added elementwise, which keeps
    ``X`` nonnegative but makes it full rank.
    """
    if not 1 <= r <= min(m, n):
        raise ParameterError(f"rank {r} outside [1, min(m, n) = {min(m, n)}]")
    if noise < 0:
        raise ParameterError(f"noise must be >= 0, got {noise}")
    if dist not in SYNTH_DISTS:
        raise ParameterError(f"dist must be one of {SYNTH_DISTS}, got {dist!r}")
    fold = np.abs if dist == "folded" else (lambda G: np.maximum(G, 0.0))
    rng = make_rng(seed)
    G1 = fold(rng.standard_normal((m, r)))
    G2 = fold(rng.standard_normal((r, n)))
    X = G1 @ G2
    if noise > 0:
        X += noise * np.abs(rng.standard_normal((m, n)))
    return X
