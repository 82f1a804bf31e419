"""Matrix file formats.

Binary ``SPINMAT1`` layout (all integers little-endian u64)::

    b"SPINMAT1" | n | block_size | b*b records

Each record is ``row, col`` followed by ``block_size**2`` little-endian f64
values in column-major order.  Records appear in ascending ``(row, col)``
order.
"""

import struct

import numpy as np

from ._validation import is_power_of_two
from .blockmatrix import BlockMatrix, densify, partition
from .exceptions import DimensionMismatch, FormatError

MAGIC = b"SPINMAT1"
_HEADER = struct.Struct("<8sQQ")
_INDEX = struct.Struct("<QQ")


def to_bytes(a):
    parts = [_HEADER.pack(MAGIC, a.n, a.block_size)]
    for r, c, t in a.blocks:
        parts.append(_INDEX.pack(r, c))
        parts.append(np.asarray(t, dtype="<f8").tobytes(order="F"))
    return b"".join(parts)


def from_bytes(data):
    if len(data) < _HEADER.size:
        raise FormatError("file shorter than the SPINMAT1 header")
    magic, n, bs = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if not (is_power_of_two(n) and is_power_of_two(bs)) or bs > n:
        raise FormatError(f"invalid header n={n} block_size={bs}")
    g = n // bs
    rec = _INDEX.size + 8 * bs * bs
    expected = _HEADER.size + g * g * rec
    if len(data) != expected:
        raise FormatError(f"expected {expected} bytes, found {len(data)}")
    tiles = {}
    off = _HEADER.size
    prev = None
    for _ in range(g * g):
        r, c = _INDEX.unpack_from(data, off)
        if prev is not None and (r, c) <= prev:
            raise FormatError(f"records out of order at block ({r}, {c})")
        prev = (r, c)
        vals = np.frombuffer(data, dtype="<f8", count=bs * bs, offset=off + _INDEX.size)
        tiles[(r, c)] = vals.astype(np.float64).reshape((bs, bs), order="F")
        off += rec
    try:
        return BlockMatrix(tiles, n, bs)
    except DimensionMismatch as exc:
        raise FormatError(str(exc)) from exc


def save(path, a):
    with open(path, "wb") as fh:
        fh.write(to_bytes(a))


def load(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def save_csv(path, a):
    """Write the dense matrix, one row per line."""
    dense = densify(a) if isinstance(a, BlockMatrix) else np.asarray(a, dtype=np.float64)
    with open(path, "w") as fh:
        for row in dense:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_csv(path, block_size=None):
    """Read a dense CSV matrix; partition it when `block_size` is given."""
    try:
        dense = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"unreadable CSV matrix: {exc}") from exc
    if dense.shape[0] != dense.shape[1]:
        raise FormatError(f"CSV matrix is not square: {dense.shape}")
    if block_size is None:
        return np.asfortranarray(dense)
    return partition(dense, block_size)
