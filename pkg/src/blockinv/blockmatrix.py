"""Block-partitioned square matrices and their distributed structural ops.

A :class:`BlockMatrix` of order ``n`` is a ``b x b`` grid of dense square
tiles of side ``block_size``.  Structural operations (quadrant tagging,
extraction, reassembly) and arithmetic (scale, subtract, multiply) are all
expressed as executor stages over independent blocks.
"""

import enum
from typing import NamedTuple

import numpy as np

from . import kernels
from ._validation import check_power_of_two, check_tile, is_power_of_two
from .exceptions import BadBlockSize, DimensionMismatch, OddGrid
from .executor import account_multiply_shuffle, default_executor


class Tag(enum.Enum):
    A11 = "A11"
    A12 = "A12"
    A21 = "A21"
    A22 = "A22"


_TAG_ORDER = {Tag.A11: 0, Tag.A12: 1, Tag.A21: 2, Tag.A22: 3}


class MatrixBlock(NamedTuple):
    row: int
    col: int
    tile: np.ndarray


class TaggedBlock(NamedTuple):
    tag: Tag
    block: MatrixBlock


def _freeze(tile):
    tile = check_tile(tile)
    if tile.flags.writeable:
        tile = tile.view()
        tile.flags.writeable = False
    return tile


class BlockMatrix:
    """Immutable ``b x b`` grid of ``block_size x block_size`` tiles.

    Parameters
    ----------
    blocks : iterable of MatrixBlock or mapping ``(row, col) -> tile``
        Exactly one tile per grid position.
    n : int
        Matrix order; must equal ``b * block_size``.
    block_size : int
        Tile side.

    Both ``n`` and ``block_size`` must be powers of two.
    """

    __slots__ = ("n", "block_size", "b", "_tiles")

    def __init__(self, blocks, n, block_size):
        check_power_of_two(n, "n")
        check_power_of_two(block_size, "block_size")
        if block_size > n:
            raise BadBlockSize(f"block_size {block_size} exceeds matrix order {n}")
        self.n = int(n)
        self.block_size = int(block_size)
        self.b = self.n // self.block_size
        if hasattr(blocks, "items"):
            items = ((r, c, t) for (r, c), t in blocks.items())
        else:
            items = blocks
        tiles = {}
        for r, c, t in items:
            key = (int(r), int(c))
            if key in tiles:
                raise DimensionMismatch(f"duplicate block {key}")
            if not (0 <= key[0] < self.b and 0 <= key[1] < self.b):
                raise DimensionMismatch(f"block index {key} outside {self.b}x{self.b} grid")
            t = _freeze(t)
            if t.shape != (self.block_size, self.block_size):
                raise DimensionMismatch(f"block {key} has shape {t.shape}, expected {self.block_size}")
            tiles[key] = t
        if len(tiles) != self.b * self.b:
            raise DimensionMismatch(f"expected {self.b * self.b} blocks, got {len(tiles)}")
        self._tiles = tiles

    @classmethod
    def _trusted(cls, tiles, n, block_size):
        # Internal constructor for tiles produced by this package's kernels.
        self = cls.__new__(cls)
        self.n = n
        self.block_size = block_size
        self.b = n // block_size
        for t in tiles.values():
            t.flags.writeable = False
        self._tiles = tiles
        return self

    @classmethod
    def zeros(cls, n, block_size):
        z = kernels.zeros(block_size)
        g = n // block_size
        return cls({(r, c): z for r in range(g) for c in range(g)}, n, block_size)

    @classmethod
    def identity(cls, n, block_size):
        g = n // block_size
        z = kernels.zeros(block_size)
        eye = kernels.identity(block_size)
        return cls({(r, c): eye if r == c else z for r in range(g) for c in range(g)}, n, block_size)

    def tile(self, row, col):
        return self._tiles[(row, col)]

    def keys(self):
        return sorted(self._tiles)

    @property
    def blocks(self):
        """Blocks in ascending ``(row, col)`` order."""
        return [MatrixBlock(r, c, self._tiles[(r, c)]) for r, c in sorted(self._tiles)]

    def __len__(self):
        return len(self._tiles)

    def __eq__(self, other):
        if not isinstance(other, BlockMatrix):
            return NotImplemented
        return (
            self.n == other.n
            and self.block_size == other.block_size
            and all(np.array_equal(t, other._tiles[k]) for k, t in self._tiles.items())
        )

    __hash__ = None

    def __repr__(self):
        return f"BlockMatrix(n={self.n}, block_size={self.block_size}, b={self.b})"


class QuadrantSet(NamedTuple):
    """Output of :func:`break_mat`: every block tagged with its quadrant."""

    half_size: int
    block_size: int
    tagged: tuple

    def count(self, tag):
        return sum(1 for t in self.tagged if t.tag is tag)


def _check_conformable(a, b):
    if a.n != b.n or a.block_size != b.block_size:
        raise DimensionMismatch(
            f"operands differ: (n={a.n}, bs={a.block_size}) vs (n={b.n}, bs={b.block_size})"
        )


def _tag_block(size, block):
    ri, ci = block.row, block.col
    if ri // size == 0 and ci // size == 0:
        tag = Tag.A11
    elif ri // size == 0 and ci // size == 1:
        tag = Tag.A12
    elif ri // size == 1 and ci // size == 0:
        tag = Tag.A21
    else:
        tag = Tag.A22
    return TaggedBlock(tag, MatrixBlock(ri % size, ci % size, block.tile))


def break_mat(a, executor=None):
    """Tag every block with its quadrant and remap it to quadrant-local indices."""
    ex = executor or default_executor()
    if a.b < 2 or a.b % 2:
        raise OddGrid(f"cannot split a {a.b}x{a.b} block grid into quadrants")
    size = a.b // 2
    tagged = ex.run_stage(
        "breakMat",
        [((blk.row, blk.col), blk) for blk in a.blocks],
        lambda blk: _tag_block(size, blk),
    )
    return QuadrantSet(size, a.block_size, tuple(tagged))


def quadrant(q, which, executor=None):
    """Filter one quadrant out of a :class:`QuadrantSet` as a BlockMatrix."""
    ex = executor or default_executor()
    which = Tag(which)

    def body(tb):
        return tb.block if tb.tag is which else None

    keyed = [((_TAG_ORDER[tb.tag], tb.block.row, tb.block.col), tb) for tb in q.tagged]
    kept = [blk for blk in ex.run_stage("xy", keyed, body) if blk is not None]
    tiles = {(blk.row, blk.col): blk.tile for blk in kept}
    return BlockMatrix._trusted(tiles, q.half_size * q.block_size, q.block_size)


def arrange(c11, c12, c21, c22, half_size=None, executor=None):
    """Reassemble four quadrant matrices into one of double order."""
    ex = executor or default_executor()
    for other in (c12, c21, c22):
        _check_conformable(c11, other)
    size = c11.b
    if half_size is not None and half_size != size:
        raise DimensionMismatch(f"half_size {half_size} does not match operand grid {size}")
    shifts = ((0, 0), (0, size), (size, 0), (size, size))
    tasks = []
    for q, (mat, shift) in enumerate(zip((c11, c12, c21, c22), shifts)):
        for blk in mat.blocks:
            tasks.append(((q, blk.row, blk.col), (blk, shift)))

    def body(item):
        blk, (dr, dc) = item
        return MatrixBlock(blk.row + dr, blk.col + dc, blk.tile)

    moved = ex.run_stage("arrange", tasks, body)
    tiles = {(blk.row, blk.col): blk.tile for blk in moved}
    return BlockMatrix._trusted(tiles, 2 * c11.n, c11.block_size)


def scalar_mul(a, s, executor=None):
    ex = executor or default_executor()
    s = float(s)
    out = ex.run_stage(
        "scalarMul",
        [((blk.row, blk.col), blk) for blk in a.blocks],
        lambda blk: kernels.tile_scale(blk.tile, s),
    )
    return BlockMatrix._trusted(dict(zip(a.keys(), out)), a.n, a.block_size)


def subtract(a, b, executor=None):
    """Blockwise ``a - b``, joined on block coordinates."""
    ex = executor or default_executor()
    _check_conformable(a, b)
    keys = a.keys()
    out = ex.run_stage(
        "subtract",
        [(k, (a.tile(*k), b.tile(*k))) for k in keys],
        lambda pair: kernels.tile_sub(*pair),
    )
    return BlockMatrix._trusted(dict(zip(keys, out)), a.n, a.block_size)


def multiply(a, b, executor=None, stage="multiply"):
    """Block product ``a @ b`` as one cogroup-style stage.

    One task per output block ``(i, j)``; it receives row ``i`` of `a` and
    column ``j`` of `b` and sums the partial products in ascending ``k``.
    """
    ex = executor or default_executor()
    _check_conformable(a, b)
    g = a.b
    keys = [(i, j) for i in range(g) for j in range(g)]
    tasks = [
        ((i, j), [(a.tile(i, k), b.tile(k, j)) for k in range(g)])
        for i, j in keys
    ]
    out = ex.run_stage(stage, tasks, kernels.gemm_chain, shuffle_bytes=account_multiply_shuffle(a, b))
    return BlockMatrix._trusted(dict(zip(keys, out)), a.n, a.block_size)


def densify(a):
    """Assemble the dense column-major matrix of order ``a.n``."""
    bs = a.block_size
    out = np.zeros((a.n, a.n), dtype=np.float64, order="F")
    for r, c, t in a.blocks:
        out[r * bs:(r + 1) * bs, c * bs:(c + 1) * bs] = t
    return out


def partition(dense, block_size):
    """Split a dense matrix into a BlockMatrix of ``block_size`` tiles."""
    dense = check_tile(dense, "dense")
    n = dense.shape[0]
    if not (is_power_of_two(n) and is_power_of_two(block_size)):
        raise BadBlockSize(f"order {n} and block size {block_size} must both be powers of two")
    if block_size > n:
        raise BadBlockSize(f"block size {block_size} exceeds order {n}")
    g = n // block_size
    tiles = {}
    for r in range(g):
        for c in range(g):
            sub = dense[r * block_size:(r + 1) * block_size, c * block_size:(c + 1) * block_size]
            tiles[(r, c)] = np.array(sub, order="F", copy=True)
    return BlockMatrix._trusted(tiles, n, block_size)
