"""Block-recursive LU inversion baseline.

The recursion carries ``(L, U, L^-1, U^-1)`` for every sub-problem::

    (L11, U11, L11i, U11i) = LU(A11)
    U12 = L11i @ A12
    L21 = A21 @ U11i
    (L22, U22, L22i, U22i) = LU(A22 - L21 @ U12)

and then composes the four outputs of the parent ("getLU": four products
and two negations).  A leaf handles one tile by splitting it into 2x2
sub-tiles and running nine cubic dense operations: two LU factorisations,
four triangular inversions and three products.

The final inverse ``U^-1 @ L^-1`` is formed from the top-level pieces with
seven half-size products, recorded as ``additional`` stages.  No pivoting
is done anywhere.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._validation import check_tile
from .blockmatrix import BlockMatrix, Tag, arrange, break_mat, multiply, quadrant, scalar_mul, subtract
from .spin import _leaf_stage, _run

#: cubic dense operations inside one leaf when the tile can be split
LEAF_OPS = 9


@dataclass
class BlockLUResult:
    """Unit-lower ``L`` and upper ``U`` factors with ``L @ U == A``."""

    L: BlockMatrix
    U: BlockMatrix


@dataclass
class _Pieces:
    l: BlockMatrix
    u: BlockMatrix
    li: BlockMatrix
    ui: BlockMatrix


def _embed(d, q11, q12, q21, q22):
    out = np.empty((d, d), order="F")
    h = d // 2
    out[:h, :h] = q11
    out[:h, h:] = q12
    out[h:, :h] = q21
    out[h:, h:] = q22
    return out


def lu_leaf(tile):
    """Factor and invert one tile.

    Returns ``(l, u, l_inv, u_inv, leaf_ops, compose_ops)`` where
    ``compose_ops`` counts the extra products that assemble the tile
    inverses from the sub-tile ones.
    """
    t = check_tile(tile)
    d = t.shape[0]
    # pivots are judged against the whole tile, not the sub-tile at hand
    tol = kernels.SINGULAR_RTOL * kernels.inf_norm(t)
    if d == 1:
        l, u = kernels.lu_nopivot(t, tol)
        return l, u, kernels.tri_invert(l, True, tol), kernels.tri_invert(u, False, tol), 3, 0
    h = d // 2
    t11 = np.asfortranarray(t[:h, :h])
    t12 = np.asfortranarray(t[:h, h:])
    t21 = np.asfortranarray(t[h:, :h])
    t22 = np.asfortranarray(t[h:, h:])
    l11, u11 = kernels.lu_nopivot(t11, tol)
    l11i = kernels.tri_invert(l11, True, tol)
    u11i = kernels.tri_invert(u11, False, tol)
    u12 = kernels.gemm(l11i, t12)
    l21 = kernels.gemm(t21, u11i)
    s = kernels.tile_sub(t22, kernels.gemm(l21, u12))
    l22, u22 = kernels.lu_nopivot(s, tol)
    l22i = kernels.tri_invert(l22, True, tol)
    u22i = kernels.tri_invert(u22, False, tol)
    z = kernels.zeros(h)
    l = _embed(d, l11, z, l21, l22)
    u = _embed(d, u11, u12, z, u22)
    li21 = kernels.tile_scale(kernels.gemm(l22i, kernels.gemm(l21, l11i)), -1.0)
    ui12 = kernels.tile_scale(kernels.gemm(kernels.gemm(u11i, u12), u22i), -1.0)
    li = _embed(d, l11i, z, li21, l22i)
    ui = _embed(d, u11i, ui12, z, u22i)
    return l, u, li, ui, LEAF_OPS, 4


def _lower_offdiag(x22, t21, x11, ex):
    # -(T22^-1 @ T21 @ T11^-1): off-diagonal block of a lower-triangular inverse
    return scalar_mul(multiply(x22, multiply(t21, x11, ex), ex), -1.0, ex)


def _upper_offdiag(x11, t12, x22, ex):
    # -(T11^-1 @ T12 @ T22^-1): off-diagonal block of an upper-triangular inverse
    return scalar_mul(multiply(multiply(x11, t12, ex), x22, ex), -1.0, ex)


def _one(tile, n, bs):
    return BlockMatrix._trusted({(0, 0): tile}, n, bs)


def _lu_rec(a, level, rec, compose_inverse=True):
    """Returns the top-level pieces; composes L, U (and inverses) as asked."""
    ex = rec.ex
    n, bs = a.n, a.block_size
    if a.b == 1:
        nid = rec.node(level, "leaf")
        with rec.scope(level, nid):
            l, u, li, ui, ops, comp = _leaf_stage(a, ex, lu_leaf)
        rec.trace.leaf_ops += ops
        rec.trace.extra_ops["leafCompose"] += comp
        return _Pieces(_one(l, n, bs), _one(u, n, bs), _one(li, n, bs), _one(ui, n, bs)), None

    nid = rec.node(level, "internal")
    with rec.scope(level, nid):
        q = break_mat(a, ex)
        a11 = quadrant(q, Tag.A11, ex)
        a12 = quadrant(q, Tag.A12, ex)
        a21 = quadrant(q, Tag.A21, ex)
        a22 = quadrant(q, Tag.A22, ex)
    top, _ = _lu_rec(a11, level + 1, rec)
    with rec.scope(level, nid):
        u12 = multiply(top.li, a12, ex)
        l21 = multiply(a21, top.ui, ex)
        s = subtract(a22, multiply(l21, u12, ex), ex)
    bot, _ = _lu_rec(s, level + 1, rec)
    parts = {"l11": top.l, "u11": top.u, "l11i": top.li, "u11i": top.ui,
             "l21": l21, "u12": u12,
             "l22": bot.l, "u22": bot.u, "l22i": bot.li, "u22i": bot.ui}
    if not compose_inverse:
        return None, parts
    with rec.scope(level, nid):
        zero = BlockMatrix.zeros(a11.n, bs)
        l = arrange(top.l, zero, l21, bot.l, q.half_size, ex)
        u = arrange(top.u, u12, zero, bot.u, q.half_size, ex)
        li = arrange(top.li, zero, _lower_offdiag(bot.li, l21, top.li, ex), bot.li, q.half_size, ex)
        ui = arrange(top.ui, _upper_offdiag(top.ui, u12, bot.ui, ex), zero, bot.ui, q.half_size, ex)
    return _Pieces(l, u, li, ui), parts


def block_lu(a, config=None, executor=None):
    """Block-recursive LU factorisation without pivoting.

    Returns ``(BlockLUResult, InversionTrace)``.
    """

    def driver(m, rec):
        pieces, parts = _lu_rec(m, 0, rec, compose_inverse=False)
        if pieces is not None:
            return BlockLUResult(pieces.l, pieces.u)
        ex = rec.ex
        with rec.scope(0, 0):
            zero = BlockMatrix.zeros(m.n // 2, m.block_size)
            l = arrange(parts["l11"], zero, parts["l21"], parts["l22"], None, ex)
            u = arrange(parts["u11"], parts["u12"], zero, parts["u22"], None, ex)
        return BlockLUResult(l, u)

    return _run(driver, "lu", a, config, executor)


def lu_invert(a, config=None, executor=None):
    """Invert `a` as ``U^-1 @ L^-1`` from a block-recursive LU.

    Returns ``(inverse, InversionTrace)``; the closing products are the
    stages named ``additional`` in the trace.
    """

    def driver(m, rec):
        ex = rec.ex
        pieces, p = _lu_rec(m, 0, rec, compose_inverse=False)
        with rec.scope(0, 0):
            if pieces is not None:
                return multiply(pieces.ui, pieces.li, ex, stage="additional")
            mul = lambda x, y: multiply(x, y, ex, stage="additional")  # noqa: E731
            # with T = L21 L11^-1 and S = U11^-1 U12:
            #   C22 = U22^-1 L22^-1, C21 = -C22 T, C12 = -S C22,
            #   C11 = U11^-1 L11^-1 - S C21
            t = mul(p["l21"], p["l11i"])
            c22 = mul(p["u22i"], p["l22i"])
            c21 = scalar_mul(mul(c22, t), -1.0, ex)
            s = mul(p["u11i"], p["u12"])
            c12 = scalar_mul(mul(s, c22), -1.0, ex)
            c11 = subtract(mul(p["u11i"], p["l11i"]), mul(s, c21), ex)
            return arrange(c11, c12, c21, c22, None, ex)

    return _run(driver, "lu", a, config, executor)


def triangular_invert(t, side, config=None, executor=None):
    """Block-recursive inverse of a lower or upper triangular BlockMatrix.

    Returns ``(inverse, InversionTrace)``.
    """
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    lower = side == "lower"

    def rec_inv(m, level, rec):
        ex = rec.ex
        if m.b == 1:
            nid = rec.node(level, "leaf")
            with rec.scope(level, nid):
                x = _leaf_stage(m, ex, lambda tile: kernels.tri_invert(tile, lower))
            rec.trace.leaf_ops += 1
            return _one(x, m.n, m.block_size)
        nid = rec.node(level, "internal")
        with rec.scope(level, nid):
            q = break_mat(m, ex)
            t11 = quadrant(q, Tag.A11, ex)
            t22 = quadrant(q, Tag.A22, ex)
            off = quadrant(q, Tag.A21 if lower else Tag.A12, ex)
        x11 = rec_inv(t11, level + 1, rec)
        x22 = rec_inv(t22, level + 1, rec)
        with rec.scope(level, nid):
            zero = BlockMatrix.zeros(t11.n, m.block_size)
            if lower:
                return arrange(x11, zero, _lower_offdiag(x22, off, x11, ex), x22, q.half_size, ex)
            return arrange(x11, _upper_offdiag(x11, off, x22, ex), zero, x22, q.half_size, ex)

    if not isinstance(t, BlockMatrix):
        raise TypeError(f"expected a BlockMatrix, got {type(t).__name__}")
    return _run(lambda m, rec: rec_inv(m, 0, rec), "triangular", t, config, executor)
