"""Sequential dense kernels on single square tiles.

Tiles are float64 arrays stored column-major (Fortran order).  Every public
function is pure: inputs are never modified and a fresh tile is returned.
The compiled loops release the GIL so executor threads can run them
concurrently.

Multiplication is a cubic triple loop (row panels are packed for cache reuse
on large tiles).  For every output element the
products are summed in ascending ``k`` order starting from the accumulator
(or zero), which makes ``gemm`` bit-identical to the textbook loop and lets
blocked products chained through ``accumulate_into`` reproduce a full dense
product exactly.
"""

import numba as nb
import numpy as np

from ._validation import check_same_dim, check_tile
from .exceptions import SingularTile

#: relative pivot threshold, scaled by the tile's infinity norm
SINGULAR_RTOL = 1e-12

_jit = nb.njit(nogil=True, cache=True)


# Row-panel height and k-step of the packed product.  Packing changes only
# which memory the loop reads, never the per-element order of the k sum.
_ROW_PANEL = 256
_K_STEP = 32


@_jit
def _gemm_plain(a, b, c):
    n = a.shape[0]
    for j in range(n):
        for k in range(n):
            bkj = b[k, j]
            for i in range(n):
                c[i, j] += a[i, k] * bkj


@_jit
def _gemm_panel(ap, b, cp, k0):
    m, kb = ap.shape
    for j in range(b.shape[1]):
        for kk in range(kb):
            bkj = b[k0 + kk, j]
            for i in range(m):
                cp[i, j] += ap[i, kk] * bkj


@_jit
def _gemm_into(a, b, c):
    n = a.shape[0]
    if n <= _ROW_PANEL:
        _gemm_plain(a, b, c)
        return
    # n is a power of two here, so both steps divide it
    ap = np.empty((_K_STEP, _ROW_PANEL)).T
    cp = np.empty((n, _ROW_PANEL)).T
    for i0 in range(0, n, _ROW_PANEL):
        for j in range(n):
            for i in range(_ROW_PANEL):
                cp[i, j] = c[i0 + i, j]
        for k0 in range(0, n, _K_STEP):
            for kk in range(_K_STEP):
                for i in range(_ROW_PANEL):
                    ap[i, kk] = a[i0 + i, k0 + kk]
            _gemm_panel(ap, b, cp, k0)
        for j in range(n):
            for i in range(_ROW_PANEL):
                c[i0 + i, j] = cp[i, j]


@_jit
def _gauss_jordan(x, tol):
    # In-place Gauss-Jordan with partial (row) pivoting.  Returns -1 on
    # success, otherwise the elimination step whose pivot was too small.
    n = x.shape[0]
    piv = np.empty(n, dtype=np.int64)
    f = np.empty(n, dtype=np.float64)
    for k in range(n):
        p = k
        big = abs(x[k, k])
        for i in range(k + 1, n):
            v = abs(x[i, k])
            if v > big:
                big = v
                p = i
        if big < tol or big == 0.0:
            return k
        piv[k] = p
        if p != k:
            for j in range(n):
                t = x[k, j]
                x[k, j] = x[p, j]
                x[p, j] = t
        d = 1.0 / x[k, k]
        x[k, k] = 1.0
        for j in range(n):
            x[k, j] *= d
        for i in range(n):
            f[i] = x[i, k]
            if i != k:
                x[i, k] = 0.0
        f[k] = 0.0
        for j in range(n):
            r = x[k, j]
            for i in range(n):
                x[i, j] -= f[i] * r
    for k in range(n - 1, -1, -1):
        p = piv[k]
        if p != k:
            for i in range(n):
                t = x[i, k]
                x[i, k] = x[i, p]
                x[i, p] = t
    return -1


@_jit
def _lu_inplace(x, tol):
    # Doolittle LU without pivoting; unit-lower L below the diagonal, U on
    # and above it.
    n = x.shape[0]
    for k in range(n):
        p = x[k, k]
        if abs(p) < tol or p == 0.0:
            return k
        for i in range(k + 1, n):
            x[i, k] /= p
        for j in range(k + 1, n):
            akj = x[k, j]
            for i in range(k + 1, n):
                x[i, j] -= x[i, k] * akj
    return -1


@_jit
def _tri_inv(t, lower, tol):
    n = t.shape[0]
    x = np.zeros((n, n), dtype=np.float64).T  # Fortran-ordered buffer
    for k in range(n):
        d = t[k, k]
        if abs(d) < tol or d == 0.0:
            return x, k
    for j in range(n):
        x[j, j] = 1.0
        if lower:
            for k in range(j, n):
                xk = x[k, j] / t[k, k]
                x[k, j] = xk
                for i in range(k + 1, n):
                    x[i, j] -= t[i, k] * xk
        else:
            for k in range(j, -1, -1):
                xk = x[k, j] / t[k, k]
                x[k, j] = xk
                for i in range(k):
                    x[i, j] -= t[i, k] * xk
    return x, -1


def zeros(dim):
    return np.zeros((dim, dim), dtype=np.float64, order="F")


def identity(dim):
    return np.asfortranarray(np.eye(dim, dtype=np.float64))


def inf_norm(a):
    """Maximum absolute row sum."""
    a = check_tile(a)
    return float(np.abs(a).sum(axis=1).max())


def _tolerance(a):
    return SINGULAR_RTOL * inf_norm(a)


def leaf_invert(a):
    """Invert a tile by Gauss-Jordan elimination with partial pivoting.

    Raises
    ------
    SingularTile
        If a pivot magnitude drops below ``1e-12 * ||a||_inf``.
    """
    a = check_tile(a)
    x = np.array(a, order="F", copy=True)
    k = _gauss_jordan(x, _tolerance(a))
    if k >= 0:
        raise SingularTile(f"pivot {k} below tolerance in {a.shape[0]}x{a.shape[0]} tile", k)
    return x


def gemm(a, b, accumulate_into=None):
    """Return ``a @ b`` (plus ``accumulate_into`` when given) by triple loop."""
    a = check_tile(a, "a")
    b = check_tile(b, "b")
    check_same_dim(a, b)
    if accumulate_into is None:
        c = zeros(a.shape[0])
    else:
        acc = check_tile(accumulate_into, "accumulate_into")
        check_same_dim(a, acc)
        c = np.array(acc, order="F", copy=True)
    _gemm_into(a, b, c)
    return c


def gemm_chain(pairs):
    """Sum of ``a_k @ b_k`` over `pairs`, accumulated in the given order.

    Equivalent to folding :func:`gemm` with ``accumulate_into`` but reuses one
    output buffer.
    """
    it = iter(pairs)
    a, b = next(it)
    c = zeros(a.shape[0])
    _gemm_into(a, b, c)
    for a, b in it:
        _gemm_into(a, b, c)
    return c


def tile_sub(a, b):
    a = check_tile(a, "a")
    b = check_tile(b, "b")
    check_same_dim(a, b)
    return np.asfortranarray(a - b)


def tile_scale(a, s):
    a = check_tile(a)
    return np.asfortranarray(float(s) * a)


def lu_nopivot(a, tol=None):
    """Doolittle factorisation ``a = l @ u`` with unit-diagonal ``l``.

    `tol` overrides the pivot threshold (default ``1e-12 * ||a||_inf``).
    """
    a = check_tile(a)
    x = np.array(a, order="F", copy=True)
    k = _lu_inplace(x, _tolerance(a) if tol is None else tol)
    if k >= 0:
        raise SingularTile(f"LU pivot {k} below tolerance", k)
    l = np.asfortranarray(np.tril(x, -1) + np.eye(x.shape[0]))
    u = np.asfortranarray(np.triu(x))
    return l, u


def tri_invert(t, lower, tol=None):
    """Invert a lower (``lower=True``) or upper triangular tile by substitution."""
    t = check_tile(t)
    x, k = _tri_inv(t, bool(lower), _tolerance(t) if tol is None else tol)
    if k >= 0:
        raise SingularTile(f"triangular diagonal entry {k} below tolerance", k)
    return x
