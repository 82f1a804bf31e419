"""Block-recursive Strassen inversion (SPIN).

For ``A = [[A11, A12], [A21, A22]]`` the inverse is built from two
recursive half-size inversions and six block products::

    I   = inv(A11)        II  = A21 @ I        III = I @ A12
    IV  = A21 @ III       V   = IV - A22       VI  = inv(V)
    C12 = III @ VI        C21 = VI @ II        VII = III @ C21
    C11 = I - VII         C22 = -VI

``V`` is the negated Schur complement of ``A11``.  No pivoting happens
across blocks, so every ``A11`` and ``V`` met along the way must be
invertible; symmetric positive definite inputs guarantee this.
"""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._validation import check_power_of_two, check_square_matrix
from .blockmatrix import BlockMatrix, Tag, arrange, break_mat, multiply, quadrant, scalar_mul, subtract
from .exceptions import BadBlockSize
from .executor import Executor


@dataclass
class InversionTrace:
    """Stage-level record of one inversion run.

    ``reports`` holds every executed stage stamped with the recursion level
    and node id that issued it.  ``leaf_ops`` counts the cubic dense
    operations performed inside leaf stages; ``extra_ops`` counts further
    in-leaf work that is not part of the leaf census (LU tile composition).
    """

    algorithm: str
    n: int
    block_size: int
    depth: int
    reports: list = field(default_factory=list)
    leaf_ops: int = 0
    extra_ops: Counter = field(default_factory=Counter)
    node_kinds: dict = field(default_factory=dict)

    @property
    def b(self):
        return self.n // self.block_size

    def stage_counts(self, node=None):
        return Counter(r.stage for r in self.reports if node is None or r.node == node)

    def internal_nodes(self):
        return sorted(k for k, kind in self.node_kinds.items() if kind == "internal")

    def leaf_nodes(self):
        return sorted(k for k, kind in self.node_kinds.items() if kind == "leaf")

    def leaf_inversions(self):
        """Number of leaf tiles processed (tasks of all ``leafNode`` stages)."""
        return sum(r.tasks for r in self.reports if r.stage == "leafNode")

    def nodes_per_level(self):
        return Counter(level for (level, _), kind in self.node_kinds.items() if kind == "internal")

    def stage_millis(self):
        out = Counter()
        for r in self.reports:
            out[r.stage] += r.wall_ms
        return dict(out)

    def shuffle_bytes(self):
        return sum(r.shuffle_bytes for r in self.reports)


class _Recorder:
    """Allocates node ids and scopes executor stages to them."""

    def __init__(self, ex, trace):
        self.ex = ex
        self.trace = trace
        self._next = 0

    def node(self, level, kind):
        nid = self._next
        self._next += 1
        self.trace.node_kinds[(level, nid)] = kind
        return nid

    def scope(self, level, nid):
        return self.ex.scope(level, nid)


def _leaf_stage(a, ex, body):
    tile = a.tile(0, 0)
    (out,) = ex.run_stage("leafNode", [((0, 0), tile)], body)
    return out


def _spin(a, level, rec):
    ex = rec.ex
    if a.b == 1:
        nid = rec.node(level, "leaf")
        with rec.scope(level, nid):
            inv = _leaf_stage(a, ex, kernels.leaf_invert)
        rec.trace.leaf_ops += 1
        return BlockMatrix._trusted({(0, 0): inv}, a.n, a.block_size)

    nid = rec.node(level, "internal")
    with rec.scope(level, nid):
        q = break_mat(a, ex)
        a11 = quadrant(q, Tag.A11, ex)
        a12 = quadrant(q, Tag.A12, ex)
        a21 = quadrant(q, Tag.A21, ex)
        a22 = quadrant(q, Tag.A22, ex)
    i_ = _spin(a11, level + 1, rec)
    with rec.scope(level, nid):
        ii = multiply(a21, i_, ex)
        iii = multiply(i_, a12, ex)
        iv = multiply(a21, iii, ex)
        v = subtract(iv, a22, ex)
    vi = _spin(v, level + 1, rec)
    with rec.scope(level, nid):
        c12 = multiply(iii, vi, ex)
        c21 = multiply(vi, ii, ex)
        vii = multiply(iii, c21, ex)
        c11 = subtract(i_, vii, ex)
        c22 = scalar_mul(vi, -1.0, ex)
        return arrange(c11, c12, c21, c22, q.half_size, ex)


def _run(driver, algorithm, a, config, executor):
    if not isinstance(a, BlockMatrix):
        raise TypeError(f"expected a BlockMatrix, got {type(a).__name__}")
    own = executor is None
    ex = Executor(config) if own else executor
    start = len(ex.reports)
    trace = InversionTrace(algorithm, a.n, a.block_size, depth=int(np.log2(a.b)))
    try:
        result = driver(a, _Recorder(ex, trace))
    finally:
        trace.reports = ex.reports[start:]
        if own:
            ex.shutdown()
    return result, trace


def spin_invert(a, config=None, executor=None):
    """Invert a BlockMatrix with the distributed Strassen scheme.

    Parameters
    ----------
    a : BlockMatrix
        Square matrix with power-of-two order and block size.
    config : ExecConfig or int, optional
        Parallelism cap for a private executor (ignored if `executor` given).
    executor : Executor, optional
        Reuse an existing executor; its reports list is appended to.

    Returns
    -------
    inverse : BlockMatrix
    trace : InversionTrace
    """
    return _run(lambda m, rec: _spin(m, 0, rec), "spin", a, config, executor)


def spin_invert_serial(a, threshold):
    """Dense single-process Strassen inversion with recursion cutoff `threshold`.

    Uses the same kernels and summation order as :func:`spin_invert` with
    ``block_size == threshold``.
    """
    a = check_square_matrix(a, "a")
    threshold = check_power_of_two(threshold, "threshold")
    if threshold > a.shape[0]:
        raise BadBlockSize(f"threshold {threshold} exceeds order {a.shape[0]}")
    return _serial(a, threshold)


def _serial(a, threshold):
    n = a.shape[0]
    if n <= threshold:
        return kernels.leaf_invert(a)
    h = n // 2
    a11 = np.asfortranarray(a[:h, :h])
    a12 = np.asfortranarray(a[:h, h:])
    a21 = np.asfortranarray(a[h:, :h])
    a22 = np.asfortranarray(a[h:, h:])
    i_ = _serial(a11, threshold)
    ii = kernels.gemm(a21, i_)
    iii = kernels.gemm(i_, a12)
    iv = kernels.gemm(a21, iii)
    v = kernels.tile_sub(iv, a22)
    vi = _serial(v, threshold)
    c12 = kernels.gemm(iii, vi)
    c21 = kernels.gemm(vi, ii)
    vii = kernels.gemm(iii, c21)
    c11 = kernels.tile_sub(i_, vii)
    c22 = kernels.tile_scale(vi, -1.0)
    out = np.empty((n, n), order="F")
    out[:h, :h] = c11
    out[:h, h:] = c12
    out[h:, :h] = c21
    out[h:, h:] = c22
    return out
