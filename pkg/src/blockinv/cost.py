"""Analytical wall-clock cost model for SPIN and the LU baseline.

Costs are abstract work units: one unit is one multiply-add (cubic terms)
or one element touched (subtract).  Structural stages that only move
blocks (break, filter, map, scale, arrange) are counted in blocks, and
communication is counted in elements replicated across a grouping
boundary.  Two weights convert those two kinds of count into work units.

The level-sum evaluators are authoritative.  At recursion level ``i`` each
method contributes ``nodes(i) * calls * per_call(i) / min(pf(i), cores)``.
All arithmetic is exact (``fractions.Fraction``) and converted to float
only at the end, so the totals do not depend on summation order.

The closed-form evaluators reproduce the published single-expression
formulas, which keep a free level index inside their ``min`` terms; the
caller supplies that index.
"""

from dataclasses import asdict, dataclass, fields
from fractions import Fraction

from ._validation import is_power_of_two
from .exceptions import InvalidParams

TERMS = (
    "leafNode",
    "breakMat",
    "xyFilter",
    "xyMap",
    "multiplyLarge",
    "multiplyCommLarge",
    "multiplySmall",
    "multiplyCommSmall",
    "subtract",
    "scalarMul",
    "arrange",
    "additionalCost",
)

# which weight applies to each term ("work" terms are unweighted)
_KIND = {
    "leafNode": "work",
    "breakMat": "block",
    "xyFilter": "block",
    "xyMap": "block",
    "multiplyLarge": "work",
    "multiplyCommLarge": "comm",
    "multiplySmall": "work",
    "multiplyCommSmall": "comm",
    "subtract": "work",
    "scalarMul": "block",
    "arrange": "block",
    "additionalCost": "work",
}


@dataclass(frozen=True)
class CostWeights:
    """Work units charged per communicated element and per structural block.

    The defaults put the argmin of the SPIN level-sum at ``b = 16`` for an
    8192-order matrix on 30 cores, and keep a U shape for desk-sized runs.
    """

    comm: float = 128.0
    block: float = 65536.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and v >= 0 and v == v and v != float("inf")):
                raise InvalidParams(f"weight {f.name} must be a finite non-negative number, got {v!r}")


UNIT_WEIGHTS = CostWeights(comm=1.0, block=1.0)


@dataclass(frozen=True)
class CostParams:
    """Model inputs.

    Parameters
    ----------
    n : int
        Matrix order, a power of two.
    b : int
        Splits per side, a power of two with ``b <= n``.
    cores : int
        Parallelism cap, at least 1.
    weights : CostWeights
    """

    n: int
    b: int
    cores: int
    weights: CostWeights = CostWeights()

    def __post_init__(self):
        for name in ("n", "b", "cores"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise InvalidParams(f"{name} must be a positive integer, got {v!r}")
        if not is_power_of_two(self.n):
            raise InvalidParams(f"n must be a power of two, got {self.n}")
        if not is_power_of_two(self.b):
            raise InvalidParams(f"b must be a power of two, got {self.b}")
        if self.b > self.n:
            raise InvalidParams(f"b={self.b} exceeds n={self.n}")
        if not isinstance(self.weights, CostWeights):
            raise InvalidParams("weights must be a CostWeights")

    @property
    def p(self):
        return self.n.bit_length() - 1

    @property
    def q(self):
        return (self.n // self.b).bit_length() - 1

    @property
    def m(self):
        return self.p - self.q

    @property
    def block_size(self):
        return self.n // self.b


@dataclass(frozen=True)
class CostBreakdown:
    """Per-method predicted cost; ``total`` is the sum of the parts."""

    leafNode: float = 0.0
    breakMat: float = 0.0
    xyFilter: float = 0.0
    xyMap: float = 0.0
    multiplyLarge: float = 0.0
    multiplyCommLarge: float = 0.0
    multiplySmall: float = 0.0
    multiplyCommSmall: float = 0.0
    subtract: float = 0.0
    scalarMul: float = 0.0
    arrange: float = 0.0
    additionalCost: float = 0.0
    total: float = 0.0

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class LevelTerm:
    """One method's contribution at one recursion level.

    ``per_call`` is the unweighted cost of a single invocation, ``calls``
    the invocations per node, ``nodes`` the nodes at the level and ``pf``
    the uncapped task count used in the parallelisation factor
    ``max(1, min(pf, cores))``.  ``level``
    is -1 for terms outside the recursion (leaves, closing products).
    """

    method: str
    level: int
    nodes: int
    calls: int
    per_call: Fraction
    pf: Fraction

    def value(self, cores, weights):
        w = _weight(self.method, weights)
        # a stage always has at least one task, however small the grid
        return self.nodes * self.calls * self.per_call * w / max(1, min(self.pf, cores))


def _weight(method, weights):
    kind = _KIND[method]
    if kind == "comm":
        return Fraction(weights.comm)
    if kind == "block":
        return Fraction(weights.block)
    return Fraction(1)


def _F(x):
    return Fraction(x)


def spin_level_terms(params):
    """Every level term of the SPIN model, leaves included."""
    n, b = _F(params.n), _F(params.b)
    out = [LevelTerm("leafNode", -1, 1, 1, n**3 / b**2, _F(1))]
    for i in range(params.m):
        nodes = 2**i
        blocks = b**2 / 4**i          # blocks of the node's matrix
        quarter = b**2 / 4 ** (i + 1)  # blocks of one quadrant
        elems = n**2 / 4 ** (i + 1)   # elements of one quadrant
        out += [
            LevelTerm("breakMat", i, nodes, 1, blocks, blocks),
            LevelTerm("xyFilter", i, nodes, 4, blocks, blocks),
            LevelTerm("xyMap", i, nodes, 4, quarter, quarter),
            LevelTerm("multiplyLarge", i, nodes, 6, n**3 / 8 ** (i + 1), elems),
            LevelTerm("multiplyCommLarge", i, nodes, 6, b * n**2 / 8 ** (i + 1), quarter),
            LevelTerm("subtract", i, nodes, 2, elems, elems),
            LevelTerm("scalarMul", i, nodes, 1, quarter, quarter),
            LevelTerm("arrange", i, nodes, 1, quarter, quarter),
        ]
    return out


def lu_level_terms(params):
    """Every level term of the LU model.

    Internal nodes per level follow the ``2**i - 1`` count, so level 0
    contributes nothing.  The seven closing half-size products are one
    extra term.
    """
    n, b = _F(params.n), _F(params.b)
    out = [
        LevelTerm("leafNode", -1, 1, 9, n**3 / b**2, _F(1)),
        LevelTerm("additionalCost", -1, 1, 7, (n / 2) ** 3, n**2 / 4),
    ]
    for i in range(params.m):
        nodes = 2**i - 1
        blocks = b**2 / 4**i
        quarter = b**2 / 4 ** (i + 1)
        dim3 = n**3 / 8**i            # cube of the node's matrix order
        out += [
            LevelTerm("breakMat", i, nodes, 1, blocks, blocks),
            LevelTerm("xyFilter", i, nodes, 1, blocks, quarter),
            LevelTerm("xyMap", i, nodes, 1, quarter, b**2 / 4 ** (i + 2)),
            LevelTerm("multiplyLarge", i, nodes, 4, dim3, n**2 / 4**i),
            LevelTerm("multiplyCommLarge", i, nodes, 4, b * n**2 / 8**i, blocks),
            LevelTerm("multiplySmall", i, nodes, 1, dim3, n**2 / 4 ** (i + 1)),
            LevelTerm("multiplyCommSmall", i, nodes, 1, b * n**2 / 8**i, quarter),
            LevelTerm("subtract", i, nodes, 1, n**2 / 4**i, n**2 / 4**i),
            LevelTerm("scalarMul", i, nodes, 2, blocks, blocks),
        ]
    return out


def _exact_parts(terms, params):
    parts = dict.fromkeys(TERMS, Fraction(0))
    for t in terms:
        parts[t.method] += t.value(params.cores, params.weights)
    return parts


def _breakdown(terms, params):
    parts = _exact_parts(terms, params)
    total = sum(parts.values(), Fraction(0))
    return CostBreakdown(**{k: float(v) for k, v in parts.items()}, total=float(total))


def spin_cost_levelsum(params):
    """Level-sum SPIN cost.

    Examples
    --------
    >>> spin_cost_levelsum(CostParams(8, 1, 4)).total
    512.0
    """
    return _breakdown(spin_level_terms(params), params)


def lu_cost_levelsum(params):
    """Level-sum LU cost, including the seven closing half-size products."""
    return _breakdown(lu_level_terms(params), params)


def _closed_check(params, i):
    if params.b < 2:
        raise InvalidParams("closed forms need b >= 2")
    if isinstance(i, bool) or not isinstance(i, int) or i < 0:
        raise InvalidParams(f"level index must be a non-negative integer, got {i!r}")


def spin_cost_closed(params, i=0):
    """Literal single-expression SPIN cost at level index `i` (unweighted).

    Returns a float; only meant for side-by-side comparison with
    :func:`spin_cost_levelsum`.
    """
    _closed_check(params, i)
    n, b, c = _F(params.n), _F(params.b), params.cores
    pf0 = min(b**2 / 4**i, c)
    pf1 = min(b**2 / 4 ** (i + 1), c)
    pfn = min(n**2 / 4 ** (i + 1), c)
    return float(
        n**3 / b**2
        + (10 * b**2 - 6 * b) / pf0
        + ((b - 1) + (9 * b**2 + n**2 * (b + 1))) / (b * pf1)
        + n**2 * (b**2 * n + b**2 - 2 * n) / (b**2 * pfn)
    )


def lu_cost_closed(params, i=0):
    """Literal single-expression LU cost at level index `i` (unweighted)."""
    _closed_check(params, i)
    n, b, c = _F(params.n), _F(params.b), params.cores
    pf0 = min(b**2 / 4**i, c)
    pf1 = min(b**2 / 4 ** (i + 1), c)
    pf2 = min(b**2 / 4 ** (i + 2), c)
    pfn0 = min(n**2 / 4**i, c)
    pfn1 = min(n**2 / 4 ** (i + 1), c)
    pfa = min(n**2 / 4, c)
    return float(
        9 * n**3 / b**2
        + (b - 1) * (210 * b**2 * (b - 2) + 64 * n**2 * (b + 1) * (b**2 - 14)) / (105 * b**2 * pf0)
        + (b - 1) * (70 * b**2 * (b - 2) + 8 * n**2 * (b + 1) * (b**2 - 14)) / (105 * b**2 * pf1)
        + (b - 1) * (b - 2) / (105 * b**2 * pf2)
        + 2 * n**2 * (b - 1) * (8 * n * (b**2 + b + 6) + 7 * b * (b - 2)) / (21 * b**3 * pfn0)
        + 8 * n**3 * (b - 1) * (b**2 + b - 6) / (42 * b**3 * pfn1)
        + 7 * n**3 / (8 * pfa)
    )


def multiply_work_unparallelized(params):
    """Exact sum of single-call SPIN multiply costs over all levels.

    Equals ``n**3 * (b**2 - 1) / (6 * b**2)``.
    """
    return sum(
        (t.nodes * t.per_call for t in spin_level_terms(params) if t.method == "multiplyLarge"),
        Fraction(0),
    )


_LEVELSUM = {"spin": spin_cost_levelsum, "lu": lu_cost_levelsum}


def levelsum(algorithm, params):
    try:
        return _LEVELSUM[algorithm](params)
    except KeyError:
        raise InvalidParams(f"unknown algorithm {algorithm!r}") from None


def predict_u_curve(n, cores, b_values, algorithm="spin", weights=None):
    """Level-sum totals over `b_values`.

    Returns
    -------
    curve : list of (b, total)
    argmin : int
        The ``b`` with the smallest total (first one on ties).
    """
    weights = weights or CostWeights()
    bs = list(b_values)
    if not bs:
        raise InvalidParams("b_values is empty")
    if any(y <= x for x, y in zip(bs, bs[1:])):
        raise InvalidParams(f"b_values must be strictly ascending, got {bs}")
    curve = [(b, levelsum(algorithm, CostParams(n, b, cores, weights)).total) for b in bs]
    best = min(curve, key=lambda bt: bt[1])[0]
    return curve, best
