"""Matrix generation, timed inversion runs, sweeps and model comparison."""

import csv
import statistics
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import io
from ._validation import is_power_of_two
from .blockmatrix import BlockMatrix, densify, partition
from .cost import CostParams, CostWeights, levelsum
from .exceptions import BadSpec, BlockInvError, InsufficientData, SingularTile
from .executor import ExecConfig, Executor
from .lu import lu_invert
from .spin import spin_invert

KINDS = ("spd", "dd", "uniform")
ALGORITHMS = {"spin": spin_invert, "lu": lu_invert}

# trace stage name -> CSV column
STAGE_COLUMNS = {
    "leafNode": "leaf_ms",
    "breakMat": "breakmat_ms",
    "xy": "xy_ms",
    "multiply": "multiply_ms",
    "subtract": "subtract_ms",
    "scalarMul": "scalarmul_ms",
    "arrange": "arrange_ms",
    "additional": "additional_ms",
}

SWEEP_HEADER = (
    "algorithm,n,block_size,b,cores,run_id,status,wall_ms,leaf_ms,breakmat_ms,xy_ms,"
    "multiply_ms,subtract_ms,scalarmul_ms,arrange_ms,additional_ms,shuffle_bytes,residual_inf"
).split(",")

COMPARE_HEADER = ["b", "measured_ms", "predicted_units", "predicted_ms", "ratio"]
SCALE_HEADER = ["cores", "wall_ms", "ideal_ms", "efficiency"]


@dataclass(frozen=True)
class GenSpec:
    n: int
    block_size: int
    seed: int = 0
    kind: str = "spd"

    def __post_init__(self):
        if not is_power_of_two(self.n):
            raise BadSpec(f"n must be a power of two, got {self.n!r}")
        if not is_power_of_two(self.block_size) or self.block_size > self.n:
            raise BadSpec(f"block_size must be a power of two <= n, got {self.block_size!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise BadSpec(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.kind not in KINDS:
            raise BadSpec(f"kind must be one of {KINDS}, got {self.kind!r}")


def gen_dense(spec):
    """Dense test matrix for `spec`, deterministic in the seed."""
    rng = np.random.default_rng(spec.seed)
    m = rng.uniform(-1.0, 1.0, size=(spec.n, spec.n))
    if spec.kind == "spd":
        a = m.T @ m
        a = 0.5 * (a + a.T)
        a[np.diag_indices_from(a)] += spec.n
    elif spec.kind == "dd":
        a = m
        a[np.diag_indices_from(a)] += np.abs(m).sum(axis=1) + 1.0
    else:
        a = m
    return np.asfortranarray(a)


def gen(spec):
    return partition(gen_dense(spec), spec.block_size)


@dataclass
class BenchRecord:
    algorithm: str
    n: int
    block_size: int
    b: int
    cores: int
    run_id: str
    status: str = "ok"
    wall_ms: float = float("nan")
    leaf_ms: float = 0.0
    breakmat_ms: float = 0.0
    xy_ms: float = 0.0
    multiply_ms: float = 0.0
    subtract_ms: float = 0.0
    scalarmul_ms: float = 0.0
    arrange_ms: float = 0.0
    additional_ms: float = 0.0
    shuffle_bytes: int = 0
    residual_inf: float = float("nan")

    def row(self):
        return [asdict(self)[k] for k in SWEEP_HEADER]


def residual_inf(a, c):
    """``||a @ c - I||_inf`` for dense or block operands."""
    a = densify(a) if isinstance(a, BlockMatrix) else np.asarray(a)
    c = densify(c) if isinstance(c, BlockMatrix) else np.asarray(c)
    r = a @ c
    r[np.diag_indices_from(r)] -= 1.0
    return float(np.abs(r).sum(axis=1).max())


def _repartition(a, block_size):
    if a.block_size == block_size:
        return a
    return partition(densify(a), block_size)


def warmup(algorithms=("spin", "lu")):
    """Run every kernel once on a small input so timed runs exclude JIT loading."""
    a = gen(GenSpec(512, 128, 0, "spd"))
    for alg in algorithms:
        ALGORITHMS[alg](a)


def invert_timed(a, algorithm, cores, run_id="0"):
    """Invert a BlockMatrix and build its BenchRecord.

    Returns ``(inverse, record)``; the inverse is None when the run failed
    with a singular tile (status ``singular``).
    """
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise BadSpec(f"unknown algorithm {algorithm!r}") from None
    rec = BenchRecord(algorithm, a.n, a.block_size, a.b, cores, str(run_id))
    with Executor(ExecConfig(cores=cores)) as ex:
        t0 = time.perf_counter()
        try:
            inv, trace = fn(a, executor=ex)
        except SingularTile:
            rec.status = "singular"
            return None, rec
        rec.wall_ms = (time.perf_counter() - t0) * 1e3
    for stage, ms in trace.stage_millis().items():
        setattr(rec, STAGE_COLUMNS[stage], ms)
    rec.shuffle_bytes = trace.shuffle_bytes()
    rec.residual_inf = residual_inf(a, inv)
    return inv, rec


def run_invert(path, algorithm, block_size, cores, out=None, report=None):
    """Load a SPINMAT1 file, invert it and optionally save result and report.

    Raises SingularTile when the inversion fails numerically.
    """
    a = _repartition(io.load(path), block_size)
    inv, rec = invert_timed(a, algorithm, cores)
    if inv is None:
        raise SingularTile(f"{algorithm} inversion of {path} hit a singular tile")
    if out is not None:
        io.save(out, inv)
    if report is not None:
        write_csv(report, SWEEP_HEADER, [rec.row()])
    return rec


def write_csv(path_or_file, header, rows):
    if hasattr(path_or_file, "write"):
        _write(path_or_file, header, rows)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh, header, rows)


def _write(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def _median_record(recs):
    ok = [r for r in recs if r.status == "ok"]
    first = recs[0]
    med = BenchRecord(first.algorithm, first.n, first.block_size, first.b, first.cores, "median", "median")
    if not ok:
        med.status = "failed"
        return med
    for f in fields(BenchRecord):
        if f.name in ("wall_ms", "residual_inf", "shuffle_bytes") or f.name.endswith("_ms"):
            vals = [getattr(r, f.name) for r in ok]
            v = statistics.median(vals)
            setattr(med, f.name, int(v) if f.name == "shuffle_bytes" else float(v))
    return med


def sweep(n, algorithms=("spin", "lu"), b_values=(2, 4, 8, 16, 32), cores=1, repeats=3,
          seed=0, kind="spd", out=None, log=None):
    """Time every (algorithm, b, repeat) cell on one generated matrix.

    Returns the list of BenchRecords: the raw runs followed by one median
    row per (algorithm, b) cell.  Failed runs keep going with a status
    other than ``ok``.
    """
    if repeats < 1:
        raise BadSpec(f"repeats must be >= 1, got {repeats}")
    for b in b_values:
        if not is_power_of_two(b) or b > n:
            raise BadSpec(f"b={b} is not a power of two dividing n={n}")
    for alg in algorithms:
        if alg not in ALGORITHMS:
            raise BadSpec(f"unknown algorithm {alg!r}")
    warmup(algorithms)
    dense = gen_dense(GenSpec(n, n, seed, kind))
    mats = {b: partition(dense, n // b) for b in b_values}
    cells = {(alg, b): [] for alg in algorithms for b in b_values}
    # repeats are the outer loop so slow drifts of the machine spread
    # across all cells instead of landing on one
    for r in range(repeats):
        for alg in algorithms:
            for b in b_values:
                try:
                    _, rec = invert_timed(mats[b], alg, cores, run_id=r)
                except BlockInvError as exc:
                    rec = BenchRecord(alg, n, n // b, b, cores, str(r), f"error:{type(exc).__name__}")
                cells[(alg, b)].append(rec)
                if log is not None:
                    log(rec)
    runs = [rec for cell in cells.values() for rec in cell]
    medians = [_median_record(cell) for cell in cells.values()]
    records = runs + medians
    if out is not None:
        write_csv(out, SWEEP_HEADER, [r.row() for r in records])
    return records


_INT_COLS = {"n", "block_size", "b", "cores", "shuffle_bytes"}
_STR_COLS = {"algorithm", "run_id", "status"}


def read_sweep(path):
    """Parse a sweep CSV back into BenchRecords."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SWEEP_HEADER:
            raise InsufficientData(f"{path} does not have the sweep header")
        out = []
        for row in reader:
            if not row:
                continue
            vals = {}
            for k, v in zip(header, row):
                if k in _STR_COLS:
                    vals[k] = v
                elif k in _INT_COLS:
                    vals[k] = int(v)
                else:
                    vals[k] = float(v)
            out.append(BenchRecord(**vals))
    return out


def cell_medians(records, algorithm, n=None, cores=None, column="wall_ms"):
    """Median of `column` per b over successful raw runs."""
    by_b = {}
    for r in records:
        if r.algorithm != algorithm or r.status != "ok":
            continue
        if (n is not None and r.n != n) or (cores is not None and r.cores != cores):
            continue
        by_b.setdefault(r.b, []).append(getattr(r, column))
    return {b: statistics.median(v) for b, v in sorted(by_b.items())}


@dataclass
class Comparison:
    """Measured medians joined with calibrated level-sum predictions."""

    rows: list
    constant: float
    measured_argmin: int
    predicted_argmin: int
    argmin_agree: bool
    sign_agreement: float

    def csv_rows(self):
        return [[r["b"], r["measured_ms"], r["predicted_units"], r["predicted_ms"], r["ratio"]] for r in self.rows]


def fit_constant(predicted, measured):
    """Least-squares ``k`` minimising ``sum (measured - k * predicted)**2``."""
    x = np.asarray(predicted, dtype=float)
    y = np.asarray(measured, dtype=float)
    den = float(x @ x)
    if den == 0.0:
        raise InsufficientData("all predictions are zero")
    return float(x @ y) / den


def local_minima(values):
    """Indices of strict interior local minima."""
    return [
        i
        for i in range(1, len(values) - 1)
        if values[i] < values[i - 1] and values[i] < values[i + 1]
    ]


def compare_model(records, n, cores, algorithm="spin", weights=None):
    """Calibrate the level-sum model against measured medians."""
    weights = weights or CostWeights()
    med = cell_medians(records, algorithm, n=n, cores=cores)
    if len(med) < 3:
        raise InsufficientData(f"need at least 3 b values for {algorithm} at n={n}, cores={cores}; found {len(med)}")
    bs = list(med)
    measured = [med[b] for b in bs]
    predicted = [levelsum(algorithm, CostParams(n, b, cores, weights)).total for b in bs]
    k = fit_constant(predicted, measured)
    rows = [
        {"b": b, "measured_ms": m, "predicted_units": p, "predicted_ms": k * p, "ratio": m / (k * p)}
        for b, m, p in zip(bs, measured, predicted)
    ]
    im = int(np.argmin(measured))
    ip = int(np.argmin(predicted))
    signs = [
        np.sign(measured[j + 1] - measured[j]) == np.sign(predicted[j + 1] - predicted[j])
        for j in range(len(bs) - 1)
    ]
    return Comparison(
        rows=rows,
        constant=k,
        measured_argmin=bs[im],
        predicted_argmin=bs[ip],
        argmin_agree=abs(im - ip) <= 1,
        sign_agreement=float(np.mean(signs)),
    )


def scalability(a, algorithm, cores_list=(1, 2, 4, 8), repeats=3):
    """Median wall clock per core count with ideal-scaling reference.

    Returns rows ``(cores, wall_ms, ideal_ms, efficiency)`` where the ideal
    time scales the smallest core count's time linearly.
    """
    cores_list = sorted(cores_list)
    warmup((algorithm,))
    walls = []
    for c in cores_list:
        times = []
        for r in range(repeats):
            _, rec = invert_timed(a, algorithm, c, run_id=r)
            if rec.status != "ok":
                raise SingularTile(f"{algorithm} inversion failed at cores={c}")
            times.append(rec.wall_ms)
        walls.append(statistics.median(times))
    c0, w0 = cores_list[0], walls[0]
    rows = []
    for c, w in zip(cores_list, walls):
        ideal = w0 * c0 / c
        rows.append((c, w, ideal, ideal / w))
    return rows
