"""Core-capped stage executor.

Every distributed step of the inversion algorithms runs as a *stage*: a
batch of independent tasks executed by a fixed pool of ``cores`` worker
threads.  Results come back in canonical key order regardless of completion
order, so downstream arithmetic never depends on scheduling.

Shuffles are accounted, not transmitted: a stage may declare how many bytes
its grouping step would move between workers, and the number is recorded in
the stage report.
"""

import contextlib
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ._validation import check_positive_int

STAGE_NAMES = (
    "leafNode",
    "breakMat",
    "xy",
    "multiply",
    "subtract",
    "scalarMul",
    "arrange",
    "additional",
)

CORES_ENV = "SPIN_CORES"


@dataclass(frozen=True)
class ExecConfig:
    """Parallelism cap and instrumentation switch."""

    cores: int = 1
    instrument: bool = True

    def __post_init__(self):
        check_positive_int(self.cores, "cores")

    @classmethod
    def from_env(cls, cores=1, instrument=True):
        """Build a config, letting ``$SPIN_CORES`` override `cores`."""
        env = os.environ.get(CORES_ENV)
        if env:
            try:
                cores = int(env)
            except ValueError:
                raise ValueError(f"{CORES_ENV} must be a positive integer, got {env!r}") from None
        return cls(cores=cores, instrument=instrument)


@dataclass(frozen=True)
class StageReport:
    stage: str
    tasks: int
    wall_ms: float
    shuffle_bytes: int = 0
    peak_concurrency: int = 0
    level: int = -1
    node: int = -1


def account_multiply_shuffle(a, b):
    """Bytes moved across the cogroup boundary of a block multiply.

    Each of the ``g**2`` blocks of both operands is replicated ``g`` times
    (once per output block that needs it), where ``g`` is the grid size.
    """
    if a.n != b.n or a.block_size != b.block_size:
        from .exceptions import DimensionMismatch

        raise DimensionMismatch("multiply operands are not conformable")
    g = a.b
    return 8 * 2 * g * g * g * a.block_size * a.block_size


class Executor:
    """Fixed-size worker pool running one stage at a time.

    Parameters
    ----------
    config : ExecConfig or int, optional
        Parallelism cap.  An int is shorthand for ``ExecConfig(cores=int)``.

    Attributes
    ----------
    reports : list of StageReport
        One entry per executed stage (only when instrumentation is on).
    """

    def __init__(self, config=None):
        if config is None:
            config = ExecConfig()
        elif isinstance(config, int):
            config = ExecConfig(cores=config)
        self.config = config
        self.reports = []
        self._pool = None
        self._lock = threading.Lock()
        self._active = 0
        self._peak = 0
        self._level = -1
        self._node = -1

    @property
    def cores(self):
        return self.config.cores

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()

    def shutdown(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def _get_pool(self):
        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self.config.cores, thread_name_prefix="stage")
        return self._pool

    @contextlib.contextmanager
    def scope(self, level, node):
        """Stamp stages submitted inside the block with a recursion position."""
        saved = self._level, self._node
        self._level, self._node = level, node
        try:
            yield
        finally:
            self._level, self._node = saved

    def _tracked(self, body, item):
        with self._lock:
            self._active += 1
            if self._active > self._peak:
                self._peak = self._active
        try:
            return body(item)
        finally:
            with self._lock:
                self._active -= 1

    def run_stage(self, name, tasks, body, shuffle_bytes=0):
        """Run ``body(item)`` for every ``(key, item)`` in `tasks`.

        Returns the list of results ordered by key.  If any body raises, all
        remaining tasks still run to completion and the exception of the
        lowest-keyed failing task is re-raised.
        """
        tasks = sorted(tasks, key=lambda kv: kv[0])
        self._peak = 0
        t0 = time.perf_counter()
        if not tasks:
            results = []
        else:
            pool = self._get_pool()
            futures = [pool.submit(self._tracked, body, item) for _, item in tasks]
            results = []
            first_error = None
            for fut in futures:
                try:
                    results.append(fut.result())
                except BaseException as exc:  # noqa: BLE001 - re-raised below
                    if first_error is None:
                        first_error = exc
                    results.append(None)
            if first_error is not None:
                raise first_error
        wall_ms = (time.perf_counter() - t0) * 1e3
        if self.config.instrument:
            self.reports.append(
                StageReport(
                    stage=name,
                    tasks=len(tasks),
                    wall_ms=wall_ms,
                    shuffle_bytes=int(shuffle_bytes),
                    peak_concurrency=self._peak,
                    level=self._level,
                    node=self._node,
                )
            )
        return results

    def take_reports(self):
        """Return and clear the accumulated stage reports."""
        out, self.reports = self.reports, []
        return out


def run_stage(tasks, body, config=None, name="map"):
    """One-shot helper: run a single stage on a temporary executor.

    Returns ``(results, report)``.
    """
    with Executor(config) as ex:
        results = ex.run_stage(name, tasks, body)
        report = ex.reports[-1] if ex.reports else None
    return results, report


_default = threading.local()


def default_executor():
    """Per-thread sequential executor used when callers pass none."""
    ex = getattr(_default, "ex", None)
    if ex is None:
        ex = _default.ex = Executor(ExecConfig(cores=1, instrument=False))
    return ex
