"""Wall-clock scaling of the marginal engines and log-log slope fits.

Each timed evaluation computes one marginal (log-normaliser included) on a
prebuilt likelihood matrix.  Grid axis ``m`` counts interior changepoints,
so the model has ``m + 1`` segments.

Two timing modes exist.  ``engine`` issues the repeated evaluations from a
compiled loop over the same kernels the library uses, so per-call
interpreter cost (a few microseconds) stays out of the measurement, as it
would in a fully compiled sampler.  ``api`` times the public Python
functions, argument validation included; at n = 50 that fixed cost is
several times the O(mn) work and flattens the slope against m.
"""

from __future__ import annotations

import csv
import io
import logging
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .dp import ChangepointWeights, SegmentLikelihoodMatrix, marginal_log_likelihood
from .errors import ContractViolation, GuardRefusal
from .models.gaussian import GaussianParams, GaussianSegmentModel
from .oracle import ENUMERATION_GUARD, count_configurations, enumerate_matrix, forward_matrix

log = logging.getLogger(__name__)

ENGINES = ("dp", "naive", "forward")
MODES = ("engine", "api")


def time_call(
    fn: Callable[..., object],
    reps: int = 5,
    warm: int = 1,
    min_batch: float = 0.02,
    batched: bool = False,
) -> float:
    """Median seconds per evaluation over ``reps`` timed batches.

    Evaluations are batched until one batch lasts at least ``min_batch``
    seconds, so sub-millisecond calls are still resolved by the clock.
    With ``batched=True``, ``fn(k)`` performs ``k`` evaluations itself;
    otherwise ``fn()`` performs one.
    """
    if reps < 1:
        raise ContractViolation("reps must be >= 1")

    def run(count):
        if batched:
            fn(count)
        else:
            for _ in range(count):
                fn()

    for _ in range(warm):
        run(1)
    inner = 1
    while True:
        t0 = time.perf_counter()
        run(inner)
        elapsed = time.perf_counter() - t0
        if elapsed >= min_batch or inner >= 1 << 24:
            break
        inner *= 2
    if elapsed / inner < 1e-3:
        log.warning(
            "median call under 1 ms (%.3g s); batching %d calls per repetition",
            elapsed / inner, inner,
        )
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        run(inner)
        samples.append((time.perf_counter() - t0) / inner)
    return statistics.median(samples)


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    if lx.size < 2:
        raise ContractViolation("need at least two points to fit a slope")
    return float(np.polyfit(lx, ly, 1)[0])


def random_instance(n: int, segments: int, seed: int = 0) -> tuple[SegmentLikelihoodMatrix, np.ndarray]:
    """A Gaussian likelihood matrix and uniform log-weights for timing."""
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 3.0, n)
    params = GaussianParams(rng.normal(0.0, 3.0, segments), rng.uniform(0.5, 3.0, segments))
    model = GaussianSegmentModel()
    matrix = SegmentLikelihoodMatrix.from_log_p(model.log_density_matrix(x, params))
    return matrix, np.zeros(n)


def _check_guard(engine, n, m):
    if engine == "naive" and count_configurations(n, m) > ENUMERATION_GUARD:
        raise GuardRefusal(count_configurations(n, m), ENUMERATION_GUARD)


def engine_call(engine: str, matrix: SegmentLikelihoodMatrix, log_w: np.ndarray) -> Callable[[], float]:
    """A zero-argument closure evaluating one marginal through the public API.

    The weights object is rebuilt per call so the normaliser is recomputed.
    """
    m = matrix.m
    _check_guard(engine, matrix.n, m)
    if engine == "dp":
        return lambda: marginal_log_likelihood(matrix, ChangepointWeights(log_w, m))[0]
    if engine == "naive":
        return lambda: enumerate_matrix(matrix, ChangepointWeights(log_w, m))
    if engine == "forward":
        return lambda: forward_matrix(matrix, ChangepointWeights(log_w, m))[0]
    raise ContractViolation(f"unknown engine {engine!r}; choose from {', '.join(ENGINES)}")


def engine_batch(engine: str, matrix: SegmentLikelihoodMatrix, log_w: np.ndarray) -> Callable[[int], float]:
    """``f(k)`` running ``k`` evaluations of ``engine`` inside compiled code."""
    m = matrix.m
    _check_guard(engine, matrix.n, m)
    lw = np.ascontiguousarray(log_w, dtype=float)
    if engine == "dp":
        return lambda k: _kernels.repeat_dp(matrix.log_p, lw, k)
    if engine == "naive":
        return lambda k: _kernels.repeat_enumerate(matrix.cum, lw, m, k)
    if engine == "forward":
        return lambda k: _kernels.repeat_forward(matrix.cum, lw, m, k)
    raise ContractViolation(f"unknown engine {engine!r}; choose from {', '.join(ENGINES)}")


@dataclass(frozen=True)
class BenchmarkGrid:
    """Two sweeps: ``m_values`` at ``n_fixed`` and ``n_values`` at ``m_fixed``."""

    engines: tuple[str, ...] = ENGINES
    n_fixed: int = 50
    m_values: tuple[int, ...] = (1, 2, 3, 4, 5)
    m_fixed: int = 2
    n_values: tuple[int, ...] = (200, 400, 600, 800)
    reps: int = 5
    seed: int = 0
    mode: str = "engine"

    def __post_init__(self):
        for e in self.engines:
            if e not in ENGINES:
                raise ContractViolation(f"unknown engine {e!r}")
        if self.mode not in MODES:
            raise ContractViolation(f"unknown timing mode {self.mode!r}; choose from {', '.join(MODES)}")
        if self.reps < 5:
            raise ContractViolation("benchmark needs at least 5 repetitions")
        for m in (*self.m_values, self.m_fixed):
            if m < 0:
                raise ContractViolation("changepoint counts must be >= 0")
        if "naive" in self.engines:
            for m, n in self.points():
                count = count_configurations(n, m + 1)
                if count > ENUMERATION_GUARD:
                    raise GuardRefusal(count, ENUMERATION_GUARD)

    @classmethod
    def from_dict(cls, d: dict) -> BenchmarkGrid:
        allowed = set(cls.__dataclass_fields__)
        extra = set(d) - allowed
        if extra:
            raise ContractViolation(f"unknown grid fields: {', '.join(sorted(extra))}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**kw)

    def points(self) -> list[tuple[int, int]]:
        """(m, n) pairs of both sweeps, without duplicates, in sweep order."""
        pts = [(m, self.n_fixed) for m in self.m_values]
        pts += [(self.m_fixed, n) for n in self.n_values]
        seen, out = set(), []
        for p in pts:
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out


@dataclass
class BenchmarkResult:
    rows: list[tuple[str, int, int, float]] = field(default_factory=list)
    slopes: dict[tuple[str, str], float] = field(default_factory=dict)

    def seconds(self, engine: str, m: int, n: int) -> float:
        for e, mm, nn, s in self.rows:
            if (e, mm, nn) == (engine, m, n):
                return s
        raise KeyError((engine, m, n))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["engine", "m", "segments", "n", "seconds"])
        for e, m, n, s in self.rows:
            w.writerow([e, m, m + 1, n, f"{s:.15g}"])
        w.writerow([])
        w.writerow(["engine", "axis", "slope"])
        for (e, axis), v in self.slopes.items():
            w.writerow([e, axis, f"{v:.15g}"])
        return buf.getvalue()


def run_benchmark(grid: BenchmarkGrid, timer: Callable[..., float] = time_call) -> BenchmarkResult:
    """Time every grid point for every engine and fit slopes along both sweeps.

    Slopes vs ``m`` are fitted in the number of interior changepoints and
    skip ``m = 0`` (log 0 is undefined).  ``timer`` must accept the
    keyword arguments of :func:`time_call`.
    """
    result = BenchmarkResult()
    for engine in grid.engines:
        for m, n in grid.points():
            matrix, log_w = random_instance(n, m + 1, grid.seed)
            if grid.mode == "engine":
                secs = timer(engine_batch(engine, matrix, log_w), reps=grid.reps, batched=True)
            else:
                secs = timer(engine_call(engine, matrix, log_w), reps=grid.reps)
            log.info("%s m=%d n=%d: %.4g s", engine, m, n, secs)
            result.rows.append((engine, m, n, secs))
        m_pts = [m for m in grid.m_values if m > 0]
        if len(m_pts) >= 2:
            result.slopes[(engine, "m")] = fit_slope(
                m_pts, [result.seconds(engine, m, grid.n_fixed) for m in m_pts]
            )
        if len(grid.n_values) >= 2:
            result.slopes[(engine, "n")] = fit_slope(
                grid.n_values, [result.seconds(engine, grid.m_fixed, n) for n in grid.n_values]
            )
    return result


def stub_self_test(
    m_values=(1, 2, 4, 8), n_values=(10, 20, 40, 80), unit: float = 2e-5
) -> tuple[float, float]:
    """Slopes measured on a stub that sleeps ``unit * m * n`` seconds.

    A working harness reports both slopes close to 1.
    """
    def stub(m, n):
        return lambda: time.sleep(unit * m * n)

    t_m = [time_call(stub(m, n_values[-1]), reps=5, min_batch=0.0) for m in m_values]
    t_n = [time_call(stub(m_values[-1], n), reps=5, min_batch=0.0) for n in n_values]
    return fit_slope(m_values, t_m), fit_slope(n_values, t_n)
