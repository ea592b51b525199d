"""Exact marginal likelihood of a fixed-m changepoint model in O(mn).

All quantities are kept as logs.  The model has ``m`` segments separated by
changepoints ``0 = tau_0 < tau_1 < ... < tau_m = n`` with prior
P(tau | w) proportional to the product of ``w`` over interior changepoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import _kernels
from .errors import ContractViolation, EvaluationError

if TYPE_CHECKING:
    from .models.base import SegmentModel

__all__ = [
    "ChangepointWeights",
    "DPTables",
    "SegmentLikelihoodMatrix",
    "as_series",
    "build_likelihood_matrix",
    "changepoint_index",
    "log_normalizer",
    "marginal_log_likelihood",
    "validate_tau",
]


def as_series(values) -> np.ndarray:
    """Validate observations and return them as a read-only float array."""
    x = np.array(values, dtype=float).reshape(-1)
    if x.size < 1:
        raise ContractViolation("a time series needs at least one observation")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0]) + 1
        raise ContractViolation(f"observation {bad} is not finite")
    x.flags.writeable = False
    return x


def validate_tau(tau: Sequence[int], n: int, m: int) -> tuple[int, ...]:
    """Check that ``tau`` is a valid changepoint vector tau_{0:m} for length n."""
    tau = tuple(int(v) for v in tau)
    if len(tau) != m + 1:
        raise ContractViolation(f"expected {m + 1} changepoints, got {len(tau)}")
    if tau[0] != 0 or tau[-1] != n:
        raise ContractViolation(f"changepoints must start at 0 and end at n={n}, got {tau}")
    if any(b <= a for a, b in zip(tau, tau[1:])):
        raise ContractViolation(f"changepoints must be strictly increasing, got {tau}")
    return tau


@dataclass(frozen=True)
class ChangepointWeights:
    """Per-step changepoint weights ``w_{1:n}`` (as logs) for an m-segment model.

    ``log_w[n - 1]`` must be 0 since w_n = 1.  The log-normaliser is
    computed on first access and cached.
    """

    log_w: np.ndarray
    m: int

    def __post_init__(self):
        log_w = np.array(self.log_w, dtype=float).reshape(-1)
        if log_w.size < 1:
            raise ContractViolation("weights need at least one entry")
        if not np.all(np.isfinite(log_w)):
            raise ContractViolation("all weights must be positive and finite")
        if log_w[-1] != 0.0:
            raise ContractViolation("the last weight w_n must equal 1")
        m = int(self.m)
        if not 1 <= m <= log_w.size:
            raise ContractViolation(f"need 1 <= m <= n, got m={m}, n={log_w.size}")
        log_w.flags.writeable = False
        object.__setattr__(self, "log_w", log_w)
        object.__setattr__(self, "m", m)

    @classmethod
    def uniform(cls, n: int, m: int) -> ChangepointWeights:
        return cls(np.zeros(n), m)

    @classmethod
    def from_weights(cls, w, m: int) -> ChangepointWeights:
        w = np.asarray(w, dtype=float)
        if np.any(w <= 0):
            raise ContractViolation("weights must be strictly positive")
        return cls(np.log(w), m)

    @property
    def n(self) -> int:
        return self.log_w.size

    @cached_property
    def log_W(self) -> float:
        return log_normalizer(self)


@dataclass(frozen=True)
class SegmentLikelihoodMatrix:
    """Per-point log densities under every segment parameter.

    ``log_p[i, j]`` is log P(x_{j+1} | x_{1:j}, z_{i+1}) (0-based storage).
    ``cum`` has a leading zero column, so ``cum[i, t] - cum[i, s]`` is the
    log-probability of the segment (s, t] under z_{i+1}.
    """

    log_p: np.ndarray
    cum: np.ndarray

    @classmethod
    def from_log_p(cls, log_p) -> SegmentLikelihoodMatrix:
        log_p = np.array(log_p, dtype=float)
        if log_p.ndim != 2 or log_p.shape[0] < 1 or log_p.shape[1] < 1:
            raise ContractViolation(f"log_p must be a non-empty m x n table, got {log_p.shape}")
        nan = np.argwhere(np.isnan(log_p))
        if nan.size:
            i, j = nan[0] + 1
            raise EvaluationError(f"segment model returned NaN at (i={i}, j={j})")
        pos = np.argwhere(log_p == np.inf)
        if pos.size:
            i, j = pos[0] + 1
            raise EvaluationError(f"segment model returned +inf at (i={i}, j={j})")
        cum = np.zeros((log_p.shape[0], log_p.shape[1] + 1))
        np.cumsum(log_p, axis=1, out=cum[:, 1:])
        log_p.flags.writeable = False
        cum.flags.writeable = False
        return cls(log_p, cum)

    @property
    def m(self) -> int:
        return self.log_p.shape[0]

    @property
    def n(self) -> int:
        return self.log_p.shape[1]

    def segment_log_prob(self, i: int, s: int, t: int) -> float:
        """log P(x_{s+1:t} | z_i) for 1-based segment index ``i``."""
        return float(self.cum[i - 1, t] - self.cum[i - 1, s])


@dataclass(frozen=True)
class DPTables:
    """Log-domain L and R tables, indexed by their mathematical (k, t).

    ``log_L`` has shape (m, n) and ``log_R`` shape (m + 1, n); row 0 of
    ``log_R`` and all columns t < m - 1 are NaN.
    """

    log_L: np.ndarray
    log_R: np.ndarray

    def __post_init__(self):
        self.log_L.flags.writeable = False
        self.log_R.flags.writeable = False


def changepoint_index(k: int, t: int, m: int, n: int | None = None) -> int:
    """Position of the k-th changepoint when tau_k..tau_{m-1} are consecutive ending at t."""
    if not 1 <= k <= m - 1:
        raise ContractViolation(f"k must lie in [1, m-1] = [1, {m - 1}], got {k}")
    upper = n - 1 if n is not None else t
    if not m - 1 <= t <= upper:
        raise ContractViolation(f"t must lie in [m-1, n-1], got t={t} for m={m}, n={n}")
    return t - ((m - 1) - k)


def log_normalizer(weights: ChangepointWeights) -> float:
    """log W, the sum over all configurations of the product of interior weights."""
    if weights.m > weights.n:
        raise ContractViolation(f"m={weights.m} exceeds n={weights.n}")
    if weights.m == 1:
        return 0.0
    return float(_kernels.log_normalizer_rolling(weights.log_w, weights.m))


def build_likelihood_matrix(model: SegmentModel, x, z) -> SegmentLikelihoodMatrix:
    """Evaluate every per-point log density of ``x`` under every segment of ``z``."""
    x = as_series(x)
    return SegmentLikelihoodMatrix.from_log_p(model.log_density_matrix(x, z))


def _check_compatible(matrix: SegmentLikelihoodMatrix, weights: ChangepointWeights):
    if matrix.n != weights.n:
        raise ContractViolation(f"matrix has n={matrix.n} but weights have n={weights.n}")
    if matrix.m != weights.m:
        raise ContractViolation(f"matrix has m={matrix.m} rows but weights expect m={weights.m}")


def _forward(matrix: SegmentLikelihoodMatrix, weights: ChangepointWeights):
    m, n = matrix.m, matrix.n
    if m == 1:
        log_L = np.full((1, n), -np.inf)
        log_R = np.zeros((2, n))
        log_R[0, :] = np.nan
        return float(matrix.cum[0, n]), DPTables(log_L, log_R)
    value, log_L, log_R, bad_i, bad_j = _kernels.dp_forward(
        matrix.log_p, weights.log_w, weights.log_W
    )
    if bad_i:
        raise EvaluationError(
            f"zero density in a shift-ratio denominator at (i={bad_i}, j={bad_j})"
        )
    return float(value), DPTables(log_L, log_R)


def marginal_log_likelihood(
    matrix: SegmentLikelihoodMatrix, weights: ChangepointWeights
) -> tuple[float, DPTables]:
    """log P(x_{1:n} | z_{1:m}, w_{1:n}) with every changepoint configuration summed out.

    Parameters
    ----------
    matrix : SegmentLikelihoodMatrix
        Per-point log densities, one row per segment parameter.
    weights : ChangepointWeights
        Changepoint weights for the same ``n`` and ``m``.

    Returns
    -------
    value : float
        The marginal log-likelihood, possibly ``-inf``.
    tables : DPTables
        The filled L and R tables, reusable by the gradient sweep.
    """
    _check_compatible(matrix, weights)
    return _forward(matrix, weights)
