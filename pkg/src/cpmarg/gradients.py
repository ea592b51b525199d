"""Exact gradients of the marginal log-likelihood by a reverse sweep over the DP."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .dp import (
    ChangepointWeights,
    SegmentLikelihoodMatrix,
    _check_compatible,
    _forward,
    as_series,
)
from .errors import CapabilityError, ContractViolation, EvaluationError
from .models.base import SegmentModel


@dataclass(frozen=True)
class MarginalGradient:
    """d_z: (m, d) gradient w.r.t. segment parameters; d_logw: (n,) w.r.t. log w."""

    d_z: np.ndarray
    d_logw: np.ndarray


def log_normalizer_grad(weights: ChangepointWeights) -> np.ndarray:
    """d log W / d log w_t for every t (zero at t = n)."""
    if weights.m == 1:
        return np.zeros(weights.n)
    S = _kernels.normalizer_table(weights.log_w, weights.m)
    return _kernels.normalizer_backward(S, weights.log_w, weights.m)


def matrix_gradient(
    matrix: SegmentLikelihoodMatrix, weights: ChangepointWeights, wrt_weights: bool = True
) -> tuple[float, np.ndarray, np.ndarray | None]:
    """Value and gradients with respect to the log-density table and log w.

    Returns ``(value, g_log_p, g_logw)`` where ``g_log_p`` has the shape of
    ``matrix.log_p``.  Both the data recursion and log W are differentiated;
    ``wrt_weights=False`` skips the weight gradient and returns None for it.
    """
    _check_compatible(matrix, weights)
    value, tables = _forward(matrix, weights)
    m, n = matrix.m, matrix.n
    if m == 1:
        g_lp = np.ones((1, n)) if value > -np.inf else np.zeros((1, n))
        return value, g_lp, np.zeros(n) if wrt_weights else None
    g_lp, g_lw, g_base = _kernels.dp_backward(
        matrix.log_p, weights.log_w, tables.log_L, tables.log_R, value
    )
    if not wrt_weights:
        return value, g_lp, None
    # value carries -log W inside the base cell
    g_lw = g_lw - g_base * log_normalizer_grad(weights)
    g_lw[n - 1] = 0.0
    return value, g_lp, g_lw


def marginal_gradient(
    model: SegmentModel, x, z, weights: ChangepointWeights
) -> tuple[float, MarginalGradient]:
    """Marginal log-likelihood and its gradient w.r.t. z and log w.

    The value comes from the same forward pass as
    :func:`cpmarg.dp.marginal_log_likelihood`, so the two agree exactly.
    """
    if not model.supports_gradient:
        raise CapabilityError(f"{type(model).__name__} does not provide log-density gradients")
    x = as_series(x)
    matrix = SegmentLikelihoodMatrix.from_log_p(model.log_density_matrix(x, z))
    dlp_dz = model.log_density_grad_matrix(x, z)
    value, g_lp, g_lw = matrix_gradient(matrix, weights)
    d_z = np.einsum("ij,ijd->id", g_lp, dlp_dz)
    return value, MarginalGradient(d_z=d_z, d_logw=g_lw)


def finite_difference_check(
    f: Callable[[np.ndarray], tuple[float, np.ndarray]],
    point,
    h: float = 1e-5,
) -> float:
    """Max relative error between ``f``'s analytic gradient and central differences.

    ``f`` returns ``(value, gradient)``.  Relative error per coordinate is
    ``|a - b| / max(1, |a|, |b|)``.
    """
    if not h > 0:
        raise ContractViolation("step h must be positive")
    point = np.array(point, dtype=float).reshape(-1)
    _, analytic = f(point)
    analytic = np.asarray(analytic, dtype=float).reshape(-1)
    if analytic.shape != point.shape:
        raise ContractViolation(
            f"gradient has shape {analytic.shape}, point has shape {point.shape}"
        )
    worst = 0.0
    for i in range(point.size):
        e = np.zeros_like(point)
        e[i] = h
        hi, _ = f(point + e)
        lo, _ = f(point - e)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise EvaluationError(f"f is not finite at a probe point along coordinate {i}")
        numeric = (hi - lo) / (2 * h)
        a = analytic[i]
        err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
        worst = max(worst, err)
    return worst
