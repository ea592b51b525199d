"""Exact posterior draws of the changepoints given segment parameters."""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..dp import ChangepointWeights, SegmentLikelihoodMatrix, build_likelihood_matrix
from ..oracle import ForwardTable, forward_matrix


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_from_table(table: ForwardTable, rng: np.random.Generator, size: int | None = None):
    """Backward-sample tau_{0:m} from a filled forward table.

    Returns one int array of length m + 1, or a ``(size, m + 1)`` array.
    """
    m = table.m
    count = 1 if size is None else int(size)
    out = np.empty((count, m + 1), dtype=np.int64)
    for r in range(count):
        u = rng.random(max(m - 1, 0))
        out[r] = _kernels.backward_sample(table.log_A, table.cum, u)
    return out[0] if size is None else out


def sample_changepoints_matrix(
    matrix: SegmentLikelihoodMatrix,
    weights: ChangepointWeights,
    seed=None,
    size: int | None = None,
):
    _, table = forward_matrix(matrix, weights)
    return sample_from_table(table, _as_rng(seed), size)


def sample_changepoints(model, x, z, weights: ChangepointWeights, seed=None, size: int | None = None):
    """Draw tau from P(tau | x, z, w) exactly.

    ``seed`` may be an integer or a ``numpy.random.Generator``.  With
    ``size=None`` a single configuration is returned.
    """
    matrix = build_likelihood_matrix(model, x, z)
    return sample_changepoints_matrix(matrix, weights, seed, size)
