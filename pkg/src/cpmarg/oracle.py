"""Reference marginalisers used to check the O(mn) recursion.

``enumerate_marginal`` sums every configuration outright.
``forward_marginal`` is an independent O(mn^2) prefix recursion whose table
also drives exact posterior sampling of the changepoints.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .dp import ChangepointWeights, SegmentLikelihoodMatrix, build_likelihood_matrix
from .errors import ContractViolation, GuardRefusal

ENUMERATION_GUARD = 10**7


def count_configurations(n: int, m: int) -> int:
    return math.comb(n - 1, m - 1)


def _guard(n, m, limit):
    count = count_configurations(n, m)
    if count > limit:
        raise GuardRefusal(count, limit)
    return count


def _check(matrix, weights):
    if matrix.n != weights.n or matrix.m != weights.m:
        raise ContractViolation(
            f"matrix is {matrix.m}x{matrix.n} but weights are for m={weights.m}, n={weights.n}"
        )


def enumerate_matrix(
    matrix: SegmentLikelihoodMatrix,
    weights: ChangepointWeights,
    guard: int = ENUMERATION_GUARD,
) -> float:
    """Brute-force log marginal over all C(n-1, m-1) configurations."""
    _check(matrix, weights)
    _guard(matrix.n, matrix.m, guard)
    total = _kernels.enumerate_configurations(matrix.cum, weights.log_w, matrix.m)
    return float(total - weights.log_W)


def enumerate_marginal(model, x, z, weights: ChangepointWeights, guard: int = ENUMERATION_GUARD):
    """log sum over tau of P(x, tau | z, w) by exhaustive enumeration."""
    return enumerate_matrix(build_likelihood_matrix(model, x, z), weights, guard)


def joint_log_prob(matrix: SegmentLikelihoodMatrix, weights: ChangepointWeights, tau) -> float:
    """log P(x, tau | z, w) for one configuration ``tau_{0:m}``."""
    seg = sum(matrix.cum[i, tau[i + 1]] - matrix.cum[i, tau[i]] for i in range(matrix.m))
    prior = sum(weights.log_w[t - 1] for t in tau[1:-1]) - weights.log_W
    return float(seg + prior)


def iter_configurations(n: int, m: int):
    """All tau_{0:m} in lexicographic order of the interior changepoints."""
    for interior in itertools.combinations(range(1, n), m - 1):
        yield (0, *interior, n)


@dataclass(frozen=True)
class ForwardTable:
    """log_A[k, t]: log of the total weight of tau_{0:k} ending at tau_k = t.

    Includes the likelihood of x_{1:t} and the interior weights, but not 1/W.
    """

    log_A: np.ndarray
    cum: np.ndarray

    @property
    def m(self) -> int:
        return self.log_A.shape[0] - 1

    @property
    def n(self) -> int:
        return self.log_A.shape[1] - 1


def forward_matrix(
    matrix: SegmentLikelihoodMatrix, weights: ChangepointWeights
) -> tuple[float, ForwardTable]:
    _check(matrix, weights)
    A = _kernels.forward_table(matrix.cum, weights.log_w, matrix.m)
    A.flags.writeable = False
    value = float(A[matrix.m, matrix.n] - weights.log_W)
    return value, ForwardTable(A, matrix.cum)


def forward_marginal(model, x, z, weights: ChangepointWeights) -> tuple[float, ForwardTable]:
    """The marginal via the O(mn^2) prefix recursion, plus its table."""
    return forward_matrix(build_likelihood_matrix(model, x, z), weights)


def exact_tau_posterior(
    model, x, z, weights: ChangepointWeights, guard: int = ENUMERATION_GUARD
) -> dict[tuple[int, ...], float]:
    """P(tau | x, z, w) for every configuration, by enumeration."""
    matrix = build_likelihood_matrix(model, x, z)
    return tau_posterior_from_matrix(matrix, weights, guard)


def tau_posterior_from_matrix(
    matrix: SegmentLikelihoodMatrix,
    weights: ChangepointWeights,
    guard: int = ENUMERATION_GUARD,
) -> dict[tuple[int, ...], float]:
    _check(matrix, weights)
    _guard(matrix.n, matrix.m, guard)
    taus = list(iter_configurations(matrix.n, matrix.m))
    scores = np.array([joint_log_prob(matrix, weights, tau) for tau in taus])
    probs = np.exp(scores - logsumexp(scores))
    probs /= probs.sum()
    return dict(zip(taus, probs.tolist()))


def restricted_log_sum(
    matrix: SegmentLikelihoodMatrix,
    weights: ChangepointWeights,
    k: int,
    t: int,
    prev_at_b: bool | None = None,
) -> float:
    """log of the sum of joint probabilities over the set T_{k,t}.

    T_{k,t} holds the configurations with tau_{m-1} = t and tau_k..tau_{m-1}
    consecutive.  ``prev_at_b`` further keeps only those with
    tau_{k-1} == b(k-1, t) (True) or != b(k-1, t) (False).
    """
    m, n = matrix.m, matrix.n
    b_prev = t - ((m - 1) - (k - 1))
    scores = []
    for tau in iter_configurations(n, m):
        if tau[m - 1] != t:
            continue
        if any(tau[i] + 1 != tau[i + 1] for i in range(k, m - 1)):
            continue
        if prev_at_b is not None and (tau[k - 1] == b_prev) != prev_at_b:
            continue
        scores.append(joint_log_prob(matrix, weights, tau))
    if not scores:
        return -math.inf
    return float(logsumexp(scores))
