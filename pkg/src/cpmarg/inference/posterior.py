"""Log posterior of the Gaussian changepoint model with changepoints summed out."""

from __future__ import annotations

import math

import numpy as np

from ..dp import ChangepointWeights, SegmentLikelihoodMatrix, as_series
from ..errors import EvaluationError
from ..gradients import matrix_gradient
from ..models.gaussian import GaussianParams, PriorSpec, log_prior, log_prior_grad

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class MarginalPosterior:
    """Differentiable log P(x, z | w) + log|Jacobian| over theta = (mu, log sigma).

    Calling the object returns ``(value, gradient)``; an invalid point
    yields ``(-inf, zeros)``.
    """

    def __init__(self, x, weights: ChangepointWeights, prior: PriorSpec):
        self.x = as_series(x)
        self.weights = weights
        self.prior = prior
        self.m = weights.m
        self.dim = 2 * self.m
        # force the normaliser now, outside the sampling loop
        weights.log_W

    def unpack(self, theta) -> GaussianParams:
        return GaussianParams.from_unconstrained(theta)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        m = self.m
        mu = theta[:m]
        log_sigma = theta[m:]
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            sigma = np.exp(log_sigma)
            if not (np.all(np.isfinite(theta)) and np.all(sigma > 0) and np.all(np.isfinite(sigma))):
                return -np.inf, np.zeros(self.dim)
            r = (self.x[None, :] - mu[:, None]) / sigma[:, None]
            log_p = -_LOG_SQRT_2PI - log_sigma[:, None] - 0.5 * r * r
        try:
            matrix = SegmentLikelihoodMatrix.from_log_p(log_p)
            value, g_lp, _ = matrix_gradient(matrix, self.weights, wrt_weights=False)
        except EvaluationError:
            return -np.inf, np.zeros(self.dim)
        if not np.isfinite(value):
            return -np.inf, np.zeros(self.dim)
        params = GaussianParams(mu, sigma)
        d_mu_prior, d_ls_prior = log_prior_grad(params, self.prior)
        value += log_prior(params, self.prior) + float(np.sum(log_sigma))
        grad = np.empty(self.dim)
        with np.errstate(over="ignore", invalid="ignore"):
            grad[:m] = np.sum(g_lp * r, axis=1) / sigma + d_mu_prior
            grad[m:] = np.sum(g_lp * (r * r - 1.0), axis=1) + d_ls_prior + 1.0
        if not (np.isfinite(value) and np.all(np.isfinite(grad))):
            return -np.inf, np.zeros(self.dim)
        return float(value), grad


def log_posterior(theta, x, weights: ChangepointWeights, prior: PriorSpec):
    """``(value, gradient)`` of the unnormalised log posterior at ``theta``.

    ``theta`` is laid out as (mu_1..mu_m, log sigma_1..log sigma_m).
    """
    return MarginalPosterior(x, weights, prior)(theta)
