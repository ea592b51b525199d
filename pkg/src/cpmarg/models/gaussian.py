"""Gaussian segments with normal / log-normal priors on (mu, sigma)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from .base import SegmentModel

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianParams:
    """Per-segment means and standard deviations."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        sigma = np.array(self.sigma, dtype=float).reshape(-1)
        if mu.size != sigma.size or mu.size < 1:
            raise ContractViolation(
                f"mu and sigma need the same non-zero length, got {mu.size} and {sigma.size}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise ContractViolation("segment parameters must be finite")
        if np.any(sigma <= 0):
            raise ContractViolation("every sigma must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def m(self) -> int:
        return self.mu.size

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.mu, self.sigma])

    @classmethod
    def from_unconstrained(cls, theta) -> GaussianParams:
        """Build from the layout (mu_1..mu_m, log sigma_1..log sigma_m)."""
        theta = np.asarray(theta, dtype=float)
        m = theta.size // 2
        return cls(theta[:m], np.exp(theta[m:]))

    def to_unconstrained(self) -> np.ndarray:
        return np.concatenate([self.mu, np.log(self.sigma)])


def gaussian_log_density(j: int, x, params: GaussianParams, i: int) -> float:
    """log Normal(x_j | mu_i, sigma_i) with 1-based ``j`` and ``i``; earlier points are ignored."""
    sigma = params.sigma[i - 1]
    if sigma <= 0:
        raise ContractViolation("sigma must be positive")
    r = (x[j - 1] - params.mu[i - 1]) / sigma
    return -_LOG_SQRT_2PI - math.log(sigma) - 0.5 * r * r


class GaussianSegmentModel(SegmentModel):
    """x_j ~ Normal(mu_i, sigma_i) independently within segment i.

    Parameters are (mu, sigma) per segment; gradients are with respect to
    those natural coordinates.
    """

    param_names = ("mu", "sigma")

    def params_array(self, z) -> np.ndarray:
        if isinstance(z, GaussianParams):
            return z.as_array()
        z = super().params_array(z)
        if np.any(z[:, 1] <= 0):
            raise ContractViolation("every sigma must be positive")
        return z

    def log_density(self, history, value, z_i):
        mu, sigma = z_i
        r = (value - mu) / sigma
        return -_LOG_SQRT_2PI - math.log(sigma) - 0.5 * r * r

    def log_density_grad(self, history, value, z_i):
        mu, sigma = z_i
        r = (value - mu) / sigma
        return np.array([r / sigma, (r * r - 1.0) / sigma])

    def log_density_matrix(self, x, z):
        z = self.params_array(z)
        mu = z[:, 0:1]
        sigma = z[:, 1:2]
        r = (x[None, :] - mu) / sigma
        return -_LOG_SQRT_2PI - np.log(sigma) - 0.5 * r * r

    def log_density_grad_matrix(self, x, z):
        z = self.params_array(z)
        mu = z[:, 0:1]
        sigma = z[:, 1:2]
        r = (x[None, :] - mu) / sigma
        return np.stack([r / sigma, (r * r - 1.0) / sigma], axis=-1)


@dataclass(frozen=True)
class PriorSpec:
    """mu_i ~ Normal(mu_mean, mu_sd) and sigma_i ~ LogNormal(logsigma_mean, logsigma_sd)."""

    mu_mean: float
    mu_sd: float
    logsigma_mean: float
    logsigma_sd: float

    def __post_init__(self):
        if not self.mu_sd > 0 or not self.logsigma_sd > 0:
            raise ContractViolation("prior standard deviations must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> PriorSpec:
        try:
            return cls(*(float(d[k]) for k in ("mu_mean", "mu_sd", "logsigma_mean", "logsigma_sd")))
        except KeyError as exc:
            raise ContractViolation(f"prior spec is missing field {exc}") from None

    def to_dict(self) -> dict:
        return {
            "mu_mean": self.mu_mean,
            "mu_sd": self.mu_sd,
            "logsigma_mean": self.logsigma_mean,
            "logsigma_sd": self.logsigma_sd,
        }


SYNTHETIC_PRIOR = PriorSpec(5.0, 10.0, 0.0, 2.0)
WELL_LOG_PRIOR = PriorSpec(120000.0, 20000.0, 8.5, 0.5)


def log_prior(params: GaussianParams, prior: PriorSpec) -> float:
    """Sum over segments of log Normal(mu_i) + log LogNormal(sigma_i)."""
    zm = (params.mu - prior.mu_mean) / prior.mu_sd
    log_sigma = np.log(params.sigma)
    zs = (log_sigma - prior.logsigma_mean) / prior.logsigma_sd
    m = params.m
    return float(
        -m * (2 * _LOG_SQRT_2PI + math.log(prior.mu_sd) + math.log(prior.logsigma_sd))
        - 0.5 * np.sum(zm * zm)
        - 0.5 * np.sum(zs * zs)
        - np.sum(log_sigma)
    )


def log_prior_grad(params: GaussianParams, prior: PriorSpec) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of :func:`log_prior` in (mu, log sigma) coordinates."""
    d_mu = -(params.mu - prior.mu_mean) / prior.mu_sd**2
    d_logsigma = -(np.log(params.sigma) - prior.logsigma_mean) / prior.logsigma_sd**2 - 1.0
    return d_mu, d_logsigma
