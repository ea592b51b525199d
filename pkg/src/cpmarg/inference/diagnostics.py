"""Convergence diagnostics: split R-hat, effective sample size, moment sums."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation
from .chains import ChainSet


@dataclass(frozen=True)
class Diagnostic:
    value: float
    degenerate: bool = False


def _as_chains(values) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ContractViolation("expected a (chains, draws) array")
    return a


def _split(chains: np.ndarray) -> np.ndarray:
    half = chains.shape[1] // 2
    return np.concatenate([chains[:, :half], chains[:, chains.shape[1] - half:]], axis=0)


def split_rhat(values) -> Diagnostic:
    """Split R-hat of a ``(chains, draws)`` array (a 1-d array is one chain).

    Every chain is halved, then ``sqrt((N-1)/N + B/(N W))`` is evaluated on
    the halves, with N the half length, B the between-half variance of the
    means times N and W the mean within-half variance.
    """
    chains = _as_chains(values)
    if chains.shape[1] < 4:
        raise ContractViolation("R-hat needs at least 4 draws per chain")
    halves = _split(chains)
    n = halves.shape[1]
    means = halves.mean(axis=1)
    W = halves.var(axis=1, ddof=1).mean()
    B = n * means.var(ddof=1)
    if not W > 0:
        return Diagnostic(math.inf, True)
    return Diagnostic(float(math.sqrt((n - 1) / n + B / (n * W))))


def gelman_rubin(chains: ChainSet, index: int) -> Diagnostic:
    """Split R-hat for column ``index`` of :meth:`ChainSet.parameter_table`."""
    table = chains.parameter_table()
    return split_rhat(table[:, :, index])


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance at every lag, via FFT."""
    n = x.size
    centred = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centred, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    return acov / n


def effective_sample_size(values) -> Diagnostic:
    """ESS with Geyer's initial monotone positive-sequence truncation.

    Accepts one chain or a ``(chains, draws)`` array; multiple chains are
    combined through the between/within variance estimate.  The result is
    capped at the total number of draws.
    """
    chains = _as_chains(values)
    c, n = chains.shape
    if n < 8:
        raise ContractViolation("ESS needs at least 8 draws per chain")
    acov = np.array([_autocovariance(ch) for ch in chains])
    chain_var = acov[:, 0] * n / (n - 1.0)
    W = chain_var.mean()
    var_plus = W * (n - 1.0) / n
    if c > 1:
        var_plus += chains.mean(axis=1).var(ddof=1)
    if not var_plus > 0 or not W > 0:
        return Diagnostic(math.nan, True)
    rho = 1.0 - (W - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0

    # pair sums Gamma_k = rho_{2k} + rho_{2k+1}, kept while positive and
    # forced non-increasing
    total = 0.0
    prev = math.inf
    k = 0
    while 2 * k + 1 < n:
        gamma = rho[2 * k] + rho[2 * k + 1]
        if gamma <= 0:
            break
        gamma = min(gamma, prev)
        total += gamma
        prev = gamma
        k += 1
    tau_int = -1.0 + 2.0 * total
    tau_int = max(tau_int, 1.0 / math.log10(c * n + 1))
    ess = c * n / tau_int
    return Diagnostic(float(min(ess, c * n)))


def moment_summary(chains: ChainSet) -> tuple[float, float]:
    """Means of sum_i(mu_i + sigma_i + tau_i) - n and sum_i(mu_i^2 + sigma_i^2 + tau_i^2) - n^2.

    The sums run over i = 1..m with tau_m = n, over every retained draw.
    """
    if chains.num_draws == 0 or chains.num_chains == 0:
        raise ContractViolation("no draws to summarise")
    tau = chains.tau[:, :, 1:].astype(float)
    n = float(chains.n)
    first = chains.mu.sum(axis=2) + chains.sigma.sum(axis=2) + tau.sum(axis=2) - n
    second = (chains.mu**2).sum(axis=2) + (chains.sigma**2).sum(axis=2) + (tau**2).sum(axis=2) - n * n
    return float(first.mean()), float(second.mean())


def _json_number(v: float):
    return v if math.isfinite(v) else None


@dataclass
class DiagnosticsReport:
    rhat: dict[str, float]
    ess: dict[str, float]
    first_moment: float
    second_moment: float
    num_chains: int
    num_draws: int
    degenerate: list[str] = field(default_factory=list)
    divergences: list[int] = field(default_factory=list)

    @classmethod
    def from_chains(cls, chains: ChainSet) -> DiagnosticsReport:
        names = chains.parameter_names()
        table = chains.parameter_table()
        rhat, ess, degenerate = {}, {}, []
        for j, name in enumerate(names):
            r = split_rhat(table[:, :, j])
            e = effective_sample_size(table[:, :, j])
            rhat[name] = r.value
            ess[name] = e.value
            if r.degenerate or e.degenerate:
                degenerate.append(name)
        first, second = moment_summary(chains)
        return cls(
            rhat, ess, first, second, chains.num_chains, chains.num_draws,
            degenerate, list(chains.divergences),
        )

    def max_rhat(self, prefixes=("mu_", "sigma_")) -> float:
        vals = [v for k, v in self.rhat.items() if k.startswith(prefixes)]
        return max(vals) if vals else math.nan

    def to_dict(self) -> dict:
        def fmt(v):
            v = _json_number(v)
            return None if v is None else float(f"{v:.15g}")

        return {
            "num_chains": self.num_chains,
            "num_draws": self.num_draws,
            "rhat": {k: fmt(v) for k, v in self.rhat.items()},
            "ess": {k: fmt(v) for k, v in self.ess.items()},
            "degenerate": list(self.degenerate),
            "first_moment": fmt(self.first_moment),
            "second_moment": fmt(self.second_moment),
            "divergences": list(self.divergences),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
