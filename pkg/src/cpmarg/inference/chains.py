"""Multi-chain posterior runs and their CSV representation."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from ..dp import ChangepointWeights, SegmentLikelihoodMatrix, as_series
from ..errors import ContractViolation, EvaluationError, ParseError
from ..models.gaussian import PriorSpec
from ..oracle import forward_matrix
from .changepoints import sample_from_table
from .hmc import HmcConfig, HmcResult, hmc_chain
from .posterior import MarginalPosterior

log = logging.getLogger(__name__)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class ChainSet:
    """Posterior draws of (mu, sigma, tau) for several chains of equal length.

    Arrays are indexed ``[chain, draw, ...]``; ``tau`` holds tau_{0:m}.
    """

    mu: np.ndarray
    sigma: np.ndarray
    tau: np.ndarray
    logpost: np.ndarray
    n: int
    divergences: list[int] = field(default_factory=list)
    accept_rate: list[float] = field(default_factory=list)
    step_size: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.tau = np.asarray(self.tau, dtype=np.int64)
        self.logpost = np.asarray(self.logpost, dtype=float)
        c, s, m = self.mu.shape
        if self.sigma.shape != (c, s, m) or self.tau.shape != (c, s, m + 1):
            raise ContractViolation("chain arrays disagree in shape")
        if self.logpost.shape != (c, s):
            raise ContractViolation("logpost must have one value per draw")
        if s and (np.any(self.tau[:, :, 0] != 0) or np.any(self.tau[:, :, -1] != self.n)):
            raise ContractViolation(f"every tau must run from 0 to n={self.n}")

    @property
    def num_chains(self) -> int:
        return self.mu.shape[0]

    @property
    def num_draws(self) -> int:
        return self.mu.shape[1]

    @property
    def m(self) -> int:
        return self.mu.shape[2]

    def parameter_names(self) -> list[str]:
        m = self.m
        return (
            [f"mu_{i}" for i in range(1, m + 1)]
            + [f"sigma_{i}" for i in range(1, m + 1)]
            + [f"tau_{i}" for i in range(1, m)]
        )

    def parameter_table(self) -> np.ndarray:
        """All scalar quantities stacked as ``(chains, draws, 2m + m - 1)``."""
        return np.concatenate(
            [self.mu, self.sigma, self.tau[:, :, 1:-1].astype(float)], axis=2
        )

    def select(self, chains=None, draws=None) -> ChainSet:
        c = slice(None) if chains is None else chains
        d = slice(None) if draws is None else draws
        return ChainSet(
            self.mu[c][:, d], self.sigma[c][:, d], self.tau[c][:, d],
            self.logpost[c][:, d], self.n,
        )


def _prior_draw(rng, prior: PriorSpec, m: int) -> np.ndarray:
    mu = rng.normal(prior.mu_mean, prior.mu_sd, m)
    log_sigma = rng.normal(prior.logsigma_mean, prior.logsigma_sd, m)
    return np.concatenate([mu, log_sigma])


def _finite_prior_draw(target, prior, rng, tries):
    for _ in range(tries):
        theta = _prior_draw(rng, prior, target.m)
        if math.isfinite(target(theta)[0]):
            return theta
    log.warning("no finite prior draw in %d tries; starting at the prior means", tries)
    return np.concatenate(
        [np.full(target.m, prior.mu_mean), np.full(target.m, prior.logsigma_mean)]
    )


def _climb(target, theta):
    def objective(t):
        value, grad = target(t)
        if not math.isfinite(value):
            return 1e300, np.zeros_like(t)
        return -value, -grad

    res = minimize(objective, theta, jac=True, method="L-BFGS-B", options={"maxiter": 1000})
    value = target(res.x)[0]
    if not math.isfinite(value):
        return theta, target(theta)[0]
    return res.x, value


def initial_point(
    target: MarginalPosterior, prior: PriorSpec, rng, starts: int = 1, tries: int = 100
) -> np.ndarray:
    """Starting point for one chain.

    With ``starts == 1`` this is a prior draw with finite log posterior
    (after ``tries`` failures, the prior means).  With more starts, each of
    ``starts`` independent prior draws is climbed to its local mode and the
    highest one is returned; the posterior is strongly multimodal when
    segments swap or merge, and a single random start often lands in a
    poor basin.
    """
    if starts < 1:
        raise ContractViolation("init starts must be >= 1")
    if starts == 1:
        return _finite_prior_draw(target, prior, rng, tries)
    best, best_value = None, -math.inf
    for _ in range(starts):
        theta, value = _climb(target, _finite_prior_draw(target, prior, rng, tries))
        if best is None or value > best_value:
            best, best_value = theta, value
    log.debug("multi-start initialisation reached log posterior %.6g", best_value)
    return best


def _gaussian_matrix(x: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> SegmentLikelihoodMatrix:
    r = (x[None, :] - mu[:, None]) / sigma[:, None]
    return SegmentLikelihoodMatrix.from_log_p(
        -_LOG_SQRT_2PI - np.log(sigma)[:, None] - 0.5 * r * r
    )


def reconstruct_changepoints(x, weights: ChangepointWeights, mu, sigma, rng) -> np.ndarray:
    """One exact tau draw per (mu, sigma) row."""
    x = as_series(x)
    out = np.empty((len(mu), weights.m + 1), dtype=np.int64)
    for s in range(len(mu)):
        _, table = forward_matrix(_gaussian_matrix(x, mu[s], sigma[s]), weights)
        if not np.isfinite(table.log_A[weights.m, weights.n]):
            raise EvaluationError("changepoint posterior is degenerate at a retained draw")
        out[s] = sample_from_table(table, rng)
    return out


def run_chain(
    x,
    weights: ChangepointWeights,
    prior: PriorSpec,
    config: HmcConfig,
    seed_seq: np.random.SeedSequence,
    thin_tau: int = 1,
    init_starts: int = 1,
) -> tuple[HmcResult, np.ndarray, np.ndarray]:
    """One chain: HMC over (mu, log sigma), then tau for every ``thin_tau``-th draw.

    Returns the raw HMC result, the retained draw indices, and tau draws.
    """
    init_ss, hmc_ss, tau_ss = seed_seq.spawn(3)
    target = MarginalPosterior(x, weights, prior)
    theta0 = initial_point(target, prior, np.random.default_rng(init_ss), init_starts)
    hmc_seed = int(hmc_ss.generate_state(1, dtype=np.uint64)[0])
    cfg = HmcConfig(**{**config.__dict__, "seed": hmc_seed})
    result = hmc_chain(target, theta0, cfg)
    keep = np.arange(0, config.sample_steps, thin_tau)
    m = weights.m
    mu = result.samples[keep, :m]
    sigma = np.exp(result.samples[keep, m:])
    tau = reconstruct_changepoints(x, weights, mu, sigma, np.random.default_rng(tau_ss))
    return result, keep, tau


def run_chains(
    x,
    weights: ChangepointWeights,
    prior: PriorSpec,
    config: HmcConfig,
    chains: int = 3,
    thin_tau: int = 1,
    init_starts: int = 100,
) -> ChainSet:
    """Run independent chains seeded from ``config.seed`` and collect them.

    Only every ``thin_tau``-th post-warmup draw is retained, since each
    retained draw costs one changepoint reconstruction.  ``init_starts``
    is passed to :func:`initial_point`.
    """
    if chains < 1:
        raise ContractViolation("need at least one chain")
    if thin_tau < 1:
        raise ContractViolation("thin_tau must be >= 1")
    x = as_series(x)
    m = weights.m
    children = np.random.SeedSequence(config.seed).spawn(chains)
    mus, sigmas, taus, lps = [], [], [], []
    divs, rates, steps = [], [], []
    for c, ss in enumerate(children):
        result, keep, tau = run_chain(x, weights, prior, config, ss, thin_tau, init_starts)
        log.info(
            "chain %d: accept %.3f, step %.4g, %d divergences",
            c + 1, result.accept_rate, result.step_size, result.divergences,
        )
        mus.append(result.samples[keep, :m])
        sigmas.append(np.exp(result.samples[keep, m:]))
        taus.append(tau)
        lps.append(result.log_density[keep])
        divs.append(result.divergences)
        rates.append(result.accept_rate)
        steps.append(result.step_size)
    return ChainSet(
        np.array(mus), np.array(sigmas), np.array(taus), np.array(lps), x.size,
        divergences=divs, accept_rate=rates, step_size=steps,
    )


def chain_header(m: int) -> list[str]:
    return (
        ["chain", "draw"]
        + [f"mu_{i}" for i in range(1, m + 1)]
        + [f"sigma_{i}" for i in range(1, m + 1)]
        + [f"tau_{i}" for i in range(1, m)]
        + ["logpost"]
    )


def _fmt(v: float) -> str:
    return f"{v:.15g}"


def write_chain_csv(path, chains: ChainSet, index: int) -> None:
    """Write chain ``index`` (0-based) with 1-based chain and draw labels."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(chain_header(chains.m))
        for d in range(chains.num_draws):
            w.writerow(
                [index + 1, d + 1]
                + [_fmt(v) for v in chains.mu[index, d]]
                + [_fmt(v) for v in chains.sigma[index, d]]
                + [str(int(t)) for t in chains.tau[index, d, 1:-1]]
                + [_fmt(chains.logpost[index, d])]
            )


def _m_from_header(header: list[str], path) -> int:
    # header has 2 + m + m + (m - 1) + 1 columns
    m, rem = divmod(len(header) - 2, 3)
    if rem != 0 or m < 1 or header != chain_header(m):
        raise ParseError(path, 1, "unexpected chain CSV header")
    return m


def read_chain_csv(path) -> tuple[int, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(m, mu, sigma, interior_tau, logpost)`` for one chain file."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(path, 1, "empty chain file")
        m = _m_from_header(header, path)
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(path, line, f"expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row[2:]]
                tau = [int(v) for v in row[2 + 2 * m: 2 + 3 * m - 1]]
            except ValueError as exc:
                raise ParseError(path, line, str(exc)) from None
            if not all(math.isfinite(v) for v in vals[: 2 * m]):
                raise ParseError(path, line, "non-finite parameter value")
            rows.append((vals[:m], vals[m: 2 * m], tau, vals[-1]))
    if not rows:
        raise ParseError(path, 2, "chain file has no draws")
    mu = np.array([r[0] for r in rows])
    sigma = np.array([r[1] for r in rows])
    tau = np.array([r[2] for r in rows], dtype=np.int64).reshape(len(rows), m - 1)
    logpost = np.array([r[3] for r in rows])
    return m, mu, sigma, tau, logpost


def load_chain_set(paths, n: int | None = None) -> ChainSet:
    """Assemble a ChainSet from chain CSVs; chains are truncated to the shortest.

    ``n`` defaults to one more than the largest changepoint seen, which is
    only a lower bound; pass it when moment sums matter.
    """
    paths = list(paths)
    if not paths:
        raise ContractViolation("no chain files given")
    loaded = [read_chain_csv(p) for p in paths]
    ms = {entry[0] for entry in loaded}
    if len(ms) != 1:
        raise ContractViolation(
            "chain files disagree in header: " + ", ".join(f"{p} (m={e[0]})" for p, e in zip(paths, loaded))
        )
    m = ms.pop()
    draws = min(len(e[1]) for e in loaded)
    if n is None:
        n = max((int(e[3].max()) + 1 if e[3].size else 1) for e in loaded)
    taus = []
    for e in loaded:
        inner = e[3][:draws]
        full = np.empty((draws, m + 1), dtype=np.int64)
        full[:, 0] = 0
        full[:, 1:-1] = inner
        full[:, -1] = n
        taus.append(full)
    return ChainSet(
        np.array([e[1][:draws] for e in loaded]),
        np.array([e[2][:draws] for e in loaded]),
        np.array(taus),
        np.array([e[4][:draws] for e in loaded]),
        n,
    )
