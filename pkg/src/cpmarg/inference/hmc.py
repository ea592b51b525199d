"""Static-length HMC with dual-averaging step size and diagonal metric adaptation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import ContractViolation, EvaluationError

log = logging.getLogger(__name__)

Target = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


@dataclass(frozen=True)
class HmcConfig:
    warmup_steps: int = 1000
    sample_steps: int = 1000
    leapfrog_steps: int = 32
    target_accept: float = 0.95
    seed: int = 0
    max_energy_error: float = 1000.0
    # step sizes are drawn uniformly from eps * [1 - jitter, 1 + jitter]
    jitter: float = 0.2
    adapt_metric: bool = True

    def __post_init__(self):
        if self.warmup_steps < 0:
            raise ContractViolation("warmup_steps must be >= 0")
        if self.sample_steps < 1:
            raise ContractViolation("sample_steps must be >= 1")
        if self.leapfrog_steps < 1:
            raise ContractViolation("leapfrog_steps must be >= 1")
        if not 0 < self.target_accept < 1:
            raise ContractViolation("target_accept must lie in (0, 1)")
        if not 0 <= self.jitter < 1:
            raise ContractViolation("jitter must lie in [0, 1)")
        if self.seed < 0:
            raise ContractViolation("seed must be unsigned")


@dataclass
class HmcResult:
    samples: np.ndarray
    log_density: np.ndarray
    accept_prob: np.ndarray
    divergent: np.ndarray
    step_size: float
    inv_metric: np.ndarray
    warmup_divergences: int = 0

    @property
    def accept_rate(self) -> float:
        return float(np.mean(self.accept_prob))

    @property
    def divergences(self) -> int:
        return int(np.sum(self.divergent))


@dataclass
class _DualAveraging:
    """Nesterov dual averaging of log step size (Hoffman & Gelman constants)."""

    target: float
    mu: float
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75
    count: int = 0
    h_bar: float = 0.0
    log_eps: float = 0.0
    log_eps_bar: float = 0.0

    def update(self, accept_prob: float) -> float:
        self.count += 1
        eta = 1.0 / (self.count + self.t0)
        self.h_bar = (1 - eta) * self.h_bar + eta * (self.target - accept_prob)
        self.log_eps = self.mu - math.sqrt(self.count) / self.gamma * self.h_bar
        w = self.count ** (-self.kappa)
        self.log_eps_bar = w * self.log_eps + (1 - w) * self.log_eps_bar
        return math.exp(self.log_eps)


@dataclass
class _State:
    q: np.ndarray
    logp: float
    grad: np.ndarray = field(repr=False)


def _leapfrog(target, state, p, eps, steps, inv_metric):
    q = state.q.copy()
    p = p.copy()
    grad = state.grad
    p += 0.5 * eps * grad
    for i in range(steps):
        q += eps * inv_metric * p
        logp, grad = target(q)
        if not math.isfinite(logp):
            return None
        if i < steps - 1:
            p += eps * grad
    p += 0.5 * eps * grad
    return _State(q, logp, grad), p


def _transition(target, state, eps, steps, inv_metric, rng, max_energy_error):
    """One HMC step. Returns (new state, acceptance probability, divergent)."""
    p0 = rng.standard_normal(state.q.size) / np.sqrt(inv_metric)
    h0 = -state.logp + 0.5 * np.sum(inv_metric * p0 * p0)
    out = _leapfrog(target, state, p0, eps, steps, inv_metric)
    u = rng.random()
    if out is None:
        return state, 0.0, True
    new, p1 = out
    h1 = -new.logp + 0.5 * np.sum(inv_metric * p1 * p1)
    delta = h1 - h0
    if not math.isfinite(delta) or delta > max_energy_error:
        return state, 0.0, True
    accept = 1.0 if delta <= 0 else math.exp(-delta)
    if u < accept:
        return new, accept, False
    return state, accept, False


def _initial_step_size(target, state, inv_metric, rng, eps=1.0):
    """Double or halve eps until one leapfrog step's acceptance crosses 0.5."""
    def log_accept(e):
        p = rng.standard_normal(state.q.size) / np.sqrt(inv_metric)
        h0 = -state.logp + 0.5 * np.sum(inv_metric * p * p)
        out = _leapfrog(target, state, p, e, 1, inv_metric)
        if out is None:
            return -math.inf
        new, p1 = out
        h1 = -new.logp + 0.5 * np.sum(inv_metric * p1 * p1)
        return -(h1 - h0) if math.isfinite(h1) else -math.inf

    la = log_accept(eps)
    direction = 1 if la > math.log(0.5) else -1
    for _ in range(60):
        nxt = eps * (2.0 ** direction)
        la = log_accept(nxt)
        if direction == 1 and not la > math.log(0.5):
            break
        if direction == -1 and la > math.log(0.5):
            eps = nxt
            break
        eps = nxt
    return eps


def _adaptation_windows(warmup: int):
    """End indices of metric-estimation windows (Stan-style doubling)."""
    if warmup < 20:
        return []
    if warmup < 150:
        init, term = int(0.15 * warmup), int(0.1 * warmup)
    else:
        init, term = 75, 50
    base = 25
    ends = []
    start, size = init, base
    last = warmup - term
    while start < last:
        end = start + size
        if end + 2 * size > last:
            end = last
        ends.append((start, end))
        start, size = end, size * 2
    return ends


def hmc_chain(target: Target, init, config: HmcConfig) -> HmcResult:
    """Run one HMC chain from ``init`` and return the post-warmup draws.

    ``target(theta)`` must return ``(log_density, gradient)`` and be finite
    at ``init``.  Transitions whose energy error exceeds
    ``config.max_energy_error`` (or leave the support) are rejected and
    flagged divergent.
    """
    rng = np.random.default_rng(config.seed)
    q = np.array(init, dtype=float)
    logp, grad = target(q)
    if not math.isfinite(logp):
        raise EvaluationError("target is not finite at the initial point")
    state = _State(q, float(logp), np.asarray(grad, dtype=float))
    dim = q.size
    inv_metric = np.ones(dim)
    steps = config.leapfrog_steps

    eps = _initial_step_size(target, state, inv_metric, rng)
    da = _DualAveraging(config.target_accept, mu=math.log(10 * eps))
    windows = _adaptation_windows(config.warmup_steps) if config.adapt_metric else []
    window_draws: list[np.ndarray] = []
    warmup_div = 0

    def jittered(e):
        if config.jitter == 0:
            return e
        return e * (1.0 + config.jitter * (2.0 * rng.random() - 1.0))

    for it in range(config.warmup_steps):
        state, accept, div = _transition(
            target, state, jittered(eps), steps, inv_metric, rng, config.max_energy_error
        )
        warmup_div += div
        eps = da.update(accept)
        if windows and windows[0][0] <= it < windows[0][1]:
            window_draws.append(state.q.copy())
            if it == windows[0][1] - 1:
                draws = np.array(window_draws)
                k = len(draws)
                var = draws.var(axis=0, ddof=1) if k > 1 else np.ones(dim)
                inv_metric = (k / (k + 5.0)) * var + 1e-3 * (5.0 / (k + 5.0))
                window_draws = []
                windows.pop(0)
                eps = _initial_step_size(target, state, inv_metric, rng, eps)
                da = _DualAveraging(config.target_accept, mu=math.log(10 * eps))
    if config.warmup_steps > 0:
        eps = math.exp(da.log_eps_bar)
    log.debug("adapted step size %.4g after %d warmup steps", eps, config.warmup_steps)

    S = config.sample_steps
    samples = np.empty((S, dim))
    logps = np.empty(S)
    accepts = np.empty(S)
    divergent = np.zeros(S, dtype=bool)
    for s in range(S):
        state, accept, div = _transition(
            target, state, jittered(eps), steps, inv_metric, rng, config.max_energy_error
        )
        samples[s] = state.q
        logps[s] = state.logp
        accepts[s] = accept
        divergent[s] = div
    return HmcResult(samples, logps, accepts, divergent, eps, inv_metric, warmup_div)
