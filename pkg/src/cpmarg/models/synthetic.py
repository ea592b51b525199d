"""Seeded synthetic data: piecewise-constant Gaussian segments.

Draws come from a counter-based generator (SplitMix64 applied to
``seed + counter * golden_gamma``) so a spec and seed pin the series exactly,
independent of numpy's generator versions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dp import as_series, validate_tau
from ..errors import ContractViolation, ParseError

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z = (z + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class CounterRNG:
    """Stateless-by-counter uniform and normal draws.

    The k-th 64-bit output is ``splitmix64(seed + k * gamma)``; uniforms use
    the top 53 bits and normals use Box-Muller on consecutive uniform pairs.
    """

    def __init__(self, seed: int):
        if seed < 0 or seed > _MASK:
            raise ContractViolation(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)
        self.counter = 0

    def next_u64(self) -> int:
        out = _splitmix64((self.seed + self.counter * _GAMMA) & _MASK)
        self.counter += 1
        return out

    def uniform(self) -> float:
        """Uniform on the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class GeneratorSpec:
    """Ground truth for a synthetic series.

    ``m_star`` counts segments, so ``mu_star`` and ``sigma_star`` have
    ``m_star`` entries and ``tau_star`` has ``m_star + 1``.
    """

    n: int
    m_star: int
    mu_star: tuple[float, ...]
    sigma_star: tuple[float, ...]
    tau_star: tuple[int, ...]
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "mu_star", tuple(float(v) for v in self.mu_star))
        object.__setattr__(self, "sigma_star", tuple(float(v) for v in self.sigma_star))
        if self.n < 1 or self.m_star < 1 or self.m_star > self.n:
            raise ContractViolation(f"need 1 <= m_star <= n, got m_star={self.m_star}, n={self.n}")
        if len(self.mu_star) != self.m_star or len(self.sigma_star) != self.m_star:
            raise ContractViolation(
                f"mu_star and sigma_star need m_star={self.m_star} entries, "
                f"got {len(self.mu_star)} and {len(self.sigma_star)}"
            )
        if any(not s > 0 for s in self.sigma_star):
            raise ContractViolation("every sigma_star must be positive")
        object.__setattr__(self, "tau_star", validate_tau(self.tau_star, self.n, self.m_star))
        if not 0 <= int(self.seed) <= _MASK:
            raise ContractViolation("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, d: dict) -> GeneratorSpec:
        fields = ("n", "m_star", "mu_star", "sigma_star", "tau_star")
        missing = [f for f in fields if f not in d]
        if missing:
            raise ContractViolation(f"generator spec is missing {', '.join(missing)}")
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ContractViolation("seed must be an unsigned integer")
        return cls(
            n=int(d["n"]),
            m_star=int(d["m_star"]),
            mu_star=tuple(d["mu_star"]),
            sigma_star=tuple(d["sigma_star"]),
            tau_star=tuple(d["tau_star"]),
            seed=seed,
            name=str(d.get("name", "")),
        )

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "m_star": self.m_star,
            "mu_star": list(self.mu_star),
            "sigma_star": list(self.sigma_star),
            "tau_star": list(self.tau_star),
            "seed": self.seed,
        }
        if self.name:
            d["name"] = self.name
        return d

    def with_seed(self, seed: int) -> GeneratorSpec:
        return GeneratorSpec(**{**self.to_dict(), "seed": seed, "name": self.name})


def generate_synthetic(spec: GeneratorSpec) -> np.ndarray:
    """Draw x_j ~ Normal(mu*_i, sigma*_i) for tau*_{i-1} < j <= tau*_i."""
    rng = CounterRNG(spec.seed)
    x = np.empty(spec.n)
    for i in range(spec.m_star):
        lo, hi = spec.tau_star[i], spec.tau_star[i + 1]
        for j in range(lo, hi):
            x[j] = spec.mu_star[i] + spec.sigma_star[i] * rng.normal()
    return as_series(x)


def load_generator_spec(path) -> GeneratorSpec:
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None
    if not isinstance(d, dict):
        raise ParseError(path, 1, "expected a JSON object")
    return GeneratorSpec.from_dict(d)


def _rq1_row(name, n, mu, sigma, tau):
    return GeneratorSpec(n=n, m_star=len(mu), mu_star=mu, sigma_star=sigma, tau_star=tau, name=name)


# Rows of the RQ1 timing grid.  The row label counts interior changepoints,
# so each row has one more segment than its label.
RQ1_VARYING_M = {
    k: _rq1_row(
        f"rq1-m{k}",
        50,
        tuple((9.0, 2.0) * 3)[: k + 1],
        (1.5,) * (k + 1),
        tuple(range(0, 8 * k + 1, 8)) + (50,),
    )
    for k in range(1, 6)
}
RQ1_VARYING_N = {
    n: _rq1_row(f"rq1-n{n}", n, (8.8, 2.0, 7.3), (1.8, 1.1, 1.7), (0, 27, 80, n))
    for n in (200, 400, 600, 800)
}

RQ2_SYNTHETIC = GeneratorSpec(
    n=300,
    m_star=6,
    mu_star=(10.0, 2.0, 10.0, 2.0, 10.0, 2.0),
    sigma_star=(1.8, 1.1, 1.7, 1.5, 1.2, 1.3),
    tau_star=(0, 50, 100, 150, 200, 250, 300),
    seed=20190901,
    name="rq2-synthetic",
)

# Synthetic stand-in for a 1000-point well-log extract: 13 levels around
# 1.2e5 with noise near exp(8.5).  Not real measurements.
WELL_LOG_LIKE = GeneratorSpec(
    n=1000,
    m_star=13,
    mu_star=(
        112000.0, 134000.0, 118000.0, 139000.0, 109000.0, 127000.0, 104000.0,
        131000.0, 121000.0, 137000.0, 114000.0, 126000.0, 107000.0,
    ),
    sigma_star=(
        4600.0, 5200.0, 4900.0, 5600.0, 4300.0, 5000.0, 4700.0,
        5400.0, 4800.0, 5100.0, 4500.0, 5300.0, 4900.0,
    ),
    tau_star=(0, 70, 160, 230, 300, 390, 450, 530, 610, 680, 760, 840, 920, 1000),
    seed=8500,
    name="well-log-like (synthetic)",
)

PRESETS = {
    "rq2": RQ2_SYNTHETIC,
    "well-log-like": WELL_LOG_LIKE,
    **{f"rq1-m{k}": spec for k, spec in RQ1_VARYING_M.items()},
    **{f"rq1-n{n}": spec for n, spec in RQ1_VARYING_N.items()},
}
