import math

import numpy as np
import pytest

from cpmarg import ContractViolation
from cpmarg.inference import ChainSet, DiagnosticsReport, effective_sample_size, gelman_rubin, moment_summary, split_rhat


def ar1(rng, n, rho):
    e = rng.normal(size=n) * math.sqrt(1 - rho * rho)
    out = np.empty(n)
    out[0] = rng.normal()
    for i in range(1, n):
        out[i] = rho * out[i - 1] + e[i]
    return out


def test_rhat_iid():
    rng = np.random.default_rng(0)
    assert 0.99 <= split_rhat(rng.normal(size=(3, 2000))).value <= 1.05


def test_rhat_separated():
    rng = np.random.default_rng(1)
    chains = np.stack([rng.normal(0, 1, 1000), rng.normal(10, 1, 1000)])
    assert split_rhat(chains).value > 1.5


def test_rhat_constant_degenerate():
    d = split_rhat(np.ones((2, 100)))
    assert d.degenerate and d.value == math.inf


def test_rhat_single_chain_split():
    rng = np.random.default_rng(2)
    assert 0.99 <= split_rhat(rng.normal(size=4000)).value <= 1.05
    trend = np.linspace(0, 10, 1000) + rng.normal(size=1000)
    assert split_rhat(trend).value > 1.5


def test_rhat_too_short():
    with pytest.raises(ContractViolation):
        split_rhat(np.zeros(3))


def test_ess_iid():
    rng = np.random.default_rng(3)
    n = 4000
    assert 0.8 * n <= effective_sample_size(rng.normal(size=n)).value <= 1.0 * n


def test_ess_ar1():
    rng = np.random.default_rng(4)
    n = 20000
    ess = effective_sample_size(ar1(rng, n, 0.9)).value
    assert abs(ess - n / 19) <= 0.3 * n / 19


def test_ess_constant():
    assert effective_sample_size(np.full(50, 2.0)).degenerate


def test_ess_capped():
    x = np.tile([1.0, -1.0], 500)  # antithetic
    assert effective_sample_size(x).value <= 1000


def one_sample_set(mu, sigma, tau, n):
    arr = lambda v: np.asarray(v, dtype=float)[None, None, :]
    return ChainSet(arr(mu), arr(sigma), np.asarray(tau)[None, None, :], np.zeros((1, 1)), n)


def test_moment_single_sample():
    first, second = moment_summary(one_sample_set([1.0], [1.0], [0, 7], 7))
    assert first == pytest.approx(2.0)
    assert second == pytest.approx(2.0)


def test_moment_multi_segment():
    first, second = moment_summary(one_sample_set([1.0, 2.0], [0.5, 1.5], [0, 3, 10], 10))
    assert first == pytest.approx(1 + 2 + 0.5 + 1.5 + 3)
    assert second == pytest.approx(1 + 4 + 0.25 + 2.25 + 9)


def test_report_json():
    rng = np.random.default_rng(5)
    c, s, m = 2, 50, 2
    tau = np.zeros((c, s, m + 1), dtype=int)
    tau[:, :, 1] = rng.integers(1, 20, (c, s))
    tau[:, :, 2] = 20
    cs = ChainSet(rng.normal(size=(c, s, m)), rng.uniform(1, 2, (c, s, m)), tau, np.zeros((c, s)), 20)
    rep = DiagnosticsReport.from_chains(cs)
    assert set(rep.rhat) == {"mu_1", "mu_2", "sigma_1", "sigma_2", "tau_1"}
    assert gelman_rubin(cs, 0).value == rep.rhat["mu_1"]
    d = rep.to_dict()
    assert d["num_chains"] == 2 and d["num_draws"] == 50


def test_report_degenerate_tau_is_null():
    c, s = 2, 20
    tau = np.tile(np.array([0, 5, 10]), (c, s, 1))
    rng = np.random.default_rng(6)
    cs = ChainSet(rng.normal(size=(c, s, 2)), rng.uniform(1, 2, (c, s, 2)), tau, np.zeros((c, s)), 10)
    d = DiagnosticsReport.from_chains(cs).to_dict()
    assert d["rhat"]["tau_1"] is None and "tau_1" in d["degenerate"]
