"""Command-line entry point: ``cpmarg <command> [options]``.

Exit codes: 0 success, 2 validation error, 3 enumeration guard refusal,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .benchmark import ENGINES, MODES, BenchmarkGrid, run_benchmark, stub_self_test
from .dp import ChangepointWeights, build_likelihood_matrix, marginal_log_likelihood
from .errors import CpmargError, ContractViolation, GuardRefusal, ParseError
from .gradients import marginal_gradient
from .inference import DiagnosticsReport, HmcConfig, load_chain_set, run_chains, write_chain_csv
from .models import (
    PRESETS,
    SYNTHETIC_PRIOR,
    WELL_LOG_PRIOR,
    GaussianParams,
    GaussianSegmentModel,
    PriorSpec,
    generate_synthetic,
    load_generator_spec,
    load_series,
    load_weights,
    save_series,
)
from .oracle import enumerate_marginal, forward_marginal

log = logging.getLogger("cpmarg")

EXIT_OK, EXIT_VALIDATION, EXIT_GUARD, EXIT_IO = 0, 2, 3, 4

PRIORS = {"synthetic": SYNTHETIC_PRIOR, "well-log": WELL_LOG_PRIOR}


def _g(v: float) -> str:
    return f"{v:.15g}"


def _num(v: float):
    v = float(v)
    return float(_g(v)) if np.isfinite(v) else None


def _read_json(path) -> dict:
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None
    if not isinstance(d, dict):
        raise ParseError(path, 1, "expected a JSON object")
    return d


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _weights(spec: str | None, n: int, m: int) -> ChangepointWeights:
    if spec is None or spec == "uniform":
        return ChangepointWeights.uniform(n, m)
    return load_weights(spec, n, m)


def _prior(spec) -> PriorSpec:
    if spec is None:
        return SYNTHETIC_PRIOR
    if isinstance(spec, dict):
        return PriorSpec.from_dict(spec)
    if spec in PRIORS:
        return PRIORS[spec]
    return PriorSpec.from_dict(_read_json(spec))


def _segment_params(path, m: int) -> GaussianParams:
    d = _read_json(path)
    if "mu" not in d or "sigma" not in d:
        raise ContractViolation(f"{path}: segment parameters need 'mu' and 'sigma' lists")
    params = GaussianParams(d["mu"], d["sigma"])
    if params.m != m:
        raise ContractViolation(f"{path}: holds {params.m} segments but --m is {m}")
    return params


# -- generate -----------------------------------------------------------------


def cmd_generate(args) -> int:
    if (args.spec is None) == (args.preset is None):
        raise ContractViolation("give exactly one of --spec or --preset")
    if args.spec is not None:
        spec = load_generator_spec(args.spec)
    else:
        if args.preset not in PRESETS:
            raise ContractViolation(
                f"unknown preset {args.preset!r}; choose from {', '.join(sorted(PRESETS))}"
            )
        spec = PRESETS[args.preset]
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    out = Path(args.out)
    save_series(out, generate_synthetic(spec))
    _write_json(out.with_name(out.name + ".json"), {"generator": spec.to_dict(), "seed": spec.seed})
    print(f"wrote {spec.n} values to {out}")
    return EXIT_OK


# -- marginal -----------------------------------------------------------------


def cmd_marginal(args) -> int:
    x = load_series(args.data)
    n, m = x.size, args.m
    weights = _weights(args.weights, n, m)
    params = _segment_params(args.z, m)
    model = GaussianSegmentModel()
    if args.grad:
        if args.engine != "dp":
            raise ContractViolation("--grad is only available with the dp engine")
        value, grad = marginal_gradient(model, x, params, weights)
        print(json.dumps({
            "value": _num(value),
            "d_z": {
                "mu": [_num(v) for v in grad.d_z[:, 0]],
                "sigma": [_num(v) for v in grad.d_z[:, 1]],
            },
            "d_logw": [_num(v) for v in grad.d_logw],
        }, indent=2))
        return EXIT_OK
    if args.engine == "dp":
        value, _ = marginal_log_likelihood(build_likelihood_matrix(model, x, params), weights)
    elif args.engine == "naive":
        value = enumerate_marginal(model, x, params, weights)
    else:
        value, _ = forward_marginal(model, x, params, weights)
    print(_g(value))
    return EXIT_OK


# -- infer --------------------------------------------------------------------


@dataclass
class RunConfig:
    data_path: str | None = None
    output_dir: str | None = None
    m: int | None = None
    weights: str = "uniform"
    prior: PriorSpec = SYNTHETIC_PRIOR
    hmc: HmcConfig = field(default_factory=HmcConfig)
    chains: int = 3
    thin_tau: int | None = None
    init_starts: int = 100

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ContractViolation(f"unknown config fields: {', '.join(sorted(extra))}")
        kw = dict(d)
        if "prior" in kw:
            kw["prior"] = _prior(kw["prior"])
        if "hmc" in kw:
            if not isinstance(kw["hmc"], dict):
                raise ContractViolation("config field 'hmc' must be an object")
            kw["hmc"] = HmcConfig(**kw["hmc"])
        return cls(**kw)

    def validate(self):
        if self.data_path is None or self.output_dir is None or self.m is None:
            raise ContractViolation("a run needs data, output directory and m")
        if self.m < 1:
            raise ContractViolation("m must be >= 1")
        if self.chains < 1:
            raise ContractViolation("chains must be >= 1")
        if self.thin_tau is not None and self.thin_tau < 1:
            raise ContractViolation("thin_tau must be >= 1")


def _run_config(args) -> RunConfig:
    cfg = RunConfig.from_dict(_read_json(args.config)) if args.config else RunConfig()
    if args.data is not None:
        cfg.data_path = args.data
    if args.out is not None:
        cfg.output_dir = args.out
    if args.m is not None:
        cfg.m = args.m
    if args.weights is not None:
        cfg.weights = args.weights
    if args.prior is not None:
        cfg.prior = _prior(args.prior)
    if args.chains is not None:
        cfg.chains = args.chains
    if args.thin_tau is not None:
        cfg.thin_tau = args.thin_tau
    if args.init_starts is not None:
        cfg.init_starts = args.init_starts
    overrides = {
        "sample_steps": args.samples,
        "warmup_steps": args.warmup,
        "leapfrog_steps": args.leapfrog,
        "target_accept": args.target_accept,
        "seed": args.seed,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        cfg.hmc = HmcConfig(**{**cfg.hmc.__dict__, **overrides})
    cfg.validate()
    return cfg


def cmd_infer(args) -> int:
    cfg = _run_config(args)
    x = load_series(cfg.data_path)
    weights = _weights(cfg.weights, x.size, cfg.m)
    thin = cfg.thin_tau if cfg.thin_tau is not None else (1 if x.size < 500 else 10)
    chains = run_chains(
        x, weights, cfg.prior, cfg.hmc, chains=cfg.chains, thin_tau=thin,
        init_starts=cfg.init_starts,
    )
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for c in range(chains.num_chains):
        write_chain_csv(out / f"chain_{c + 1}.csv", chains, c)
    report = DiagnosticsReport.from_chains(chains)
    payload = report.to_dict()
    payload["accept_rate"] = [_num(v) for v in chains.accept_rate]
    payload["step_size"] = [_num(v) for v in chains.step_size]
    _write_json(out / "diagnostics.json", payload)
    for c, d in enumerate(chains.divergences, start=1):
        if d:
            log.warning("chain %d had %d divergent transitions", c, d)
    print(f"wrote {chains.num_chains} chains x {chains.num_draws} draws to {out}")
    print(f"max R-hat over mu, sigma: {_g(report.max_rhat())}")
    return EXIT_OK


# -- benchmark ----------------------------------------------------------------


def cmd_benchmark(args) -> int:
    if args.self_test:
        sm, sn = stub_self_test()
        print(f"stub slope vs m: {sm:.3f}\nstub slope vs n: {sn:.3f}")
        return EXIT_OK
    grid = BenchmarkGrid.from_dict(_read_json(args.grid)) if args.grid else BenchmarkGrid()
    overrides = {}
    if args.engine:
        overrides["engines"] = tuple(args.engine)
    if args.mode:
        overrides["mode"] = args.mode
    if overrides:
        grid = BenchmarkGrid(**{**grid.__dict__, **overrides})
    result = run_benchmark(grid)
    text = result.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        for (engine, axis), slope in result.slopes.items():
            print(f"{engine} slope vs {axis}: {slope:.3f}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- diagnose -----------------------------------------------------------------


def cmd_diagnose(args) -> int:
    n = args.n
    if n is None and args.data is not None:
        n = load_series(args.data).size
    chains = load_chain_set(args.chains, n=n)
    text = DiagnosticsReport.from_chains(chains).to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpmarg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic series")
    g.add_argument("--spec", help="generator spec JSON")
    g.add_argument("--preset", help=f"built-in spec ({', '.join(sorted(PRESETS))})")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    mg = sub.add_parser("marginal", help="evaluate the marginal log-likelihood")
    mg.add_argument("--data", required=True)
    mg.add_argument("--m", type=int, required=True, help="number of segments")
    mg.add_argument("--z", required=True, help='JSON {"mu": [...], "sigma": [...]}')
    mg.add_argument("--weights", default="uniform")
    mg.add_argument("--engine", choices=ENGINES, default="dp")
    mg.add_argument("--grad", action="store_true")
    mg.set_defaults(func=cmd_marginal)

    inf = sub.add_parser("infer", help="HMC over segment parameters, then changepoints")
    inf.add_argument("--config", help="RunConfig JSON; flags override its fields")
    inf.add_argument("--data")
    inf.add_argument("--m", type=int, help="number of segments")
    inf.add_argument("--weights")
    inf.add_argument("--prior", help="synthetic, well-log, or a PriorSpec JSON")
    inf.add_argument("--chains", type=int)
    inf.add_argument("--samples", type=int)
    inf.add_argument("--warmup", type=int)
    inf.add_argument("--leapfrog", type=int)
    inf.add_argument("--target-accept", type=float)
    inf.add_argument("--seed", type=int)
    inf.add_argument("--thin-tau", type=int)
    inf.add_argument("--init-starts", type=int)
    inf.add_argument("--out")
    inf.set_defaults(func=cmd_infer)

    b = sub.add_parser("benchmark", help="time the engines and fit scaling slopes")
    b.add_argument("--grid", help="grid JSON")
    b.add_argument("--engine", action="append", choices=ENGINES)
    b.add_argument(
        "--mode", choices=MODES,
        help="engine: repeat inside compiled code (default); api: time the Python calls",
    )
    b.add_argument("--out")
    b.add_argument("--self-test", action="store_true", help="calibrate on a sleeping stub")
    b.set_defaults(func=cmd_benchmark)

    d = sub.add_parser("diagnose", help="R-hat, ESS and moment sums of chain CSVs")
    d.add_argument("chains", nargs="+")
    d.add_argument("--data", help="series file, used only for its length n")
    d.add_argument("--n", type=int)
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GuardRefusal as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (CpmargError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
