from .chains import (
    ChainSet,
    chain_header,
    load_chain_set,
    read_chain_csv,
    reconstruct_changepoints,
    run_chains,
    write_chain_csv,
)
from .changepoints import sample_changepoints, sample_changepoints_matrix, sample_from_table
from .diagnostics import (
    Diagnostic,
    DiagnosticsReport,
    effective_sample_size,
    gelman_rubin,
    moment_summary,
    split_rhat,
)
from .hmc import HmcConfig, HmcResult, hmc_chain
from .posterior import MarginalPosterior, log_posterior

__all__ = [
    "ChainSet",
    "Diagnostic",
    "DiagnosticsReport",
    "HmcConfig",
    "HmcResult",
    "MarginalPosterior",
    "chain_header",
    "effective_sample_size",
    "gelman_rubin",
    "hmc_chain",
    "load_chain_set",
    "log_posterior",
    "moment_summary",
    "read_chain_csv",
    "reconstruct_changepoints",
    "run_chains",
    "sample_changepoints",
    "sample_changepoints_matrix",
    "sample_from_table",
    "split_rhat",
    "write_chain_csv",
]
