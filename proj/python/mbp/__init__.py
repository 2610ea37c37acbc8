"""Sparse multivariate Bernoulli process estimation."""

from ._mbp import (
    ConfigError,
    LinkSpec,
    ResourceLimitError,
    check_gf_bound,
    dobrushin_tau1,
    f_p_bound,
    fit,
    gf,
    grad_nll,
    kl_bernoulli,
    kl_bernoulli_bound,
    lambda_policy,
    nll,
    norm,
    psd_estimate,
    random_sparse_theta,
    run_experiment,
    simulate,
)

__all__ = [
    "ConfigError",
    "LinkSpec",
    "ResourceLimitError",
    "check_gf_bound",
    "dobrushin_tau1",
    "f_p_bound",
    "fit",
    "gf",
    "grad_nll",
    "kl_bernoulli",
    "kl_bernoulli_bound",
    "lambda_policy",
    "nll",
    "norm",
    "psd_estimate",
    "random_sparse_theta",
    "run_experiment",
    "simulate",
]
