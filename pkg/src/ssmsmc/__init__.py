"""Sequential Monte Carlo inference for nonlinear state-space models.

Likelihood estimators (vanilla Monte Carlo, bootstrap particle filter,
fully adapted auxiliary filter, Rao-Blackwellized filter, exact Kalman),
unbiased low-variance resampling, and particle Metropolis-Hastings for
Bayesian parameter learning, with the nonlinear spring-damper benchmark
bundled.  See the ``ssmsmc`` CLI for the file-level workflow.
"""

from ._kernels import backend
from .damper import DamperConfig, DamperModel
from .distributions import Gamma, Gaussian, TruncatedGaussian, Uniform
from .kalman import GaussianBelief, LgssParams, log_likelihood
from .lgss import ScalarLgss
from .mixed_clg import MixedClgDemo
from .models import Dataset, Params, load_dataset, save_dataset, simulate_dataset, validate
from .pmh import Chain, ProposalSpec, diagnostics, expectation, run_pmh
from .rbpf import CLGModel, rbpf_loglik
from .resampling import multinomial, normalize, stratified, systematic
from .rng import RngStream
from .smc import LogLikEstimate, bootstrap_pf, fully_adapted_apf, vanilla_mc_loglik

__version__ = "0.1.0"

__all__ = [
    "backend",
    "Chain",
    "CLGModel",
    "DamperConfig",
    "DamperModel",
    "Dataset",
    "Gamma",
    "Gaussian",
    "GaussianBelief",
    "LgssParams",
    "LogLikEstimate",
    "MixedClgDemo",
    "Params",
    "ProposalSpec",
    "RngStream",
    "ScalarLgss",
    "TruncatedGaussian",
    "Uniform",
    "bootstrap_pf",
    "diagnostics",
    "expectation",
    "fully_adapted_apf",
    "load_dataset",
    "log_likelihood",
    "multinomial",
    "normalize",
    "rbpf_loglik",
    "run_pmh",
    "save_dataset",
    "simulate_dataset",
    "stratified",
    "systematic",
    "validate",
    "vanilla_mc_loglik",
]
