"""Likelihood estimators: vanilla Monte Carlo, bootstrap PF, adapted APF.

All three return a log-domain estimate ``log_z`` of p(y_{1:T} | theta);
the plain-domain estimator exp(log_z) is non-negative and unbiased.
Weights live in log space end to end -- plain products of per-step weight
means underflow long before T = 1000 -- and each per-step mean goes
through the max-shifted log-sum-exp in :func:`ssmsmc.resampling.normalize`.

If every particle dies at some step (all log-weights -inf) the estimate
is log_z = -inf, i.e. the valid estimate "zero": a PMH caller then simply
rejects the proposal rather than aborting the chain.

RNG discipline: every draw is keyed by (purpose, time step, particle), so
results do not depend on scheduling and the N = 1 bootstrap filter equals
the N = 1 vanilla estimator draw for draw.

Models carrying a ``kernel_id`` run on the compiled backend when it is
available (same draws, same estimator); everything else uses the
vectorized numpy path below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .models import Dataset, ModelFaultError, Params, SsmModel
from .resampling import SCHEMES, DegenerateWeightsError, normalize
from .rng import RngStream

__all__ = [
    "LogLikEstimate",
    "ParticleSystem",
    "vanilla_mc_loglik",
    "bootstrap_pf",
    "fully_adapted_apf",
    "INIT",
    "PROPAGATE",
    "RESAMPLE",
]

# RNG path purposes within one filter run (shared with the compiled kernels)
INIT = 0
PROPAGATE = 1
RESAMPLE = 2


@dataclass(frozen=True)
class LogLikEstimate:
    """log-likelihood estimate with provenance (method, N, horizon)."""

    log_z: float
    method: str
    n_particles: int
    horizon: int

    def __post_init__(self):
        if math.isnan(self.log_z) or self.log_z == math.inf:
            raise ValueError("log_z must be finite or -inf")


@dataclass
class ParticleSystem:
    """Particle history of one bootstrap filter run.

    ``states[t]`` holds the particles after propagation to time t
    (``states[0]`` is the initial draw), ``log_weights[t-1]`` their
    observation log-weights, and ``ancestors[t-1]`` the resampled parent
    indices used to produce time t (identity at t = 1).
    """

    states: np.ndarray
    log_weights: np.ndarray
    ancestors: np.ndarray

    def trajectory(self, index: int) -> np.ndarray:
        """Backtrack ancestor links from a final-time particle index."""
        horizon = self.log_weights.shape[0]
        d = self.states.shape[2]
        out = np.empty((horizon + 1, d))
        idx = index
        for t in range(horizon, 0, -1):
            out[t] = self.states[t, idx]
            idx = int(self.ancestors[t - 1, idx])
        out[0] = self.states[0, idx]
        return out


def _obs_logw(model: SsmModel, theta: Params, x, y_t, t) -> np.ndarray:
    logw = np.asarray(model.log_obs_density(theta, x, y_t, t), dtype=np.float64)
    if np.isnan(logw).any():
        raise ModelFaultError("log_obs_density", t, "returned NaN")
    if np.isposinf(logw).any():
        raise ModelFaultError("log_obs_density", t, "returned +inf")
    return logw


def vanilla_mc_loglik(
    model: SsmModel,
    theta: Params,
    data: Dataset,
    n_particles: int,
    rng: RngStream,
) -> LogLikEstimate:
    """Plain Monte Carlo: average the joint observation density over
    independent prior-dynamics trajectories."""
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    x = model.sample_initial(theta, n_particles, rng.child(INIT, 0))
    totals = np.zeros(n_particles)
    for t in range(1, data.horizon + 1):
        x = model.sample_transition(theta, x, t, rng.child(PROPAGATE, t))
        totals += _obs_logw(model, theta, x, data.y[t - 1], t)
    try:
        _, log_mean = normalize(totals)
        log_z = log_mean  # normalize already divides by N
    except DegenerateWeightsError:
        log_z = -math.inf
    return LogLikEstimate(log_z, "vanilla", n_particles, data.horizon)


def bootstrap_pf(
    model: SsmModel,
    theta: Params,
    data: Dataset,
    n_particles: int,
    rng: RngStream,
    resampler: str = "systematic",
    keep_history: bool = False,
) -> tuple[LogLikEstimate, ParticleSystem | None]:
    """Bootstrap particle filter: propagate from the prior dynamics,
    weight by the observation density, resample every step."""
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if resampler not in SCHEMES:
        raise ValueError(f"unknown resampler {resampler!r}")

    kernel_id = getattr(model, "kernel_id", None)
    if kernel_id is not None and not keep_history and kernels.has_bootstrap(kernel_id):
        log_z = kernels.bootstrap_loglik(
            kernel_id, model.kernel_params(theta), data.y, n_particles, rng.key, resampler
        )
        return LogLikEstimate(log_z, "bootstrap", n_particles, data.horizon), None

    resample = SCHEMES[resampler]
    x = model.sample_initial(theta, n_particles, rng.child(INIT, 0))
    log_z = 0.0
    weights = None
    history = None
    if keep_history:
        history = ParticleSystem(
            states=np.empty((data.horizon + 1, n_particles, model.state_dim)),
            log_weights=np.empty((data.horizon, n_particles)),
            ancestors=np.empty((data.horizon, n_particles), dtype=np.int64),
        )
        history.states[0] = x

    for t in range(1, data.horizon + 1):
        if t > 1:
            ancestors = resample(weights, rng.child(RESAMPLE, t))
            x = x[ancestors]
        else:
            ancestors = np.arange(n_particles, dtype=np.int64)
        x = model.sample_transition(theta, x, t, rng.child(PROPAGATE, t))
        logw = _obs_logw(model, theta, x, data.y[t - 1], t)
        try:
            weights, log_mean = normalize(logw)
        except DegenerateWeightsError:
            return LogLikEstimate(-math.inf, "bootstrap", n_particles, data.horizon), None
        log_z += log_mean
        if keep_history:
            history.states[t] = x
            history.log_weights[t - 1] = logw
            history.ancestors[t - 1] = ancestors

    return LogLikEstimate(log_z, "bootstrap", n_particles, data.horizon), history


def fully_adapted_apf(
    model,
    theta: Params,
    data: Dataset,
    n_particles: int,
    rng: RngStream,
    resampler: str = "systematic",
) -> LogLikEstimate:
    """Fully adapted auxiliary particle filter.

    Resamples on the predictive weights p(y_t | x_{t-1}) and propagates
    from p(x_t | x_{t-1}, y_t); after propagation the particles are an
    unweighted approximation of the filtering distribution.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if resampler not in SCHEMES:
        raise ValueError(f"unknown resampler {resampler!r}")
    for capability in ("log_predictive", "sample_transition_cond"):
        if not hasattr(model, capability):
            raise TypeError(
                f"model {getattr(model, 'name', model)!r} lacks {capability}; "
                "the fully adapted APF needs the closed-form conditionals"
            )

    kernel_id = getattr(model, "kernel_id", None)
    if kernel_id is not None and kernels.has_apf(kernel_id):
        log_z = kernels.apf_loglik(
            kernel_id, model.kernel_params(theta), data.y, n_particles, rng.key, resampler
        )
        return LogLikEstimate(log_z, "apf", n_particles, data.horizon)

    resample = SCHEMES[resampler]
    x = model.sample_initial(theta, n_particles, rng.child(INIT, 0))
    log_z = 0.0
    for t in range(1, data.horizon + 1):
        log_nu = np.asarray(model.log_predictive(theta, x, data.y[t - 1], t), dtype=np.float64)
        if np.isnan(log_nu).any():
            raise ModelFaultError("log_predictive", t, "returned NaN")
        try:
            weights, log_mean = normalize(log_nu)
        except DegenerateWeightsError:
            return LogLikEstimate(-math.inf, "apf", n_particles, data.horizon)
        log_z += log_mean
        ancestors = resample(weights, rng.child(RESAMPLE, t))
        x = model.sample_transition_cond(
            theta, x[ancestors], data.y[t - 1], t, rng.child(PROPAGATE, t)
        )
    return LogLikEstimate(log_z, "apf", n_particles, data.horizon)
