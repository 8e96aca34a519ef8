"""Rao-Blackwellized particle filter for conditionally linear-Gaussian models.

The state splits into a nonlinear part x^n carried by particles and a
linear part x^l marginalized analytically: one Gaussian belief per
particle, updated by Kalman steps.  The nonlinear transition

    x^n_{t+1} = f_n(x^n_t) + A_n(x^n_t) x^l_t + v^n

doubles as a "pretend measurement" of x^l_t once x^n_{t+1} has been
sampled, and the belief time update then accounts for any correlation
Q_nl between v^n and v^l (zero by default -- the usual presentation keeps
the two noises separate).

Per time step and particle: weight by the marginal observation predictive
N(y_t; g + C m, C P C' + R) while conditioning the belief on y_t, then
resample, then propagate x^n and condition/predict the belief.  This
mirrors the bootstrap filter's resample-propagate-weight order, and the
log-likelihood estimate accumulates exactly as there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kalman import GaussianBelief, SingularInnovationError
from .models import Dataset
from .resampling import SCHEMES, DegenerateWeightsError, normalize
from .rng import RngStream
from .smc import INIT, PROPAGATE, RESAMPLE, LogLikEstimate

__all__ = ["CLGModel", "RbParticle", "rbpf_loglik"]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class CLGModel:
    """Mixed linear/nonlinear Gaussian model.

        x^n_{t+1} = f_n(x^n_t) + A_n(x^n_t) x^l_t + v^n_t
        x^l_{t+1} = f_l(x^n_t) + A_l(x^n_t) x^l_t + v^l_t
        y_t       = g(x^n_t)   + C(x^n_t)   x^l_t + e_t

    with cov([v^n; v^l]) = [[Q_n, Q_nl], [Q_nl', Q_l]] and e_t ~ N(0, R).
    The six functions are vectorized over particles: they map (N, d_n)
    arrays to batches of vectors/matrices.
    """

    dim_nonlinear: int
    dim_linear: int
    dim_obs: int
    f_n: Callable[[np.ndarray], np.ndarray]
    A_n: Callable[[np.ndarray], np.ndarray]
    f_l: Callable[[np.ndarray], np.ndarray]
    A_l: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    C: Callable[[np.ndarray], np.ndarray]
    Q_n: np.ndarray
    Q_l: np.ndarray
    R: np.ndarray
    sample_initial_nonlinear: Callable[[int, RngStream], np.ndarray]
    initial_belief: GaussianBelief
    Q_nl: np.ndarray | None = field(default=None)
    name: str = "clg"

    def __post_init__(self):
        dn, dl, dy = self.dim_nonlinear, self.dim_linear, self.dim_obs
        self.Q_n = np.asarray(self.Q_n, dtype=np.float64).reshape(dn, dn)
        self.Q_l = np.asarray(self.Q_l, dtype=np.float64).reshape(dl, dl)
        self.R = np.asarray(self.R, dtype=np.float64).reshape(dy, dy)
        if self.Q_nl is None:
            self.Q_nl = np.zeros((dn, dl))
        else:
            self.Q_nl = np.asarray(self.Q_nl, dtype=np.float64).reshape(dn, dl)
        block = np.block([[self.Q_n, self.Q_nl], [self.Q_nl.T, self.Q_l]])
        if np.linalg.eigvalsh(0.5 * (block + block.T)).min() < -1e-10:
            raise ValueError("joint process-noise covariance is not PSD")
        try:
            np.linalg.cholesky(self.R)
        except np.linalg.LinAlgError as exc:
            raise ValueError("R must be positive definite") from exc
        if self.initial_belief.dim != dl:
            raise ValueError("initial belief dimension must equal dim_linear")

    def joint_noise_cov(self) -> np.ndarray:
        return np.block([[self.Q_n, self.Q_nl], [self.Q_nl.T, self.Q_l]])


@dataclass
class RbParticle:
    """One particle: nonlinear substate plus its linear-state belief."""

    x_n: np.ndarray
    belief: GaussianBelief


def _bmm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("nij,njk->nik", a, b)


def _bmv(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("nij,nj->ni", a, v)


def _bt(a: np.ndarray) -> np.ndarray:
    return a.transpose(0, 2, 1)


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + _bt(a))


def _chol_batch(s: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovationError(f"{what} not positive definite") from exc


def _propagate(model: CLGModel, x_n, m, p, rng: RngStream):
    """Sample x^n_{t+1} and condition + predict each belief."""
    n = x_n.shape[0]
    fn = model.f_n(x_n)
    an = model.A_n(x_n)
    fl = model.f_l(x_n)
    al = model.A_l(x_n)

    pant = _bmm(p, _bt(an))  # P A_n'
    s_prop = _sym(_bmm(an, pant) + model.Q_n)
    mean_prop = fn + _bmv(an, m)

    if not s_prop.any():
        # nonlinear substate is deterministic given x^n: nothing to
        # condition on, the belief only time-updates
        x_next = mean_prop
        m_next = fl + _bmv(al, m)
        p_next = _sym(_bmm(_bmm(al, p), _bt(al)) + model.Q_l)
        return x_next, m_next, p_next

    chol = _chol_batch(s_prop, "nonlinear propagation covariance")
    eps = rng.child_gaussians(n, model.dim_nonlinear)
    x_next = mean_prop + _bmv(chol, eps)

    cross = _bmm(al, pant) + model.Q_nl.T  # cov(x^l_{t+1}, pretend measurement)
    gain = _bt(np.linalg.solve(s_prop, _bt(cross)))
    innov = x_next - mean_prop
    m_next = fl + _bmv(al, m) + _bmv(gain, innov)

    al_eff = al - _bmm(gain, an)
    p_next = (
        _bmm(_bmm(al_eff, p), _bt(al_eff))
        + model.Q_l
        + _bmm(_bmm(gain, np.broadcast_to(model.Q_n, s_prop.shape)), _bt(gain))
        - _bmm(gain, np.broadcast_to(model.Q_nl, (n, *model.Q_nl.shape)))
        - _bt(_bmm(gain, np.broadcast_to(model.Q_nl, (n, *model.Q_nl.shape))))
    )
    return x_next, m_next, _sym(p_next)


def _update_weight(model: CLGModel, x_n, m, p, y_t):
    """Kalman measurement update; returns the predictive log-weights."""
    n = x_n.shape[0]
    dy = model.dim_obs
    gx = model.g(x_n)
    cx = model.C(x_n)

    pct = _bmm(p, _bt(cx))
    s = _sym(_bmm(cx, pct) + model.R)
    chol = _chol_batch(s, "innovation covariance")
    innov = y_t - gx - _bmv(cx, m)
    alpha = np.linalg.solve(chol, innov[..., None])[..., 0]
    logdet = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    logw = -0.5 * (dy * _LOG_2PI + logdet + np.einsum("ni,ni->n", alpha, alpha))

    gain = _bt(np.linalg.solve(s, _bt(pct)))
    m_new = m + _bmv(gain, innov)
    eye = np.eye(model.dim_linear)
    joseph = eye - _bmm(gain, cx)
    r_full = np.broadcast_to(model.R, s.shape)
    p_new = _sym(_bmm(_bmm(joseph, p), _bt(joseph)) + _bmm(_bmm(gain, r_full), _bt(gain)))
    return logw, m_new, p_new


def rbpf_loglik(
    model: CLGModel,
    data: Dataset,
    n_particles: int,
    rng: RngStream,
    resampler: str = "systematic",
) -> tuple[LogLikEstimate, list[RbParticle]]:
    """Run the RBPF and return the likelihood estimate and final particles."""
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if resampler not in SCHEMES:
        raise ValueError(f"unknown resampler {resampler!r}")
    resample = SCHEMES[resampler]

    x_n = np.asarray(
        model.sample_initial_nonlinear(n_particles, rng.child(INIT, 0)), dtype=np.float64
    ).reshape(n_particles, model.dim_nonlinear)
    m = np.broadcast_to(model.initial_belief.mean, (n_particles, model.dim_linear)).copy()
    p = np.broadcast_to(
        model.initial_belief.cov, (n_particles, model.dim_linear, model.dim_linear)
    ).copy()

    x_n, m, p = _propagate(model, x_n, m, p, rng.child(PROPAGATE, 1))
    log_z = 0.0
    for t in range(1, data.horizon + 1):
        logw, m, p = _update_weight(model, x_n, m, p, data.y[t - 1])
        try:
            weights, log_mean = normalize(logw)
        except DegenerateWeightsError:
            return LogLikEstimate(-math.inf, "rbpf", n_particles, data.horizon), []
        log_z += log_mean
        if t < data.horizon:
            ancestors = resample(weights, rng.child(RESAMPLE, t + 1))
            x_n, m, p = x_n[ancestors], m[ancestors], p[ancestors]
            x_n, m, p = _propagate(model, x_n, m, p, rng.child(PROPAGATE, t + 1))

    particles = [
        RbParticle(x_n=x_n[i].copy(), belief=GaussianBelief(m[i], p[i]))
        for i in range(n_particles)
    ]
    return LogLikEstimate(log_z, "rbpf", n_particles, data.horizon), particles
