"""Demo mixed linear/nonlinear model for the Rao-Blackwellized filter.

One nonlinear scalar substate driving, and driven by, one linear scalar
substate:

    x^n' = 0.6 x^n + 0.4 sin(1.2 x^n) + a_n x^l + v^n
    x^l' = a_l x^l + v^l
    y    = g x^n + c x^l + e

Conditional on the x^n trajectory this is linear-Gaussian, so the RBPF
applies.  :meth:`MixedClgDemo.joint_model` exposes the same system as an
ordinary two-dimensional state-space model, the reference point for
"bootstrap filter on the full joint state" variance comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kalman import GaussianBelief
from .models import Dataset, Params, simulate_dataset
from .rbpf import CLGModel
from .rng import RngStream

__all__ = ["MixedClgDemo"]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class MixedClgDemo:
    a_n: float = 0.25
    a_l: float = 0.9
    c: float = 1.0
    g_scale: float = 0.4
    sd_n: float = 0.15
    sd_l: float = 0.3
    sd_e: float = 0.2
    mu_n0: float = 0.0
    sd_n0: float = 0.5
    mu_l0: float = 0.0
    sd_l0: float = 0.5

    def f_nonlinear(self, xn: np.ndarray) -> np.ndarray:
        return 0.6 * xn + 0.4 * np.sin(1.2 * xn)

    def clg_model(self) -> CLGModel:
        n_of = lambda xn: xn.shape[0]  # noqa: E731
        return CLGModel(
            dim_nonlinear=1,
            dim_linear=1,
            dim_obs=1,
            f_n=self.f_nonlinear,
            A_n=lambda xn: np.full((n_of(xn), 1, 1), self.a_n),
            f_l=lambda xn: np.zeros((n_of(xn), 1)),
            A_l=lambda xn: np.full((n_of(xn), 1, 1), self.a_l),
            g=lambda xn: self.g_scale * xn,
            C=lambda xn: np.full((n_of(xn), 1, 1), self.c),
            Q_n=[[self.sd_n**2]],
            Q_l=[[self.sd_l**2]],
            R=[[self.sd_e**2]],
            sample_initial_nonlinear=lambda n, rng: self.mu_n0
            + self.sd_n0 * rng.child_gaussians(n, 1),
            initial_belief=GaussianBelief([self.mu_l0], [[self.sd_l0**2]]),
        )

    def joint_model(self) -> "MixedClgJoint":
        return MixedClgJoint(self)

    def simulate(self, horizon: int, seed: int) -> Dataset:
        return simulate_dataset(self.joint_model(), Params(), horizon, seed)


@dataclass(frozen=True)
class MixedClgJoint:
    """The demo system as a plain SSM over the stacked state (x^n, x^l)."""

    demo: MixedClgDemo

    name: str = "clg"
    param_names: tuple[str, ...] = ()
    state_dim: int = 2

    def log_prior(self, theta: Params) -> float:
        return 0.0

    def sample_prior(self, rng: RngStream) -> Params:
        return Params()

    def sample_initial(self, theta, n, rng: RngStream) -> np.ndarray:
        d = self.demo
        eps = rng.child_gaussians(n, 2)
        out = np.empty((n, 2))
        out[:, 0] = d.mu_n0 + d.sd_n0 * eps[:, 0]
        out[:, 1] = d.mu_l0 + d.sd_l0 * eps[:, 1]
        return out

    def sample_transition(self, theta, x, t, rng: RngStream) -> np.ndarray:
        d = self.demo
        eps = rng.child_gaussians(x.shape[0], 2)
        xn, xl = x[:, :1], x[:, 1:]
        out = np.empty_like(x)
        out[:, :1] = d.f_nonlinear(xn) + d.a_n * xl + d.sd_n * eps[:, :1]
        out[:, 1:] = d.a_l * xl + d.sd_l * eps[:, 1:]
        return out

    def log_obs_density(self, theta, x, y, t) -> np.ndarray:
        d = self.demo
        mean = d.g_scale * x[:, 0] + d.c * x[:, 1]
        z = (float(y) - mean) / d.sd_e
        return -0.5 * z * z - (math.log(d.sd_e) + 0.5 * _LOG_2PI)

    def sample_observation(self, theta, x, t, rng: RngStream) -> np.ndarray:
        d = self.demo
        mean = d.g_scale * x[:, :1] + d.c * x[:, 1:]
        return mean + d.sd_e * rng.child_gaussians(x.shape[0], 1)
