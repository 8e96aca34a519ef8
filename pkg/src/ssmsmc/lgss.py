"""Scalar linear-Gaussian state-space model.

    x_0 ~ N(m0, sigma0^2),  x_t = a x_{t-1} + v_t,  v_t ~ N(0, sigma_v^2)
    y_t = x_t + e_t,        e_t ~ N(0, sigma_e^2)

The transition coefficient ``a`` is the inferred parameter (uniform
prior); the noise scales are treated as known.  Because the dynamics are
Gaussian and the measurement is linear-Gaussian, the model supports every
estimator in the package: the exact Kalman likelihood (the oracle in the
unbiasedness tests), the bootstrap filter, and the fully adapted
auxiliary filter with its closed-form conditionals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Uniform
from .kalman import LgssParams
from .models import Dataset, Params, simulate_dataset
from .rng import RngStream

__all__ = ["ScalarLgss"]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ScalarLgss:
    sigma_v: float = 0.5
    sigma_e: float = 0.5
    m0: float = 0.0
    sigma0: float = 1.0
    a_lo: float = -0.95
    a_hi: float = 0.95
    a_true: float = 0.7

    name: str = "lgss"
    kernel_id: str = "lgss"
    param_names: tuple[str, ...] = ("a",)
    state_dim: int = 1

    def __post_init__(self):
        if self.sigma_v <= 0 or self.sigma_e <= 0 or self.sigma0 < 0:
            raise ValueError("noise scales must be positive (sigma0 may be 0)")

    # -- prior over the unknown coefficient --------------------------------

    def prior(self) -> Uniform:
        return Uniform(self.a_lo, self.a_hi)

    def log_prior(self, theta: Params) -> float:
        return self.prior().log_pdf(theta["a"])

    def sample_prior(self, rng: RngStream) -> Params:
        return Params(a=self.prior().sample(rng.child(0)))

    def theta_true(self) -> Params:
        return Params(a=self.a_true)

    # -- SSM capabilities ---------------------------------------------------

    def sample_initial(self, theta: Params, n: int, rng: RngStream) -> np.ndarray:
        return self.m0 + self.sigma0 * rng.child_gaussians(n, 1)

    def sample_transition(self, theta, x, t, rng: RngStream) -> np.ndarray:
        return theta["a"] * x + self.sigma_v * rng.child_gaussians(x.shape[0], 1)

    def log_obs_density(self, theta, x, y, t) -> np.ndarray:
        z = (float(y) - x[:, 0]) / self.sigma_e
        return -0.5 * z * z - (math.log(self.sigma_e) + 0.5 * _LOG_2PI)

    def sample_observation(self, theta, x, t, rng: RngStream) -> np.ndarray:
        return x + self.sigma_e * rng.child_gaussians(x.shape[0], 1)

    # -- fully adapted APF conditionals -------------------------------------

    def log_predictive(self, theta, x_prev, y, t) -> np.ndarray:
        s = math.sqrt(self.sigma_v**2 + self.sigma_e**2)
        z = (float(y) - theta["a"] * x_prev[:, 0]) / s
        return -0.5 * z * z - (math.log(s) + 0.5 * _LOG_2PI)

    def sample_transition_cond(self, theta, x_prev, y, t, rng: RngStream) -> np.ndarray:
        q = self.sigma_v**2
        r = self.sigma_e**2
        tau2 = q * r / (q + r)
        mean = tau2 * (theta["a"] * x_prev / q + float(y) / r)
        return mean + math.sqrt(tau2) * rng.child_gaussians(x_prev.shape[0], 1)

    # -- exact oracle and compiled-kernel glue -------------------------------

    def lgss_params(self, theta: Params) -> LgssParams:
        return LgssParams(
            A=[[theta["a"]]],
            Q=[[self.sigma_v**2]],
            C=[[1.0]],
            R=[[self.sigma_e**2]],
            m0=[self.m0],
            P0=[[self.sigma0**2]],
        )

    def kernel_params(self, theta: Params) -> np.ndarray:
        return np.array([theta["a"], self.sigma_v, self.sigma_e, self.m0, self.sigma0])

    def simulate(self, horizon: int, seed: int, theta: Params | None = None) -> Dataset:
        return simulate_dataset(self, theta or self.theta_true(), horizon, seed)
