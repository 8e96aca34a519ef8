"""Probability distributions used by models, priors and proposals.

Four kinds: :class:`Gaussian`, :class:`Gamma`, :class:`Uniform` and
:class:`TruncatedGaussian`.  Each provides ``log_pdf`` (natural log,
``-inf`` outside support), ``sample`` (one draw from an
:class:`~ssmsmc.rng.RngStream`) and ``sample_batch`` (vectorized; draw i
consumes exactly the counters of ``sample(stream.child(i))``, so batch and
scalar paths are interchangeable), plus analytic moments used as oracles
in the tests.

Gaussians are parameterized by standard deviation, Gammas by
(shape, scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .rng import RngStream, normal_icdf

__all__ = [
    "ParameterError",
    "Gaussian",
    "Gamma",
    "Uniform",
    "TruncatedGaussian",
    "Distribution",
]

_LOG_2PI = math.log(2.0 * math.pi)


class ParameterError(ValueError):
    """Distribution parameters outside their domain."""


@dataclass(frozen=True)
class Gaussian:
    mean: float
    stddev: float

    def __post_init__(self):
        if not self.stddev > 0.0:
            raise ParameterError(f"stddev must be > 0, got {self.stddev}")

    def log_pdf(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.mean) / self.stddev
        out = -0.5 * z * z - math.log(self.stddev) - 0.5 * _LOG_2PI
        return out if out.ndim else float(out)

    def sample(self, stream: RngStream) -> float:
        return self.mean + self.stddev * stream.gaussian()

    def sample_batch(self, stream: RngStream, n: int) -> np.ndarray:
        return self.mean + self.stddev * stream.child_gaussians(n, 1)[:, 0]

    def variance(self) -> float:
        return self.stddev**2


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterError(f"need lo < hi, got [{self.lo}, {self.hi})")

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.lo) & (x < self.hi)
        out = np.where(inside, -math.log(self.hi - self.lo), -np.inf)
        return out if out.ndim else float(out)

    def sample(self, stream: RngStream) -> float:
        return self.lo + (self.hi - self.lo) * stream.uniform()

    def sample_batch(self, stream: RngStream, n: int) -> np.ndarray:
        u = stream.child_uniforms(n, 1)[:, 0]
        return self.lo + (self.hi - self.lo) * u

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def variance(self) -> float:
        return (self.hi - self.lo) ** 2 / 12.0


@dataclass(frozen=True)
class Gamma:
    """Gamma distribution with (shape, scale); mean = shape * scale."""

    shape: float
    scale: float

    def __post_init__(self):
        if not self.shape > 0.0:
            raise ParameterError(f"shape must be > 0, got {self.shape}")
        if not self.scale > 0.0:
            raise ParameterError(f"scale must be > 0, got {self.scale}")

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            body = (
                (self.shape - 1.0) * np.log(x)
                - x / self.scale
                - math.lgamma(self.shape)
                - self.shape * math.log(self.scale)
            )
        out = np.where(x > 0.0, body, -np.inf)
        return out if out.ndim else float(out)

    def sample(self, stream: RngStream) -> float:
        # Marsaglia-Tsang; each round consumes one (gaussian, uniform) pair
        # even on the v <= 0 short-circuit, so sample_batch can replay it.
        if self.shape < 1.0:
            boost = stream.open_uniform() ** (1.0 / self.shape)
            return boost * Gamma(self.shape + 1.0, self.scale)._sample_mt(stream)
        return self._sample_mt(stream)

    def _sample_mt(self, stream: RngStream) -> float:
        d = self.shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = stream.gaussian()
            u = stream.open_uniform()
            t = 1.0 + c * x
            v = t * t * t
            if v <= 0.0:
                continue
            if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
                return d * v * self.scale

    def sample_batch(self, stream: RngStream, n: int) -> np.ndarray:
        if self.shape < 1.0:
            u0 = stream.child_open_uniforms_at(np.arange(n), 0)
            boost = u0 ** (1.0 / self.shape)
            inner = Gamma(self.shape + 1.0, self.scale)
            return boost * inner._sample_mt_batch(stream, n, offset=1)
        return self._sample_mt_batch(stream, n, offset=0)

    def _sample_mt_batch(self, stream: RngStream, n: int, offset: int) -> np.ndarray:
        d = self.shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        out = np.empty(n)
        pending = np.arange(n)
        rnd = 0
        while pending.size:
            x = normal_icdf(stream.child_open_uniforms_at(pending, offset + 2 * rnd))
            u = stream.child_open_uniforms_at(pending, offset + 2 * rnd + 1)
            t = 1.0 + c * x
            v = t * t * t
            with np.errstate(invalid="ignore", divide="ignore"):
                ok = (v > 0.0) & (np.log(u) < 0.5 * x * x + d - d * v + d * np.log(v))
            out[pending[ok]] = d * v[ok] * self.scale
            pending = pending[~ok]
            rnd += 1
        return out

    def mean(self) -> float:
        return self.shape * self.scale

    def variance(self) -> float:
        return self.shape * self.scale**2


@dataclass(frozen=True)
class TruncatedGaussian:
    """Gaussian restricted to [lo, hi]; bounds may be infinite.

    Sampling rejects from the untruncated Gaussian and falls back to
    inverse-CDF when the truncated mass drops below 1%, where rejection
    would stall.
    """

    mean: float
    stddev: float
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.stddev > 0.0:
            raise ParameterError(f"stddev must be > 0, got {self.stddev}")
        if not self.lo < self.hi:
            raise ParameterError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    def _bounds_std(self) -> tuple[float, float]:
        a = (self.lo - self.mean) / self.stddev
        b = (self.hi - self.mean) / self.stddev
        return a, b

    def mass(self) -> float:
        """Probability the untruncated Gaussian assigns to [lo, hi]."""
        a, b = self._bounds_std()
        mass = float(ndtr(b) - ndtr(a))
        if mass <= 0.0:
            raise ParameterError(
                f"truncation [{self.lo}, {self.hi}] carries no probability mass"
            )
        return mass

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        z = (x - self.mean) / self.stddev
        body = (
            -0.5 * z * z
            - math.log(self.stddev)
            - 0.5 * _LOG_2PI
            - math.log(self.mass())
        )
        out = np.where((x >= self.lo) & (x <= self.hi), body, -np.inf)
        return out if out.ndim else float(out)

    def sample(self, stream: RngStream) -> float:
        mass = self.mass()
        if mass < 0.01:
            a, _ = self._bounds_std()
            p = float(ndtr(a)) + mass * stream.open_uniform()
            return self.mean + self.stddev * float(normal_icdf(p))
        while True:
            x = self.mean + self.stddev * stream.gaussian()
            if self.lo <= x <= self.hi:
                return x

    def sample_batch(self, stream: RngStream, n: int) -> np.ndarray:
        mass = self.mass()
        if mass < 0.01:
            a, _ = self._bounds_std()
            u = stream.child_open_uniforms_at(np.arange(n), 0)
            return self.mean + self.stddev * normal_icdf(float(ndtr(a)) + mass * u)
        out = np.empty(n)
        pending = np.arange(n)
        rnd = 0
        while pending.size:
            g = normal_icdf(stream.child_open_uniforms_at(pending, rnd))
            x = self.mean + self.stddev * g
            ok = (x >= self.lo) & (x <= self.hi)
            out[pending[ok]] = x[ok]
            pending = pending[~ok]
            rnd += 1
        return out

    def mean_analytic(self) -> float:
        """Exact mean of the truncated distribution (moment oracle)."""
        a, b = self._bounds_std()
        return self.mean + self.stddev * (_phi(a) - _phi(b)) / self.mass()

    def variance(self) -> float:
        a, b = self._bounds_std()
        pa, pb = _phi(a), _phi(b)
        mass = self.mass()
        za = a * pa if math.isfinite(a) else 0.0
        zb = b * pb if math.isfinite(b) else 0.0
        shift = (pa - pb) / mass
        return self.stddev**2 * (1.0 + (za - zb) / mass - shift**2)


def _phi(z: float) -> float:
    """Standard normal density, with the phi(+-inf) = 0 convention."""
    if not math.isfinite(z):
        return 0.0
    return math.exp(-0.5 * z * z - 0.5 * _LOG_2PI)


Distribution = Gaussian | Gamma | Uniform | TruncatedGaussian
