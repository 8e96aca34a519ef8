"""Exact linear-Gaussian filtering and log-likelihood.

Serves two roles: the analytic oracle that the particle-filter
unbiasedness tests compare against, and the per-particle engine inside
the Rao-Blackwellized filter.  Covariance updates use the Joseph form and
innovations are solved through a Cholesky factor, so beliefs stay
symmetric PSD and the log-determinant in the likelihood increment is
stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SingularInnovationError",
    "GaussianBelief",
    "LgssParams",
    "predict",
    "update",
    "log_likelihood",
]

_COND_LIMIT = 1e12


class SingularInnovationError(RuntimeError):
    """Innovation covariance numerically singular (cond > 1e12)."""


@dataclass
class GaussianBelief:
    """Mean and covariance of a Gaussian state belief.

    The covariance is symmetrized on construction; eigenvalues down to
    -1e-10 are tolerated and clipped to zero.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        cov = 0.5 * (cov + cov.T)
        d = self.mean.size
        if cov.shape != (d, d):
            raise ValueError(f"cov must be {d}x{d}, got {cov.shape}")
        if (np.diag(cov) < 0.0).any():
            eigvals, eigvecs = np.linalg.eigh(cov)
            if eigvals.min() < -1e-10:
                raise ValueError(f"cov is not PSD (min eigenvalue {eigvals.min():g})")
            cov = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
            cov = 0.5 * (cov + cov.T)
        self.cov = cov

    @property
    def dim(self) -> int:
        return self.mean.size


def predict(belief: GaussianBelief, A, b, Q) -> GaussianBelief:
    """Propagate through x' = A x + b + v, v ~ N(0, Q)."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    b = np.zeros(A.shape[0]) if b is None else np.atleast_1d(np.asarray(b, dtype=np.float64))
    d = belief.dim
    if A.shape != (d, d) or Q.shape != (d, d) or b.shape != (d,):
        raise ValueError("dimension mismatch in predict")
    mean = A @ belief.mean + b
    cov = A @ belief.cov @ A.T + Q
    return GaussianBelief(mean, 0.5 * (cov + cov.T))


def update(belief: GaussianBelief, C, R, y) -> tuple[GaussianBelief, float]:
    """Condition on y = C x + e, e ~ N(0, R); also return log N(y; C m, S)."""
    C = np.atleast_2d(np.asarray(C, dtype=np.float64))
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    d = belief.dim
    p = y.size
    if C.shape != (p, d) or R.shape != (p, p):
        raise ValueError("dimension mismatch in update")

    S = C @ belief.cov @ C.T + R
    S = 0.5 * (S + S.T)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularInnovationError(
            f"innovation covariance condition number {cond:g} exceeds {_COND_LIMIT:g}"
        )
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovationError("innovation covariance not positive definite") from exc

    innov = y - C @ belief.mean
    alpha = np.linalg.solve(L, innov)
    log_lik = -0.5 * (p * np.log(2.0 * np.pi) + alpha @ alpha) - np.log(np.diag(L)).sum()

    gain = np.linalg.solve(S, C @ belief.cov).T
    mean = belief.mean + gain @ innov
    joseph = np.eye(d) - gain @ C
    cov = joseph @ belief.cov @ joseph.T + gain @ R @ gain.T
    return GaussianBelief(mean, 0.5 * (cov + cov.T)), float(log_lik)


def _time_indexed(arr: np.ndarray, base_ndim: int, t: int) -> np.ndarray:
    """Select step t (1-based) when the array carries a leading time axis."""
    if arr.ndim == base_ndim + 1:
        return arr[t - 1]
    return arr


@dataclass
class LgssParams:
    """Linear-Gaussian state-space model.

        x_t = A x_{t-1} + b + v_t,  v_t ~ N(0, Q),   x_0 ~ N(m0, P0)
        y_t = C x_t + e_t,          e_t ~ N(0, R)

    A, b, Q, C, R may each carry a leading time axis (length T) for
    time-varying models.
    """

    A: np.ndarray
    Q: np.ndarray
    C: np.ndarray
    R: np.ndarray
    m0: np.ndarray
    P0: np.ndarray
    b: np.ndarray | None = field(default=None)

    def __post_init__(self):
        for name in ("A", "Q", "C", "R", "m0", "P0"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.b is not None:
            self.b = np.asarray(self.b, dtype=np.float64)

    def step_matrices(self, t: int):
        A = _time_indexed(self.A, 2, t)
        Q = _time_indexed(self.Q, 2, t)
        C = _time_indexed(self.C, 2, t)
        R = _time_indexed(self.R, 2, t)
        b = None if self.b is None else _time_indexed(self.b, 1, t)
        return A, b, Q, C, R


def log_likelihood(params: LgssParams, y: np.ndarray) -> float:
    """Exact log p(y_{1:T}) via the predict/update recursion.

    Observations start at t = 1; x_0 is unobserved, matching the particle
    filters' timing.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    belief = GaussianBelief(params.m0, params.P0)
    total = 0.0
    for t in range(1, y.shape[0] + 1):
        A, b, Q, C, R = params.step_matrices(t)
        belief = predict(belief, A, b, Q)
        belief, inc = update(belief, C, R, y[t - 1])
        total += inc
    return total
