"""Unbiased resampling schemes and log-weight normalization.

All three schemes satisfy E[#copies of particle i] / N = w_i exactly.
``multinomial`` draws N independent uniforms, ``stratified`` one uniform
per stratum [(k-1)/N, k/N), and ``systematic`` a single uniform offset
shared across strata.  Ancestor indices are 0-based; stratified and
systematic outputs are ascending by construction, multinomial output is
in draw order.

Selection against the cumulative weights is strict (``u < c_i`` picks i),
which pins tie-breaking exactly.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import RngStream

__all__ = [
    "DegenerateWeightsError",
    "normalize",
    "multinomial",
    "stratified",
    "systematic",
    "SCHEMES",
]


class DegenerateWeightsError(RuntimeError):
    """Every particle has zero weight (all log-weights are -inf)."""


def normalize(log_w: np.ndarray) -> tuple[np.ndarray, float]:
    """Normalize log-weights; return (weights, log of their plain mean).

    The log-mean ``log((1/N) sum exp(log_w))`` is the per-step likelihood
    factor; it is computed max-shifted so finite inputs never overflow.
    Raises :class:`DegenerateWeightsError` when all entries are -inf and
    ``ValueError`` on NaN or +inf entries.
    """
    log_w = np.asarray(log_w, dtype=np.float64)
    if log_w.ndim != 1 or log_w.size == 0:
        raise ValueError("log_w must be a non-empty 1-d array")
    if np.isnan(log_w).any() or np.isposinf(log_w).any():
        raise ValueError("log-weights must be finite or -inf")
    top = log_w.max()
    if top == -math.inf:
        raise DegenerateWeightsError("all particle weights are zero")
    shifted = np.exp(log_w - top)
    total = shifted.sum()
    weights = shifted / total
    log_mean = top + math.log(total) - math.log(log_w.size)
    return weights, log_mean


def _check_weights(weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or weights.size == 0:
        raise ValueError("weights must be a non-empty 1-d array")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be normalized to sum 1 within 1e-9")
    return weights


def _cumulative(weights: np.ndarray) -> np.ndarray:
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # guard the final stratum against round-off
    return cum


def multinomial(weights: np.ndarray, rng: RngStream) -> np.ndarray:
    weights = _check_weights(weights)
    cum = _cumulative(weights)
    u = rng.uniforms(weights.size)
    return np.searchsorted(cum, u, side="right").astype(np.int64)


def stratified(weights: np.ndarray, rng: RngStream) -> np.ndarray:
    weights = _check_weights(weights)
    n = weights.size
    cum = _cumulative(weights)
    u = (np.arange(n) + rng.uniforms(n)) / n
    return np.searchsorted(cum, u, side="right").astype(np.int64)


def systematic(weights: np.ndarray, rng: RngStream) -> np.ndarray:
    weights = _check_weights(weights)
    n = weights.size
    cum = _cumulative(weights)
    u = (np.arange(n) + rng.uniform()) / n
    return np.searchsorted(cum, u, side="right").astype(np.int64)


SCHEMES = {
    "multinomial": multinomial,
    "stratified": stratified,
    "systematic": systematic,
}
