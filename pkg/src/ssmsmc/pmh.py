"""Particle Metropolis-Hastings: pseudo-marginal MCMC over model parameters.

Each iteration proposes theta' from a per-parameter truncated-Gaussian
random walk, estimates the likelihood with a fresh bootstrap particle
filter, and accepts with probability

    alpha = min(1, exp(log_z' + log_prior' - log_z - log_prior + log_q_ratio)).

The single most error-prone rule is pinned here and in a dedicated
regression test: on rejection the held (theta, log_z) pair is carried
*unchanged*.  Re-estimating log_z for the held point would break the
pseudo-marginal construction -- the likelihood estimate is part of the
Markov-chain state.

Truncated proposals are not symmetric (the normalizing masses differ
between centers), so the exact Hastings correction log q(theta|theta') -
log q(theta'|theta) is always applied; it reduces to 0 for untruncated
walks.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy.special import ndtr

from .models import Dataset, Params, SsmModel
from .rng import RngStream
from .smc import bootstrap_pf

__all__ = [
    "ProposalSpec",
    "ChainRecord",
    "Chain",
    "propose",
    "accept_step",
    "run_pmh",
    "expectation",
    "diagnostics",
    "save_chain",
    "load_chain",
]

# RNG path purposes within one chain
_FILTER = 0
_PROPOSE = 1
_ACCEPT = 2
_THETA0 = 3
_TRAJECTORY = 4

DEFAULT_QUANTILES = (2.5, 25.0, 50.0, 75.0, 97.5)


@dataclass(frozen=True)
class ProposalSpec:
    """Per-parameter truncated-Gaussian random-walk scales and bounds.

    ``components[name] = (stddev, lo, hi)``; bounds may be infinite.
    """

    components: Mapping[str, tuple[float, float, float]]

    def __post_init__(self):
        for name, (stddev, lo, hi) in self.components.items():
            if not stddev > 0.0:
                raise ValueError(f"proposal stddev for {name!r} must be > 0")
            if not lo < hi:
                raise ValueError(f"proposal bounds for {name!r} must satisfy lo < hi")

    def with_scales(self, **scales: float) -> "ProposalSpec":
        out = dict(self.components)
        for name, stddev in scales.items():
            if name not in out:
                raise KeyError(f"unknown proposal component {name!r}")
            _, lo, hi = out[name]
            out[name] = (float(stddev), lo, hi)
        return ProposalSpec(out)


def _log_truncation_mass(center: float, stddev: float, lo: float, hi: float) -> float:
    mass = float(ndtr((hi - center) / stddev) - ndtr((lo - center) / stddev))
    return math.log(mass)


def propose(
    spec: ProposalSpec, theta: Params, rng: RngStream
) -> tuple[Params, float]:
    """Random-walk proposal; returns (theta', log q(theta|theta') - log q(theta'|theta)).

    Component draws come from child streams indexed by position, so the
    draw for one parameter never shifts another's.
    """
    from .distributions import TruncatedGaussian

    new_values = {}
    log_q_ratio = 0.0
    for i, name in enumerate(theta.names):
        if name not in spec.components:
            new_values[name] = theta[name]
            continue
        stddev, lo, hi = spec.components[name]
        current = theta[name]
        if not lo <= current <= hi:
            raise ValueError(
                f"current {name}={current:g} lies outside the proposal bounds "
                f"[{lo:g}, {hi:g}]"
            )
        proposed = TruncatedGaussian(current, stddev, lo, hi).sample(rng.child(i))
        new_values[name] = proposed
        if lo > -math.inf or hi < math.inf:
            # Gaussian factors cancel by symmetry; only the truncation
            # masses (which depend on the center) survive.
            log_q_ratio += _log_truncation_mass(current, stddev, lo, hi)
            log_q_ratio -= _log_truncation_mass(proposed, stddev, lo, hi)
    return Params(new_values), log_q_ratio


def accept_step(
    log_z_new: float,
    log_prior_new: float,
    log_z_cur: float,
    log_prior_cur: float,
    log_q_ratio: float,
    rng: RngStream,
) -> tuple[bool, float]:
    """Metropolis-Hastings accept/reject on the pseudo-marginal ratio."""
    if log_z_new == -math.inf or log_prior_new == -math.inf:
        alpha = 0.0
    else:
        log_ratio = (log_z_new + log_prior_new) - (log_z_cur + log_prior_cur) + log_q_ratio
        alpha = 1.0 if log_ratio >= 0.0 else math.exp(log_ratio)
    omega = rng.uniform()
    return omega < alpha, alpha


@dataclass(frozen=True)
class ChainRecord:
    m: int
    theta: Params
    log_z: float
    accepted: bool
    alpha: float


@dataclass
class Chain:
    """PMH output: M+1 records (record 0 is the initialization)."""

    records: list[ChainRecord]
    seed: int
    n_particles: int
    resampler: str
    model_name: str
    param_names: tuple[str, ...]
    trajectories: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def n_iterations(self) -> int:
        return len(self.records) - 1

    def acceptance_rate(self) -> float:
        return sum(r.accepted for r in self.records[1:]) / self.n_iterations

    def param_array(self, burn_in: int = 0) -> np.ndarray:
        """(kept records, n_params) array of parameter values."""
        return np.array(
            [r.theta.as_array(self.param_names) for r in self.records[burn_in:]]
        )


def run_pmh(
    model: SsmModel,
    data: Dataset,
    proposal: ProposalSpec,
    n_iterations: int,
    n_particles: int,
    seed: int,
    theta0: Params | None = None,
    resampler: str = "systematic",
    store_trajectories: bool = False,
) -> Chain:
    """Particle Metropolis-Hastings with a bootstrap-PF likelihood estimator.

    theta0 defaults to one prior draw.  With ``store_trajectories`` each
    accepted filter run also contributes one state trajectory, drawn by
    ancestor backtracking in proportion to the final weights -- those
    draws approximate the joint smoothing distribution.
    """
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    root = RngStream(seed)

    def in_proposal_bounds(theta: Params) -> bool:
        return all(
            lo <= theta[name] <= hi
            for name, (_, lo, hi) in proposal.components.items()
            if name in theta.names
        )

    if theta0 is None:
        # Prior draws can land outside truncated proposal bounds (e.g. a
        # proposal capped above inside an unbounded prior); the walk could
        # never leave such a point, so redraw until the start is usable.
        for attempt in range(1000):
            theta0 = model.sample_prior(root.child(_THETA0, attempt))
            if model.log_prior(theta0) > -math.inf and in_proposal_bounds(theta0):
                break
        else:
            raise ValueError("could not draw a prior theta0 inside the proposal bounds")
    elif not in_proposal_bounds(theta0):
        raise ValueError(f"theta0 {theta0!r} lies outside the proposal bounds")
    log_prior = model.log_prior(theta0)
    if log_prior == -math.inf:
        raise ValueError(f"theta0 {theta0!r} is outside the prior support")
    if n_particles < data.horizon / 4:
        warnings.warn(
            f"n_particles={n_particles} is small for T={data.horizon}; the "
            "likelihood-estimate variance grows with T and the chain may stick "
            "(rule of thumb: scale N linearly with T)",
            stacklevel=2,
        )

    def run_filter(theta: Params, m: int):
        return bootstrap_pf(
            model,
            theta,
            data,
            n_particles,
            root.child(_FILTER, m),
            resampler=resampler,
            keep_history=store_trajectories,
        )

    theta = theta0
    estimate, history = run_filter(theta, 0)
    log_z = estimate.log_z

    trajectories: list[np.ndarray] = []

    def keep_trajectory(hist, m: int) -> None:
        if hist is None:
            return
        final_w = np.exp(hist.log_weights[-1] - hist.log_weights[-1].max())
        final_w /= final_w.sum()
        u = root.child(_TRAJECTORY, m).uniform()
        index = int(np.searchsorted(np.cumsum(final_w), u, side="right"))
        trajectories.append(hist.trajectory(min(index, final_w.size - 1)))

    keep_trajectory(history, 0)
    records = [ChainRecord(0, theta, log_z, True, 1.0)]

    for m in range(1, n_iterations + 1):
        theta_new, log_q_ratio = propose(proposal, theta, root.child(_PROPOSE, m))
        log_prior_new = model.log_prior(theta_new)
        if log_prior_new == -math.inf:
            # outside the prior: alpha is 0 regardless of the estimate, so
            # skip the filter (stream paths are per-iteration, nothing shifts)
            log_z_new, history_new = -math.inf, None
        else:
            estimate_new, history_new = run_filter(theta_new, m)
            log_z_new = estimate_new.log_z
        accepted, alpha = accept_step(
            log_z_new, log_prior_new, log_z, log_prior, log_q_ratio, root.child(_ACCEPT, m)
        )
        if accepted:
            theta, log_z, log_prior = theta_new, log_z_new, log_prior_new
            keep_trajectory(history_new, m)
        records.append(ChainRecord(m, theta, log_z, accepted, alpha))

    return Chain(
        records=records,
        seed=seed,
        n_particles=n_particles,
        resampler=resampler,
        model_name=model.name,
        param_names=tuple(model.param_names),
        trajectories=trajectories,
    )


def expectation(chain: Chain, fn: Callable[[Params], float], burn_in: int) -> float:
    """Posterior expectation of a test function over the post-burn-in chain."""
    if burn_in < 0 or burn_in >= len(chain.records):
        raise ValueError("burn_in must leave a non-empty record range")
    values = [fn(r.theta) for r in chain.records[burn_in:]]
    return np.mean(np.asarray(values, dtype=np.float64), axis=0)


def diagnostics(chain: Chain, burn_in: int | None = None, bins: int = 50) -> dict:
    """Acceptance rate plus per-parameter moments, quantiles and histograms.

    Burn-in only affects this report; the chain itself always keeps every
    record.  Default burn-in: 10% of the iteration count.
    """
    if burn_in is None:
        burn_in = chain.n_iterations // 10
    kept = chain.param_array(burn_in=burn_in)
    out = {
        "model": chain.model_name,
        "n_iterations": chain.n_iterations,
        "n_particles": chain.n_particles,
        "resampler": chain.resampler,
        "seed": chain.seed,
        "burn_in": burn_in,
        "acceptance_rate": chain.acceptance_rate(),
        "params": {},
    }
    for j, name in enumerate(chain.param_names):
        samples = kept[:, j]
        counts, edges = np.histogram(samples, bins=bins)
        out["params"][name] = {
            "mean": float(samples.mean()),
            "stddev": float(samples.std(ddof=1)) if samples.size > 1 else 0.0,
            "quantiles": {
                str(q): float(np.percentile(samples, q)) for q in DEFAULT_QUANTILES
            },
            "hist_edges": [float(e) for e in edges],
            "hist_counts": [int(c) for c in counts],
        }
    return out


# -- chain CSV: header "m,<params...>,log_z,alpha,accepted" -----------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_chain(chain: Chain, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", *chain.param_names, "log_z", "alpha", "accepted"])
        for r in chain.records:
            writer.writerow(
                [r.m]
                + [_fmt(r.theta[name]) for name in chain.param_names]
                + [_fmt(r.log_z), _fmt(r.alpha), int(r.accepted)]
            )


def load_chain(path: str | Path) -> Chain:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:1] != ["m"] or header[-3:] != ["log_z", "alpha", "accepted"]:
            raise ValueError(f"{path}: not a chain file")
        names = tuple(header[1:-3])
        records = []
        for row in reader:
            theta = Params({n: float(v) for n, v in zip(names, row[1 : 1 + len(names)])})
            records.append(
                ChainRecord(
                    m=int(row[0]),
                    theta=theta,
                    log_z=float(row[-3]),
                    alpha=float(row[-2]),
                    accepted=bool(int(row[-1])),
                )
            )
    return Chain(
        records=records,
        seed=-1,
        n_particles=0,
        resampler="",
        model_name="",
        param_names=names,
    )
