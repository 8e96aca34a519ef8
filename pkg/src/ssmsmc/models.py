"""State-space model contract, parameter vectors and datasets.

A model is any object with the capabilities below; the filters never
require the transition density point-wise, only sampling from it.  All
state-facing capabilities are vectorized over particles: states are
``(n, d)`` arrays and observation log-densities return ``(n,)``.

Required capabilities::

    name: str
    param_names: tuple[str, ...]
    state_dim: int
    log_prior(theta) -> float
    sample_prior(rng) -> Params
    sample_initial(theta, n, rng) -> (n, d) array
    sample_transition(theta, x, t, rng) -> (n, d) array
    log_obs_density(theta, x, y_t, t) -> (n,) array   # finite or -inf, never NaN

Models supporting the fully adapted auxiliary filter additionally provide
``log_predictive(theta, x_prev, y_t, t)`` and
``sample_transition_cond(theta, x_prev, y_t, t, rng)``.  Optional extras:
``sample_observation(theta, x, t, rng)`` (used by probe validation and
simulators) and ``kernel_id``/``kernel_params`` (compiled fast path).

The time index t is explicit everywhere so time-inhomogeneous models stay
expressible; observations run t = 1..T with x_0 unobserved.
"""

from __future__ import annotations

import csv
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Protocol, runtime_checkable

import numpy as np

from .rng import RngStream

__all__ = [
    "Params",
    "Dataset",
    "SsmModel",
    "AdaptedSsmModel",
    "ModelFaultError",
    "ValidationReport",
    "validate",
    "load_dataset",
    "save_dataset",
]


class ModelFaultError(RuntimeError):
    """A model capability violated its contract (raised or returned NaN)."""

    def __init__(self, capability: str, time_index: int, detail: str):
        super().__init__(f"{capability} at t={time_index}: {detail}")
        self.capability = capability
        self.time_index = time_index


class Params(Mapping):
    """Immutable name-keyed parameter vector with a fixed name set."""

    __slots__ = ("_names", "_values")

    def __init__(self, values: Mapping[str, float] | None = None, **kwargs: float):
        merged = dict(values or {})
        merged.update(kwargs)
        object.__setattr__(self, "_names", tuple(merged))
        object.__setattr__(self, "_values", {k: float(v) for k, v in merged.items()})

    def __getitem__(self, name: str) -> float:
        try:
            return self._values[name]
        except KeyError:
            raise KeyError(
                f"unknown parameter {name!r}; declared names: {list(self._names)}"
            ) from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v:g}" for k, v in self._values.items())
        return f"Params({inner})"

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    def replace(self, **updates: float) -> "Params":
        for name in updates:
            if name not in self._values:
                raise KeyError(
                    f"unknown parameter {name!r}; declared names: {list(self._names)}"
                )
        merged = dict(self._values)
        merged.update({k: float(v) for k, v in updates.items()})
        return Params(merged)

    def as_array(self, order: tuple[str, ...] | None = None) -> np.ndarray:
        names = order if order is not None else self._names
        return np.array([self[name] for name in names], dtype=np.float64)


@dataclass
class Dataset:
    """Observations y_{1:T} plus optional simulation truth."""

    y: np.ndarray
    x_true: np.ndarray | None = None
    theta_true: Params | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if self.y.ndim != 2 or self.y.shape[0] < 1:
            raise ValueError("y must have shape (T, d_y) with T >= 1")
        if self.x_true is not None:
            self.x_true = np.asarray(self.x_true, dtype=np.float64)
            if self.x_true.shape[0] != self.horizon + 1:
                raise ValueError("x_true must cover t = 0..T")

    @property
    def horizon(self) -> int:
        return self.y.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.y.shape[1]


@runtime_checkable
class SsmModel(Protocol):
    name: str
    param_names: tuple[str, ...]
    state_dim: int

    def log_prior(self, theta: Params) -> float: ...

    def sample_prior(self, rng: RngStream) -> Params: ...

    def sample_initial(self, theta: Params, n: int, rng: RngStream) -> np.ndarray: ...

    def sample_transition(
        self, theta: Params, x: np.ndarray, t: int, rng: RngStream
    ) -> np.ndarray: ...

    def log_obs_density(
        self, theta: Params, x: np.ndarray, y: np.ndarray, t: int
    ) -> np.ndarray: ...


@runtime_checkable
class AdaptedSsmModel(SsmModel, Protocol):
    """Adds the closed-form capabilities the fully adapted APF needs."""

    def log_predictive(
        self, theta: Params, x_prev: np.ndarray, y: np.ndarray, t: int
    ) -> np.ndarray: ...

    def sample_transition_cond(
        self, theta: Params, x_prev: np.ndarray, y: np.ndarray, t: int, rng: RngStream
    ) -> np.ndarray: ...


@dataclass
class ValidationReport:
    probe_count: int
    horizon: int
    state_dim: int
    prior_in_support: bool
    nonfinite_states: int
    obs_density_evals: int
    faults: list[str]

    @property
    def fault_count(self) -> int:
        return len(self.faults) + self.nonfinite_states + (0 if self.prior_in_support else 1)


def _call(capability: str, t: int, fn, *args):
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001 - wrapped with context on purpose
        raise ModelFaultError(capability, t, f"raised {type(exc).__name__}: {exc}") from exc


def validate(
    model: SsmModel,
    theta: Params,
    probe_count: int,
    rng: RngStream,
    horizon: int = 10,
) -> ValidationReport:
    """Probe a model with short simulations and report contract violations.

    NaN from ``log_obs_density`` or an exception from any capability is a
    :class:`ModelFaultError`; non-finite states and prior support
    violations are counted in the report.
    """
    if probe_count < 1:
        raise ValueError("probe_count must be >= 1")

    faults: list[str] = []
    log_prior = _call("log_prior", 0, model.log_prior, theta)
    if np.isnan(log_prior):
        raise ModelFaultError("log_prior", 0, "returned NaN")
    prior_ok = log_prior > -np.inf

    x = _call("sample_initial", 0, model.sample_initial, theta, probe_count, rng.child(0, 0))
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (probe_count, model.state_dim):
        raise ModelFaultError(
            "sample_initial", 0, f"expected shape {(probe_count, model.state_dim)}, got {x.shape}"
        )

    nonfinite = int(np.count_nonzero(~np.isfinite(x).all(axis=1)))
    obs_evals = 0
    can_observe = hasattr(model, "sample_observation")
    for t in range(1, horizon + 1):
        x = _call(
            "sample_transition", t, model.sample_transition, theta, x, t, rng.child(1, t)
        )
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (probe_count, model.state_dim):
            raise ModelFaultError(
                "sample_transition", t, f"bad output shape {x.shape}"
            )
        nonfinite += int(np.count_nonzero(~np.isfinite(x).all(axis=1)))
        if can_observe:
            y = _call(
                "sample_observation", t, model.sample_observation, theta, x, t, rng.child(2, t)
            )
            dens = _call(
                "log_obs_density", t, model.log_obs_density, theta, x, np.atleast_1d(y)[0], t
            )
            dens = np.asarray(dens, dtype=np.float64)
            if np.isnan(dens).any():
                raise ModelFaultError("log_obs_density", t, "returned NaN")
            if np.isposinf(dens).any():
                raise ModelFaultError("log_obs_density", t, "returned +inf")
            obs_evals += dens.size

    return ValidationReport(
        probe_count=probe_count,
        horizon=horizon,
        state_dim=model.state_dim,
        prior_in_support=prior_ok,
        nonfinite_states=nonfinite,
        obs_density_evals=obs_evals,
        faults=faults,
    )


def simulate_dataset(
    model: SsmModel, theta: Params, horizon: int, seed: int
) -> Dataset:
    """Simulate one trajectory and its observations from a model.

    Requires the optional ``sample_observation`` capability.  Draws are
    keyed per (purpose, t) like the filters, so the output depends only on
    (model, theta, horizon, seed).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not hasattr(model, "sample_observation"):
        raise TypeError(f"model {model.name!r} cannot simulate: no sample_observation")
    root = RngStream(seed)
    x = np.asarray(model.sample_initial(theta, 1, root.child(0, 0)), dtype=np.float64)
    states = np.empty((horizon + 1, model.state_dim))
    states[0] = x[0]
    ys = []
    for t in range(1, horizon + 1):
        x = model.sample_transition(theta, x, t, root.child(1, t))
        states[t] = x[0]
        y = model.sample_observation(theta, x, t, root.child(2, t))
        ys.append(np.atleast_2d(y)[0])
    return Dataset(y=np.asarray(ys, dtype=np.float64), x_true=states, theta_true=theta)


# -- dataset CSV format: header "t,y" (or t,y0,y1,...), rows t = 1..T ------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_dataset(data: Dataset, path: str | Path, truth_path: str | Path | None = None) -> None:
    path = Path(path)
    d = data.obs_dim
    header = ["t", "y"] if d == 1 else ["t"] + [f"y{j}" for j in range(d)]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(1, data.horizon + 1):
            writer.writerow([t] + [_fmt(v) for v in data.y[t - 1]])
    if truth_path is not None and data.x_true is not None:
        truth_path = Path(truth_path)
        dx = data.x_true.shape[1]
        with truth_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x{j}" for j in range(dx)])
            for t in range(data.x_true.shape[0]):
                writer.writerow([t] + [_fmt(v) for v in data.x_true[t]])


def load_dataset(path: str | Path) -> Dataset:
    """Read an observation CSV; malformed rows raise with their line number."""
    path = Path(path)
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: line 1: empty file") from None
        if len(header) < 2 or header[0].strip() != "t":
            raise ValueError(f"{path}: line 1: expected header 't,y[,y1,...]', got {header}")
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric value") from None
    if not rows:
        raise ValueError(f"{path}: no observation rows")
    return Dataset(y=np.asarray(rows, dtype=np.float64))
