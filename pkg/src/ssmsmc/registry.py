"""Named model registry for the command-line driver.

Each entry bundles what the CLI needs: how to build the model from an
optional JSON config, which likelihood methods apply, simulation, priors
and proposal defaults for posterior sampling, and (where the structure
exists) the exact Kalman likelihood and the Rao-Blackwellized view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from . import kalman
from .damper import DamperConfig, DamperModel, default_proposal
from .lgss import ScalarLgss
from .mixed_clg import MixedClgDemo
from .models import Dataset, Params
from .pmh import ProposalSpec

__all__ = ["ModelEntry", "build_entry", "MODEL_NAMES"]

MODEL_NAMES = ("damper", "lgss", "clg")


@dataclass
class ModelEntry:
    name: str
    model: object
    theta_default: Params
    methods: tuple[str, ...]
    simulate: Callable[[int, int], Dataset]  # (horizon, seed) -> Dataset
    proposal: ProposalSpec | None = None
    exact_loglik: Callable[[Params, Dataset], float] | None = None
    rbpf_model: object | None = None
    extras: dict = field(default_factory=dict)

    def parse_theta(self, spec: str | None) -> Params:
        """Parse 'name=value,name=value' overrides onto the default theta."""
        if not spec:
            return self.theta_default
        updates = {}
        for item in spec.split(","):
            name, _, raw = item.partition("=")
            if not _:
                raise ValueError(f"bad theta component {item!r}; expected name=value")
            updates[name.strip()] = float(raw)
        return self.theta_default.replace(**updates)


def _damper_entry(config: dict | None) -> ModelEntry:
    cfg = DamperConfig.from_dict(config) if config else DamperConfig()
    model = DamperModel(cfg)
    return ModelEntry(
        name="damper",
        model=model,
        theta_default=cfg.theta_true,
        methods=("vanilla", "pf"),
        simulate=lambda horizon, seed: model.simulate(seed=seed, horizon=horizon),
        proposal=default_proposal(),
    )


def _lgss_entry(config: dict | None) -> ModelEntry:
    model = ScalarLgss(**(config or {}))
    return ModelEntry(
        name="lgss",
        model=model,
        theta_default=model.theta_true(),
        methods=("vanilla", "pf", "apf", "kalman"),
        simulate=lambda horizon, seed: model.simulate(horizon, seed),
        proposal=ProposalSpec({"a": (0.2, model.a_lo, model.a_hi)}),
        exact_loglik=lambda theta, data: kalman.log_likelihood(
            model.lgss_params(theta), data.y
        ),
    )


def _clg_entry(config: dict | None) -> ModelEntry:
    demo = MixedClgDemo(**(config or {}))
    return ModelEntry(
        name="clg",
        model=demo.joint_model(),
        theta_default=Params(),
        methods=("vanilla", "pf", "rbpf"),
        simulate=lambda horizon, seed: demo.simulate(horizon, seed),
        rbpf_model=demo.clg_model(),
    )


_BUILDERS = {"damper": _damper_entry, "lgss": _lgss_entry, "clg": _clg_entry}


def build_entry(name: str, config: dict | None = None) -> ModelEntry:
    if name not in _BUILDERS:
        raise ValueError(f"unknown model {name!r}; registered: {', '.join(MODEL_NAMES)}")
    return _BUILDERS[name](config)
