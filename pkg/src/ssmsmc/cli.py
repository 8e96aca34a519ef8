"""Command-line driver: simulate data, compare estimators, run PMH.

Subcommands::

    ssmsmc simulate --model damper --end-time 1000 --seed 1 -o obs.csv
    ssmsmc loglik   --model damper --obs-file obs.csv --method pf \
                    --nparticles 256 --reps 1000 --seed 1 -o loglik.csv
    ssmsmc sample   --target posterior --model damper --obs-file obs.csv \
                    --nsamples 10000 --nparticles 256 --seed 1 -o chain.csv

Every run is referentially transparent in (flags, input files, seed): the
data outputs are byte-identical across repeats and thread counts.  Each
output is accompanied by a ``<output>.manifest.json`` recording the
flags, seed, package version and SHA-256 hashes of inputs and outputs.
``SSM_SMC_THREADS`` caps the worker count for replicated estimates.

Exit codes: 0 success, 2 usage error, 1 runtime error; failures print a
single line starting with ``error:`` on stderr.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import hashlib
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__, rbpf
from ._kernels import backend
from .models import Dataset, load_dataset, save_dataset
from .pmh import diagnostics, run_pmh, save_chain
from .registry import MODEL_NAMES, ModelEntry, build_entry
from .resampling import SCHEMES
from .rng import RngStream
from .smc import bootstrap_pf, fully_adapted_apf, vanilla_mc_loglik

__all__ = ["main"]

METHODS = ("vanilla", "pf", "apf", "rbpf", "kalman")

_METHOD_CONTRACTS = {
    "apf": "log_predictive/sample_transition_cond (fully adapted conditionals)",
    "rbpf": "a conditionally linear-Gaussian structure declaration",
    "kalman": "an exact linear-Gaussian representation",
}


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, choices=MODEL_NAMES)
    parser.add_argument("--seed", type=int, default=1, help="64-bit RNG seed")
    parser.add_argument("--config", type=Path, help="model config JSON")
    parser.add_argument(
        "--resampler",
        choices=tuple(SCHEMES),
        default="systematic",
        help="resampling scheme (default: systematic, the lowest-variance one)",
    )
    parser.add_argument("-o", "--output-file", type=Path, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssmsmc", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"ssmsmc {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a dataset from a model")
    _add_common(p_sim)
    p_sim.add_argument("--end-time", type=int, required=True, help="horizon T")
    p_sim.add_argument("--truth-file", type=Path, help="state-truth CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_ll = sub.add_parser("loglik", help="replicate log-likelihood estimates")
    _add_common(p_ll)
    p_ll.add_argument("--obs-file", type=Path, required=True)
    p_ll.add_argument("--method", required=True, choices=METHODS)
    p_ll.add_argument("--nparticles", type=int, default=256)
    p_ll.add_argument("--reps", type=int, default=1)
    p_ll.add_argument("--theta", help="overrides as name=value,name=value")
    p_ll.set_defaults(func=cmd_loglik)

    p_s = sub.add_parser("sample", help="draw posterior samples with PMH")
    _add_common(p_s)
    p_s.add_argument("--target", choices=("posterior",), default="posterior")
    p_s.add_argument("--obs-file", type=Path, required=True)
    p_s.add_argument("--nsamples", type=int, required=True, help="PMH iterations M")
    p_s.add_argument("--nparticles", type=int, default=256)
    p_s.add_argument("--init-theta", help="starting point as name=value,...")
    p_s.add_argument("--proposal-scale", help="stddev overrides as name=value,...")
    p_s.add_argument("--burn-in", type=int, help="summary burn-in (default M/10)")
    p_s.set_defaults(func=cmd_sample)
    return parser


def _thread_count() -> int:
    raw = os.environ.get("SSM_SMC_THREADS", "")
    if raw:
        try:
            count = int(raw)
        except ValueError:
            raise UsageError(f"SSM_SMC_THREADS must be an integer, got {raw!r}") from None
        if count < 1:
            raise UsageError("SSM_SMC_THREADS must be >= 1")
        return count
    return os.cpu_count() or 1


def _load_config(path: Path | None) -> dict | None:
    if path is None:
        return None
    with path.open() as fh:
        return json.load(fh)


def _entry(args) -> ModelEntry:
    return build_entry(args.model, _load_config(args.config))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _git_describe() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=Path(__file__).parent,
        )
    except OSError:
        return None
    return out.stdout.strip() or None


def _write_manifest(args, inputs: list[Path], outputs: list[Path]) -> Path:
    flags = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k != "func" and v is not None
    }
    manifest = {
        "subcommand": args.subcommand,
        "flags": flags,
        "seed": args.seed,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
        "git": _git_describe(),
        "backend": backend(),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    path = Path(str(args.output_file) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def cmd_simulate(args) -> None:
    if args.end_time < 1:
        raise UsageError("--end-time must be >= 1")
    entry = _entry(args)
    data = entry.simulate(args.end_time, args.seed)
    truth = args.truth_file
    if truth is None and data.x_true is not None:
        truth = args.output_file.with_name(args.output_file.stem + "_truth.csv")
    save_dataset(data, args.output_file, truth_path=truth)
    outputs = [args.output_file] + ([truth] if truth is not None else [])
    _write_manifest(args, inputs=[], outputs=outputs)
    print(f"wrote {args.output_file} ({data.horizon} rows)")


def _estimator(entry: ModelEntry, args, data: Dataset, theta):
    method = args.method
    if method not in entry.methods:
        needs = _METHOD_CONTRACTS.get(method, "capabilities")
        raise UsageError(
            f"method {method!r} is not available for model {entry.name!r}: "
            f"it requires {needs}"
        )
    if method == "kalman":
        value = entry.exact_loglik(theta, data)
        return lambda rng: value
    if method == "rbpf":
        return lambda rng: rbpf.rbpf_loglik(
            entry.rbpf_model, data, args.nparticles, rng, resampler=args.resampler
        )[0].log_z
    if method == "apf":
        return lambda rng: fully_adapted_apf(
            entry.model, theta, data, args.nparticles, rng, resampler=args.resampler
        ).log_z
    if method == "pf":
        return lambda rng: bootstrap_pf(
            entry.model, theta, data, args.nparticles, rng, resampler=args.resampler
        )[0].log_z
    return lambda rng: vanilla_mc_loglik(
        entry.model, theta, data, args.nparticles, rng
    ).log_z


def _quantiles(values: np.ndarray) -> dict[str, float]:
    return {
        str(q): float(np.percentile(values, q)) for q in (2.5, 25.0, 50.0, 75.0, 97.5)
    }


def cmd_loglik(args) -> None:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if args.nparticles < 1:
        raise UsageError("--nparticles must be >= 1")
    entry = _entry(args)
    data = load_dataset(args.obs_file)
    theta = entry.parse_theta(args.theta)
    estimate = _estimator(entry, args, data, theta)
    root = RngStream(args.seed)

    with concurrent.futures.ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        values = list(pool.map(lambda r: estimate(root.child(r)), range(args.reps)))
    log_z = np.asarray(values, dtype=np.float64)

    with args.output_file.open("w") as fh:
        fh.write("rep,log_z\n")
        for r, v in enumerate(log_z):
            fh.write(f"{r},{format(v, '.17g')}\n")

    # plain-domain moments are reported against a stated scale factor so
    # they stay representable for long horizons
    scale = float(log_z.max())
    z_scaled = np.exp(log_z - scale)
    summary = {
        "model": entry.name,
        "method": args.method,
        "n_particles": args.nparticles,
        "reps": args.reps,
        "seed": args.seed,
        "resampler": args.resampler,
        "theta": dict(theta),
        "log_z": {
            "mean": float(log_z.mean()),
            "variance": float(log_z.var(ddof=1)) if args.reps > 1 else 0.0,
            "quantiles": _quantiles(log_z),
        },
        "zhat_scaled": {
            "scale_log": scale,
            "mean": float(z_scaled.mean()),
            "variance": float(z_scaled.var(ddof=1)) if args.reps > 1 else 0.0,
            "quantiles": _quantiles(z_scaled),
        },
    }
    summary_path = Path(str(args.output_file) + ".summary.json")
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    _write_manifest(args, inputs=[args.obs_file], outputs=[args.output_file, summary_path])
    print(
        f"wrote {args.output_file} ({args.reps} replicates, method={args.method}, "
        f"backend={backend()})"
    )


def cmd_sample(args) -> None:
    if args.nsamples < 1:
        raise UsageError("--nsamples must be >= 1")
    if args.nparticles < 1:
        raise UsageError("--nparticles must be >= 1")
    entry = _entry(args)
    if entry.proposal is None:
        raise UsageError(f"model {entry.name!r} does not define priors/proposals to sample")
    data = load_dataset(args.obs_file)

    proposal = entry.proposal
    if args.proposal_scale:
        overrides = {}
        for item in args.proposal_scale.split(","):
            name, _, raw = item.partition("=")
            if not _:
                raise UsageError(f"bad proposal scale {item!r}; expected name=value")
            overrides[name.strip()] = float(raw)
        proposal = proposal.with_scales(**overrides)
    theta0 = entry.parse_theta(args.init_theta) if args.init_theta else None

    chain = run_pmh(
        entry.model,
        data,
        proposal,
        n_iterations=args.nsamples,
        n_particles=args.nparticles,
        seed=args.seed,
        theta0=theta0,
        resampler=args.resampler,
    )
    save_chain(chain, args.output_file)
    report = diagnostics(chain, burn_in=args.burn_in)
    summary_path = Path(str(args.output_file) + ".summary.json")
    summary_path.write_text(json.dumps(report, indent=2) + "\n")
    _write_manifest(args, inputs=[args.obs_file], outputs=[args.output_file, summary_path])
    print(
        f"wrote {args.output_file} ({args.nsamples} iterations, acceptance "
        f"{chain.acceptance_rate():.3f})"
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
