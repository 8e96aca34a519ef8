"""Backend selection for the hot filter kernels.

The time-and-particle loops of the bootstrap/APF filters dominate the
runtime of a PMH chain, so they exist twice: a Cython extension
(``_core``) compiled at install time, and the vectorized numpy code in
:mod:`ssmsmc.smc`, which doubles as the fallback when the extension is
missing.  Both draw the same random numbers, so they agree to float
round-off.

The backend is chosen at import; ``SSM_SMC_BACKEND=python`` forces the
fallback (useful for the backend benchmark and parity tests).
"""

from __future__ import annotations

import os

_SCHEME_CODES = {"multinomial": 0, "stratified": 1, "systematic": 2}

_core = None
if os.environ.get("SSM_SMC_BACKEND", "auto") != "python":
    try:
        import ssmsmc._kernels._core as _core  # noqa: PLC0414
    except ImportError:
        _core = None

BACKEND = "compiled" if _core is not None else "python"

_BOOTSTRAP = {}
_APF = {}


def _load_dispatch() -> None:
    _BOOTSTRAP.clear()
    _APF.clear()
    if BACKEND == "compiled":
        _BOOTSTRAP.update(
            damper=_core.bootstrap_loglik_damper,
            lgss=_core.bootstrap_loglik_lgss,
        )
        _APF.update(lgss=_core.apf_loglik_lgss)


def backend() -> str:
    return BACKEND


def force_backend(name: str) -> str:
    """Switch dispatch between 'compiled' and 'python' (tests/benchmarks)."""
    global BACKEND
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and _core is None:
        raise RuntimeError("compiled kernels are not available in this install")
    BACKEND = name
    _load_dispatch()
    return BACKEND


def has_bootstrap(kernel_id: str) -> bool:
    return kernel_id in _BOOTSTRAP


def has_apf(kernel_id: str) -> bool:
    return kernel_id in _APF


def bootstrap_loglik(kernel_id, params, y, n_particles, key, resampler) -> float:
    import numpy as np

    return _BOOTSTRAP[kernel_id](
        np.ascontiguousarray(params, dtype=np.float64),
        np.ascontiguousarray(np.asarray(y, dtype=np.float64).ravel()),
        int(n_particles),
        int(key),
        _SCHEME_CODES[resampler],
    )


def apf_loglik(kernel_id, params, y, n_particles, key, resampler) -> float:
    import numpy as np

    return _APF[kernel_id](
        np.ascontiguousarray(params, dtype=np.float64),
        np.ascontiguousarray(np.asarray(y, dtype=np.float64).ravel()),
        int(n_particles),
        int(key),
        _SCHEME_CODES[resampler],
    )


_load_dispatch()
