"""Deterministic, splittable random-number streams.

Every stream is identified by a 64-bit ``seed`` plus a ``path`` of 64-bit
indices.  The n-th draw of a stream is a pure function of
``(seed, path, n)``, computed by hashing a counter with a splitmix64-style
finalizer.  Consequences:

* two streams with the same ``(seed, path)`` yield bitwise-identical
  sequences, no matter how the surrounding program is scheduled;
* deriving a child stream is a pure function, so per-particle or
  per-replicate parallelism cannot change any result;
* bulk draws (``uniforms``, ``child_gaussians``, ...) are vectorized with
  numpy but produce exactly the values the scalar calls would.

The mixing constants below are load-bearing: the compiled filter kernels
re-implement the same scheme in C and must stay in sync.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RngStream", "normal_icdf"]

_MASK64 = (1 << 64) - 1
# splitmix64 counter increment (golden-ratio) and finalizer multipliers.
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# salt applied to path elements before they are folded into the key
_PATH_SALT = 0x6A09E667F3BCC909

_U64 = np.uint64
_INV_2_53 = 2.0**-53


def _mix(z: int) -> int:
    """splitmix64 finalizer on Python ints (exact 64-bit wraparound)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _child_key(key: int, index: int) -> int:
    return _mix(key ^ _mix((index ^ _PATH_SALT) & _MASK64))


def _derive_key(seed: int, path: tuple[int, ...]) -> int:
    key = _mix(seed)
    for element in path:
        key = _child_key(key, element)
    return key


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _U64(_MIX1)
    z = (z ^ (z >> _U64(27))) * _U64(_MIX2)
    return z ^ (z >> _U64(31))


def _raw_block(key: int, start: int, count: int) -> np.ndarray:
    """Draws ``start .. start+count-1`` of the stream with the given key."""
    counters = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return _mix_array(_U64(key) + counters * _U64(_GAMMA))


def _child_keys(key: int, indices: np.ndarray) -> np.ndarray:
    salted = _mix_array(indices.astype(np.uint64) ^ _U64(_PATH_SALT))
    return _mix_array(_U64(key) ^ salted)


def _child_block(key: int, n: int, k: int) -> np.ndarray:
    """(n, k) array; row i equals draws 0..k-1 of child stream i."""
    keys = _child_keys(key, np.arange(n))
    counters = np.arange(1, k + 1, dtype=np.uint64) * _U64(_GAMMA)
    return _mix_array(keys[:, None] + counters[None, :])


def _closed_unit(bits: np.ndarray) -> np.ndarray:
    """uint64 -> float64 in [0, 1), using the top 53 bits."""
    return (bits >> _U64(11)).astype(np.float64) * _INV_2_53


def _open_unit(bits: np.ndarray) -> np.ndarray:
    """uint64 -> float64 in (0, 1), safe as inverse-CDF input."""
    return ((bits >> _U64(11)).astype(np.float64) + 0.5) * _INV_2_53


# Wichura's AS 241 (PPND16) rational approximations for the standard
# normal inverse CDF, accurate to ~1e-16 relative over (0, 1).
_ICDF_A = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_ICDF_B = (
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
    5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
    2.8729085735721942674e4, 5.2264952788528545610e3,
)
_ICDF_C = (
    1.42343711074968357734e0, 4.63033784615654529590e0,
    5.76949722146069140550e0, 3.64784832476320460504e0,
    1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_ICDF_D = (
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
    6.89767334985100004550e-1, 1.48103976427480074590e-1,
    1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_ICDF_E = (
    6.65790464350110377720e0, 5.46378491116411436990e0,
    1.78482653991729133580e0, 2.96560571828504891230e-1,
    2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
_ICDF_F = (
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
    1.48753612908506148525e-2, 7.86869131145613259100e-4,
    1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs: tuple[float, ...], r: np.ndarray) -> np.ndarray:
    acc = np.full_like(r, coeffs[7])
    for c in coeffs[6::-1]:
        acc = acc * r + c
    return acc


def normal_icdf(p):
    """Standard normal inverse CDF (AS 241), vectorized; p must be in (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if np.any(central):
        r = 0.180625 - q[central] * q[central]
        out[central] = q[central] * _poly(_ICDF_A, r) / _poly(_ICDF_B, r)

    tail = ~central
    if np.any(tail):
        qt = q[tail]
        r = np.where(qt < 0.0, p[tail], 1.0 - p[tail])
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        rt = np.where(near, r - 1.6, r - 5.0)
        val = np.where(
            near,
            _poly(_ICDF_C, rt) / _poly(_ICDF_D, rt),
            _poly(_ICDF_E, rt) / _poly(_ICDF_F, rt),
        )
        out[tail] = np.where(qt < 0.0, -val, val)
    return out


class RngStream:
    """One immutable position in the stream tree, with a draw cursor.

    The identity ``(seed, path)`` never changes; drawing only advances an
    internal counter, so a freshly derived stream always replays the same
    sequence.  ``child`` and the ``child_*`` block draws are pure: they do
    not touch the cursor and return the same values on repeated calls.
    """

    __slots__ = ("seed", "path", "_key", "_pos")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= seed <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = seed
        self.path = tuple(int(p) & _MASK64 for p in path)
        self._key = _derive_key(seed, self.path)
        self._pos = 0

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path}, pos={self._pos})"

    @property
    def key(self) -> int:
        """Stream key consumed by the compiled kernels."""
        return self._key

    def child(self, *indices: int) -> "RngStream":
        stream = object.__new__(RngStream)
        stream.seed = self.seed
        stream.path = self.path + tuple(int(i) & _MASK64 for i in indices)
        key = self._key
        for i in stream.path[len(self.path):]:
            key = _child_key(key, i)
        stream._key = key
        stream._pos = 0
        return stream

    # -- sequential draws (advance the cursor) ---------------------------

    def u64s(self, count: int) -> np.ndarray:
        block = _raw_block(self._key, self._pos, count)
        self._pos += count
        return block

    def uniforms(self, count: int) -> np.ndarray:
        """count floats in [0, 1)."""
        return _closed_unit(self.u64s(count))

    def open_uniforms(self, count: int) -> np.ndarray:
        """count floats in (0, 1), never exactly 0 or 1."""
        return _open_unit(self.u64s(count))

    def gaussians(self, count: int) -> np.ndarray:
        """count standard normal draws (inverse-CDF of open uniforms)."""
        return normal_icdf(self.open_uniforms(count))

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def open_uniform(self) -> float:
        return float(self.open_uniforms(1)[0])

    def gaussian(self) -> float:
        return float(self.gaussians(1)[0])

    # -- per-child block draws (pure, cursor untouched) -------------------

    def child_uniforms(self, n: int, k: int) -> np.ndarray:
        """(n, k) uniforms in [0, 1); row i == self.child(i).uniforms(k)."""
        return _closed_unit(_child_block(self._key, n, k))

    def child_gaussians(self, n: int, k: int) -> np.ndarray:
        """(n, k) standard normals; row i == self.child(i).gaussians(k)."""
        return normal_icdf(_open_unit(_child_block(self._key, n, k)))

    def child_open_uniforms_at(self, indices: np.ndarray, counter: int) -> np.ndarray:
        """Draw number ``counter`` of each child stream in ``indices``.

        Lets vectorized rejection samplers replay exactly what the scalar
        ``self.child(i)`` path would draw, round by round.
        """
        keys = _child_keys(self._key, np.asarray(indices))
        step = _U64(((counter + 1) * _GAMMA) & _MASK64)
        return _open_unit(_mix_array(keys + step))
