# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the bootstrap/APF likelihood estimators.

Mirrors the splitmix64-based counter RNG from ssmsmc.rng and the per-step
structure of ssmsmc.smc exactly (same keys, same counters, same AS 241
inverse CDF), so either backend can reproduce the other's estimates to
float round-off.
"""

from libc.math cimport INFINITY, exp, fabs, log, pow, sqrt
from libc.stdint cimport int64_t, uint64_t

import numpy as np

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15u
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9u
cdef uint64_t MIX2 = 0x94D049BB133111EBu
cdef uint64_t PATH_SALT = 0x6A09E667F3BCC909u

cdef double INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53
cdef double LOG_2PI = 1.8378770664093453

# filter path purposes, shared with ssmsmc.smc
cdef uint64_t P_INIT = 0u
cdef uint64_t P_PROP = 1u
cdef uint64_t P_RES = 2u


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t _child(uint64_t key, uint64_t index) noexcept nogil:
    return _mix(key ^ _mix(index ^ PATH_SALT))


cdef inline uint64_t _draw(uint64_t key, uint64_t counter) noexcept nogil:
    return _mix(key + (counter + 1u) * GAMMA)


cdef inline double _unit(uint64_t bits) noexcept nogil:
    return <double>(bits >> 11) * INV_2_53


cdef inline double _open_unit(uint64_t bits) noexcept nogil:
    return (<double>(bits >> 11) + 0.5) * INV_2_53


# Wichura's AS 241 (PPND16), identical coefficients to ssmsmc.rng
cdef inline double _icdf(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double r, num, den, val
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
              + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
              + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
              + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
              + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
              + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
              + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = sqrt(-log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
              + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
              + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
              + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
              + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
              + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
              + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
              + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
              + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
              + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
              + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
              + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
              + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


cdef inline double _gauss(uint64_t key, uint64_t counter) noexcept nogil:
    return _icdf(_open_unit(_draw(key, counter)))


cdef int _resample(int scheme, uint64_t key_res, double[::1] w, double[::1] cum,
                   int64_t[::1] idx, int n) noexcept nogil:
    """Fill idx with ancestor indices; cum is scratch. Returns 0."""
    cdef int i, j, lo, hi, mid
    cdef double acc = 0.0
    cdef double pos, u0
    for i in range(n):
        acc += w[i]
        cum[i] = acc
    cum[n - 1] = 1.0
    if scheme == 2:  # systematic: one shared offset
        u0 = _unit(_draw(key_res, 0u))
        j = 0
        for i in range(n):
            pos = (i + u0) / n
            while cum[j] <= pos:
                j += 1
            idx[i] = j
    elif scheme == 1:  # stratified: one uniform per stratum
        j = 0
        for i in range(n):
            pos = (i + _unit(_draw(key_res, <uint64_t>i))) / n
            while cum[j] <= pos:
                j += 1
            idx[i] = j
    else:  # multinomial: independent uniforms, binary search each
        for i in range(n):
            pos = _unit(_draw(key_res, <uint64_t>i))
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) >> 1
                if pos < cum[mid]:
                    hi = mid
                else:
                    lo = mid + 1
            idx[i] = lo
    return 0


cdef inline double _log_mean(double[::1] logw, double[::1] w, int n) noexcept nogil:
    """Normalize logw into w; return log of the plain mean (or -inf)."""
    cdef int i
    cdef double top = -INFINITY
    cdef double total = 0.0
    for i in range(n):
        if logw[i] > top:
            top = logw[i]
    if top == -INFINITY:
        return -INFINITY
    for i in range(n):
        w[i] = exp(logw[i] - top)
        total += w[i]
    for i in range(n):
        w[i] /= total
    return top + log(total) - log(<double>n)


def bootstrap_loglik_damper(double[::1] params, double[::1] y, int n,
                            uint64_t key, int scheme):
    """Bootstrap PF log-likelihood for the spring-damper model."""
    cdef double k_ = params[0], p_ = params[1], fc = params[2], c0 = params[3]
    cdef double ts = params[4], mass = params[5], sv = params[6], se = params[7]
    cdef double s0 = params[8], sd0 = params[9]
    cdef int horizon = y.shape[0]
    cdef double obs_const = log(se) + 0.5 * LOG_2PI
    cdef double ts_over_m = ts / mass

    buf = np.empty((6, n))
    cdef double[::1] s = buf[0], sd = buf[1], s_new = buf[2], sd_new = buf[3]
    cdef double[::1] logw = buf[4], w = buf[5]
    idx_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] idx = idx_arr

    cdef uint64_t key_prop_root = _child(key, P_PROP)
    cdef uint64_t key_res_root = _child(key, P_RES)
    cdef uint64_t kt, kres
    cdef int t, i, bad
    cdef int64_t j
    cdef double log_z = 0.0, lm, g, sb, sdb, force, x1, z

    bad = 0
    with nogil:
        for i in range(n):
            s[i] = s0
            sd[i] = sd0
        for t in range(1, horizon + 1):
            if t > 1:
                _resample(scheme, _child(key_res_root, <uint64_t>t), w, logw, idx, n)
                for i in range(n):
                    j = idx[i]
                    s_new[i] = s[j]
                    sd_new[i] = sd[j]
                for i in range(n):
                    s[i] = s_new[i]
                    sd[i] = sd_new[i]
            kt = _child(key_prop_root, <uint64_t>t)
            for i in range(n):
                g = _gauss(_child(kt, <uint64_t>i), 0u)
                sb = s[i]
                sdb = sd[i]
                force = (-fc * (-1.0 if sdb < 0.0 else 1.0)
                         - c0 * sdb
                         - k_ * (-1.0 if sb < 0.0 else 1.0) * pow(fabs(sb), p_))
                s[i] = sb + ts * sdb
                sd[i] = sdb + ts_over_m * force + sv * g
                x1 = s[i]
                if x1 == x1 and x1 != INFINITY and x1 != -INFINITY:
                    z = (y[t - 1] - x1) / se
                    logw[i] = -0.5 * z * z - obs_const
                else:
                    logw[i] = -INFINITY
                if logw[i] != logw[i]:
                    bad = t
                    break
            if bad:
                break
            lm = _log_mean(logw, w, n)
            if lm == -INFINITY:
                log_z = -INFINITY
                break
            log_z += lm
    if bad:
        from ssmsmc.models import ModelFaultError
        raise ModelFaultError("log_obs_density", bad, "returned NaN")
    return log_z


def bootstrap_loglik_lgss(double[::1] params, double[::1] y, int n,
                          uint64_t key, int scheme):
    """Bootstrap PF log-likelihood for the scalar linear-Gaussian model."""
    cdef double a = params[0], sv = params[1], se = params[2]
    cdef double m0 = params[3], s0 = params[4]
    cdef int horizon = y.shape[0]
    cdef double obs_const = log(se) + 0.5 * LOG_2PI

    buf = np.empty((4, n))
    cdef double[::1] x = buf[0], x_new = buf[1], logw = buf[2], w = buf[3]
    idx_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] idx = idx_arr

    cdef uint64_t key_init = _child(_child(key, P_INIT), 0u)
    cdef uint64_t key_prop_root = _child(key, P_PROP)
    cdef uint64_t key_res_root = _child(key, P_RES)
    cdef uint64_t kt
    cdef int t, i
    cdef double log_z = 0.0, lm, z

    with nogil:
        for i in range(n):
            x[i] = m0 + s0 * _gauss(_child(key_init, <uint64_t>i), 0u)
        for t in range(1, horizon + 1):
            if t > 1:
                _resample(scheme, _child(key_res_root, <uint64_t>t), w, logw, idx, n)
                for i in range(n):
                    x_new[i] = x[idx[i]]
                for i in range(n):
                    x[i] = x_new[i]
            kt = _child(key_prop_root, <uint64_t>t)
            for i in range(n):
                x[i] = a * x[i] + sv * _gauss(_child(kt, <uint64_t>i), 0u)
                z = (y[t - 1] - x[i]) / se
                logw[i] = -0.5 * z * z - obs_const
            lm = _log_mean(logw, w, n)
            if lm == -INFINITY:
                log_z = -INFINITY
                break
            log_z += lm
    return log_z


def apf_loglik_lgss(double[::1] params, double[::1] y, int n,
                    uint64_t key, int scheme):
    """Fully adapted APF log-likelihood for the scalar LGSS."""
    cdef double a = params[0], sv = params[1], se = params[2]
    cdef double m0 = params[3], s0 = params[4]
    cdef int horizon = y.shape[0]
    cdef double q = sv * sv, r = se * se
    cdef double spred = sqrt(q + r)
    cdef double pred_const = log(spred) + 0.5 * LOG_2PI
    cdef double tau2 = q * r / (q + r)
    cdef double tau = sqrt(tau2)

    buf = np.empty((4, n))
    cdef double[::1] x = buf[0], x_new = buf[1], lognu = buf[2], w = buf[3]
    idx_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] idx = idx_arr

    cdef uint64_t key_init = _child(_child(key, P_INIT), 0u)
    cdef uint64_t key_prop_root = _child(key, P_PROP)
    cdef uint64_t key_res_root = _child(key, P_RES)
    cdef uint64_t kt
    cdef int t, i
    cdef double log_z = 0.0, lm, z, yt

    with nogil:
        for i in range(n):
            x[i] = m0 + s0 * _gauss(_child(key_init, <uint64_t>i), 0u)
        for t in range(1, horizon + 1):
            yt = y[t - 1]
            for i in range(n):
                z = (yt - a * x[i]) / spred
                lognu[i] = -0.5 * z * z - pred_const
            lm = _log_mean(lognu, w, n)
            if lm == -INFINITY:
                log_z = -INFINITY
                break
            log_z += lm
            _resample(scheme, _child(key_res_root, <uint64_t>t), w, lognu, idx, n)
            for i in range(n):
                x_new[i] = x[idx[i]]
            kt = _child(key_prop_root, <uint64_t>t)
            for i in range(n):
                x[i] = tau2 * (a * x_new[i] / q + yt / r) + tau * _gauss(_child(kt, <uint64_t>i), 0u)
    return log_z


# -- test hooks: expose the RNG primitives for backend parity checks --------


def derive_key(uint64_t seed, path):
    cdef uint64_t key = _mix(seed)
    for element in path:
        key = _child(key, <uint64_t>element)
    return key


def uniforms(uint64_t key, int start, int count):
    out = np.empty(count)
    cdef double[::1] view = out
    cdef int i
    for i in range(count):
        view[i] = _unit(_draw(key, <uint64_t>(start + i)))
    return out


def gaussians(uint64_t key, int start, int count):
    out = np.empty(count)
    cdef double[::1] view = out
    cdef int i
    for i in range(count):
        view[i] = _gauss(key, <uint64_t>(start + i))
    return out


def child_gaussians(uint64_t key, int n, int k):
    out = np.empty((n, k))
    cdef double[:, ::1] view = out
    cdef int i, j
    cdef uint64_t ck
    for i in range(n):
        ck = _child(key, <uint64_t>i)
        for j in range(k):
            view[i, j] = _gauss(ck, <uint64_t>j)
    return out


def icdf(double p):
    return _icdf(p)
