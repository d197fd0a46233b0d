# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled lattice kernels.

Every function here has a numpy twin with the same signature in
``kpzlab._core_py``; ``kpzlab._backend`` picks one at import.  The noise hash
is a bit-for-bit copy of ``kpzlab.noise._cell_bits``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, log, log1p, cos, sqrt, fabs, ceil, M_PI
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t ROW_MULT = 0xD1B54A32D192ED03ULL
cdef uint64_t COL_MULT = 0xABC98388FB8FAC03ULL
cdef uint64_t STREAM2 = 0x8CB92BA72F3D8DD7ULL

BACKEND = "cython"


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _seed_key(uint64_t seed) noexcept nogil:
    return _mix(seed + GOLDEN)


cdef inline uint64_t _row_key(uint64_t key, int64_t t) noexcept nogil:
    return _mix(key ^ (<uint64_t>t * ROW_MULT + GOLDEN))


cdef inline double _noise(uint64_t row, int64_t x, int code, double param) noexcept nogil:
    cdef uint64_t bits = _mix(row ^ (<uint64_t>x * COL_MULT + GOLDEN))
    cdef double u1, u2
    cdef uint64_t mask
    cdef int n
    if code == 0:
        return 1.0 if (bits >> 63) else -1.0
    elif code == 1:
        u1 = <double>((bits >> 11) + 1) * 1.1102230246251565e-16
        u2 = <double>(_mix(bits ^ STREAM2) >> 11) * 1.1102230246251565e-16
        return param * sqrt(-2.0 * log(u1)) * cos(2.0 * M_PI * u2)
    elif code == 2:
        u1 = <double>(bits >> 11) * 1.1102230246251565e-16
        return param * (2.0 * u1 - 1.0)
    else:
        n = <int>param
        mask = 0xFFFFFFFFFFFFFFFFULL if n >= 64 else ((1ULL << n) - 1ULL)
        return <double>__builtin_popcountll(bits & mask) - 0.5 * n


cdef inline int _lut_index(uint64_t row, int64_t x, int code, double param) noexcept nogil:
    # index into a per-family value table for the discrete families, -1 otherwise
    cdef uint64_t bits
    cdef uint64_t mask
    cdef int n
    if code == 0:
        bits = _mix(row ^ (<uint64_t>x * COL_MULT + GOLDEN))
        return <int>(bits >> 63)
    if code == 3:
        bits = _mix(row ^ (<uint64_t>x * COL_MULT + GOLDEN))
        n = <int>param
        mask = 0xFFFFFFFFFFFFFFFFULL if n >= 64 else ((1ULL << n) - 1ULL)
        return __builtin_popcountll(bits & mask)
    return -1


cdef _discrete_values(int code, double param):
    """Noise values indexed like ``_lut_index``; empty for continuous families."""
    if code == 0:
        return np.array([-1.0, 1.0])
    if code == 3:
        return np.arange(int(param) + 1, dtype=np.float64) - 0.5 * int(param)
    return np.zeros(0)


def noise_block(int code, double param, uint64_t seed, int64_t x0, int64_t nx, int64_t t0, int64_t nt):
    """Noise on ``[t0, t0+nt) x [x0, x0+nx)`` indexed ``[t, x]``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((nt, nx), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef uint64_t key = _seed_key(seed), row
    cdef int64_t i, j
    with nogil:
        for i in range(nt):
            row = _row_key(key, t0 + i)
            for j in range(nx):
                o[i, j] = _noise(row, x0 + j, code, param)
    return out


def partition_evolve(int code, double param, uint64_t seed, double theta, double log_m,
                     double gamma, const double[::1] lam0, int64_t T, int64_t X_eval,
                     int64_t X_max):
    """Z(x, t) = (1 + ξ̃(x, t)) (Z(|x-1|, t-1) + Z(x+1, t-1)) / 2 on the light cone.

    ``lam0`` holds Λ(x) for ``x = 0..X_max``; the returned table is
    ``[t, x]`` for ``x <= X_eval``.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((T + 1, X_eval + 1), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] cur = np.array(lam0[:X_max + 1], dtype=np.float64)
    cdef double[::1] nxt = np.empty(X_max + 1, dtype=np.float64)
    cdef double[::1] tmp
    cdef uint64_t key = _seed_key(seed), row
    cdef int64_t t, x, hi
    cdef double w, left
    cdef double[::1] lut = np.exp(theta * _discrete_values(code, param) - log_m)
    cdef bint discrete = lut.shape[0] > 0
    for x in range(X_eval + 1):
        o[0, x] = cur[x]
    with nogil:
        for t in range(1, T + 1):
            row = _row_key(key, t)
            hi = X_max - t
            for x in range(hi + 1):
                if discrete:
                    w = lut[_lut_index(row, x, code, param)]
                else:
                    w = exp(theta * _noise(row, x, code, param) - log_m)
                if x == 0:
                    w = w * gamma
                    left = cur[1]
                else:
                    left = cur[x - 1]
                nxt[x] = w * (0.5 * (left + cur[x + 1]))
            for x in range(X_eval + 1):
                o[t, x] = nxt[x]
            tmp = cur
            cur = nxt
            nxt = tmp
    return out


cdef inline double _logcosh(double y) noexcept nogil:
    y = fabs(y)
    return y + log1p(exp(-2.0 * y)) - 0.6931471805599453


cdef inline double _psi(int psi_code, double p, double u, double v) noexcept nogil:
    cdef double d = u - v
    if psi_code == 0:
        return 0.5 * (u + v) + _logcosh(0.5 * p * d) / p
    return 0.5 * (u + v) + 0.5 * p * d * d


def interface_evolve(int code, double param, uint64_t seed, double amp, double boundary,
                     int psi_code, double psi_param, const double[::1] f0, int64_t T,
                     int64_t X_eval, int64_t X_max):
    """Raw heights f_N for the built-in updates (0: polymer(b), 1: quadratic(κ))."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((T + 1, X_eval + 1), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] cur = np.array(f0[:X_max + 1], dtype=np.float64)
    cdef double[::1] nxt = np.empty(X_max + 1, dtype=np.float64)
    cdef double[::1] tmp
    cdef uint64_t key = _seed_key(seed), row
    cdef int64_t t, x, hi
    for x in range(X_eval + 1):
        o[0, x] = cur[x]
    with nogil:
        for t in range(1, T + 1):
            row = _row_key(key, t)
            hi = X_max - t
            nxt[0] = _psi(psi_code, psi_param, cur[1], cur[1]) + amp * _noise(row, 0, code, param) + boundary
            for x in range(1, hi + 1):
                nxt[x] = _psi(psi_code, psi_param, cur[x - 1], cur[x + 1]) + amp * _noise(row, x, code, param)
            for x in range(X_eval + 1):
                o[t, x] = nxt[x]
            tmp = cur
            cur = nxt
            nxt = tmp
    return out


def ky_evolve(int code, double param, uint64_t seed, double theta, double log_m, double gamma,
              const double[:, ::1] delta_pos, double coef, int64_t T, int64_t X_keep,
              int64_t X_max):
    """Windowed K and the renormalization field Y on the light cone.

    ``delta_pos[r, j]`` holds Δ(j, r) for ``j = 0..R+1``; the window is
    ``r = t - s`` in ``0..R`` with ``R = delta_pos.shape[0] - 1``.  K uses the
    antisymmetric pairing so K(0, t) vanishes exactly, and Y follows
    Y(x, t) = (Y(|x-1|, t-1) + Y(x+1, t-1)) / 2 + coef K(x, t)^4.
    """
    cdef int64_t R = delta_pos.shape[0] - 1
    cdef int64_t J = delta_pos.shape[1]
    cdef int64_t W = X_max + R + 3
    cdef cnp.ndarray[cnp.float64_t, ndim=2] kout = np.zeros((T + 1, X_keep + 1), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] yout = np.zeros((T + 1, X_keep + 1), dtype=np.float64)
    cdef double[:, ::1] ko = kout
    cdef double[:, ::1] yo = yout
    cdef double[:, ::1] ring = np.zeros((R + 1, W), dtype=np.float64)
    cdef double[::1] ycur = np.zeros(X_max + 2, dtype=np.float64)
    cdef double[::1] ynxt = np.zeros(X_max + 2, dtype=np.float64)
    cdef double[::1] tmp
    cdef uint64_t key = _seed_key(seed), row
    cdef int64_t t, x, hi, r, s, j, slot, lim, xm
    cdef double k, acc, dj, kk
    cdef double[::1] lut = np.expm1(theta * _discrete_values(code, param) - log_m)
    cdef bint discrete = lut.shape[0] > 0
    with nogil:
        for t in range(1, T + 1):
            slot = t % (R + 1)
            row = _row_key(key, t)
            lim = X_max - t + R + 2
            if lim > W - 1:
                lim = W - 1
            if discrete:
                for x in range(lim + 1):
                    ring[slot, x] = lut[_lut_index(row, x, code, param)]
            else:
                for x in range(lim + 1):
                    ring[slot, x] = expm1(theta * _noise(row, x, code, param) - log_m)
            ring[slot, 0] = gamma * ring[slot, 0] + (gamma - 1.0)
            hi = X_max - t
            for x in range(hi + 1):
                k = 0.0
                for r in range(R + 1):
                    s = t - r
                    if s < 1:
                        break
                    slot = s % (R + 1)
                    acc = 0.0
                    for j in range(1, J):
                        dj = delta_pos[r, j]
                        if dj != 0.0:
                            xm = x - j
                            if xm < 0:
                                xm = -xm
                            acc = acc + dj * (ring[slot, xm] - ring[slot, x + j])
                    k = k + acc
                k = 0.5 * k
                kk = k * k
                if x == 0:
                    ynxt[0] = 0.5 * (ycur[1] + ycur[1]) + coef * kk * kk
                else:
                    ynxt[x] = 0.5 * (ycur[x - 1] + ycur[x + 1]) + coef * kk * kk
                if x <= X_keep:
                    ko[t, x] = k
                    yo[t, x] = ynxt[x]
            tmp = ycur
            ycur = ynxt
            ynxt = tmp
    return kout, yout


def local_time_scan(double gamma, int64_t T, int64_t X, const int64_t[::1] t_out, double cutoff):
    """Fused DPs for the walk started at x and run for s steps.

    Returns arrays ``[len(t_out), X+1]`` of
      u = E_x[γ^{d̃}]            (d̃ = visits to 0 at times 0..s-1),
      e = E_x[d̃],
      h = E_x[γ^{-2 Σ sgn(q(i-1)) (q(i)-q(i-1))}].
    Cells with x >= min(s, cutoff*sqrt(s)+2) take their exact far-field values
    (1, 0, ρ^s with ρ = (γ² + γ⁻²)/2); the Gaussian-tail cutoff bounds the
    neglected mass by 2 exp(-cutoff²/2).
    """
    cdef int64_t n_out = t_out.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] uo = np.empty((n_out, X + 1), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] eo = np.empty((n_out, X + 1), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ho = np.empty((n_out, X + 1), dtype=np.float64)
    cdef double[:, ::1] uv = uo
    cdef double[:, ::1] ev = eo
    cdef double[:, ::1] hv = ho
    cdef int64_t size = <int64_t>(cutoff * sqrt(<double>T)) + 8
    if size > T + 4:
        size = T + 4
    cdef double[::1] u = np.ones(size + 2, dtype=np.float64)
    cdef double[::1] e = np.zeros(size + 2, dtype=np.float64)
    cdef double[::1] h = np.ones(size + 2, dtype=np.float64)
    cdef double[::1] u2 = np.ones(size + 2, dtype=np.float64)
    cdef double[::1] e2 = np.zeros(size + 2, dtype=np.float64)
    cdef double[::1] h2 = np.ones(size + 2, dtype=np.float64)
    cdef double[::1] tmp
    cdef double g2 = gamma * gamma
    cdef double gm2 = 1.0 / g2
    cdef double rho = 0.5 * (g2 + gm2)
    cdef double far_h = 1.0
    cdef int64_t s, x, hi, prev_hi = 0, k = 0, c
    # s = 0 output
    while k < n_out and t_out[k] == 0:
        for x in range(X + 1):
            uv[k, x] = 1.0
            ev[k, x] = 0.0
            hv[k, x] = 1.0
        k += 1
    with nogil:
        for s in range(1, T + 1):
            c = <int64_t>ceil(cutoff * sqrt(<double>s)) + 2
            hi = s - 1
            if c < hi:
                hi = c
            if hi > size - 1:
                hi = size - 1
            # cells beyond the previous frontier hold far-field values of step s-1
            for x in range(prev_hi + 1, hi + 2):
                u[x] = 1.0
                e[x] = 0.0
                h[x] = far_h
            for x in range(hi + 1):
                if x == 0:
                    u2[0] = gamma * u[1]
                    e2[0] = 1.0 + e[1]
                    h2[0] = h[1]
                else:
                    u2[x] = 0.5 * (u[x - 1] + u[x + 1])
                    e2[x] = 0.5 * (e[x - 1] + e[x + 1])
                    h2[x] = 0.5 * (gm2 * h[x + 1] + g2 * h[x - 1])
            far_h = far_h * rho
            tmp = u; u = u2; u2 = tmp
            tmp = e; e = e2; e2 = tmp
            tmp = h; h = h2; h2 = tmp
            prev_hi = hi
            while k < n_out and t_out[k] == s:
                for x in range(X + 1):
                    if x <= hi:
                        uv[k, x] = u[x]
                        ev[k, x] = e[x]
                        hv[k, x] = h[x]
                    else:
                        uv[k, x] = 1.0
                        ev[k, x] = 0.0
                        hv[k, x] = far_h
                k += 1
    return uo, eo, ho
