"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Loops over time stay in Python; each time slice is vectorized.  Results agree
with the compiled kernels to rounding (exactly, for the integer-valued
noise families and for the boundary identities).
"""
from __future__ import annotations

import math

import numpy as np

from .noise import _bits_to_noise, _cell_bits

BACKEND = "python"


def noise_block(code, param, seed, x0, nx, t0, nt):
    xs = np.arange(x0, x0 + nx)[None, :]
    ts = np.arange(t0, t0 + nt)[:, None]
    return _bits_to_noise(_cell_bits(seed, xs, ts), code, param)


def _row(code, param, seed, t, n):
    return _bits_to_noise(_cell_bits(seed, np.arange(n), np.full(n, t)), code, param)


def partition_evolve(code, param, seed, theta, log_m, gamma, lam0, T, X_eval, X_max):
    out = np.empty((T + 1, X_eval + 1))
    cur = np.array(lam0[: X_max + 1], dtype=float)
    out[0] = cur[: X_eval + 1]
    for t in range(1, T + 1):
        hi = X_max - t
        w = np.exp(theta * _row(code, param, seed, t, hi + 1) - log_m)
        w[0] *= gamma
        left = np.empty(hi + 1)
        left[0] = cur[1]
        left[1:] = cur[:hi]
        nxt = w * (0.5 * (left + cur[1 : hi + 2]))
        out[t] = nxt[: X_eval + 1]
        cur = nxt
    return out


def _logcosh(y):
    y = np.abs(y)
    return y + np.log1p(np.exp(-2.0 * y)) - math.log(2.0)


def _psi(psi_code, p, u, v):
    d = u - v
    if psi_code == 0:
        return 0.5 * (u + v) + _logcosh(0.5 * p * d) / p
    return 0.5 * (u + v) + 0.5 * p * d * d


def interface_evolve(code, param, seed, amp, boundary, psi_code, psi_param, f0, T, X_eval, X_max):
    out = np.empty((T + 1, X_eval + 1))
    cur = np.array(f0[: X_max + 1], dtype=float)
    out[0] = cur[: X_eval + 1]
    for t in range(1, T + 1):
        hi = X_max - t
        y = _row(code, param, seed, t, hi + 1)
        left = np.empty(hi + 1)
        left[0] = cur[1]
        left[1:] = cur[:hi]
        right = cur[1 : hi + 2]
        nxt = _psi(psi_code, psi_param, left, right) + amp * y
        nxt[0] += boundary
        out[t] = nxt[: X_eval + 1]
        cur = nxt
    return out


def ky_evolve(code, param, seed, theta, log_m, gamma, delta_pos, coef, T, X_keep, X_max):
    delta_pos = np.asarray(delta_pos, dtype=float)
    R = delta_pos.shape[0] - 1
    J = delta_pos.shape[1]
    kout = np.zeros((T + 1, X_keep + 1))
    yout = np.zeros((T + 1, X_keep + 1))
    rows: dict[int, np.ndarray] = {}
    ycur = np.zeros(X_max + 2)
    for t in range(1, T + 1):
        lim = X_max - t + R + 2
        row = np.expm1(theta * _row(code, param, seed, t, lim + 1) - log_m)
        row[0] = gamma * row[0] + (gamma - 1.0)
        rows[t] = row
        rows.pop(t - R - 1, None)
        hi = X_max - t
        x = np.arange(hi + 1)
        k = np.zeros(hi + 1)
        for r in range(R + 1):
            s = t - r
            if s < 1:
                break
            src = rows[s]
            acc = np.zeros(hi + 1)
            for j in range(1, J):
                dj = delta_pos[r, j]
                if dj != 0.0:
                    acc = acc + dj * (src[np.abs(x - j)] - src[x + j])
            k = k + acc
        k = 0.5 * k
        kk = k * k
        left = np.empty(hi + 1)
        left[0] = ycur[1]
        left[1:] = ycur[:hi]
        ynxt = np.zeros(X_max + 2)
        ynxt[: hi + 1] = 0.5 * (left + ycur[1 : hi + 2]) + coef * (kk * kk)
        kout[t] = k[: X_keep + 1]
        yout[t] = ynxt[: X_keep + 1]
        ycur = ynxt
    return kout, yout


def local_time_scan(gamma, T, X, t_out, cutoff):
    t_out = np.asarray(t_out, dtype=np.int64)
    n_out = len(t_out)
    uo = np.empty((n_out, X + 1))
    eo = np.empty((n_out, X + 1))
    ho = np.empty((n_out, X + 1))
    size = min(int(cutoff * math.sqrt(T)) + 8, T + 4)
    u = np.ones(size + 2)
    e = np.zeros(size + 2)
    h = np.ones(size + 2)
    g2 = gamma * gamma
    gm2 = 1.0 / g2
    rho = 0.5 * (g2 + gm2)
    far_h = 1.0
    prev_hi = 0
    k = 0
    while k < n_out and t_out[k] == 0:
        uo[k], eo[k], ho[k] = 1.0, 0.0, 1.0
        k += 1
    for s in range(1, T + 1):
        hi = min(s - 1, math.ceil(cutoff * math.sqrt(s)) + 2, size - 1)
        u[prev_hi + 1 : hi + 2] = 1.0
        e[prev_hi + 1 : hi + 2] = 0.0
        h[prev_hi + 1 : hi + 2] = far_h
        u2 = np.empty_like(u)
        e2 = np.empty_like(e)
        h2 = np.empty_like(h)
        u2[0] = gamma * u[1]
        e2[0] = 1.0 + e[1]
        h2[0] = h[1]
        if hi >= 1:
            u2[1 : hi + 1] = 0.5 * (u[0:hi] + u[2 : hi + 2])
            e2[1 : hi + 1] = 0.5 * (e[0:hi] + e[2 : hi + 2])
            h2[1 : hi + 1] = 0.5 * (gm2 * h[2 : hi + 2] + g2 * h[0:hi])
        far_h *= rho
        u, e, h = u2, e2, h2
        prev_hi = hi
        while k < n_out and t_out[k] == s:
            m = min(hi, X)
            uo[k, : m + 1] = u[: m + 1]
            eo[k, : m + 1] = e[: m + 1]
            ho[k, : m + 1] = h[: m + 1]
            uo[k, m + 1 :] = 1.0
            eo[k, m + 1 :] = 0.0
            ho[k, m + 1 :] = far_h
            k += 1
    return uo, eo, ho
