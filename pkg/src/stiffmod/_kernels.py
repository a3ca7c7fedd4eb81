"""Fixed-step propagation loops.

Both implementations advance ``y_{k+1} = P y_k + s(t_k + c1 h) q1 + s(t_k + c2 h) q2``
for a precomputed one-step propagator and stop early when the observation
signal asks for a switch. By default the scalar loop is compiled with numba;
with ``STIFFMOD_DISABLE_NUMBA=1`` (or without numba) ``advance_numpy`` is used
instead, which processes blocks of steps with matrix powers.

Return value of both: ``(k, status)`` where ``k`` is the number of committed
samples and ``status`` is one of the ``STOP_*`` codes.
"""

from __future__ import annotations

import math
import os

import numpy as np

STOP_DONE = 0
STOP_CROSSING = 1  # sign change of c or c_dot inside the next (uncommitted) step
STOP_SAMPLED = 2  # sampled rule asks for a switch at the last committed sample

WATCH_NONE = 0
WATCH_EVENT = 1
WATCH_SAMPLED = 2

_CHUNK = 128

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_DISABLED = os.environ.get("STIFFMOD_DISABLE_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
)


def _force_scalar(code, par, t):
    if code == 1:
        return par[0] * math.sin(2.0 * math.pi * par[1] * t)
    if code == 2:
        return par[0] * math.sin(2.0 * math.pi * t * (par[2] + t * (par[3] - par[2]) / (2.0 * par[4])))
    return 0.0


def _advance_loop(P, q1, q2, y0, t0, h, n_steps, w, code, par, c1, c2,
                  check_from, watch, high, ts, ys, fs):
    N = y0.shape[0]
    r = N // 2
    y = y0.copy()
    ynew = np.empty(N)
    c_old = 0.0
    d_old = 0.0
    for j in range(r):
        c_old += w[j] * y[j]
        d_old += w[j] * y[r + j]
    for i in range(n_steps):
        t = t0 + i * h
        s1 = _force_scalar(code, par, t + c1 * h)
        s2 = _force_scalar(code, par, t + c2 * h)
        for a in range(N):
            acc = s1 * q1[a] + s2 * q2[a]
            for b in range(N):
                acc += P[a, b] * y[b]
            ynew[a] = acc
        t_new = t0 + (i + 1) * h
        c_new = 0.0
        d_new = 0.0
        for j in range(r):
            c_new += w[j] * ynew[j]
            d_new += w[j] * ynew[r + j]
        if watch == 1 and t_new > check_from + 1e-9 * h:
            if (c_old * c_new < 0.0 or (c_new == 0.0 and c_old != 0.0)
                    or d_old * d_new < 0.0 or (d_new == 0.0 and d_old != 0.0)):
                return i, STOP_CROSSING
        ts[i] = t_new
        for a in range(N):
            ys[i, a] = ynew[a]
            y[a] = ynew[a]
        fs[i] = _force_scalar(code, par, t_new)
        if watch == 2 and t_new > check_from + 1e-9 * h:
            want_high = abs(c_new) >= abs(c_old)
            if want_high != high:
                return i + 1, STOP_SAMPLED
        c_old = c_new
        d_old = d_new
    return n_steps, STOP_DONE


def _force_vec(code, par, t):
    if code == 1:
        return par[0] * np.sin(2.0 * np.pi * par[1] * t)
    if code == 2:
        return par[0] * np.sin(2.0 * np.pi * t * (par[2] + t * (par[3] - par[2]) / (2.0 * par[4])))
    return np.zeros_like(t)


def advance_numpy(P, q1, q2, y0, t0, h, n_steps, w, code, par, c1, c2,
                  check_from, watch, high, ts, ys, fs):
    N = y0.shape[0]
    r = N // 2
    B = _CHUNK
    pows = np.empty((B + 1, N, N))
    pows[0] = np.eye(N)
    for j in range(1, B + 1):
        pows[j] = P @ pows[j - 1]
    forced = code != 0
    if forced:
        # G[j, :, i] = P^(j-i) q for i <= j: response after step j to the input of step i
        lag = np.arange(B)[:, None] - np.arange(B)[None, :]
        resp1 = np.concatenate((pows[:B] @ q1, np.zeros((1, N))))
        resp2 = np.concatenate((pows[:B] @ q2, np.zeros((1, N))))
        lag = np.where(lag >= 0, lag, B)
        G1 = resp1[lag].transpose(0, 2, 1).copy()
        G2 = resp2[lag].transpose(0, 2, 1).copy()
    y = np.array(y0, dtype=float)
    c_last = w @ y[:r]
    d_last = w @ y[r:]
    done = 0
    while done < n_steps:
        m = min(B, n_steps - done)
        idx = done + np.arange(m)
        Y = pows[1:m + 1] @ y
        if forced:
            t_start = t0 + idx * h
            Y += G1[:m, :, :m] @ _force_vec(code, par, t_start + c1 * h)
            Y += G2[:m, :, :m] @ _force_vec(code, par, t_start + c2 * h)
        times = t0 + (idx + 1) * h
        c = Y[:, :r] @ w
        d = Y[:, r:] @ w
        c_prev = np.concatenate(([c_last], c[:-1]))
        d_prev = np.concatenate(([d_last], d[:-1]))
        armed = times > check_from + 1e-9 * h
        stop = None
        if watch == WATCH_EVENT:
            hit = armed & ((c_prev * c < 0) | ((c == 0) & (c_prev != 0))
                           | (d_prev * d < 0) | ((d == 0) & (d_prev != 0)))
            if hit.any():
                stop = (int(np.argmax(hit)), STOP_CROSSING)
        elif watch == WATCH_SAMPLED:
            hit = armed & ((np.abs(c) >= np.abs(c_prev)) != high)
            if hit.any():
                stop = (int(np.argmax(hit)) + 1, STOP_SAMPLED)
        keep = m if stop is None else stop[0]
        ts[done:done + keep] = times[:keep]
        ys[done:done + keep] = Y[:keep]
        fs[done:done + keep] = _force_vec(code, par, times[:keep])
        if stop is not None:
            return done + keep, stop[1]
        done += m
        y = Y[-1]
        c_last, d_last = c[-1], d[-1]
    return n_steps, STOP_DONE


USING_NUMBA = numba is not None and not NUMBA_DISABLED

if USING_NUMBA:
    _force_scalar = numba.njit(cache=True)(_force_scalar)
    advance = numba.njit(cache=True)(_advance_loop)
else:
    advance = advance_numpy


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"
