"""Hot numeric kernels: GRU forward/backward and Levenshtein distance.

Every kernel has a pure-numpy implementation. When numba is importable the
module wraps them with ``@njit(cache=True)`` at import time; set the
environment variable ``STYLENER_NUMBA=0`` to skip that and run the plain
versions (useful for debugging and for the benchmark in
``benchmarks/bench_kernels.py``). The plain versions stay reachable under
``*_py`` names either way. Both paths run the same source; results agree to
floating-point rounding (libm vs vectorized transcendentals differ by ulps).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "gru_forward",
    "gru_forward_py",
    "gru_backward",
    "gru_backward_py",
    "levenshtein",
    "levenshtein_py",
    "warmup",
]


def _numba_requested() -> bool:
    value = os.environ.get("STYLENER_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "off", "no")


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # numba missing entirely: fall back silently
        NUMBA_ENABLED = False


def _levenshtein_impl(a, b):
    n = a.shape[0]
    m = b.shape[0]
    if n == 0:
        return m
    if m == 0:
        return n
    prev = np.arange(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            best = prev[j] + 1  # deletion
            ins = cur[j - 1] + 1
            if ins < best:
                best = ins
            sub = prev[j - 1]
            if ai != b[j - 1]:
                sub += 1
            if sub < best:
                best = sub
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    return prev[m]


def _gru_forward_impl(X, h0, Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh):
    # z = sigmoid(x Wz + h Uz + bz), r likewise, c = tanh(x Wh + (r*h) Uh + bh),
    # h' = (1 - z) * h + z * c.  Returns per-step h, z, r, c for the backward pass.
    T = X.shape[0]
    d = h0.shape[0]
    H = np.zeros((T, d))
    Z = np.zeros((T, d))
    R = np.zeros((T, d))
    C = np.zeros((T, d))
    h = h0.copy()
    for t in range(T):
        x = X[t]
        z = 1.0 / (1.0 + np.exp(-(np.dot(x, Wz) + np.dot(h, Uz) + bz)))
        r = 1.0 / (1.0 + np.exp(-(np.dot(x, Wr) + np.dot(h, Ur) + br)))
        c = np.tanh(np.dot(x, Wh) + np.dot(r * h, Uh) + bh)
        h = (1.0 - z) * h + z * c
        Z[t] = z
        R[t] = r
        C[t] = c
        H[t] = h
    return H, Z, R, C


def _gru_backward_impl(X, h0, H, Z, R, C, dH, dh_last, Wz, Uz, Wr, Ur, Wh, Uh):
    # Reverse-mode pass for _gru_forward_impl. dH holds per-step gradients
    # flowing into each h_t from outside (attention, losses); dh_last is the
    # extra gradient on the final state. Returns dX, dh0 and weight grads.
    T = X.shape[0]
    din = X.shape[1]
    d = h0.shape[0]
    dX = np.zeros((T, din))
    dWz = np.zeros_like(Wz)
    dUz = np.zeros_like(Uz)
    dbz = np.zeros(d)
    dWr = np.zeros_like(Wr)
    dUr = np.zeros_like(Ur)
    dbr = np.zeros(d)
    dWh = np.zeros_like(Wh)
    dUh = np.zeros_like(Uh)
    dbh = np.zeros(d)
    WzT = np.ascontiguousarray(Wz.T)
    UzT = np.ascontiguousarray(Uz.T)
    WrT = np.ascontiguousarray(Wr.T)
    UrT = np.ascontiguousarray(Ur.T)
    WhT = np.ascontiguousarray(Wh.T)
    UhT = np.ascontiguousarray(Uh.T)
    dh = dh_last.copy()
    for t in range(T - 1, -1, -1):
        dh = dh + dH[t]
        if t > 0:
            h_prev = H[t - 1]
        else:
            h_prev = h0
        z = Z[t]
        r = R[t]
        c = C[t]
        x = X[t]
        dz = dh * (c - h_prev)
        dc = dh * z
        dh_prev = dh * (1.0 - z)
        da_c = dc * (1.0 - c * c)
        dWh += np.outer(x, da_c)
        dbh += da_c
        drh = np.dot(da_c, UhT)
        dUh += np.outer(r * h_prev, da_c)
        dh_prev += drh * r
        dr = drh * h_prev
        dX[t] += np.dot(da_c, WhT)
        da_r = dr * r * (1.0 - r)
        dWr += np.outer(x, da_r)
        dUr += np.outer(h_prev, da_r)
        dbr += da_r
        dX[t] += np.dot(da_r, WrT)
        dh_prev += np.dot(da_r, UrT)
        da_z = dz * z * (1.0 - z)
        dWz += np.outer(x, da_z)
        dUz += np.outer(h_prev, da_z)
        dbz += da_z
        dX[t] += np.dot(da_z, WzT)
        dh_prev += np.dot(da_z, UzT)
        dh = dh_prev
    return dX, dh, dWz, dUz, dbz, dWr, dUr, dbr, dWh, dUh, dbh


levenshtein_py = _levenshtein_impl
gru_forward_py = _gru_forward_impl
gru_backward_py = _gru_backward_impl

if NUMBA_ENABLED:
    levenshtein = _njit(cache=True)(_levenshtein_impl)
    gru_forward = _njit(cache=True)(_gru_forward_impl)
    gru_backward = _njit(cache=True)(_gru_backward_impl)
else:
    levenshtein = _levenshtein_impl
    gru_forward = _gru_forward_impl
    gru_backward = _gru_backward_impl


def warmup() -> None:
    """Trigger jit compilation once so timed code paths never pay for it."""
    a = np.array([1, 2, 3], dtype=np.int32)
    b = np.array([1, 3], dtype=np.int32)
    levenshtein(a, b)
    d = 2
    X = np.zeros((2, d))
    h0 = np.zeros(d)
    W = np.zeros((d, d))
    bvec = np.zeros(d)
    H, Z, R, C = gru_forward(X, h0, W, W, bvec, W, W, bvec, W, W, bvec)
    gru_backward(X, h0, H, Z, R, C, np.zeros((2, d)), h0, W, W, W, W, W, W)
