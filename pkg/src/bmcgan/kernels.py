"""Inner loops: Euler-Maruyama stepping and mean pairwise distances.

Each kernel has a loop-style implementation compiled with numba and a
pure-numpy implementation vectorized over the batch axis. Both perform the
same floating point operations in the same order for the Euler-Maruyama
update; they can still differ in the last ulp where the compiled and numpy
``pow``/``exp`` implementations differ.

Status codes written by the stepping kernels:
    RUNNING  trajectory still active
    BLOWUP   norm exceeded the threshold; the offending state was recorded
    NONFINITE  the update produced NaN/inf; the state holds the last finite value
"""
import math

import numpy as np

from . import _backend

RUNNING = 0
BLOWUP = 1
NONFINITE = 2


def _sigmoid(v):
    if v >= 0.0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


_sigmoid_jit = _backend.njit(_sigmoid)


def _em_chunk_loop(state, k0, dB1, dB2, dt, family, c, rho1, rho2, beta, noisy,
                   stride, n_total, thr2, rec_step, rec_state, n_rec, status, stop_step):
    n_traj, m = dB1.shape
    for i in range(n_traj):
        if status[i] != RUNNING:
            continue
        p = state[i, 0]
        t = state[i, 1]
        for j in range(m):
            k = k0 + j + 1
            if family == 0:
                dp = c - (t + c)
                dq = p
            else:
                u = p * (t + c)
                dp = _sigmoid_jit(-(p * c)) * c + (-_sigmoid_jit(u)) * (t + c)
                dq = _sigmoid_jit(-u) * p
            np_ = p + dp * dt
            nq = t + dq * dt
            if noisy:
                nrm = math.sqrt(p * p + t * t)
                sc2 = rho2 * nrm ** beta if nrm > 0.0 else 0.0
                b1 = dB1[i, j]
                b2 = dB2[i, j]
                np_ = np_ + (rho1 * p) * b1
                nq = nq + (rho1 * t) * b1
                np_ = np_ + (sc2 * p) * b2
                nq = nq + (sc2 * t) * b2
            if not (math.isfinite(np_) and math.isfinite(nq)):
                status[i] = NONFINITE
                stop_step[i] = k - 1
                break
            p = np_
            t = nq
            blow = p * p + t * t > thr2
            if blow or k % stride == 0 or k == n_total:
                r = n_rec[i]
                rec_step[i, r] = k
                rec_state[i, r, 0] = p
                rec_state[i, r, 1] = t
                n_rec[i] = r + 1
            if blow:
                status[i] = BLOWUP
                stop_step[i] = k
                break
        state[i, 0] = p
        state[i, 1] = t


_em_chunk_numba = _backend.njit(_em_chunk_loop)


def _sigmoid_np(v):
    out = np.empty_like(v)
    pos = v >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _em_chunk_numpy(*args):
    with np.errstate(over="ignore", invalid="ignore"):
        _em_chunk_numpy_body(*args)


def _em_chunk_numpy_body(state, k0, dB1, dB2, dt, family, c, rho1, rho2, beta, noisy,
                         stride, n_total, thr2, rec_step, rec_state, n_rec, status, stop_step):
    n_traj, m = dB1.shape
    p = state[:, 0].copy()
    t = state[:, 1].copy()
    active = status == RUNNING
    for j in range(m):
        if not active.any():
            break
        k = k0 + j + 1
        if family == 0:
            dp = c - (t + c)
            dq = p
        else:
            u = p * (t + c)
            dp = _sigmoid_np(-(p * c)) * c + (-_sigmoid_np(u)) * (t + c)
            dq = _sigmoid_np(-u) * p
        np_ = p + dp * dt
        nq = t + dq * dt
        if noisy:
            nrm = np.sqrt(p * p + t * t)
            with np.errstate(divide="ignore"):
                sc2 = np.where(nrm > 0.0, rho2 * nrm ** beta, 0.0)
            b1 = dB1[:, j]
            b2 = dB2[:, j]
            np_ = np_ + (rho1 * p) * b1
            nq = nq + (rho1 * t) * b1
            np_ = np_ + (sc2 * p) * b2
            nq = nq + (sc2 * t) * b2
        finite = np.isfinite(np_) & np.isfinite(nq)
        bad = active & ~finite
        if bad.any():
            status[bad] = NONFINITE
            stop_step[bad] = k - 1
        good = active & finite
        p = np.where(good, np_, p)
        t = np.where(good, nq, t)
        blow = good & (p * p + t * t > thr2)
        if k % stride == 0 or k == n_total:
            rec = good
        else:
            rec = blow
        if rec.any():
            idx = np.nonzero(rec)[0]
            r = n_rec[idx]
            rec_step[idx, r] = k
            rec_state[idx, r, 0] = p[idx]
            rec_state[idx, r, 1] = t[idx]
            n_rec[idx] = r + 1
        if blow.any():
            status[blow] = BLOWUP
            stop_step[blow] = k
        active = status == RUNNING
    state[:, 0] = p
    state[:, 1] = t


def em_chunk(*args, backend=None):
    """Advance a batch of trajectories over one block of noise increments."""
    if _backend.use_numba(backend):
        return _em_chunk_numba(*args)
    return _em_chunk_numpy(*args)


def _mean_pairwise_loop(x, y):
    n, d = x.shape
    m = y.shape[0]
    total = 0.0
    for i in range(n):
        row = 0.0
        for j in range(m):
            s = 0.0
            for k in range(d):
                diff = x[i, k] - y[j, k]
                s += diff * diff
            row += math.sqrt(s)
        total += row
    return total / (n * m)


_mean_pairwise_numba = _backend.njit(_mean_pairwise_loop)


def _mean_pairwise_numpy(x, y, block=1024):
    total = 0.0
    for start in range(0, x.shape[0], block):
        xb = x[start:start + block]
        diff = xb[:, None, :] - y[None, :, :]
        total += float(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).sum())
    return total / (x.shape[0] * y.shape[0])


def mean_pairwise_distance(x, y, backend=None):
    """Mean Euclidean distance over all pairs ``(x[i], y[j])``. Inputs are ``(n, d)``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[1] != y.shape[1]:
        raise ValueError("sample sets must share their dimension")
    if _backend.use_numba(backend):
        return _mean_pairwise_numba(x, y)
    return _mean_pairwise_numpy(x, y)
