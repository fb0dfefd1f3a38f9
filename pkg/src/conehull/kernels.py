"""Hot inner loops, each with a numba path and a vectorized numpy path.

The public names at the bottom dispatch on :data:`conehull._accel.USE_NUMBA`.
Both variants are importable under their private names so the benchmark and
the equivalence tests can call either one directly.

Norm codes used by the sign-sum kernels: ``0`` is the l1 norm, ``1`` the
squared l2 norm.
"""
from itertools import combinations, islice
from math import comb

import numpy as np

from ._accel import USE_NUMBA, njit

L1 = 0
L2SQ = 1

_CHUNK = 1 << 22  # floats per temporary in the numpy paths


def sign_matrix(k):
    """All sign vectors in {-1,+1}^k with the first entry fixed to +1."""
    if k <= 0:
        return np.ones((1, 0))
    codes = np.arange(1 << (k - 1), dtype=np.int64)
    bits = (codes[:, None] >> np.arange(k - 1)) & 1
    return np.hstack([np.ones((codes.size, 1)), 1.0 - 2.0 * bits])


# --------------------------------------------------------------------------
# max over groups and signs of || sum_i eps_i v_i ||


@njit
def _sign_sum_max_nb(groups, kind):
    F, k, d = groups.shape
    nsig = 1 << (k - 1)
    acc = np.empty(d)
    best = 0.0
    for f in range(F):
        for s in range(nsig):
            for j in range(d):
                acc[j] = groups[f, 0, j]
            for i in range(1, k):
                if (s >> (i - 1)) & 1:
                    for j in range(d):
                        acc[j] -= groups[f, i, j]
                else:
                    for j in range(d):
                        acc[j] += groups[f, i, j]
            val = 0.0
            if kind == 0:
                for j in range(d):
                    val += abs(acc[j])
            else:
                for j in range(d):
                    val += acc[j] * acc[j]
            if val > best:
                best = val
    return best


def _sign_sum_max_np(groups, kind):
    groups = np.asarray(groups, dtype=np.float64)
    F, k, d = groups.shape
    if F == 0:
        return 0.0
    signs = sign_matrix(k)
    step = max(1, _CHUNK // (signs.shape[0] * d))
    best = 0.0
    for start in range(0, F, step):
        sums = np.einsum("sk,fkj->fsj", signs, groups[start:start + step])
        if kind == L1:
            val = np.abs(sums).sum(axis=2).max()
        else:
            val = np.einsum("fsj,fsj->fs", sums, sums).max()
        best = max(best, float(val))
    return best


# --------------------------------------------------------------------------
# exhaustive max over k-subsets of a vector list


@njit
def _subset_sign_sum_max_nb(vectors, k, kind):
    M, d = vectors.shape
    idx = np.arange(k)
    nsig = 1 << (k - 1)
    acc = np.empty(d)
    best = 0.0
    while True:
        for s in range(nsig):
            for j in range(d):
                acc[j] = vectors[idx[0], j]
            for i in range(1, k):
                if (s >> (i - 1)) & 1:
                    for j in range(d):
                        acc[j] -= vectors[idx[i], j]
                else:
                    for j in range(d):
                        acc[j] += vectors[idx[i], j]
            val = 0.0
            if kind == 0:
                for j in range(d):
                    val += abs(acc[j])
            else:
                for j in range(d):
                    val += acc[j] * acc[j]
            if val > best:
                best = val
        # next combination in lexicographic order
        i = k - 1
        while i >= 0 and idx[i] == M - k + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, k):
            idx[j] = idx[j - 1] + 1
    return best


def _subset_sign_sum_max_np(vectors, k, kind):
    vectors = np.asarray(vectors, dtype=np.float64)
    M, d = vectors.shape
    per_combo = (1 << (k - 1)) * d
    step = max(1, _CHUNK // per_combo)
    it = combinations(range(M), k)
    best = 0.0
    remaining = comb(M, k)
    while remaining > 0:
        take = min(step, remaining)
        idx = np.fromiter(
            (i for c in islice(it, take) for i in c), dtype=np.int64, count=take * k
        ).reshape(take, k)
        best = max(best, _sign_sum_max_np(vectors[idx], kind))
        remaining -= take
    return best


# --------------------------------------------------------------------------
# Luxemburg root: solve mean(exp((a/lam)^alpha)) = 2 for lam


@njit
def _log_mean_exp_pow_nb(a, lam, alpha):
    m = a.shape[0]
    u = np.empty(m)
    top = 0.0
    for i in range(m):
        r = a[i] / lam
        if alpha == 2.0:
            v = r * r
        elif alpha == 1.0:
            v = r
        else:
            v = r**alpha
        u[i] = v
        if v > top:
            top = v
    s = 0.0
    ds = 0.0
    for i in range(m):
        e = np.exp(u[i] - top)
        s += e
        ds += e * u[i]
    g = top + np.log(s / m)
    # d g / d lam = -(alpha / lam) * weighted mean of u
    dg = -(alpha / lam) * ds / s
    return g, dg


@njit
def _orlicz_root_nb(a, alpha, lo, hi, rtol, gtol, max_iter):
    target = np.log(2.0)
    lam = 0.5 * (lo + hi)
    it = 0
    for it in range(max_iter):
        g, dg = _log_mean_exp_pow_nb(a, lam, alpha)
        g -= target
        if g > 0.0:
            lo = lam
        else:
            hi = lam
        if abs(g) <= gtol or hi - lo <= rtol * lam:
            break
        step = lam - g / dg if dg != 0.0 else lo - 1.0
        if lo < step < hi:
            lam = step
        else:
            lam = 0.5 * (lo + hi)
    return lam, lo, hi, it + 1


def _log_mean_exp_pow_np(a, lam, alpha):
    u = (a / lam) ** alpha
    top = u.max()
    e = np.exp(u - top)
    s = e.sum()
    g = top + np.log(s / a.size)
    dg = -(alpha / lam) * float(e @ u) / s
    return float(g), float(dg)


def _orlicz_root_np(a, alpha, lo, hi, rtol, gtol, max_iter):
    target = np.log(2.0)
    lam = 0.5 * (lo + hi)
    it = 0
    for it in range(max_iter):
        g, dg = _log_mean_exp_pow_np(a, lam, alpha)
        g -= target
        if g > 0.0:
            lo = lam
        else:
            hi = lam
        if abs(g) <= gtol or hi - lo <= rtol * lam:
            break
        step = lam - g / dg if dg != 0.0 else lo - 1.0
        lam = step if lo < step < hi else 0.5 * (lo + hi)
    return lam, lo, hi, it + 1


# --------------------------------------------------------------------------
# hit-and-run inside {x : |<a_i, x>| <= b_i}


@njit
def _hit_and_run_nb(A, b, x0, directions, uniforms, burn, thin):
    m, d = A.shape
    steps = directions.shape[0]
    count = (steps - burn) // thin
    out = np.empty((count, d))
    x = x0.copy()
    k = 0
    for t in range(steps):
        tmin = -np.inf
        tmax = np.inf
        for i in range(m):
            ax = 0.0
            au = 0.0
            for j in range(d):
                ax += A[i, j] * x[j]
                au += A[i, j] * directions[t, j]
            if au > 1e-300:
                hi = (b[i] - ax) / au
                lo = (-b[i] - ax) / au
            elif au < -1e-300:
                hi = (-b[i] - ax) / au
                lo = (b[i] - ax) / au
            else:
                continue
            if hi < tmax:
                tmax = hi
            if lo > tmin:
                tmin = lo
        step = tmin + uniforms[t] * (tmax - tmin)
        for j in range(d):
            x[j] += step * directions[t, j]
        if t >= burn and (t - burn + 1) % thin == 0 and k < count:
            out[k] = x
            k += 1
    return out


def _hit_and_run_np(A, b, x0, directions, uniforms, burn, thin):
    steps = directions.shape[0]
    count = (steps - burn) // thin
    out = np.empty((count, A.shape[1]))
    x = np.array(x0, dtype=np.float64)
    proj = directions @ A.T  # (steps, m); independent of the state
    k = 0
    for t in range(steps):
        ax = A @ x
        au = proj[t]
        live = np.abs(au) > 1e-300
        r1 = (b[live] - ax[live]) / au[live]
        r2 = (-b[live] - ax[live]) / au[live]
        tmax = np.maximum(r1, r2).min()
        tmin = np.minimum(r1, r2).max()
        x = x + (tmin + uniforms[t] * (tmax - tmin)) * directions[t]
        if t >= burn and (t - burn + 1) % thin == 0 and k < count:
            out[k] = x
            k += 1
    return out


# --------------------------------------------------------------------------
# dispatch

# numpy's vectorized exp beats the scalar loop (see benchmarks/), so the
# Orlicz root uses the numpy kernel under both backends.
orlicz_root = _orlicz_root_np
if USE_NUMBA:
    sign_sum_max = _sign_sum_max_nb
    subset_sign_sum_max = _subset_sign_sum_max_nb
    hit_and_run = _hit_and_run_nb
else:
    sign_sum_max = _sign_sum_max_np
    subset_sign_sum_max = _subset_sign_sum_max_np
    hit_and_run = _hit_and_run_np

BACKEND = "numba" if USE_NUMBA else "numpy"
