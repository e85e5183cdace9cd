"""numba kernels for the two dual solvers; mirrors ``_qp_numpy`` line for line.

Both kernels mutate ``alpha`` in place and keep the gradient Q @ alpha + f
up to date incrementally. ``Q`` is a dense, symmetric, C-contiguous base
matrix and ``idx`` selects the principal submatrix actually solved over, so
a reduced problem never copies Q[S, S].
"""
import numpy as np
from numba import njit

DIAG_FLOOR = 1e-12
REFRESH_EVERY = 64


@njit(cache=True)
def _gradient(Q, idx, f, alpha):
    n = alpha.shape[0]
    g = f.copy()
    for j in range(n):
        a = alpha[j]
        if a != 0.0:
            row = Q[idx[j]]
            for k in range(n):
                g[k] += a * row[idx[k]]
    return g


@njit(cache=True)
def _objective(alpha, grad, f):
    s = 0.0
    for k in range(alpha.shape[0]):
        s += alpha[k] * (grad[k] + f[k])
    return 0.5 * s


@njit(cache=True)
def _axpy_row(grad, Q, idx, i, t):
    row = Q[idx[i]]
    for k in range(grad.shape[0]):
        grad[k] += t * row[idx[k]]


@njit(cache=True)
def _pair_select(Q, idx, alpha, grad, upper):
    """Max-violating gap plus a second-order partner for the steepest ascent index.

    i is the coordinate with the smallest gradient that can still grow; j
    maximizes the guaranteed decrease (g_j - g_i)^2 / (Q_ii + Q_jj - 2 Q_ij)
    over coordinates that can shrink.
    """
    n = alpha.shape[0]
    i_up = -1
    gmin = np.inf
    gmax = -np.inf
    for k in range(n):
        if alpha[k] < upper and grad[k] < gmin:
            gmin = grad[k]
            i_up = k
        if alpha[k] > 0.0 and grad[k] > gmax:
            gmax = grad[k]
    if i_up < 0 or gmax == -np.inf:
        return -1, -1, 0.0, 0.0
    j_dn = -1
    best = -1.0
    ri = Q[idx[i_up]]
    qii = ri[idx[i_up]]
    for k in range(n):
        if alpha[k] > 0.0:
            b = grad[k] - gmin
            if b > 0.0:
                kk = idx[k]
                a = qii + Q[kk, kk] - 2.0 * ri[kk]
                if a < DIAG_FLOOR:
                    a = DIAG_FLOOR
                score = b * b / a
                if score > best:
                    best = score
                    j_dn = k
    if j_dn < 0:
        return -1, -1, gmax - gmin, 0.0
    return i_up, j_dn, gmax - gmin, grad[j_dn] - gmin


@njit(cache=True)
def _pair_move(Q, idx, alpha, grad, i, j, gap, upper):
    ii = idx[i]
    jj = idx[j]
    denom = Q[ii, ii] + Q[jj, jj] - 2.0 * Q[ii, jj]
    if denom < DIAG_FLOOR:
        denom = DIAG_FLOOR
    t = gap / denom
    room_i = upper - alpha[i]
    if t >= alpha[j]:
        t = alpha[j]
    if t >= room_i:
        t = room_i
    if t <= 0.0:
        return False
    if t == room_i:
        alpha[i] = upper
    else:
        alpha[i] += t
    if t == alpha[j]:
        alpha[j] = 0.0
    else:
        alpha[j] -= t
    ri = Q[ii]
    rj = Q[jj]
    for k in range(alpha.shape[0]):
        kk = idx[k]
        grad[k] += t * (ri[kk] - rj[kk])
    return True


@njit(cache=True)
def _pair_phase(Q, idx, alpha, grad, upper, eps):
    n = alpha.shape[0]
    pfirst = 0.0
    changed = False
    for t in range(n):
        i_up, j_dn, gap, step_gap = _pair_select(Q, idx, alpha, grad, upper)
        if t == 0:
            pfirst = gap
        if i_up < 0 or gap <= eps:
            break
        if not _pair_move(Q, idx, alpha, grad, i_up, j_dn, step_gap, upper):
            break
        changed = True
    return pfirst, changed


@njit(cache=True)
def dcdm(Q, idx, f, alpha, floor, upper, eps, max_sweeps):
    n = alpha.shape[0]
    grad = _gradient(Q, idx, f, alpha)
    total = alpha.sum()
    history = np.empty(max_sweeps + 1)
    history[0] = _objective(alpha, grad, f)
    fresh = True
    converged = False
    worst = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        changed = False
        cmax = 0.0
        for i in range(n):
            qii = Q[idx[i], idx[i]]
            if qii <= DIAG_FLOOR:
                continue
            ai = alpha[i]
            low = floor - (total - ai)
            if low < 0.0:
                low = 0.0
            g = grad[i]
            at_low = ai - low < eps
            at_up = upper - ai < eps
            if at_low and at_up:
                pg = 0.0
            elif at_low:
                pg = min(g, 0.0)
            elif at_up:
                pg = max(g, 0.0)
            else:
                pg = g
            apg = abs(pg)
            if apg > eps:
                if apg > cmax:
                    cmax = apg
                new = ai - pg / qii
                if new > upper:
                    new = upper
                if new < low:
                    new = low
                d = new - ai
                if d != 0.0:
                    alpha[i] = new
                    total += d
                    _axpy_row(grad, Q, idx, i, d)
                    changed = True
        # the sum floor blocks every single-coordinate decrease once tight;
        # mass-preserving pair moves get past it
        pfirst, moved = _pair_phase(Q, idx, alpha, grad, upper, eps)
        changed = changed or moved
        total = alpha.sum()
        worst = max(cmax, pfirst)
        history[sweeps] = _objective(alpha, grad, f)
        if worst <= eps and not changed:
            if fresh:
                converged = True
                break
            grad = _gradient(Q, idx, f, alpha)
            fresh = True
            continue
        fresh = False
        if sweeps % REFRESH_EVERY == 0:
            grad = _gradient(Q, idx, f, alpha)
    return sweeps, worst, converged, history[: sweeps + 1]


@njit(cache=True)
def smo(Q, idx, f, alpha, upper, eps, max_sweeps):
    grad = _gradient(Q, idx, f, alpha)
    history = np.empty(max_sweeps + 1)
    history[0] = _objective(alpha, grad, f)
    fresh = True
    converged = False
    worst = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        pfirst, changed = _pair_phase(Q, idx, alpha, grad, upper, eps)
        worst = pfirst
        history[sweeps] = _objective(alpha, grad, f)
        if worst <= eps and not changed:
            if fresh:
                converged = True
                break
            grad = _gradient(Q, idx, f, alpha)
            fresh = True
            continue
        fresh = False
        if sweeps % REFRESH_EVERY == 0:
            grad = _gradient(Q, idx, f, alpha)
    return sweeps, worst, converged, history[: sweeps + 1]


@njit(cache=True)
def subset_matvec(Q, idx, v):
    """Q[idx, idx] @ v without forming the submatrix."""
    n = idx.shape[0]
    out = np.zeros(n)
    for j in range(n):
        a = v[j]
        if a != 0.0:
            row = Q[idx[j]]
            for k in range(n):
                out[k] += a * row[idx[k]]
    return out
