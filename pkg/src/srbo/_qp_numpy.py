"""Pure-numpy solver kernels; used when numba is off or Q is only row-accessible.

``row(i)`` must return row i of the symmetric matrix Q. Vector work is done
with numpy; the coordinate order is the same as in ``_qp_numba``.
"""
import numpy as np

DIAG_FLOOR = 1e-12
REFRESH_EVERY = 64


def _gradient(row, n, f, alpha):
    g = f.copy()
    for j in np.flatnonzero(alpha):
        g += alpha[j] * row(j)
    return g


def _objective(alpha, grad, f):
    return 0.5 * float(alpha @ (grad + f))


def _pair_select(row, diag, alpha, grad, upper):
    """Max-violating gap plus a second-order partner; see ``_qp_numba``."""
    up = alpha < upper
    dn = alpha > 0.0
    if not up.any() or not dn.any():
        return -1, -1, 0.0, 0.0
    g_up = np.where(up, grad, np.inf)
    i = int(np.argmin(g_up))
    gmin = g_up[i]
    gap = float(np.max(np.where(dn, grad, -np.inf)) - gmin)
    b = grad - gmin
    cand = dn & (b > 0.0)
    if not cand.any():
        return -1, -1, gap, 0.0
    a = np.maximum(diag[i] + diag - 2.0 * row(i), DIAG_FLOOR)
    score = np.where(cand, b * b / a, -1.0)
    j = int(np.argmax(score))
    return i, j, gap, float(b[j])


def _pair_move(row, diag, alpha, grad, i, j, gap, upper):
    ri = row(i)
    rj = row(j)
    denom = diag[i] + diag[j] - 2.0 * ri[j]
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
    grad += t * (ri - rj)
    return True


def _pair_phase(row, diag, alpha, grad, upper, eps, n):
    pfirst = 0.0
    changed = False
    for t in range(n):
        i, j, gap, step_gap = _pair_select(row, diag, alpha, grad, upper)
        if t == 0:
            pfirst = gap
        if i < 0 or gap <= eps:
            break
        if not _pair_move(row, diag, alpha, grad, i, j, step_gap, upper):
            break
        changed = True
    return pfirst, changed


def dcdm(row, diag, f, alpha, floor, upper, eps, max_sweeps):
    n = alpha.shape[0]
    grad = _gradient(row, n, f, alpha)
    total = float(alpha.sum())
    history = [_objective(alpha, grad, f)]
    fresh = True
    converged = False
    worst = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        changed = False
        cmax = 0.0
        for i in range(n):
            qii = diag[i]
            if qii <= DIAG_FLOOR:
                continue
            ai = alpha[i]
            low = max(floor - (total - ai), 0.0)
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
                cmax = max(cmax, apg)
                new = min(max(ai - pg / qii, low), upper)
                d = new - ai
                if d != 0.0:
                    alpha[i] = new
                    total += d
                    grad += d * row(i)
                    changed = True
        pfirst, moved = _pair_phase(row, diag, alpha, grad, upper, eps, n)
        changed = changed or moved
        total = float(alpha.sum())
        worst = max(cmax, pfirst)
        history.append(_objective(alpha, grad, f))
        if worst <= eps and not changed:
            if fresh:
                converged = True
                break
            grad = _gradient(row, n, f, alpha)
            fresh = True
            continue
        fresh = False
        if sweeps % REFRESH_EVERY == 0:
            grad = _gradient(row, n, f, alpha)
    return sweeps, worst, converged, np.array(history)


def smo(row, diag, f, alpha, upper, eps, max_sweeps):
    n = alpha.shape[0]
    grad = _gradient(row, n, f, alpha)
    history = [_objective(alpha, grad, f)]
    fresh = True
    converged = False
    worst = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        pfirst, changed = _pair_phase(row, diag, alpha, grad, upper, eps, n)
        worst = pfirst
        history.append(_objective(alpha, grad, f))
        if worst <= eps and not changed:
            if fresh:
                converged = True
                break
            grad = _gradient(row, n, f, alpha)
            fresh = True
            continue
        fresh = False
        if sweeps % REFRESH_EVERY == 0:
            grad = _gradient(row, n, f, alpha)
    return sweeps, worst, converged, np.array(history)
