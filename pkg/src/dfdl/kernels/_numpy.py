"""Vectorized numpy kernels (the fallback backend).

Every kernel here has a loop-level twin in ``_numba`` with the same signature
and the same selection rules; results agree to rounding.
"""

import numpy as np

from ._face import polish_face

# columns encoded per OMP block; bounds the d x m x L temporaries
OMP_BLOCK = 1024
# new atom rejected when its Cholesky pivot squared falls below this fraction of ||d_p||^2
DEPENDENCE_TOL = 1e-12
# atoms whose unconstrained update has smaller norm are kept as they were
ZERO_ATOM_TOL = 1e-12


def omp_batch(D, Y, L, tol):
    """Greedy OMP of every column of Y over D.

    Returns ``(codes, history)`` where ``codes`` is k x n and ``history`` is
    (L + 1) x n: row t holds the residual norm after t selections (rows past
    an early stop repeat the last value).
    """
    D = np.asarray(D, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    k = D.shape[1]
    n = Y.shape[1]
    G = D.T @ D
    codes = np.zeros((k, n))
    history = np.empty((L + 1, n))
    for start in range(0, n, OMP_BLOCK):
        sl = slice(start, min(n, start + OMP_BLOCK))
        codes[:, sl], history[:, sl] = _omp_block(D, G, Y[:, sl], L, tol)
    return codes, history


def _omp_block(D, G, Y, L, tol):
    k = D.shape[1]
    m = Y.shape[1]
    DtY = D.T @ Y
    support = np.zeros((m, L), dtype=np.int64)
    coef = np.zeros((m, L))
    chol = np.zeros((m, L, L))
    count = np.zeros(m, dtype=np.int64)
    selected = np.zeros((m, k), dtype=bool)
    alpha = DtY.T.copy()
    history = np.empty((L + 1, m))
    rnorm = np.linalg.norm(Y, axis=0)
    history[0] = rnorm
    alive = rnorm >= tol

    for t in range(L):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            history[t + 1:] = rnorm
            break
        score = np.abs(alpha[idx])
        score[selected[idx]] = -1.0
        p = np.argmax(score, axis=1)  # first maximum = lowest index
        best = score[np.arange(idx.size), p]
        gpp = G[p, p]
        if t == 0:
            w = np.zeros((idx.size, 0))
            pivot2 = gpp.copy()
        else:
            g = G[support[idx, :t], p[:, None]]
            w = np.linalg.solve(chol[idx, :t, :t], g[..., None])[..., 0]
            pivot2 = gpp - np.einsum("mt,mt->m", w, w)
        ok = (best > 0.0) & (pivot2 > DEPENDENCE_TOL * gpp)
        alive[idx[~ok]] = False
        idx, p, w, pivot2 = idx[ok], p[ok], w[ok], pivot2[ok]
        if idx.size:
            chol[idx, t, :t] = w
            chol[idx, t, t] = np.sqrt(pivot2)
            support[idx, t] = p
            selected[idx, p] = True
            count[idx] = t + 1
            sup = support[idx, : t + 1]
            Lt = chol[idx, : t + 1, : t + 1]
            b = DtY[sup, idx[:, None]]
            z = np.linalg.solve(Lt, b[..., None])
            x = np.linalg.solve(np.swapaxes(Lt, 1, 2), z)[..., 0]
            coef[idx, : t + 1] = x
            alpha[idx] = DtY[:, idx].T - np.einsum("mtk,mt->mk", G[sup], x)
            resid = Y[:, idx] - np.einsum("dmt,mt->dm", D[:, sup], x)
            rnorm[idx] = np.linalg.norm(resid, axis=0)
            alive[idx] = rnorm[idx] >= tol
        history[t + 1] = rnorm

    codes = np.zeros((k, m))
    mask = np.arange(L)[None, :] < count[:, None]
    cols = np.broadcast_to(np.arange(m)[:, None], (m, L))[mask]
    codes[support[mask], cols] = coef[mask]
    return codes, history


def kkt_violation(D, S, R, lam):
    """Per-column max violation of the lasso stationarity conditions.

    ``R`` is the residual Y - D S.
    """
    g = 2.0 * (D.T @ R)
    viol = np.where(S != 0.0, np.abs(g - lam * np.sign(S)), np.maximum(np.abs(g) - lam, 0.0))
    return viol.max(axis=0) if viol.shape[0] else np.zeros(S.shape[1])


def lasso_batch(D, Y, lam, tol, max_sweeps):
    """Cyclic coordinate descent on ||y - D s||^2 + lam ||s||_1, per column.

    After a sweep that leaves a column's sign pattern unchanged, the column
    is polished by solving the least-squares system on that sign face; the
    polished point is kept only if it stays on the face.

    Returns ``(codes, sweeps, kkt)``; a column is finished once its KKT
    violation is <= tol.
    """
    D = np.asarray(D, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    k = D.shape[1]
    n = Y.shape[1]
    G = D.T @ D
    n2 = np.einsum("ij,ij->j", D, D)
    half = 0.5 * lam
    S = np.zeros((k, n))
    kkt = kkt_violation(D, S, Y, lam)
    sweeps = np.zeros(n, dtype=np.int64)
    active = np.flatnonzero(kkt > tol)
    prev_sign = np.zeros((k, n))
    for sweep in range(1, max_sweeps + 1):
        if active.size == 0:
            break
        Sa = S[:, active]
        Ra = Y[:, active] - D @ Sa
        for j in range(k):
            if n2[j] == 0.0:
                continue
            dj = D[:, j]
            rho = dj @ Ra + n2[j] * Sa[j]
            new = np.sign(rho) * np.maximum(np.abs(rho) - half, 0.0) / n2[j]
            delta = new - Sa[j]
            if np.any(delta != 0.0):
                Ra -= np.outer(dj, delta)
                Sa[j] = new
        sign = np.sign(Sa)
        stable = np.flatnonzero(np.all(sign == prev_sign[:, active], axis=0) & np.any(sign != 0, axis=0))
        prev_sign[:, active] = sign
        for c in stable:
            col = Sa[:, c].copy()
            polish_face(D, G, Y[:, active[c]], col, half)
            Sa[:, c] = col
        S[:, active] = Sa
        viol = kkt_violation(D, Sa, Y[:, active] - D @ Sa, lam)
        kkt[active] = viol
        sweeps[active] = sweep
        active = active[viol > tol]
    return S, sweeps, kkt


def bcd_sweep(D, E, F, min_diag):
    """One block-coordinate pass over the atoms in ascending order.

    Returns ``(D_new, degenerate)``; ``degenerate[j]`` marks atoms left
    unchanged although their update direction was nonzero.
    """
    D = np.array(D, dtype=np.float64, order="F")
    k = D.shape[1]
    degenerate = np.zeros(k, dtype=bool)
    for j in range(k):
        direction = E[:, j] - D @ F[:, j]
        fjj = F[j, j]
        if fjj <= min_diag:
            degenerate[j] = bool(np.any(direction != 0.0))
            continue
        u = D[:, j] + direction / fjj
        nu = np.sqrt(u @ u)
        if nu <= ZERO_ATOM_TOL:
            degenerate[j] = True
            continue
        D[:, j] = u / max(nu, 1.0)
    return D, degenerate
