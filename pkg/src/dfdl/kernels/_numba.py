"""Numba-compiled kernels; loop-for-loop twins of ``_numpy``."""

import numpy as np
from numba import njit

from . import _face
from ._numpy import DEPENDENCE_TOL, ZERO_ATOM_TOL

_polish_face = njit(cache=True)(_face.polish_face)


@njit(cache=True)
def _omp_core(D, G, DtY, Y, L, tol, codes, history):
    d, k = D.shape
    n = Y.shape[1]
    chol = np.zeros((L, L))
    support = np.zeros(L, dtype=np.int64)
    x = np.zeros(L)
    z = np.zeros(L)
    alpha = np.zeros(k)
    selected = np.zeros(k, dtype=np.bool_)
    resid = np.zeros(d)
    for col in range(n):
        rn = 0.0
        for i in range(d):
            rn += Y[i, col] * Y[i, col]
        rn = np.sqrt(rn)
        history[0, col] = rn
        for i in range(k):
            alpha[i] = DtY[i, col]
            selected[i] = False
        count = 0
        for t in range(L):
            if rn < tol:
                break
            p = -1
            best = -1.0
            for i in range(k):
                if not selected[i]:
                    a = abs(alpha[i])
                    if a > best:
                        best = a
                        p = i
            if p < 0 or not best > 0.0:
                break
            gpp = G[p, p]
            # forward-solve chol[:t,:t] w = G[support, p] into row t
            pivot2 = gpp
            for r in range(t):
                acc = G[support[r], p]
                for c in range(r):
                    acc -= chol[r, c] * chol[t, c]
                w = acc / chol[r, r]
                chol[t, r] = w
                pivot2 -= w * w
            if not pivot2 > DEPENDENCE_TOL * gpp:
                break
            chol[t, t] = np.sqrt(pivot2)
            support[t] = p
            selected[p] = True
            count = t + 1
            for r in range(count):
                acc = DtY[support[r], col]
                for c in range(r):
                    acc -= chol[r, c] * z[c]
                z[r] = acc / chol[r, r]
            for r in range(count - 1, -1, -1):
                acc = z[r]
                for c in range(r + 1, count):
                    acc -= chol[c, r] * x[c]
                x[r] = acc / chol[r, r]
            for i in range(k):
                acc = DtY[i, col]
                for r in range(count):
                    acc -= G[i, support[r]] * x[r]
                alpha[i] = acc
            rn = 0.0
            for i in range(d):
                acc = Y[i, col]
                for r in range(count):
                    acc -= D[i, support[r]] * x[r]
                resid[i] = acc
                rn += acc * acc
            rn = np.sqrt(rn)
            history[t + 1, col] = rn
        for t in range(count, L):
            history[t + 1, col] = rn
        for r in range(count):
            codes[support[r], col] = x[r]


def omp_batch(D, Y, L, tol):
    D = np.ascontiguousarray(D, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    k = D.shape[1]
    n = Y.shape[1]
    G = D.T @ D
    DtY = D.T @ Y
    codes = np.zeros((k, n))
    history = np.empty((L + 1, n))
    _omp_core(D, G, DtY, Y, int(L), float(tol), codes, history)
    return codes, history


@njit(cache=True)
def _column_kkt(D, s, r, lam):
    d, k = D.shape
    worst = 0.0
    for j in range(k):
        g = 0.0
        for i in range(d):
            g += D[i, j] * r[i]
        g *= 2.0
        if s[j] > 0.0:
            v = abs(g - lam)
        elif s[j] < 0.0:
            v = abs(g + lam)
        else:
            v = abs(g) - lam
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def _lasso_core(D, G, Y, lam, tol, max_sweeps, codes, sweeps, kkt):
    d, k = D.shape
    n = Y.shape[1]
    half = 0.5 * lam
    n2 = np.zeros(k)
    for j in range(k):
        acc = 0.0
        for i in range(d):
            acc += D[i, j] * D[i, j]
        n2[j] = acc
    s = np.zeros(k)
    r = np.zeros(d)
    prev = np.zeros(k)
    for col in range(n):
        for j in range(k):
            prev[j] = 0.0
        for j in range(k):
            s[j] = 0.0
        for i in range(d):
            r[i] = Y[i, col]
        viol = _column_kkt(D, s, r, lam)
        done = 0
        for sweep in range(1, max_sweeps + 1):
            if viol <= tol:
                break
            for j in range(k):
                if n2[j] == 0.0:
                    continue
                rho = n2[j] * s[j]
                for i in range(d):
                    rho += D[i, j] * r[i]
                if rho > half:
                    new = (rho - half) / n2[j]
                elif rho < -half:
                    new = (rho + half) / n2[j]
                else:
                    new = 0.0
                delta = new - s[j]
                if delta != 0.0:
                    for i in range(d):
                        r[i] -= D[i, j] * delta
                    s[j] = new
            stable = True
            any_nz = False
            for j in range(k):
                sg = np.sign(s[j])
                if sg != prev[j]:
                    stable = False
                if sg != 0.0:
                    any_nz = True
                prev[j] = sg
            if stable and any_nz:
                _polish_face(D, G, Y[:, col], s, half)
            # fresh residual so the stopping test does not see accumulated drift
            for i in range(d):
                acc = Y[i, col]
                for j in range(k):
                    if s[j] != 0.0:
                        acc -= D[i, j] * s[j]
                r[i] = acc
            viol = _column_kkt(D, s, r, lam)
            done = sweep
        for j in range(k):
            codes[j, col] = s[j]
        sweeps[col] = done
        kkt[col] = viol


def lasso_batch(D, Y, lam, tol, max_sweeps):
    D = np.ascontiguousarray(D, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    k = D.shape[1]
    n = Y.shape[1]
    codes = np.zeros((k, n))
    sweeps = np.zeros(n, dtype=np.int64)
    kkt = np.zeros(n)
    _lasso_core(D, np.ascontiguousarray(D.T @ D), Y, float(lam), float(tol), int(max_sweeps), codes, sweeps, kkt)
    return codes, sweeps, kkt


@njit(cache=True)
def _bcd_core(D, E, F, min_diag, degenerate):
    d, k = D.shape
    u = np.zeros(d)
    for j in range(k):
        fjj = F[j, j]
        nonzero = False
        for i in range(d):
            acc = E[i, j]
            for c in range(k):
                acc -= D[i, c] * F[c, j]
            u[i] = acc
            if acc != 0.0:
                nonzero = True
        if fjj <= min_diag:
            degenerate[j] = nonzero
            continue
        nu = 0.0
        for i in range(d):
            u[i] = D[i, j] + u[i] / fjj
            nu += u[i] * u[i]
        nu = np.sqrt(nu)
        if nu <= ZERO_ATOM_TOL:
            degenerate[j] = True
            continue
        scale = 1.0 / max(nu, 1.0)
        for i in range(d):
            D[i, j] = u[i] * scale


def bcd_sweep(D, E, F, min_diag):
    D = np.array(D, dtype=np.float64, order="C")
    E = np.ascontiguousarray(E, dtype=np.float64)
    F = np.ascontiguousarray(F, dtype=np.float64)
    degenerate = np.zeros(D.shape[1], dtype=np.bool_)
    _bcd_core(D, E, F, float(min_diag), degenerate)
    return D, degenerate
