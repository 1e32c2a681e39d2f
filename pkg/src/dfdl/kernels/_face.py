"""Sign-face polish for the lasso solver.

Written in the numpy subset numba compiles, so ``_numba`` jits this very
function and ``_numpy`` calls it as plain Python.
"""

import numpy as np

# singular values below this fraction of the largest count as null directions
RANK_TOL = 1e-10
# Cholesky pivots (squared, relative to the Gram diagonal) below this send
# the face to the SVD path
PIVOT_TOL = 1e-10


def polish_face(D, G, y, s, half):
    """Move `s` to the exact lasso minimizer on its current sign face.

    While the active columns are rank deficient, step along null directions
    (no change to D s, no increase of the l1 term), dropping atoms as their
    coefficients reach zero. Once they have full rank, solve the face's
    normal equations; if the solution flips a sign, move toward it up to the
    first zero crossing, drop that atom and repeat. The objective never increases. `s` is modified in
    place; returns True when a face minimizer was reached.
    """
    k = s.shape[0]
    for _ in range(k + 1):
        A = np.flatnonzero(s)
        m = A.shape[0]
        if m == 0:
            return False
        DA = np.ascontiguousarray(D[:, A])
        sigma = np.sign(s[A])
        rhs = np.ascontiguousarray(DA.T) @ np.ascontiguousarray(y) - half * sigma
        # fast path: a well-conditioned Gram matrix is solved directly
        fast = False
        if m <= DA.shape[0]:
            GA = np.ascontiguousarray(G[A][:, A])
            try:
                C = np.linalg.cholesky(GA)
                fast = True
            except Exception:
                fast = False
            if fast:
                for i in range(m):
                    if C[i, i] * C[i, i] <= PIVOT_TOL * GA[i, i]:
                        fast = False
            if fast:
                # GA = C C^T: forward then back substitution
                z = np.empty(m)
                for i in range(m):
                    acc = rhs[i]
                    if i > 0:
                        acc -= np.dot(C[i, :i], z[:i])
                    z[i] = acc / C[i, i]
                Ct = np.ascontiguousarray(C.T)
                coef = np.empty(m)
                for i in range(m - 1, -1, -1):
                    acc = z[i]
                    if i < m - 1:
                        acc -= np.dot(Ct[i, i + 1 :], coef[i + 1 :])
                    coef[i] = acc / C[i, i]
        if not fast:
            U, sv, Vt = np.linalg.svd(DA, full_matrices=True)
            rank = 0
            for i in range(sv.shape[0]):
                if sv[i] > RANK_TOL * sv[0]:
                    rank += 1
            if rank < m:
                # Z: orthonormal null-space basis of the active columns. Each
                # step follows the null-space projection of -sign(s) (any null
                # vector once that vanishes) to the first zero crossing, so
                # D s is unchanged and the l1 term does not increase; the atom
                # hitting zero is dropped and Z restricted to vectors that
                # vanish there.
                Z = np.ascontiguousarray(Vt[rank:].T)
                while Z.shape[1] > 0:
                    m = A.shape[0]
                    c = np.ascontiguousarray(Z.T) @ sigma
                    if np.dot(c, c) > 1e-24 * m:
                        v = -(Z @ c)
                    else:
                        v = Z[:, 0].copy()
                        if np.dot(sigma, v) > 0.0:
                            v = -v
                    step = np.inf
                    hit = -1
                    for i in range(m):
                        if v[i] * sigma[i] < 0.0:
                            t = -s[A[i]] / v[i]
                            if t < step:
                                step = t
                                hit = i
                    if hit < 0:
                        return False
                    for i in range(m):
                        s[A[i]] += step * v[i]
                    s[A[hit]] = 0.0
                    # Householder reflection mapping Z[hit] onto e_1; the
                    # remaining reflected columns vanish at `hit`
                    u = Z[hit] / np.sqrt(np.dot(Z[hit], Z[hit]))
                    u[0] += 1.0 if u[0] >= 0.0 else -1.0
                    H = np.eye(u.shape[0]) - (2.0 / np.dot(u, u)) * np.outer(u, u)
                    keep = np.ones(m, dtype=np.bool_)
                    keep[hit] = False
                    Z = np.ascontiguousarray((Z @ H)[keep][:, 1:])
                    A = A[keep]
                    sigma = sigma[keep]
                continue
            Vt = np.ascontiguousarray(Vt[:m])
            coef = np.ascontiguousarray(Vt.T) @ ((Vt @ rhs) / (sv * sv))
        step = 1.0
        hit = -1
        for i in range(m):
            if coef[i] * sigma[i] <= 0.0:
                t = s[A[i]] / (s[A[i]] - coef[i])
                if t < step:
                    step = t
                    hit = i
        if hit < 0:
            for i in range(m):
                s[A[i]] = coef[i]
            return True
        # the face minimizer leaves the face: walk toward it until the first
        # coefficient reaches zero, drop that atom, and retry
        for i in range(m):
            s[A[i]] += step * (coef[i] - s[A[i]])
        s[A[hit]] = 0.0
    return False
