"""Extreme eigenvalues of symmetric matrices."""

import numpy as np

from .errors import NumericalError

#: Matrices up to this order use a dense symmetric eigendecomposition.
DENSE_EIG_MAX = 512


def _power_dominant(M, tol, max_iter, seed):
    # dominant eigenvalue of a PSD matrix by power iteration on Rayleigh quotients
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[0])
    v /= np.linalg.norm(v)
    prev = np.inf
    for _ in range(max_iter):
        w = M @ v
        lam = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam - prev) <= tol * max(abs(lam), 1.0):
            return lam
        prev = lam
    raise NumericalError(f"power iteration did not converge in {max_iter} iterations")


def extreme_eigenvalues(M, *, dense_max=DENSE_EIG_MAX, tol=1e-13, max_iter=200_000, seed=0):
    """Return ``(lambda_min, lambda_max)`` of the symmetric matrix `M`.

    Orders above `dense_max` use shifted power iteration: with ``c`` the
    Gershgorin radius, ``M + cI`` and ``cI - M`` are PSD and their dominant
    eigenvalues give the two extremes.
    """
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    if n == 0:
        return 0.0, 0.0
    if n <= dense_max:
        try:
            w = np.linalg.eigvalsh(M)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"symmetric eigensolver failed: {exc}") from exc
        return float(w[0]), float(w[-1])
    c = float(np.abs(M).sum(axis=1).max())
    if c == 0.0:
        return 0.0, 0.0
    eye = np.eye(n)
    lmax = _power_dominant(M + c * eye, tol, max_iter, seed) - c
    lmin = c - _power_dominant(c * eye - M, tol, max_iter, seed + 1)
    return lmin, lmax
