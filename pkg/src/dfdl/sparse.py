"""Sparse coding: batch OMP for training, l1 coordinate descent for classification."""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ConvergenceError, InvalidInputError
from .types import SparseCodes, as_matrix

#: OMP stops adding atoms once the residual norm drops below this.
OMP_RESIDUAL_TOL = 1e-10
#: Default KKT stopping tolerance for the lasso solver.
LASSO_TOL = 1e-7
LASSO_MAX_SWEEPS = 10000


def _check_dictionary(D):
    D = as_matrix(D, "dictionary")
    if np.any(np.einsum("ij,ij->j", D, D) == 0.0):
        raise InvalidInputError("dictionary has zero columns")
    return D


def omp_encode_batch(samples, dictionary, L, *, return_history=False):
    """Encode every column of `samples` with at most `L` atoms by greedy OMP.

    At each step the atom with the largest absolute correlation with the
    current residual joins the support (lowest index on ties) and the
    coefficients on the support are refit by least squares through an
    incrementally updated Cholesky factor. A column stops early when its
    residual norm falls below ``OMP_RESIDUAL_TOL``.

    Parameters
    ----------
    samples : array_like, shape (d, n)
    dictionary : Dictionary or array_like, shape (d, k)
    L : int
        Sparsity level, ``1 <= L <= min(k, d)``.
    return_history : bool
        Also return the (L + 1) x n matrix of residual norms after each step.

    Returns
    -------
    SparseCodes, or (SparseCodes, ndarray) when `return_history` is set.
    """
    Y = as_matrix(samples, "samples")
    D = _check_dictionary(dictionary)
    d, k = D.shape
    L = int(L)
    if Y.shape[0] != d:
        raise InvalidInputError(f"samples have {Y.shape[0]} rows, dictionary has {d}")
    if L < 1 or L > k or L > d:
        raise InvalidInputError(f"sparsity level {L} must lie in [1, min(k={k}, d={d})]")
    codes, history = kernels.omp_batch(D, Y, L, OMP_RESIDUAL_TOL)
    out = SparseCodes(codes, L)
    return (out, history) if return_history else out


def lasso_objective(y, D, s, lam):
    r = y - D @ s
    return float(r @ r + lam * np.abs(s).sum())


def duality_gap(y, D, s, lam):
    """Gap between the lasso objective at `s` and a feasible dual point."""
    r = y - D @ s
    corr = np.abs(D.T @ r).max() if D.shape[1] else 0.0
    scale = 1.0 if corr == 0.0 else min(1.0, 0.5 * lam / corr)
    theta = scale * r
    dual = y @ y - (y - theta) @ (y - theta)
    primal = r @ r + lam * np.abs(s).sum()
    return float(primal - dual)


def l1_encode_batch(samples, dictionary, lam, *, tol=LASSO_TOL, max_sweeps=LASSO_MAX_SWEEPS):
    """Solve ``argmin_s ||y - D s||^2 + lam ||s||_1`` for every column y.

    Returns the k x n code matrix. Raises ConvergenceError if any column
    fails to reach a KKT violation <= `tol` within `max_sweeps` sweeps.
    """
    Y = as_matrix(samples, "samples")
    D = _check_dictionary(dictionary)
    if Y.shape[0] != D.shape[0]:
        raise InvalidInputError(f"samples have {Y.shape[0]} rows, dictionary has {D.shape[0]}")
    if not lam > 0:
        raise InvalidInputError(f"lambda must be positive, got {lam!r}")
    codes, sweeps, kkt = kernels.lasso_batch(D, Y, float(lam), float(tol), int(max_sweeps))
    bad = np.flatnonzero(kkt > tol)
    if bad.size:
        j = int(bad[0])
        gap = duality_gap(Y[:, j], D, codes[:, j], lam)
        raise ConvergenceError(
            f"lasso did not converge for {bad.size} column(s) after {max_sweeps} sweeps "
            f"(column {j}: KKT {kkt[j]:.3e}, duality gap {gap:.3e})",
            duality_gap=gap,
            iterations=int(sweeps[j]),
        )
    return codes


def l1_encode(y, dictionary, lam, **kwargs):
    """Lasso code of a single vector `y`; see `l1_encode_batch`."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise InvalidInputError(f"y must be a vector, got shape {y.shape}")
    return l1_encode_batch(y[:, None], dictionary, lam, **kwargs)[:, 0]
