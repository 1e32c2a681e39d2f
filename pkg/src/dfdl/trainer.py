"""Discriminative feature-oriented dictionary learning for a single class.

The learned dictionary D should represent in-class samples Y well and
complementary samples Ybar poorly. Training alternates OMP coding of
``[Y, Ybar]`` with a block-coordinate dictionary update on the quadratic
``-2 tr(E D^T) + tr(D F D^T)``. The update is only convex when F is PSD, so
the complementary weight rho is shrunk geometrically until it is.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidInputError, NumericalError, TrainingError
from .linalg import extreme_eigenvalues
from .sparse import omp_encode_batch
from .types import Dictionary, SampleSet, as_matrix

log = logging.getLogger(__name__)

PSD_TOL = 1e-9
SYMMETRY_TOL = 1e-9
MIN_DIAG = 1e-10
RHO_FLOOR = 1e-12
SURROGATE_TOL = 1e-9


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters of one class's training run.

    ``k`` atoms, sparsity ``L``, complementary weight ``rho`` shrunk by
    ``rho_shrink`` whenever F fails the PSD check.
    """

    k: int = 500
    L: int = 10
    rho: float = 0.001
    max_outer_iters: int = 30
    objective_tol: float = 1e-4
    rho_shrink: float = 0.9
    seed: int = 0
    sweeps: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError(f"k must be >= 1, got {self.k}")
        if not 1 <= self.L <= self.k:
            raise InvalidInputError(f"L must lie in [1, k={self.k}], got {self.L}")
        if not self.rho > 0:
            raise InvalidInputError(f"rho must be positive, got {self.rho}")
        if not 0 < self.rho_shrink < 1:
            raise InvalidInputError(f"rho_shrink must lie in (0, 1), got {self.rho_shrink}")
        if not self.objective_tol > 0:
            raise InvalidInputError(f"objective_tol must be positive, got {self.objective_tol}")
        if self.max_outer_iters < 1 or self.sweeps < 1:
            raise InvalidInputError("max_outer_iters and sweeps must be >= 1")
        if self.seed < 0:
            raise InvalidInputError("seed must be non-negative")


@dataclass(frozen=True, eq=False)
class GramPair:
    E: np.ndarray
    F: np.ndarray


@dataclass(frozen=True)
class PSDReport:
    weyl_lower_bound: float
    min_eigenvalue: float
    is_psd: bool


@dataclass(frozen=True)
class UpdateResult:
    dictionary: np.ndarray
    degenerate: np.ndarray
    surrogate_before: float
    surrogate_after: float


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    rho: float
    psd: PSDReport
    shrink_events: int
    surrogate_before: float
    surrogate_after: float
    degenerate_atoms: int
    wall_time: float


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)
    converged: bool = False

    @property
    def rhos(self):
        return [r.rho for r in self.records]

    @property
    def objectives(self):
        return [r.objective for r in self.records]

    def to_lines(self, *, label=None, times=False):
        """Render one ``key=value`` line per iteration."""
        lines = []
        for r in self.records:
            fields = {} if label is None else {"class": label}
            fields.update(
                iter=r.iteration,
                objective=repr(r.objective),
                rho=repr(r.rho),
                weyl=repr(r.psd.weyl_lower_bound),
                min_eig=repr(r.psd.min_eigenvalue),
                is_psd=int(r.psd.is_psd),
                shrinks=r.shrink_events,
                surrogate_before=repr(r.surrogate_before),
                surrogate_after=repr(r.surrogate_after),
                degenerate=r.degenerate_atoms,
            )
            if times:
                fields["wall_time"] = f"{r.wall_time:.6f}"
            lines.append(" ".join(f"{k}={v}" for k, v in fields.items()))
        return lines


def _codes(S):
    return as_matrix(S, "codes")


def _check_shapes(D, Y, Ybar, S, Sbar):
    d, k = D.shape
    if Y.shape[0] != d or Ybar.shape[0] != d:
        raise InvalidInputError(f"sample dimension must be {d}")
    if S.shape != (k, Y.shape[1]) or Sbar.shape != (k, Ybar.shape[1]):
        raise InvalidInputError(
            f"code shapes {S.shape}, {Sbar.shape} do not match k={k}, N={Y.shape[1]}, Nbar={Ybar.shape[1]}"
        )


def objective(dictionary, samples: SampleSet, S, Sbar, rho):
    """``(1/N)||Y - D S||_F^2 - (rho/Nbar)||Ybar - D Sbar||_F^2``."""
    D = as_matrix(dictionary, "dictionary")
    S, Sbar = _codes(S), _codes(Sbar)
    Y, Ybar = samples.in_class, samples.complementary
    _check_shapes(D, Y, Ybar, S, Sbar)
    R = Y - D @ S
    Rbar = Ybar - D @ Sbar
    return float(np.sum(R * R) / Y.shape[1] - rho * np.sum(Rbar * Rbar) / Ybar.shape[1])


def compute_gram_pair(samples: SampleSet, S, Sbar, rho) -> GramPair:
    S, Sbar = _codes(S), _codes(Sbar)
    Y, Ybar = samples.in_class, samples.complementary
    if S.shape[1] != Y.shape[1] or Sbar.shape[1] != Ybar.shape[1] or S.shape[0] != Sbar.shape[0]:
        raise InvalidInputError("code shapes do not match the sample set")
    parts = _gram_parts(Y, Ybar, S, Sbar)
    return _combine(parts, rho)


def _gram_parts(Y, Ybar, S, Sbar):
    N, Nbar = Y.shape[1], Ybar.shape[1]
    return (Y @ S.T / N, Ybar @ Sbar.T / Nbar, S @ S.T / N, Sbar @ Sbar.T / Nbar)


def _combine(parts, rho):
    Ein, Ecomp, Fin, Fcomp = parts
    F = Fin - rho * Fcomp
    return GramPair(Ein - rho * Ecomp, 0.5 * (F + F.T))


def weyl_lower_bound(S, Sbar, rho, N, Nbar):
    """Lower bound on the smallest eigenvalue of F from the two Gram terms."""
    S, Sbar = _codes(S), _codes(Sbar)
    lmin_in, _ = extreme_eigenvalues(S @ S.T)
    _, lmax_comp = extreme_eigenvalues(Sbar @ Sbar.T)
    return lmin_in / N - rho * lmax_comp / Nbar


def check_psd(F) -> PSDReport:
    """Smallest eigenvalue of F and whether it clears ``-PSD_TOL``.

    The returned report carries ``weyl_lower_bound = nan``; training fills it.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise InvalidInputError(f"F must be square, got {F.shape}")
    asym = float(np.abs(F - F.T).max()) if F.size else 0.0
    if asym > SYMMETRY_TOL:
        raise InvalidInputError(f"F is not symmetric (max asymmetry {asym:.3e})")
    lmin, _ = extreme_eigenvalues(0.5 * (F + F.T))
    return PSDReport(float("nan"), lmin, lmin >= -PSD_TOL)


def surrogate(D, E, F):
    """``-2 tr(E D^T) + tr(D F D^T)``."""
    return float(-2.0 * np.sum(E * D) + np.sum(D * (D @ F)))


def update_dictionary(dictionary, gram: GramPair, *, sweeps=1) -> UpdateResult:
    """Block-coordinate descent on the surrogate, one atom at a time.

    Atom j moves to ``d_j + (e_j - D f_j) / F_jj`` and is then projected onto
    the unit ball. Atoms with ``F_jj <= MIN_DIAG`` are left unchanged and
    flagged when their update direction is nonzero. Raises NumericalError if
    the surrogate increases by more than ``SURROGATE_TOL``.
    """
    D = as_matrix(dictionary, "dictionary")
    E = as_matrix(gram.E, "E")
    F = as_matrix(gram.F, "F")
    d, k = D.shape
    if E.shape != (d, k) or F.shape != (k, k):
        raise InvalidInputError(f"GramPair shapes {E.shape}, {F.shape} do not match dictionary {D.shape}")
    before = surrogate(D, E, F)
    degenerate = np.zeros(k, dtype=bool)
    out = D
    for _ in range(sweeps):
        out, flags = kernels.bcd_sweep(out, E, F, MIN_DIAG)
        degenerate |= flags
    out = np.asfortranarray(out)
    after = surrogate(out, E, F)
    if after > before + SURROGATE_TOL * max(1.0, abs(before)):
        raise NumericalError(f"dictionary update increased the surrogate: {before!r} -> {after!r}")
    if degenerate.any():
        log.info("dictionary update left %d degenerate atom(s) unchanged", int(degenerate.sum()))
    return UpdateResult(out, degenerate, before, after)


def init_dictionary(Y, k, seed):
    """Pick `k` distinct nonzero columns of Y at random and scale them to unit norm."""
    norms = np.linalg.norm(Y, axis=0)
    candidates = np.flatnonzero(norms > 0.0)
    if candidates.size < k:
        raise InvalidInputError(f"need at least k={k} nonzero in-class samples, have {candidates.size}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(candidates, size=k, replace=False))
    return np.asfortranarray(Y[:, idx] / norms[idx])


@dataclass(frozen=True, eq=False)
class IterationState:
    """What `train_dfdl` hands to its callback after each dictionary update."""

    iteration: int
    D_before: np.ndarray
    D_after: np.ndarray
    S: np.ndarray
    Sbar: np.ndarray
    gram: GramPair
    rho: float


def train_dfdl(samples: SampleSet, config: TrainConfig = TrainConfig(), *, callback=None):
    """Learn one class dictionary; returns ``(Dictionary, TrainTrace)``.

    `callback`, if given, is called with an `IterationState` after every
    dictionary update.
    """
    Y, Ybar = samples.in_class, samples.complementary
    N, Nbar = Y.shape[1], Ybar.shape[1]
    if N < config.k:
        raise InvalidInputError(f"N={N} in-class samples cannot seed k={config.k} atoms")
    if config.L > Y.shape[0]:
        raise InvalidInputError(f"L={config.L} exceeds sample dimension {Y.shape[0]}")
    D = init_dictionary(Y, config.k, config.seed)
    Yall = np.hstack([Y, Ybar])
    rho = float(config.rho)
    trace = TrainTrace()
    prev_obj = None
    for it in range(config.max_outer_iters):
        t0 = time.perf_counter()
        codes = omp_encode_batch(Yall, D, config.L).coefficients
        S, Sbar = codes[:, :N], codes[:, N:]
        parts = _gram_parts(Y, Ybar, S, Sbar)
        lmin_in, _ = extreme_eigenvalues(parts[2])
        _, lmax_comp = extreme_eigenvalues(parts[3])
        shrinks = 0
        while True:
            gram = _combine(parts, rho)
            report = check_psd(gram.F)
            if report.is_psd:
                break
            rho *= config.rho_shrink
            shrinks += 1
            if rho < RHO_FLOOR:
                raise TrainingError(
                    f"rho fell below {RHO_FLOOR} at iteration {it} without F becoming PSD "
                    f"(min eigenvalue {report.min_eigenvalue:.3e})"
                )
        if shrinks:
            log.info("iteration %d: rho shrunk %d time(s) to %.6g", it, shrinks, rho)
        report = PSDReport(lmin_in - rho * lmax_comp, report.min_eigenvalue, report.is_psd)
        obj = objective(D, samples, S, Sbar, rho)
        upd = update_dictionary(D, gram, sweeps=config.sweeps)
        if callback is not None:
            callback(IterationState(it, D, upd.dictionary, S, Sbar, gram, rho))
        D = upd.dictionary
        trace.records.append(
            IterationRecord(
                iteration=it,
                objective=obj,
                rho=rho,
                psd=report,
                shrink_events=shrinks,
                surrogate_before=upd.surrogate_before,
                surrogate_after=upd.surrogate_after,
                degenerate_atoms=int(upd.degenerate.sum()),
                wall_time=time.perf_counter() - t0,
            )
        )
        log.debug("iteration %d: %s", it, asdict(trace.records[-1]))
        if prev_obj is not None and abs(obj - prev_obj) <= config.objective_tol * max(abs(prev_obj), 1e-12):
            trace.converged = True
            break
        prev_obj = obj
    return Dictionary(D), trace
