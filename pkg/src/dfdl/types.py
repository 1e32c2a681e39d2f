"""Core value types: dictionaries, sparse codes and per-class sample sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

#: Atom norms may exceed one by this much after the unit-ball projection.
NORM_SLACK = 1e-9


def as_matrix(x, name="array") -> np.ndarray:
    """Return `x` as a 2-D float64 array, raising on bad shape or non-finite data."""
    if isinstance(x, Dictionary):
        x = x.atoms
    elif isinstance(x, SparseCodes):
        x = x.coefficients
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class Dictionary:
    """A d x k matrix whose columns (atoms) have norm in (0, 1]."""

    atoms: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.float64, order="F")
        if atoms.ndim != 2 or atoms.shape[0] < 1 or atoms.shape[1] < 1:
            raise InvalidInputError(f"dictionary must be a non-empty d x k matrix, got {atoms.shape}")
        if not np.all(np.isfinite(atoms)):
            raise InvalidInputError("dictionary contains non-finite entries")
        norms = np.linalg.norm(atoms, axis=0)
        if np.any(norms <= 0.0):
            raise InvalidInputError(f"dictionary has zero atoms at {np.flatnonzero(norms <= 0).tolist()}")
        if np.any(norms > 1.0 + NORM_SLACK):
            raise InvalidInputError(f"atom norms must be <= 1, max is {norms.max()!r}")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)

    @property
    def d(self) -> int:
        return self.atoms.shape[0]

    @property
    def k(self) -> int:
        return self.atoms.shape[1]

    @classmethod
    def from_columns(cls, columns) -> "Dictionary":
        """Build a dictionary by scaling every column to unit norm."""
        arr = as_matrix(columns, "columns")
        norms = np.linalg.norm(arr, axis=0)
        if np.any(norms == 0.0):
            raise InvalidInputError("cannot normalize zero columns")
        return cls(arr / norms)


@dataclass(frozen=True, eq=False)
class SparseCodes:
    """A k x n coefficient matrix with at most `sparsity_level` nonzeros per column."""

    coefficients: np.ndarray
    sparsity_level: int

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        if coef.ndim != 2:
            raise InvalidInputError("coefficients must be a k x n matrix")
        L = int(self.sparsity_level)
        if L < 1 or L > coef.shape[0]:
            raise InvalidInputError(f"sparsity level {L} outside [1, {coef.shape[0]}]")
        if not np.all(np.isfinite(coef)):
            raise InvalidInputError("coefficients contain non-finite entries")
        if coef.shape[1] and np.count_nonzero(coef, axis=0).max() > L:
            raise InvalidInputError(f"a column has more than {L} nonzeros")
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "sparsity_level", L)

    @property
    def k(self) -> int:
        return self.coefficients.shape[0]

    @property
    def n(self) -> int:
        return self.coefficients.shape[1]


@dataclass(frozen=True, eq=False)
class SampleSet:
    """In-class samples Y (d x N) and complementary samples Ybar (d x Nbar)."""

    in_class: np.ndarray
    complementary: np.ndarray

    def __post_init__(self):
        Y = as_matrix(self.in_class, "in_class")
        Ybar = as_matrix(self.complementary, "complementary")
        if Y.shape[0] != Ybar.shape[0]:
            raise InvalidInputError(f"row count mismatch: {Y.shape[0]} vs {Ybar.shape[0]}")
        if Y.shape[1] < 1 or Ybar.shape[1] < 1:
            raise InvalidInputError("both sample matrices need at least one column")
        object.__setattr__(self, "in_class", Y)
        object.__setattr__(self, "complementary", Ybar)

    @property
    def d(self) -> int:
        return self.in_class.shape[0]

    @property
    def n_in(self) -> int:
        return self.in_class.shape[1]

    @property
    def n_comp(self) -> int:
        return self.complementary.shape[1]
