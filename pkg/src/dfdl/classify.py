"""Sparse-representation classification of patches and image-level decisions."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError
from .sparse import l1_encode_batch
from .types import Dictionary, as_matrix

log = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.1
DEFAULT_THRESHOLD = 0.5
DEFAULT_MIN_REGION = 4
DEFAULT_CONNECTIVITY = 8
MODES = ("proportion_vote", "region_detect")


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    """Per-class dictionaries, the l1 weight and the class labels."""

    dictionaries: tuple
    lam: float = DEFAULT_LAMBDA
    class_labels: tuple = ()

    def __post_init__(self):
        dicts = tuple(d if isinstance(d, Dictionary) else Dictionary(d) for d in self.dictionaries)
        if len(dicts) < 2:
            raise InvalidInputError(f"a classifier needs at least two classes, got {len(dicts)}")
        if len({d.d for d in dicts}) != 1:
            raise InvalidInputError("all dictionaries must share the sample dimension")
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise InvalidInputError(f"lambda must be positive, got {self.lam!r}")
        labels = tuple(self.class_labels) or tuple(str(i + 1) for i in range(len(dicts)))
        if len(labels) != len(dicts) or len(set(labels)) != len(labels):
            raise InvalidInputError("need one distinct label per dictionary")
        object.__setattr__(self, "dictionaries", dicts)
        object.__setattr__(self, "class_labels", labels)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def d(self) -> int:
        return self.dictionaries[0].d

    @property
    def n_classes(self) -> int:
        return len(self.dictionaries)

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum([D.k for D in self.dictionaries])])

    def total(self) -> np.ndarray:
        return np.hstack([D.atoms for D in self.dictionaries])


@dataclass(frozen=True, eq=False)
class PatchDecision:
    code: np.ndarray
    residuals: np.ndarray
    predicted_class: int


def class_residuals(Y, model: ClassifierModel, codes):
    """``c x n`` matrix of ||y - D_i s_i|| using each class's block of the codes."""
    off = model.offsets
    out = np.empty((model.n_classes, Y.shape[1]))
    for i, D in enumerate(model.dictionaries):
        R = Y - D.atoms @ codes[off[i] : off[i + 1]]
        out[i] = np.sqrt(np.einsum("ij,ij->j", R, R))
    return out


def classify_patches(samples, model: ClassifierModel):
    """Classify every column; returns ``(predicted, residuals, codes)``.

    Ties on the minimal residual go to the lowest class index.
    """
    Y = as_matrix(samples, "samples")
    if Y.shape[0] != model.d:
        raise InvalidInputError(f"patch dimension {Y.shape[0]} does not match model dimension {model.d}")
    codes = l1_encode_batch(Y, model.total(), model.lam)
    res = class_residuals(Y, model, codes)
    return np.argmin(res, axis=0), res, codes


def classify_patch(y, model: ClassifierModel) -> PatchDecision:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise InvalidInputError(f"y must be a vector, got shape {y.shape}")
    pred, res, codes = classify_patches(y[:, None], model)
    return PatchDecision(codes[:, 0], res[:, 0], int(pred[0]))


@dataclass(frozen=True)
class ImageDecisionRule:
    mode: str = "proportion_vote"
    threshold: float = DEFAULT_THRESHOLD
    min_region_patches: int = DEFAULT_MIN_REGION
    connectivity: int = DEFAULT_CONNECTIVITY

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise InvalidInputError(f"threshold must lie in [0, 1], got {self.threshold!r}")
        if self.min_region_patches < 1:
            raise InvalidInputError("min_region_patches must be >= 1")
        if self.connectivity not in (4, 8):
            raise InvalidInputError(f"connectivity must be 4 or 8, got {self.connectivity!r}")


@dataclass(frozen=True, eq=False)
class PatchGridLabels:
    """Predicted class per non-overlapping patch, laid out rows x cols."""

    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise InvalidInputError("grid labels must be a 2-D array")
        if lab.size and (not np.issubdtype(lab.dtype, np.integer) or lab.min() < 0):
            raise InvalidInputError("grid cells must hold non-negative class indices")
        object.__setattr__(self, "labels", lab.astype(np.int64))

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    @property
    def cols(self) -> int:
        return self.labels.shape[1]

    @classmethod
    def from_predictions(cls, predicted, rows, cols):
        predicted = np.asarray(predicted)
        if predicted.size != rows * cols:
            raise InvalidInputError(f"{predicted.size} predictions do not fill a {rows}x{cols} grid")
        return cls(predicted.reshape(rows, cols))


def _other(positive_class, n_classes):
    if n_classes != 2 or positive_class not in (0, 1):
        raise InvalidInputError("image-level decisions are binary: positive class must be 0 or 1 of two")
    return 1 - positive_class


def positive_proportion(grid: PatchGridLabels, positive_class: int) -> float:
    if grid.labels.size == 0:
        raise InvalidInputError("empty patch grid")
    return float(np.count_nonzero(grid.labels == positive_class) / grid.labels.size)


def classify_image_by_vote(grid: PatchGridLabels, rule: ImageDecisionRule, positive_class: int, n_classes=2) -> int:
    """Positive iff the share of positive cells is strictly above the threshold."""
    if rule.mode != "proportion_vote":
        raise InvalidInputError(f"rule mode is {rule.mode!r}, expected proportion_vote")
    other = _other(positive_class, n_classes)
    return positive_class if positive_proportion(grid, positive_class) > rule.threshold else other


def label_components(mask, connectivity=8):
    """Connected-component labels of a boolean grid; returns ``(labels, sizes)``.

    ``labels`` is 0 on background and 1..n on components; ``sizes[i]`` is the
    cell count of component i + 1.
    """
    mask = np.asarray(mask, dtype=bool)
    structure = ndimage.generate_binary_structure(2, 2 if connectivity == 8 else 1)
    labels, n = ndimage.label(mask, structure=structure)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)[1:]
    return labels, sizes


class RegionDetection(NamedTuple):
    label: int
    mask: np.ndarray


def detect_regions(grid: PatchGridLabels, rule: ImageDecisionRule, target_class: int, n_classes=2) -> RegionDetection:
    """Positive iff some connected region of target-class cells has at least
    ``rule.min_region_patches`` cells; the mask covers every such region."""
    if rule.mode != "region_detect":
        raise InvalidInputError(f"rule mode is {rule.mode!r}, expected region_detect")
    if grid.labels.size == 0:
        raise InvalidInputError("empty patch grid")
    other = _other(target_class, n_classes)
    labels, sizes = label_components(grid.labels == target_class, rule.connectivity)
    keep = np.flatnonzero(sizes >= rule.min_region_patches) + 1
    mask = np.isin(labels, keep)
    return RegionDetection(target_class if keep.size else other, mask)
