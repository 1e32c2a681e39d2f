"""Images, patches, manifests and the planted-subspace synthetic generator."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidInputError
from .types import SampleSet

#: Luma weights applied to 8-bit R, G, B.
LUMA = np.array([0.299, 0.587, 0.114])
DEFAULT_PATCH = 20
DEFAULT_PATCHES_PER_CLASS = 10000
#: Mean-subtracted patches with smaller norm are treated as constant.
ZERO_PATCH_TOL = 1e-10
SPLITS = ("train", "test")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Luminance image, pixels in [0, 1], stored as a (height, width) array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise InvalidInputError(f"gray image must be a non-empty 2-D array, got {px.shape}")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise InvalidInputError("pixels must be finite and lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def to_luminance(image) -> GrayImage:
    """Convert an 8-bit RGB (h, w, 3) or gray (h, w) array to luminance in [0, 1]."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        raise FormatError(f"expected 8-bit samples, got dtype {arr.dtype}")
    if arr.ndim == 2:
        return GrayImage(arr.astype(np.float64) / 255.0)
    if arr.ndim == 3 and arr.shape[2] == 3:
        y = arr.astype(np.float64) @ LUMA / 255.0
        return GrayImage(np.clip(y, 0.0, 1.0))
    raise FormatError(f"unsupported image shape {arr.shape}")


def downsample(img: GrayImage, factor: int) -> GrayImage:
    """Average non-overlapping `factor` x `factor` blocks (borders truncated)."""
    factor = int(factor)
    if factor < 1:
        raise InvalidInputError(f"factor must be >= 1, got {factor}")
    h, w = img.height // factor, img.width // factor
    if h < 1 or w < 1:
        raise InvalidInputError(f"factor {factor} leaves an empty image from {img.height}x{img.width}")
    px = img.pixels[: h * factor, : w * factor]
    return GrayImage(px.reshape(h, factor, w, factor).mean(axis=(1, 3)))


def normalize_patches(P):
    """Subtract each column's mean and scale it to unit norm; constant columns become 0."""
    P = P - P.mean(axis=0, keepdims=True)
    norms = np.linalg.norm(P, axis=0)
    flat = norms <= ZERO_PATCH_TOL
    P[:, flat] = 0.0
    P[:, ~flat] /= norms[~flat]
    return P


def grid_shape(img: GrayImage, patch: int):
    return img.height // patch, img.width // patch


def extract_patches(img: GrayImage, patch=DEFAULT_PATCH, count=None, mode="random", seed=0):
    """Vectorized, normalized patches of `img` as a ``patch**2 x n`` matrix.

    ``mode="random"`` draws `count` top-left corners uniformly with
    replacement; ``mode="grid"`` tiles the image row-major with
    non-overlapping patches and ignores `count`. Each patch is flattened
    column-major before normalization.
    """
    patch = int(patch)
    if patch < 1 or patch > min(img.height, img.width):
        raise InvalidInputError(f"patch size {patch} does not fit a {img.height}x{img.width} image")
    px = img.pixels
    if mode == "grid":
        rows, cols = grid_shape(img, patch)
        tops = np.repeat(np.arange(rows) * patch, cols)
        lefts = np.tile(np.arange(cols) * patch, rows)
    elif mode == "random":
        if count is None or int(count) < 1:
            raise InvalidInputError("random mode needs a positive count")
        rng = np.random.default_rng(seed)
        tops = rng.integers(0, img.height - patch + 1, size=int(count))
        lefts = rng.integers(0, img.width - patch + 1, size=int(count))
    else:
        raise InvalidInputError(f"unknown patch mode {mode!r}")
    win = np.lib.stride_tricks.sliding_window_view(px, (patch, patch))
    blocks = win[tops, lefts]  # n x patch x patch
    P = np.ascontiguousarray(blocks.transpose(0, 2, 1).reshape(len(tops), patch * patch).T)
    return normalize_patches(P)


def pool_complementary(per_class, i, rng, size=None):
    """Complementary samples for class `i`, drawn evenly from every other class.

    With two classes and no `size`, the other class is returned whole.
    Otherwise `size` columns (default: class i's count) are split evenly
    across the other classes and sampled without replacement.
    """
    others = [j for j in range(len(per_class)) if j != i]
    if not others:
        raise InvalidInputError("need at least two classes")
    if size is None and len(others) == 1:
        return per_class[others[0]]
    size = per_class[i].shape[1] if size is None else int(size)
    share, extra = divmod(size, len(others))
    chunks = []
    for pos, j in enumerate(others):
        want = share + (1 if pos < extra else 0)
        pool = per_class[j]
        take = min(want, pool.shape[1])
        idx = np.sort(rng.choice(pool.shape[1], size=take, replace=False))
        chunks.append(pool[:, idx])
    return np.hstack(chunks)


# --- manifests ---------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise InvalidInputError("manifest paths must be unique")
        for e in self.entries:
            if e.split not in SPLITS:
                raise InvalidInputError(f"unknown split {e.split!r} for {e.path}")
            if not e.label or "\t" in e.label or "\t" in e.path:
                raise InvalidInputError(f"bad manifest entry {e!r}")

    def labels(self):
        """Class labels in order of first appearance."""
        seen = {}
        for e in self.entries:
            seen.setdefault(e.label, None)
        return list(seen)

    def split(self, name):
        return [e for e in self.entries if e.split == name]

    def serialize(self) -> str:
        return "".join(f"{e.path}\t{e.label}\t{e.split}\n" for e in self.entries)

    @classmethod
    def parse(cls, text: str) -> "DatasetManifest":
        entries = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.rstrip("\r").split("\t")
            if len(parts) != 3:
                raise FormatError(f"manifest line {lineno}: expected path<TAB>label<TAB>split")
            entries.append(ManifestEntry(*parts))
        return cls(entries)

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def save(self, path):
        Path(path).write_text(self.serialize(), encoding="utf-8")

    def resolve(self, entry: ManifestEntry, base) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else Path(base) / p


# --- synthetic planted-subspace data -----------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the planted-subspace generator.

    Every class owns an orthonormal basis of `atoms_per_class` vectors in
    R^d; a sample combines `sparsity` random basis vectors with Gaussian
    weights, adds N(0, noise_sd^2) noise per entry and is scaled to unit
    norm. With `orthogonal_classes` all bases come from one orthonormal
    frame, so different classes span orthogonal subspaces.
    """

    d: int = 100
    classes: int = 2
    atoms_per_class: int = 16
    sparsity: int = 3
    noise_sd: float = 0.05
    patches_per_class: int = 2000
    seed: int = 0
    orthogonal_classes: bool = True

    def __post_init__(self):
        for name in ("d", "classes", "atoms_per_class", "sparsity", "patches_per_class"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be >= 1")
        if self.noise_sd < 0:
            raise InvalidInputError("noise_sd must be >= 0")
        if self.seed < 0:
            raise InvalidInputError("seed must be non-negative")
        if self.sparsity > self.atoms_per_class:
            raise InvalidInputError("sparsity cannot exceed atoms_per_class")
        need = self.atoms_per_class * (self.classes if self.orthogonal_classes else 1)
        if self.d < need:
            raise InvalidInputError(f"d={self.d} is too small for {need} planted atoms")


@dataclass(frozen=True, eq=False)
class SyntheticData:
    samples: list  # SampleSet per class
    bases: list  # planted d x atoms_per_class basis per class
    class_samples: list  # raw d x patches_per_class matrix per class


def planted_bases(spec: SyntheticSpec, rng):
    m = spec.atoms_per_class
    if spec.orthogonal_classes:
        Q, _ = np.linalg.qr(rng.standard_normal((spec.d, m * spec.classes)))
        return [Q[:, c * m : (c + 1) * m].copy() for c in range(spec.classes)]
    return [np.linalg.qr(rng.standard_normal((spec.d, m)))[0] for _ in range(spec.classes)]


def draw_planted(basis, n, sparsity, noise_sd, rng):
    """`n` unit-norm samples, each a `sparsity`-term combination of basis columns plus noise."""
    d, m = basis.shape
    coef = np.zeros((m, n))
    for j in range(n):
        idx = rng.choice(m, size=sparsity, replace=False)
        coef[idx, j] = rng.standard_normal(sparsity)
    X = basis @ coef
    if noise_sd > 0:
        X += noise_sd * rng.standard_normal((d, n))
    norms = np.linalg.norm(X, axis=0)
    norms[norms == 0.0] = 1.0
    return X / norms


def generate_synthetic(spec: SyntheticSpec) -> SyntheticData:
    """Seeded planted-subspace data set with a pooled complementary set per class."""
    rng = np.random.default_rng(spec.seed)
    bases = planted_bases(spec, rng)
    per_class = [draw_planted(B, spec.patches_per_class, spec.sparsity, spec.noise_sd, rng) for B in bases]
    if spec.classes == 1:
        raise InvalidInputError("a sample set needs at least two classes")
    samples = [SampleSet(per_class[i], pool_complementary(per_class, i, rng)) for i in range(spec.classes)]
    return SyntheticData(samples, bases, per_class)
