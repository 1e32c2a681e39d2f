"""Discriminative feature-oriented dictionary learning (DFDL) and sparse-representation classification."""

__version__ = "0.1.0"

from .classify import (
    ClassifierModel,
    ImageDecisionRule,
    PatchDecision,
    PatchGridLabels,
    classify_image_by_vote,
    classify_patch,
    classify_patches,
    detect_regions,
)
from .data import (
    DatasetManifest,
    GrayImage,
    SyntheticSpec,
    downsample,
    extract_patches,
    generate_synthetic,
    to_luminance,
)
from .errors import (
    ConvergenceError,
    DFDLError,
    FormatError,
    InvalidInputError,
    InvariantError,
    NumericalError,
    TrainingError,
    UnsupportedVersionError,
)
from .model import load_model, save_model
from .sparse import l1_encode, l1_encode_batch, omp_encode_batch
from .trainer import (
    GramPair,
    PSDReport,
    TrainConfig,
    TrainTrace,
    check_psd,
    compute_gram_pair,
    objective,
    train_dfdl,
    update_dictionary,
    weyl_lower_bound,
)
from .types import Dictionary, SampleSet, SparseCodes
