"""Image-driven semantic attribute transfer over style-code channels."""

from .stylespace import (
    AttributeMask,
    ControlProbabilities,
    MaskMatrix,
    StyleCode,
    attribute_mask,
    control_probabilities,
    edit_style_code,
)
from .qmm import (
    AttributeCatalog,
    AttributeProbability,
    AttributeSpec,
    DescriptorGroup,
    attribute_distance,
    classify,
    load_attribute_catalog,
)
from .losses import (
    LossReport,
    LossWeights,
    background_loss,
    background_mask,
    preservation_loss,
    probability_loss,
    total_loss,
    transfer_loss,
)
from .preselect import (
    AttributionTable,
    PreselectResult,
    accumulate_attribution,
    init_mask_matrix,
    preselect_channels,
    topk_channels,
)
from .trainer import Checkpoint, TrainConfig, train, train_step
from .errors import BackendUnavailableError, InvalidInputError, ScorerUnavailableError

__version__ = "0.1.0"

__all__ = [
    "AttributeCatalog",
    "AttributeMask",
    "AttributeProbability",
    "AttributeSpec",
    "AttributionTable",
    "BackendUnavailableError",
    "Checkpoint",
    "ControlProbabilities",
    "DescriptorGroup",
    "InvalidInputError",
    "LossReport",
    "LossWeights",
    "MaskMatrix",
    "PreselectResult",
    "ScorerUnavailableError",
    "StyleCode",
    "TrainConfig",
    "accumulate_attribution",
    "attribute_distance",
    "attribute_mask",
    "background_loss",
    "background_mask",
    "classify",
    "control_probabilities",
    "edit_style_code",
    "init_mask_matrix",
    "load_attribute_catalog",
    "preselect_channels",
    "preservation_loss",
    "probability_loss",
    "topk_channels",
    "total_loss",
    "train",
    "train_step",
    "transfer_loss",
]
