"""Training objective: attribute transfer/preservation, background, and
per-channel concentration terms, plus their weighted combination.

Images are real-valued with channels in [0, 1]; backends document their
native range and convert before loss evaluation.  All terms are
non-negative, finite on finite inputs, and differentiable almost
everywhere through the tensor (``*_t``) forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .errors import InvalidInputError
from .qmm import AttributeSpec, ImageTextScorer, attribute_distance, attribute_distance_t
from .stylespace import control_probabilities_t

# Binary alterable-region mask, 1 inside the region, same spatial shape as
# the image.
RegionMask = np.ndarray


def as_region_mask(mask) -> np.ndarray:
    """Validate a binary region mask and return it as a float array."""
    arr = np.asarray(mask)
    if not np.isin(arr, (0, 1)).all():
        raise InvalidInputError("region mask entries must be 0 or 1")
    return arr.astype(np.float64)


@dataclass(frozen=True)
class LossWeights:
    """Relative weights of the loss terms."""

    attr: float = 1.0
    bg: float = 1.0
    prob: float = 0.1

    def __post_init__(self):
        for name in ("attr", "bg", "prob"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidInputError(f"loss weight {name} must be finite and >= 0")


@dataclass(frozen=True)
class LossReport:
    """Per-term values of one objective evaluation."""

    l_ref: float
    l_src: float
    l_attr: float
    l_bg: float
    l_prob: float
    total: float

    def __post_init__(self):
        if abs(self.l_attr - (self.l_ref + self.l_src)) > 1e-12:
            raise InvalidInputError("attribute loss must equal transfer + preservation")

    def check_total(self, weights: LossWeights) -> None:
        expected = (
            weights.attr * self.l_attr + weights.bg * self.l_bg + weights.prob * self.l_prob
        )
        if abs(self.total - expected) > 1e-9:
            raise InvalidInputError("total does not match the weighted sum of parts")


def _check_omega(omega, n_attributes: int, *, non_empty: bool) -> tuple[int, ...]:
    indices = tuple(int(i) for i in omega)
    if non_empty and not indices:
        raise InvalidInputError("target attribute set must be non-empty")
    for i in indices:
        if i < 0 or i >= n_attributes:
            raise InvalidInputError(f"unknown attribute index {i}")
    return indices


# ---------------------------------------------------------------------------
# Attribute terms
# ---------------------------------------------------------------------------

def transfer_loss_t(
    image_edit: torch.Tensor,
    image_ref: torch.Tensor,
    omega: Sequence[int],
    specs: Sequence[AttributeSpec],
    scorer: ImageTextScorer,
) -> torch.Tensor:
    indices = _check_omega(omega, len(specs), non_empty=True)
    total = torch.zeros((), dtype=torch.float64)
    for t in indices:
        total = total + attribute_distance_t(image_edit, image_ref, specs[t], scorer)
    return total


def transfer_loss(
    image_edit: np.ndarray,
    image_ref: np.ndarray,
    omega: Sequence[int],
    specs: Sequence[AttributeSpec],
    scorer: ImageTextScorer,
) -> float:
    """Distance between edited and reference images over target attributes."""
    indices = _check_omega(omega, len(specs), non_empty=True)
    return sum(
        attribute_distance(image_edit, image_ref, specs[t], scorer) for t in indices
    )


def preservation_loss_t(
    image_edit: torch.Tensor,
    image_src: torch.Tensor,
    omega: Sequence[int],
    specs: Sequence[AttributeSpec],
    scorer: ImageTextScorer,
) -> torch.Tensor:
    indices = set(_check_omega(omega, len(specs), non_empty=False))
    total = torch.zeros((), dtype=torch.float64)
    for t in range(len(specs)):
        if t not in indices:
            total = total + attribute_distance_t(image_edit, image_src, specs[t], scorer)
    return total


def preservation_loss(
    image_edit: np.ndarray,
    image_src: np.ndarray,
    omega: Sequence[int],
    specs: Sequence[AttributeSpec],
    scorer: ImageTextScorer,
) -> float:
    """Distance between edited and source images over untargeted attributes.

    Zero when the target set covers every attribute.
    """
    indices = set(_check_omega(omega, len(specs), non_empty=False))
    return sum(
        attribute_distance(image_edit, image_src, specs[t], scorer)
        for t in range(len(specs))
        if t not in indices
    )


# ---------------------------------------------------------------------------
# Background term
# ---------------------------------------------------------------------------

def background_mask(b_src: RegionMask, b_edit: RegionMask) -> RegionMask:
    """Pixels alterable in neither image: AND of the two complements."""
    src = as_region_mask(b_src)
    edit = as_region_mask(b_edit)
    if src.shape != edit.shape:
        raise InvalidInputError(f"region mask shapes differ: {src.shape} vs {edit.shape}")
    return (1.0 - src) * (1.0 - edit)


def background_loss_t(
    image_edit: torch.Tensor, image_src: torch.Tensor, background: torch.Tensor
) -> torch.Tensor:
    if image_edit.shape != image_src.shape:
        raise InvalidInputError("image shapes differ")
    if image_edit.shape[: background.ndim] != background.shape:
        raise InvalidInputError("background mask does not match image spatial shape")
    diff = torch.abs(image_edit - image_src)
    if diff.ndim == background.ndim + 1:
        diff = diff.mean(dim=-1)
    support = background.sum()
    if support.item() == 0:
        return torch.zeros((), dtype=torch.float64)
    return (diff * background).sum() / support


def background_loss(
    image_edit: np.ndarray, image_src: np.ndarray, background: RegionMask
) -> float:
    """Mean absolute pixel difference over the background support.

    Channel differences are averaged per pixel.  An empty support means
    there is nothing to penalize and yields zero.
    """
    value = background_loss_t(
        torch.as_tensor(np.asarray(image_edit, dtype=np.float64)),
        torch.as_tensor(np.asarray(image_src, dtype=np.float64)),
        torch.as_tensor(as_region_mask(background)),
    )
    return float(value)


# ---------------------------------------------------------------------------
# Concentration term
# ---------------------------------------------------------------------------

def probability_loss_t(entries: torch.Tensor, editable: torch.Tensor) -> torch.Tensor:
    editable = editable.to(torch.bool)
    n_editable = int(editable.sum())
    if n_editable == 0:
        raise InvalidInputError("probability loss needs at least one editable channel")
    probs = control_probabilities_t(entries)
    col_max = probs.max(dim=0).values
    return (1.0 - col_max[editable]).abs().sum() / n_editable


def probability_loss(entries: np.ndarray, editable: np.ndarray) -> float:
    """Penalty for channels whose control distribution is not concentrated.

    Averages ``1 - max(column softmax)`` over editable channels only;
    frozen columns cannot respond to its gradient and are excluded.
    """
    return float(
        probability_loss_t(
            torch.as_tensor(np.asarray(entries, dtype=np.float64)),
            torch.as_tensor(np.asarray(editable, dtype=bool)),
        )
    )


# ---------------------------------------------------------------------------
# Combination
# ---------------------------------------------------------------------------

def total_loss(
    l_ref: float,
    l_src: float,
    l_bg: float,
    l_prob: float,
    weights: LossWeights,
) -> tuple[float, LossReport]:
    """Weighted sum of the loss terms, returned with a populated report."""
    parts = {"l_ref": l_ref, "l_src": l_src, "l_bg": l_bg, "l_prob": l_prob}
    for name, value in parts.items():
        if not np.isfinite(value):
            raise InvalidInputError(f"{name} is not finite: {value!r}")
    l_attr = l_ref + l_src
    total = weights.attr * l_attr + weights.bg * l_bg + weights.prob * l_prob
    report = LossReport(
        l_ref=float(l_ref),
        l_src=float(l_src),
        l_attr=float(l_attr),
        l_bg=float(l_bg),
        l_prob=float(l_prob),
        total=float(total),
    )
    return float(total), report


def total_loss_t(
    l_ref: torch.Tensor,
    l_src: torch.Tensor,
    l_bg: torch.Tensor,
    l_prob: torch.Tensor,
    weights: LossWeights,
) -> tuple[torch.Tensor, LossReport]:
    """Tensor form of :func:`total_loss`; keeps the autograd graph intact."""
    for name, value in (("l_ref", l_ref), ("l_src", l_src), ("l_bg", l_bg), ("l_prob", l_prob)):
        if not torch.isfinite(value):
            raise InvalidInputError(f"{name} is not finite")
    l_attr = l_ref + l_src
    total = weights.attr * l_attr + weights.bg * l_bg + weights.prob * l_prob
    report = LossReport(
        l_ref=float(l_ref.detach()),
        l_src=float(l_src.detach()),
        l_attr=float(l_attr.detach()),
        l_bg=float(l_bg.detach()),
        l_prob=float(l_prob.detach()),
        total=float(total.detach()),
    )
    return total, report
